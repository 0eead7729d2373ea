#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace dynlap {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct AxisSpec {
  double lo = 0.0;
  double hi = 1.0;
  int count = 4;
  bool periodic = false;
};

struct DomainSpec {
  AxisSpec x1;
  AxisSpec x2;
};

struct CellIndex {
  int k = 0;  // 0-based along x1
  int l = 0;  // 0-based along x2

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Uniform K x L lattice of rectangular cells covering a flat 2-D domain.
///
/// Cells are stored x1-fastest: flat index = k + K*l with 0-based (k, l).
/// Each cell owns its lower edges, [lo, hi) per axis; on a non-periodic axis
/// the global maximum coordinate belongs to the last cell.
///
/// Nodes sit on cell corners. A periodic axis stores K nodes (node K is
/// identified with node 0); a non-periodic axis stores K + 1.
class Grid {
 public:
  static constexpr int kMinCells = 4;

  explicit Grid(const DomainSpec& spec);

  int K() const { return spec_.x1.count; }
  int L() const { return spec_.x2.count; }
  int cell_count() const { return K() * L(); }
  double b1() const { return b1_; }
  double b2() const { return b2_; }
  double cell_area() const { return b1_ * b2_; }
  bool periodic1() const { return spec_.x1.periodic; }
  bool periodic2() const { return spec_.x2.periodic; }
  const AxisSpec& axis1() const { return spec_.x1; }
  const AxisSpec& axis2() const { return spec_.x2; }
  const DomainSpec& spec() const { return spec_; }
  double length1() const { return spec_.x1.hi - spec_.x1.lo; }
  double length2() const { return spec_.x2.hi - spec_.x2.lo; }

  int index(int k, int l) const { return k + K() * l; }
  int index(CellIndex c) const { return index(c.k, c.l); }
  CellIndex cell(int flat) const { return {flat % K(), flat / K()}; }
  Point center(int flat) const;
  Point center(int k, int l) const;

  int node_count1() const { return periodic1() ? K() : K() + 1; }
  int node_count2() const { return periodic2() ? L() : L() + 1; }
  int node_count() const { return node_count1() * node_count2(); }
  int node_index(int a, int c) const { return a + node_count1() * c; }
  Point node(int a, int c) const;

  /// Reduces periodic coordinates into [lo, hi); non-periodic ones untouched.
  Point wrap(Point p) const;

  /// Minimal-image displacement on periodic axes.
  Point displacement(Point from, Point to) const;

  bool contains(Point p) const;

  /// The cell holding p after periodic wrapping, or nullopt when p lies
  /// outside a non-periodic range.
  std::optional<int> cell_of(Point p) const;

  std::string describe() const;

  friend bool operator==(const Grid& a, const Grid& b);

 private:
  DomainSpec spec_;
  double b1_;
  double b2_;
};

Grid build_grid(const DomainSpec& spec);

/// Reduces p into the domain along its periodic axes; counts are ignored.
Point wrap_point(const DomainSpec& domain, Point p);

/// One value per cell, same layout as Grid::index.
struct CellField {
  Grid grid;
  Eigen::VectorXd values;

  CellField(Grid g, Eigen::VectorXd v);
  double operator[](int i) const { return values[i]; }
};

/// One value per lattice node, layout a + node_count1 * c.
struct NodeField {
  Grid grid;
  Eigen::VectorXd values;

  NodeField(Grid g, Eigen::VectorXd v);
  double at(int a, int c) const { return values[grid.node_index(a, c)]; }
};

/// Arithmetic mean of the (up to four) cells sharing each node.
NodeField cell_to_node(const CellField& field);

/// Bilinear interpolation between cell centers; wraps on periodic axes and
/// holds the edge value beyond the outermost centers on other axes.
double interpolate_cells(const Grid& grid, const Eigen::VectorXd& values, Point p);

/// Samples f at every cell center.
template <class F>
CellField sample_cells(const Grid& grid, F&& f) {
  Eigen::VectorXd v(grid.cell_count());
  for (int i = 0; i < grid.cell_count(); ++i) v[i] = f(grid.center(i));
  return CellField(grid, std::move(v));
}

}  // namespace dynlap
