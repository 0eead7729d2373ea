#include "dynlap/grid.hpp"

#include <cmath>
#include <sstream>

#include "dynlap/error.hpp"

namespace dynlap {

namespace {

void validate_axis(const AxisSpec& axis, const char* name) {
  if (axis.count < Grid::kMinCells) {
    throw Error("grid", std::string(name) + " needs at least 4 cells (the Laplacian stencil reaches two cells), got " +
                            std::to_string(axis.count));
  }
  if (!(std::isfinite(axis.lo) && std::isfinite(axis.hi)) || !(axis.hi > axis.lo)) {
    throw Error("grid", std::string(name) + " range is empty or degenerate");
  }
}

double wrap_coordinate(double x, const AxisSpec& axis) {
  const double len = axis.hi - axis.lo;
  double r = std::fmod(x - axis.lo, len);
  if (r < 0) r += len;
  // fmod of a tiny negative number can round up to len
  if (r >= len) r = 0.0;
  return axis.lo + r;
}

std::optional<int> locate(double x, const AxisSpec& axis, double b) {
  if (axis.periodic) x = wrap_coordinate(x, axis);
  if (x < axis.lo || x > axis.hi) return std::nullopt;
  int k = static_cast<int>(std::floor((x - axis.lo) / b));
  if (k >= axis.count) k = axis.count - 1;
  if (k < 0) k = 0;
  return k;
}

}  // namespace

Grid::Grid(const DomainSpec& spec) : spec_(spec) {
  validate_axis(spec.x1, "x1");
  validate_axis(spec.x2, "x2");
  b1_ = (spec.x1.hi - spec.x1.lo) / spec.x1.count;
  b2_ = (spec.x2.hi - spec.x2.lo) / spec.x2.count;
}

Grid build_grid(const DomainSpec& spec) { return Grid(spec); }

Point Grid::center(int k, int l) const {
  return {spec_.x1.lo + (k + 0.5) * b1_, spec_.x2.lo + (l + 0.5) * b2_};
}

Point Grid::center(int flat) const {
  const CellIndex c = cell(flat);
  return center(c.k, c.l);
}

Point Grid::node(int a, int c) const { return {spec_.x1.lo + a * b1_, spec_.x2.lo + c * b2_}; }

Point wrap_point(const DomainSpec& domain, Point p) {
  if (domain.x1.periodic) p.x1 = wrap_coordinate(p.x1, domain.x1);
  if (domain.x2.periodic) p.x2 = wrap_coordinate(p.x2, domain.x2);
  return p;
}

Point Grid::wrap(Point p) const { return wrap_point(spec_, p); }

Point Grid::displacement(Point from, Point to) const {
  Point d{to.x1 - from.x1, to.x2 - from.x2};
  if (periodic1()) d.x1 -= length1() * std::round(d.x1 / length1());
  if (periodic2()) d.x2 -= length2() * std::round(d.x2 / length2());
  return d;
}

bool Grid::contains(Point p) const { return cell_of(p).has_value(); }

std::optional<int> Grid::cell_of(Point p) const {
  const auto k = locate(p.x1, spec_.x1, b1_);
  const auto l = locate(p.x2, spec_.x2, b2_);
  if (!k || !l) return std::nullopt;
  return index(*k, *l);
}

std::string Grid::describe() const {
  std::ostringstream os;
  os << "[" << spec_.x1.lo << "," << spec_.x1.hi << (periodic1() ? ")p" : "]") << " x [" << spec_.x2.lo << ","
     << spec_.x2.hi << (periodic2() ? ")p" : "]") << " " << K() << "x" << L();
  return os.str();
}

bool operator==(const Grid& a, const Grid& b) {
  auto same = [](const AxisSpec& p, const AxisSpec& q) {
    return p.lo == q.lo && p.hi == q.hi && p.count == q.count && p.periodic == q.periodic;
  };
  return same(a.spec_.x1, b.spec_.x1) && same(a.spec_.x2, b.spec_.x2);
}

CellField::CellField(Grid g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.cell_count()) throw Error("grid", "cell field length does not match grid");
  if (!values.allFinite()) throw Error("grid", "cell field has non-finite entries");
}

NodeField::NodeField(Grid g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.node_count()) throw Error("grid", "node field length does not match grid");
}

NodeField cell_to_node(const CellField& field) {
  const Grid& g = field.grid;
  const int n1 = g.node_count1();
  const int n2 = g.node_count2();
  Eigen::VectorXd out(g.node_count());
  // Node a touches cells a-1 and a along x1; missing ones only at non-periodic edges.
  auto neighbours = [](int a, int count, bool periodic, int out_idx[2]) {
    int n = 0;
    for (int cell : {a - 1, a}) {
      if (periodic) {
        out_idx[n++] = (cell + count) % count;
      } else if (cell >= 0 && cell < count) {
        out_idx[n++] = cell;
      }
    }
    return n;
  };
  for (int c = 0; c < n2; ++c) {
    int ls[2];
    const int nl = neighbours(c, g.L(), g.periodic2(), ls);
    for (int a = 0; a < n1; ++a) {
      int ks[2];
      const int nk = neighbours(a, g.K(), g.periodic1(), ks);
      double sum = 0.0;
      for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nl; ++j) sum += field.values[g.index(ks[i], ls[j])];
      out[g.node_index(a, c)] = sum / (nk * nl);
    }
  }
  return NodeField(g, std::move(out));
}

double interpolate_cells(const Grid& g, const Eigen::VectorXd& values, Point p) {
  p = g.wrap(p);
  auto bracket = [](double x, const AxisSpec& axis, double b, int& i0, int& i1, double& w) {
    const double s = (x - axis.lo) / b - 0.5;  // position in cell-center units
    double f = std::floor(s);
    w = s - f;
    int lo = static_cast<int>(f);
    if (axis.periodic) {
      i0 = ((lo % axis.count) + axis.count) % axis.count;
      i1 = (i0 + 1) % axis.count;
      return;
    }
    if (lo < 0) {
      i0 = i1 = 0;
      w = 0.0;
    } else if (lo >= axis.count - 1) {
      i0 = i1 = axis.count - 1;
      w = 0.0;
    } else {
      i0 = lo;
      i1 = lo + 1;
    }
  };
  int k0, k1, l0, l1;
  double wk, wl;
  bracket(p.x1, g.axis1(), g.b1(), k0, k1, wk);
  bracket(p.x2, g.axis2(), g.b2(), l0, l1, wl);
  return (1 - wk) * (1 - wl) * values[g.index(k0, l0)] + wk * (1 - wl) * values[g.index(k1, l0)] +
         (1 - wk) * wl * values[g.index(k0, l1)] + wk * wl * values[g.index(k1, l1)];
}

}  // namespace dynlap
