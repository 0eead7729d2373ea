#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dynlap/grid.hpp"

namespace dynlap {

enum class MapKind { identity, shear_T1, shear_T2, distort_T3, standard_T4, affine };

/// One elementary map. The affine kind is x -> A x + c.
struct MapStep {
  MapKind kind = MapKind::identity;
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
};

/// T = steps.back() o ... o steps.front(), with periodic coordinates wrapped
/// into `domain` after every step.
struct MapSpec {
  std::vector<MapStep> steps;
  DomainSpec domain;

  static MapSpec identity(const DomainSpec& domain);
  static MapSpec single(MapKind kind, const DomainSpec& domain);
  static MapSpec affine(const Eigen::Matrix2d& A, const Eigen::Vector2d& c, const DomainSpec& domain);
  static MapSpec translation(double dx1, double dx2, const DomainSpec& domain);

  /// first, then second.
  static MapSpec compose(const MapSpec& first, const MapSpec& second);

  bool is_identity() const;
  std::string name() const;
};

Point evaluate_map(const MapSpec& spec, Point p);

/// Exact inverse when every step has one (identity, T1, affine).
std::optional<Point> invert_map(const MapSpec& spec, Point p);
bool has_inverse(const MapSpec& spec);

/// |det DT| by central differences with step h.
double jacobian_determinant(const MapSpec& spec, Point p, double h = 1e-6);

MapKind map_kind_from_name(const std::string& name);
std::string map_kind_name(MapKind kind);

enum class DensityKind { uniform, sinusoid_x1, sinusoid_x2_torus, table, pushforward };

/// A probability density on a domain.
///
/// `table` is piecewise constant on the cells of `table_grid`. `pushforward`
/// is base o T^{-1} / |det DT^{-1}|, available for maps with an exact inverse.
struct DensitySpec {
  DensityKind kind = DensityKind::uniform;
  DomainSpec domain;
  std::optional<Grid> table_grid;
  Eigen::VectorXd table;
  std::shared_ptr<const DensitySpec> base;
  std::optional<MapSpec> map;

  static DensitySpec uniform(const DomainSpec& domain);
  static DensitySpec sinusoid_x1(const DomainSpec& domain);
  static DensitySpec sinusoid_x2_torus(const DomainSpec& domain);
  /// Values are rescaled to unit total mass; nonpositive entries are rejected.
  static DensitySpec from_table(const Grid& grid, const Eigen::VectorXd& values);
  static DensitySpec pushforward(const DensitySpec& base, const MapSpec& map);

  std::string name() const;
};

double evaluate_density(const DensitySpec& spec, Point p);

DensityKind density_kind_from_name(const std::string& name);
std::string density_kind_name(DensityKind kind);

}  // namespace dynlap
