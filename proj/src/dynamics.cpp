#include "dynlap/dynamics.hpp"

#include <cmath>
#include <numbers>

#include "dynlap/error.hpp"

namespace dynlap {

namespace {

constexpr double pi = std::numbers::pi;

double domain_area(const DomainSpec& d) { return (d.x1.hi - d.x1.lo) * (d.x2.hi - d.x2.lo); }

Point apply_step(const MapStep& s, Point p) {
  const double x = p.x1;
  const double y = p.x2;
  switch (s.kind) {
    case MapKind::identity:
      return p;
    case MapKind::shear_T1:
      return {x + (std::cosh(2.0 * y) - 1.0) / 2.0, y};
    case MapKind::shear_T2:
      return {x + y, y + 0.1 * y * std::sin(2.0 * pi * y)};
    case MapKind::distort_T3:
      return {x + 0.3 * x * std::cos(2.0 * x), y};
    case MapKind::standard_T4:
      return {x + y, y + 8.0 * std::sin(x + y)};
    case MapKind::affine: {
      const Eigen::Vector2d r = s.A * Eigen::Vector2d(x, y) + s.c;
      return {r[0], r[1]};
    }
  }
  return p;
}

bool step_invertible(const MapStep& s) {
  switch (s.kind) {
    case MapKind::identity:
    case MapKind::shear_T1:
      return true;
    case MapKind::affine:
      return std::abs(s.A.determinant()) > 0.0;
    default:
      return false;
  }
}

Point invert_step(const MapStep& s, Point p) {
  switch (s.kind) {
    case MapKind::identity:
      return p;
    case MapKind::shear_T1:
      return {p.x1 - (std::cosh(2.0 * p.x2) - 1.0) / 2.0, p.x2};
    case MapKind::affine: {
      const Eigen::Vector2d r = s.A.inverse() * (Eigen::Vector2d(p.x1, p.x2) - s.c);
      return {r[0], r[1]};
    }
    default:
      throw Error("dynamics", "map step " + map_kind_name(s.kind) + " has no closed-form inverse");
  }
}

}  // namespace

MapSpec MapSpec::identity(const DomainSpec& domain) { return single(MapKind::identity, domain); }

MapSpec MapSpec::single(MapKind kind, const DomainSpec& domain) {
  MapSpec m;
  m.steps.push_back(MapStep{kind, Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero()});
  m.domain = domain;
  return m;
}

MapSpec MapSpec::affine(const Eigen::Matrix2d& A, const Eigen::Vector2d& c, const DomainSpec& domain) {
  MapSpec m;
  m.steps.push_back(MapStep{MapKind::affine, A, c});
  m.domain = domain;
  return m;
}

MapSpec MapSpec::translation(double dx1, double dx2, const DomainSpec& domain) {
  return affine(Eigen::Matrix2d::Identity(), Eigen::Vector2d(dx1, dx2), domain);
}

MapSpec MapSpec::compose(const MapSpec& first, const MapSpec& second) {
  MapSpec m = first;
  m.steps.insert(m.steps.end(), second.steps.begin(), second.steps.end());
  return m;
}

bool MapSpec::is_identity() const {
  for (const auto& s : steps) {
    if (s.kind == MapKind::identity) continue;
    if (s.kind == MapKind::affine && s.A == Eigen::Matrix2d::Identity() && s.c.isZero(0.0)) continue;
    return false;
  }
  return true;
}

std::string MapSpec::name() const {
  std::string out;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    if (!out.empty()) out += "*";
    out += map_kind_name(it->kind);
  }
  return out.empty() ? "identity" : out;
}

Point evaluate_map(const MapSpec& spec, Point p) {
  if (spec.steps.empty()) throw Error("dynamics", "empty map composition");
  for (const auto& s : spec.steps) p = wrap_point(spec.domain, apply_step(s, p));
  return p;
}

bool has_inverse(const MapSpec& spec) {
  if (spec.steps.empty()) return false;
  for (const auto& s : spec.steps)
    if (!step_invertible(s)) return false;
  return true;
}

std::optional<Point> invert_map(const MapSpec& spec, Point p) {
  if (!has_inverse(spec)) return std::nullopt;
  for (auto it = spec.steps.rbegin(); it != spec.steps.rend(); ++it) p = wrap_point(spec.domain, invert_step(*it, p));
  return p;
}

double jacobian_determinant(const MapSpec& spec, Point p, double h) {
  // Unwrapped evaluation so differences do not straddle a seam.
  auto raw = [&](Point q) {
    for (const auto& s : spec.steps) q = apply_step(s, q);
    return q;
  };
  const Point a = raw({p.x1 + h, p.x2});
  const Point b = raw({p.x1 - h, p.x2});
  const Point c = raw({p.x1, p.x2 + h});
  const Point d = raw({p.x1, p.x2 - h});
  const double j11 = (a.x1 - b.x1) / (2 * h);
  const double j21 = (a.x2 - b.x2) / (2 * h);
  const double j12 = (c.x1 - d.x1) / (2 * h);
  const double j22 = (c.x2 - d.x2) / (2 * h);
  return std::abs(j11 * j22 - j12 * j21);
}

MapKind map_kind_from_name(const std::string& name) {
  if (name == "identity") return MapKind::identity;
  if (name == "shear_T1" || name == "T1") return MapKind::shear_T1;
  if (name == "shear_T2" || name == "T2") return MapKind::shear_T2;
  if (name == "distort_T3" || name == "T3") return MapKind::distort_T3;
  if (name == "standard_T4" || name == "T4") return MapKind::standard_T4;
  if (name == "affine") return MapKind::affine;
  throw Error("dynamics", "unknown map kind '" + name + "'");
}

std::string map_kind_name(MapKind kind) {
  switch (kind) {
    case MapKind::identity: return "identity";
    case MapKind::shear_T1: return "shear_T1";
    case MapKind::shear_T2: return "shear_T2";
    case MapKind::distort_T3: return "distort_T3";
    case MapKind::standard_T4: return "standard_T4";
    case MapKind::affine: return "affine";
  }
  return "?";
}

DensitySpec DensitySpec::uniform(const DomainSpec& domain) {
  DensitySpec d;
  d.kind = DensityKind::uniform;
  d.domain = domain;
  return d;
}

DensitySpec DensitySpec::sinusoid_x1(const DomainSpec& domain) {
  DensitySpec d;
  d.kind = DensityKind::sinusoid_x1;
  d.domain = domain;
  return d;
}

DensitySpec DensitySpec::sinusoid_x2_torus(const DomainSpec& domain) {
  DensitySpec d;
  d.kind = DensityKind::sinusoid_x2_torus;
  d.domain = domain;
  return d;
}

DensitySpec DensitySpec::from_table(const Grid& grid, const Eigen::VectorXd& values) {
  if (values.size() != grid.cell_count()) throw Error("dynamics", "density table length does not match grid");
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      throw Error("dynamics", "density table entry " + std::to_string(i) + " is not strictly positive");
  }
  DensitySpec d;
  d.kind = DensityKind::table;
  d.domain = grid.spec();
  d.table_grid = grid;
  d.table = values / (values.sum() * grid.cell_area());
  return d;
}

DensitySpec DensitySpec::pushforward(const DensitySpec& base, const MapSpec& map) {
  if (!has_inverse(map)) throw Error("dynamics", "pushforward density needs a map with a closed-form inverse");
  DensitySpec d;
  d.kind = DensityKind::pushforward;
  d.domain = map.domain;
  d.base = std::make_shared<const DensitySpec>(base);
  d.map = map;
  return d;
}

std::string DensitySpec::name() const { return density_kind_name(kind); }

double evaluate_density(const DensitySpec& spec, Point p) {
  switch (spec.kind) {
    case DensityKind::uniform:
      return 1.0 / domain_area(spec.domain);
    case DensityKind::sinusoid_x1:
      return (std::sin(pi * p.x1) + 2.0) / 8.0;
    case DensityKind::sinusoid_x2_torus:
      return (std::sin(p.x2 - pi / 2.0) + 2.0) / (8.0 * pi * pi);
    case DensityKind::table: {
      const auto cell = spec.table_grid->cell_of(p);
      if (!cell) throw Error("dynamics", "density table evaluated outside its grid");
      return spec.table[*cell];
    }
    case DensityKind::pushforward: {
      const Point q = *invert_map(*spec.map, p);
      return evaluate_density(*spec.base, q) / jacobian_determinant(*spec.map, q);
    }
  }
  return 0.0;
}

DensityKind density_kind_from_name(const std::string& name) {
  if (name == "uniform") return DensityKind::uniform;
  if (name == "sinusoid_x1") return DensityKind::sinusoid_x1;
  if (name == "sinusoid_x2_torus") return DensityKind::sinusoid_x2_torus;
  if (name == "table") return DensityKind::table;
  if (name == "pushforward") return DensityKind::pushforward;
  throw Error("dynamics", "unknown density kind '" + name + "'");
}

std::string density_kind_name(DensityKind kind) {
  switch (kind) {
    case DensityKind::uniform: return "uniform";
    case DensityKind::sinusoid_x1: return "sinusoid_x1";
    case DensityKind::sinusoid_x2_torus: return "sinusoid_x2_torus";
    case DensityKind::table: return "table";
    case DensityKind::pushforward: return "pushforward";
  }
  return "?";
}

}  // namespace dynlap
