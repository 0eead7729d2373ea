#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dynlap/dynamics.hpp"
#include "dynlap/error.hpp"

using namespace dynlap;

namespace {

constexpr double pi = std::numbers::pi;

DomainSpec cylinder() { return {{0.0, 4.0, 256, true}, {0.0, 1.0, 64, false}}; }
DomainSpec torus() { return {{0.0, 2 * pi, 128, true}, {0.0, 2 * pi, 128, true}}; }

}  // namespace

TEST_CASE("T1 shears along x1 by (cosh 2x2 - 1)/2") {
  const MapSpec t1 = MapSpec::single(MapKind::shear_T1, cylinder());
  const Point p = evaluate_map(t1, {1.5, 1.0});
  const long double expect = 1.5L + (coshl(2.0L) - 1.0L) / 2.0L;
  CHECK(p.x1 == doctest::Approx(static_cast<double>(expect)).epsilon(1e-14));
  CHECK(p.x1 == doctest::Approx(2.8810978455).epsilon(1e-10));
  CHECK(p.x2 == 1.0);
  const Point q = evaluate_map(t1, {1.5, 0.0});
  CHECK(q.x1 == 1.5);
  CHECK(q.x2 == 0.0);
}

TEST_CASE("T2 and T4 follow their formulas with periodic reduction") {
  const MapSpec t2 = MapSpec::single(MapKind::shear_T2, cylinder());
  const Point p = evaluate_map(t2, {3.9, 0.25});
  CHECK(p.x1 == doctest::Approx(std::fmod(3.9 + 0.25, 4.0)));
  CHECK(p.x2 == doctest::Approx(0.25 + 0.1 * 0.25 * std::sin(2 * pi * 0.25)));

  const MapSpec t4 = MapSpec::single(MapKind::standard_T4, torus());
  const Point q = evaluate_map(t4, {1.0, 2.0});
  double y = 2.0 + 8.0 * std::sin(3.0);
  y = std::fmod(y, 2 * pi);
  if (y < 0) y += 2 * pi;
  CHECK(q.x1 == doctest::Approx(3.0));
  CHECK(q.x2 == doctest::Approx(y));
}

TEST_CASE("reference densities take their closed-form values") {
  const DensitySpec s = DensitySpec::sinusoid_x1(cylinder());
  CHECK(evaluate_density(s, {1.5, 0.3}) == doctest::Approx(1.0 / 8));
  CHECK(evaluate_density(s, {0.5, 0.9}) == doctest::Approx(3.0 / 8));
  CHECK(evaluate_density(DensitySpec::uniform(cylinder()), {2.2, 0.1}) == doctest::Approx(0.25));
  const DensitySpec t = DensitySpec::sinusoid_x2_torus(torus());
  CHECK(evaluate_density(t, {1.0, pi}) == doctest::Approx(3.0 / (8 * pi * pi)));
}

TEST_CASE("reference densities integrate to one") {
  // the periodic midpoint rule is exact for these trigonometric integrands
  auto integrate = [](const DensitySpec& d, const DomainSpec& dom, int n) {
    const double h1 = (dom.x1.hi - dom.x1.lo) / n;
    const double h2 = (dom.x2.hi - dom.x2.lo) / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += evaluate_density(d, {dom.x1.lo + (i + 0.5) * h1, dom.x2.lo + (j + 0.5) * h2});
    return s * h1 * h2;
  };
  CHECK(integrate(DensitySpec::sinusoid_x1(cylinder()), cylinder(), 64) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(integrate(DensitySpec::sinusoid_x2_torus(torus()), torus(), 64) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(integrate(DensitySpec::uniform(torus()), torus(), 16) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the reference maps preserve area") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> x1(0.05, 3.95);
  std::uniform_real_distribution<double> x2(0.05, 0.95);
  std::uniform_real_distribution<double> t(0.05, 2 * pi - 0.05);
  const MapSpec t1 = MapSpec::single(MapKind::shear_T1, cylinder());
  const MapSpec t4 = MapSpec::single(MapKind::standard_T4, torus());
  for (int i = 0; i < 100; ++i) {
    CHECK(jacobian_determinant(t1, {x1(rng), x2(rng)}) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(jacobian_determinant(t4, {t(rng), t(rng)}) == doctest::Approx(1.0).epsilon(1e-6));
  }
  // T3 stretches x1 by 1 + 0.3 cos 2x - 0.6 x sin 2x
  const MapSpec t3 = MapSpec::single(MapKind::distort_T3, torus());
  const double x = 0.7;
  CHECK(jacobian_determinant(t3, {x, 1.0}) ==
        doctest::Approx(std::abs(1 + 0.3 * std::cos(2 * x) - 0.6 * x * std::sin(2 * x))).epsilon(1e-6));
}

TEST_CASE("composition applies steps left to right and is associative") {
  const MapSpec a = MapSpec::single(MapKind::distort_T3, torus());
  const MapSpec b = MapSpec::single(MapKind::standard_T4, torus());
  const MapSpec c = MapSpec::translation(0.3, -0.2, torus());
  const MapSpec left = MapSpec::compose(MapSpec::compose(a, b), c);
  const MapSpec right = MapSpec::compose(a, MapSpec::compose(b, c));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(0.0, 2 * pi);
  for (int i = 0; i < 50; ++i) {
    const Point p{t(rng), t(rng)};
    const Point l = evaluate_map(left, p);
    const Point r = evaluate_map(right, p);
    CHECK(l.x1 == r.x1);
    CHECK(l.x2 == r.x2);
    const Point seq = evaluate_map(c, evaluate_map(b, evaluate_map(a, p)));
    CHECK(l.x1 == seq.x1);
    CHECK(l.x2 == seq.x2);
  }
  CHECK(MapSpec::compose(a, b).name() == "standard_T4*distort_T3");
}

TEST_CASE("periodic reduction makes maps insensitive to whole periods") {
  const MapSpec t1 = MapSpec::single(MapKind::shear_T1, cylinder());
  for (double x : {0.1, 1.7, 3.99}) {
    const Point a = evaluate_map(t1, {x, 0.6});
    const Point b = evaluate_map(t1, {x + 4.0, 0.6});
    CHECK(a.x1 == doctest::Approx(b.x1).epsilon(1e-12));
    CHECK(a.x1 >= 0.0);
    CHECK(a.x1 < 4.0);
  }
}

TEST_CASE("closed-form inverses undo the forward map") {
  const MapSpec t1 = MapSpec::single(MapKind::shear_T1, cylinder());
  REQUIRE(has_inverse(t1));
  const auto back = invert_map(t1, evaluate_map(t1, {2.2, 0.8}));
  REQUIRE(back);
  CHECK(back->x1 == doctest::Approx(2.2));
  CHECK(back->x2 == doctest::Approx(0.8));
  CHECK_FALSE(has_inverse(MapSpec::single(MapKind::standard_T4, torus())));
  CHECK_FALSE(invert_map(MapSpec::single(MapKind::standard_T4, torus()), {1, 1}).has_value());
}

TEST_CASE("pushforward density is h composed with the inverse over the Jacobian") {
  const DensitySpec base = DensitySpec::sinusoid_x1(cylinder());
  const MapSpec t1 = MapSpec::single(MapKind::shear_T1, cylinder());
  const DensitySpec pushed = DensitySpec::pushforward(base, t1);
  const Point x{1.5, 1.0};
  CHECK(evaluate_density(pushed, evaluate_map(t1, x)) == doctest::Approx(1.0 / 8).epsilon(1e-6));
  CHECK_THROWS_AS(DensitySpec::pushforward(base, MapSpec::single(MapKind::shear_T2, cylinder())), Error);
}

TEST_CASE("table densities are normalized and must be positive") {
  const Grid g({{0.0, 1.0, 4, false}, {0.0, 2.0, 4, false}});
  Eigen::VectorXd v = Eigen::VectorXd::Constant(16, 3.0);
  const DensitySpec d = DensitySpec::from_table(g, v);
  CHECK(evaluate_density(d, {0.3, 1.1}) == doctest::Approx(0.5));
  v[5] = 0.0;
  CHECK_THROWS_AS(DensitySpec::from_table(g, v), Error);
}

TEST_CASE("names round-trip and unknown names fail") {
  for (MapKind k : {MapKind::identity, MapKind::shear_T1, MapKind::shear_T2, MapKind::distort_T3,
                    MapKind::standard_T4, MapKind::affine})
    CHECK(map_kind_from_name(map_kind_name(k)) == k);
  CHECK(map_kind_from_name("T4") == MapKind::standard_T4);
  CHECK_THROWS_AS(map_kind_from_name("T9"), Error);
  CHECK(density_kind_from_name("sinusoid_x1") == DensityKind::sinusoid_x1);
  CHECK_THROWS_AS(density_kind_from_name("gaussian"), Error);
}
