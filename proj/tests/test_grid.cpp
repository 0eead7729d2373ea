#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dynlap/error.hpp"
#include "dynlap/grid.hpp"

using namespace dynlap;

namespace {

DomainSpec cylinder(int K, int L) { return {{0.0, 4.0, K, true}, {0.0, 1.0, L, false}}; }

}  // namespace

TEST_CASE("cell sides follow from the domain and counts") {
  const Grid c(cylinder(256, 64));
  CHECK(c.b1() == doctest::Approx(1.0 / 64).epsilon(1e-15));
  CHECK(c.b2() == doctest::Approx(1.0 / 64).epsilon(1e-15));
  CHECK(c.cell_count() == 16384);

  const double two_pi = 2.0 * std::numbers::pi;
  const Grid t({{0.0, two_pi, 128, true}, {0.0, two_pi, 128, true}});
  CHECK(t.b1() == doctest::Approx(two_pi / 128).epsilon(1e-15));
  CHECK(t.node_count() == 128 * 128);
}

TEST_CASE("a 4x4 non-periodic square has 16 cells and 25 nodes") {
  const Grid g({{0.0, 1.0, 4, false}, {0.0, 1.0, 4, false}});
  CHECK(g.cell_count() == 16);
  CHECK(g.node_count() == 25);
}

TEST_CASE("degenerate grids are rejected") {
  CHECK_THROWS_AS(Grid({{0.0, 1.0, 3, false}, {0.0, 1.0, 8, false}}), Error);
  CHECK_THROWS_AS(Grid({{0.0, 1.0, 8, false}, {1.0, 1.0, 8, false}}), Error);
  CHECK_THROWS_AS(Grid({{2.0, 1.0, 8, false}, {0.0, 1.0, 8, false}}), Error);
}

TEST_CASE("cell_of wraps periodic coordinates and rejects points outside") {
  const Grid g(cylinder(256, 64));
  const auto wrapped = g.cell_of({4.01, 0.5});
  REQUIRE(wrapped);
  CHECK(g.cell(*wrapped) == CellIndex{0, 32});
  CHECK(g.cell_of({-0.001, 0.5}).has_value());
  CHECK(g.cell(*g.cell_of({-0.001, 0.5})).k == 255);
  CHECK_FALSE(g.cell_of({1.0, 1.2}).has_value());
  CHECK_FALSE(g.cell_of({1.0, -0.01}).has_value());
  REQUIRE(g.cell_of({0.0, 0.0}));
  CHECK(*g.cell_of({0.0, 0.0}) == 0);
  // the closed upper edge of a non-periodic axis belongs to the last cell
  CHECK(g.cell(*g.cell_of({1.0, 1.0})).l == 63);
}

TEST_CASE("cell_of inverts center for every cell") {
  const Grid g({{-1.0, 3.0, 37, true}, {0.5, 2.0, 11, false}});
  for (int i = 0; i < g.cell_count(); ++i) {
    const auto c = g.cell_of(g.center(i));
    REQUIRE(c);
    CHECK(*c == i);
  }
}

TEST_CASE("flat indexing runs along x1 first") {
  const Grid g(cylinder(8, 4));
  CHECK(g.index(3, 2) == 3 + 8 * 2);
  CHECK(g.cell(19) == CellIndex{3, 2});
}

TEST_CASE("cell_to_node averages the touching cells") {
  SUBCASE("constant field stays constant") {
    const Grid g(cylinder(8, 6));
    const NodeField nf = cell_to_node(CellField(g, Eigen::VectorXd::Constant(g.cell_count(), 2.5)));
    CHECK((nf.values.array() - 2.5).abs().maxCoeff() < 1e-15);
  }
  SUBCASE("checkerboard on a periodic grid averages to zero") {
    const Grid g({{0.0, 1.0, 4, true}, {0.0, 1.0, 4, true}});
    Eigen::VectorXd v(g.cell_count());
    for (int i = 0; i < g.cell_count(); ++i) v[i] = ((g.cell(i).k + g.cell(i).l) % 2 == 0) ? 1.0 : -1.0;
    const NodeField nf = cell_to_node(CellField(g, v));
    CHECK(nf.values.cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("non-periodic nodes use four, two or one cells") {
    const Grid g({{0.0, 1.0, 4, false}, {0.0, 1.0, 4, false}});
    Eigen::VectorXd v(g.cell_count());
    for (int i = 0; i < g.cell_count(); ++i) v[i] = i * i;
    const NodeField nf = cell_to_node(CellField(g, v));
    // direct oracle over the node's neighbourhood
    for (int c = 0; c <= 4; ++c)
      for (int a = 0; a <= 4; ++a) {
        double sum = 0.0;
        int n = 0;
        for (int l = c - 1; l <= c; ++l)
          for (int k = a - 1; k <= a; ++k)
            if (k >= 0 && k < 4 && l >= 0 && l < 4) {
              sum += v[k + 4 * l];
              ++n;
            }
        CHECK(nf.at(a, c) == doctest::Approx(sum / n).epsilon(1e-15));
      }
    CHECK(nf.at(0, 0) == v[0]);
  }
}

TEST_CASE("interpolate_cells reproduces centers and linear fields") {
  const Grid g({{0.0, 2.0, 16, false}, {0.0, 1.0, 8, false}});
  const CellField f = sample_cells(g, [](Point p) { return 3.0 * p.x1 - 2.0 * p.x2 + 1.0; });
  for (int i = 0; i < g.cell_count(); ++i) CHECK(interpolate_cells(g, f.values, g.center(i)) == doctest::Approx(f[i]));
  CHECK(interpolate_cells(g, f.values, {0.77, 0.41}) == doctest::Approx(3.0 * 0.77 - 2.0 * 0.41 + 1.0));
}

TEST_CASE("periodic displacement takes the short way round") {
  const Grid g(cylinder(16, 4));
  const Point d = g.displacement({3.9, 0.2}, {0.1, 0.3});
  CHECK(d.x1 == doctest::Approx(0.2));
  CHECK(d.x2 == doctest::Approx(0.1));
  CHECK(g.wrap({-0.5, 0.5}).x1 == doctest::Approx(3.5));
}

TEST_CASE("fields reject mismatched lengths") {
  const Grid g(cylinder(8, 4));
  CHECK_THROWS_AS(CellField(g, Eigen::VectorXd::Zero(5)), Error);
  CHECK_THROWS_AS(NodeField(g, Eigen::VectorXd::Zero(5)), Error);
}
