#include "dynlap/contour.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_map>

#include "dynlap/error.hpp"

namespace dynlap {

namespace {

double norm(Point d) { return std::hypot(d.x1, d.x2); }
Point add(Point a, Point d, double s = 1.0) { return {a.x1 + s * d.x1, a.x2 + s * d.x2}; }

std::vector<Point> subdivide(const Grid& g, const std::vector<Point>& in, bool closed) {
  const double hmax = 0.5 * std::min(g.b1(), g.b2());
  std::vector<Point> out;
  if (in.empty()) return out;
  const std::size_t nseg = closed ? in.size() : in.size() - 1;
  out.push_back(in.front());
  for (std::size_t i = 0; i < nseg; ++i) {
    const Point a = out.back();
    const Point b = in[(i + 1) % in.size()];
    const Point d = g.displacement(a, b);
    const int pieces = std::max(1, static_cast<int>(std::ceil(norm(d) / hmax - 1e-12)));
    for (int s = 1; s <= pieces; ++s) {
      if (closed && i + 1 == nseg && s == pieces) break;  // back at the first vertex
      out.push_back(add(a, d, static_cast<double>(s) / pieces));
    }
  }
  return out;
}

}  // namespace

std::size_t Contour::vertex_count() const {
  std::size_t n = 0;
  for (const auto& p : polylines) n += p.vertices.size();
  return n;
}

Contour make_contour(const Grid& grid, std::vector<Polyline> polylines, double threshold) {
  Contour c{grid, threshold, {}};
  for (auto& pl : polylines) {
    if (pl.vertices.size() < 2) continue;
    c.polylines.push_back(Polyline{subdivide(grid, pl.vertices, pl.closed), pl.closed});
  }
  return c;
}

Contour extract_level_set(const NodeField& nf, double t) {
  const Grid& g = nf.grid;
  Contour out{g, t, {}};
  if (!(t > nf.values.minCoeff() && t < nf.values.maxCoeff())) return out;

  const int n1 = g.node_count1();
  const int n2 = g.node_count2();
  auto wrap1 = [&](int a) { return g.periodic1() ? a % n1 : a; };
  auto wrap2 = [&](int c) { return g.periodic2() ? c % n2 : c; };
  // Edge ids: 2*node for the edge towards +x1, 2*node+1 for the edge towards +x2.
  auto hedge = [&](int a, int c) { return 2 * g.node_index(wrap1(a), wrap2(c)); };
  auto vedge = [&](int a, int c) { return 2 * g.node_index(wrap1(a), wrap2(c)) + 1; };
  auto edge_point = [&](int id) {
    const int node = id / 2;
    const int a = node % n1;
    const int c = node / n1;
    const bool along1 = (id % 2) == 0;
    const int a2 = along1 ? wrap1(a + 1) : a;
    const int c2 = along1 ? c : wrap2(c + 1);
    const double f0 = nf.at(a, c);
    const double f1 = nf.at(a2, c2);
    const double s = (f1 == f0) ? 0.5 : (t - f0) / (f1 - f0);
    const Point p = g.node(a, c);
    return along1 ? Point{p.x1 + s * g.b1(), p.x2} : Point{p.x1, p.x2 + s * g.b2()};
  };

  std::vector<std::pair<int, int>> segments;
  for (int c = 0; c < g.L(); ++c) {
    for (int a = 0; a < g.K(); ++a) {
      const double v00 = nf.at(a, c);
      const double v10 = nf.at(wrap1(a + 1), c);
      const double v11 = nf.at(wrap1(a + 1), wrap2(c + 1));
      const double v01 = nf.at(a, wrap2(c + 1));
      const int code = (v00 >= t) | ((v10 >= t) << 1) | ((v11 >= t) << 2) | ((v01 >= t) << 3);
      if (code == 0 || code == 15) continue;
      const int B = hedge(a, c);
      const int R = vedge(a + 1, c);
      const int T = hedge(a, c + 1);
      const int Lf = vedge(a, c);
      const bool center_above = 0.25 * (v00 + v10 + v11 + v01) >= t;
      switch (code) {
        case 1: case 14: segments.emplace_back(Lf, B); break;
        case 2: case 13: segments.emplace_back(B, R); break;
        case 3: case 12: segments.emplace_back(Lf, R); break;
        case 4: case 11: segments.emplace_back(R, T); break;
        case 6: case 9: segments.emplace_back(B, T); break;
        case 7: case 8: segments.emplace_back(Lf, T); break;
        case 5:
          if (center_above) {
            segments.emplace_back(B, R);
            segments.emplace_back(Lf, T);
          } else {
            segments.emplace_back(Lf, B);
            segments.emplace_back(R, T);
          }
          break;
        case 10:
          if (center_above) {
            segments.emplace_back(Lf, B);
            segments.emplace_back(R, T);
          } else {
            segments.emplace_back(B, R);
            segments.emplace_back(Lf, T);
          }
          break;
        default: break;
      }
    }
  }

  std::unordered_map<int, std::vector<int>> by_edge;
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    by_edge[segments[s].first].push_back(s);
    by_edge[segments[s].second].push_back(s);
  }
  std::vector<char> used(segments.size(), 0);
  auto next_segment = [&](int edge) {
    for (int s : by_edge[edge])
      if (!used[s]) return s;
    return -1;
  };

  for (int s0 = 0; s0 < static_cast<int>(segments.size()); ++s0) {
    if (used[s0]) continue;
    used[s0] = 1;
    std::vector<int> chain{segments[s0].first, segments[s0].second};
    bool closed = false;
    for (;;) {
      const int s = next_segment(chain.back());
      if (s < 0) break;
      used[s] = 1;
      const int other = segments[s].first == chain.back() ? segments[s].second : segments[s].first;
      if (other == chain.front()) {
        closed = true;
        break;
      }
      chain.push_back(other);
    }
    if (!closed) {
      std::vector<int> head;
      int edge = chain.front();
      for (;;) {
        const int s = next_segment(edge);
        if (s < 0) break;
        used[s] = 1;
        edge = segments[s].first == edge ? segments[s].second : segments[s].first;
        head.push_back(edge);
      }
      chain.insert(chain.begin(), head.rbegin(), head.rend());
    }
    Polyline pl;
    pl.closed = closed;
    pl.vertices.push_back(edge_point(chain.front()));
    for (std::size_t i = 1; i < chain.size(); ++i) {
      const Point p = edge_point(chain[i]);
      pl.vertices.push_back(add(pl.vertices.back(), g.displacement(pl.vertices.back(), p)));
    }
    if (pl.vertices.size() >= 2 || closed) {
      pl.vertices = subdivide(g, pl.vertices, closed);
      out.polylines.push_back(std::move(pl));
    }
  }
  return out;
}

WeightFunction density_weight(const DensitySpec& spec) {
  return [spec](Point p) { return evaluate_density(spec, p); };
}

WeightFunction density_weight(const DensityField& field) {
  const Eigen::VectorXd values = field.density_values();
  const Grid grid = field.grid;
  return [values, grid](Point p) { return interpolate_cells(grid, values, p); };
}

namespace {

template <class F>
void for_each_segment(const Contour& c, F&& f) {
  for (const auto& pl : c.polylines) {
    const auto& v = pl.vertices;
    if (v.size() < 2) continue;
    const std::size_t nseg = pl.closed ? v.size() : v.size() - 1;
    for (std::size_t i = 0; i < nseg; ++i) {
      const Point a = v[i];
      const Point d = c.grid.displacement(a, v[(i + 1) % v.size()]);
      f(a, d);
    }
  }
}

}  // namespace

double euclidean_length(const Contour& c) {
  double total = 0.0;
  for_each_segment(c, [&](Point, Point d) { total += norm(d); });
  return total;
}

double hypersurface_mass(const Contour& c, const WeightFunction& h) {
  double total = 0.0;
  for_each_segment(c, [&](Point a, Point d) { total += norm(d) * h(c.grid.wrap(add(a, d, 0.5))); });
  return total;
}

Contour map_contour(const Contour& c, const MapSpec& map, const Grid& target) {
  const double bmax = std::min(target.b1(), target.b2());
  Contour out{target, c.threshold, {}};
  Polyline current;
  auto flush = [&] {
    if (current.vertices.size() >= 2) out.polylines.push_back(std::move(current));
    current = Polyline{};
  };
  auto image = [&](Point p) { return evaluate_map(map, c.grid.wrap(p)); };
  // Emits the image of [p, p+d]; tp and tq are images of the endpoints.
  auto emit = [&](auto& self, Point p, Point d, Point tp, Point tq, int depth) -> void {
    const Point dimg = target.displacement(tp, tq);
    if (norm(dimg) <= bmax) {
      if (current.vertices.empty()) current.vertices.push_back(tp);
      current.vertices.push_back(add(current.vertices.back(), dimg));
      return;
    }
    if (norm(d) < 1e-9 || depth > 64) {
      flush();
      return;
    }
    const Point half{0.5 * d.x1, 0.5 * d.x2};
    const Point mid = add(p, half);
    const Point tm = image(mid);
    self(self, p, half, tp, tm, depth + 1);
    self(self, mid, half, tm, tq, depth + 1);
  };
  for (const auto& pl : c.polylines) {
    const auto& v = pl.vertices;
    if (v.size() < 2) continue;
    const std::size_t nseg = pl.closed ? v.size() : v.size() - 1;
    Point tprev = image(v[0]);
    const Point tfirst = tprev;
    for (std::size_t i = 0; i < nseg; ++i) {
      const Point d = c.grid.displacement(v[i], v[(i + 1) % v.size()]);
      const Point tnext = (pl.closed && i + 1 == nseg) ? tfirst : image(add(v[i], d));
      emit(emit, v[i], d, tprev, tnext, 0);
      tprev = tnext;
    }
    flush();
  }
  return out;
}

double image_hypersurface_mass(const Contour& c, const MapSpec& map, const WeightFunction& h_nu, const Grid& target) {
  return hypersurface_mass(map_contour(c, map, target), h_nu);
}

void write_contour(std::ostream& os, const Contour& c) {
  char buf[96];
  bool first = true;
  for (const auto& pl : c.polylines) {
    if (!first) os << "\n";
    first = false;
    for (const auto& p : pl.vertices) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x1, p.x2);
      os << buf;
    }
    if (pl.closed && !pl.vertices.empty()) {
      const Point end = add(pl.vertices.back(), c.grid.displacement(pl.vertices.back(), pl.vertices.front()));
      std::snprintf(buf, sizeof buf, "%.17g %.17g\n", end.x1, end.x2);
      os << buf;
    }
  }
}

}  // namespace dynlap
