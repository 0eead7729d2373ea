#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "dynlap/dynamics.hpp"
#include "dynlap/grid.hpp"
#include "dynlap/transfer.hpp"

namespace dynlap {

/// A vertex chain. Coordinates are unwrapped, so a chain crossing a periodic
/// seam continues past the domain edge instead of jumping back.
struct Polyline {
  std::vector<Point> vertices;
  bool closed = false;  // last vertex connects back to the first
};

struct Contour {
  Grid grid;
  double threshold = 0.0;
  std::vector<Polyline> polylines;

  bool empty() const { return polylines.empty(); }
  std::size_t vertex_count() const;
};

/// Marching squares on node values with linear edge interpolation. Saddle
/// squares are resolved by the mean of the four corners (the bilinear center
/// value). Segments are subdivided to at most half the shorter cell side.
/// Returns an empty contour when t is outside the open range of the field.
Contour extract_level_set(const NodeField& nf, double t);

/// Builds a contour from explicit chains, subdividing as extract_level_set does.
Contour make_contour(const Grid& grid, std::vector<Polyline> polylines, double threshold = 0.0);

using WeightFunction = std::function<double(Point)>;

/// Analytic density.
WeightFunction density_weight(const DensitySpec& spec);
/// Piecewise field: cell mass / cell area, bilinearly interpolated between centers.
WeightFunction density_weight(const DensityField& field);

double euclidean_length(const Contour& c);

/// Sum over segments of length times the weight at the segment midpoint.
double hypersurface_mass(const Contour& c, const WeightFunction& h);

/// Maps the contour through T, bisecting source segments until each image
/// segment is no longer than one cell side of the target grid. Source pieces
/// shorter than 1e-9 whose image is still long straddle a discontinuity of T
/// and are dropped.
Contour map_contour(const Contour& c, const MapSpec& map, const Grid& target);

double image_hypersurface_mass(const Contour& c, const MapSpec& map, const WeightFunction& h_nu, const Grid& target);

/// One vertex per line ("x1 x2"), polylines separated by blank lines; closed
/// chains repeat their first vertex.
void write_contour(std::ostream& os, const Contour& c);

}  // namespace dynlap
