#pragma once

#include <span>
#include <vector>

#include "nsh/field.hpp"
#include "nsh/geometry.hpp"

namespace nsh {

/// Axis-aligned box [lo, hi].
struct Box {
  Vec lo;
  Vec hi;

  static Box cube(int dim, double half = 1.0);
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x) const;
};

enum class GridQuantity { value, gradnorm, det, trace };

/// Empty lattice with `resolution` nodes per axis spanning `box` corner to corner.
ScalarGrid make_grid(int resolution, const Box& box);

/// Samples each requested quantity at the lattice nodes; one grid per entry of `what`.
std::vector<ScalarGrid> evaluate_grid(const ScalarField& field, int resolution, const Box& box,
                                      std::span<const GridQuantity> what);
ScalarGrid evaluate_grid(const ScalarField& field, int resolution, const Box& box);
ScalarGrid evaluate_grid(const ScalarField& field, int resolution);  // over [-1, 1]^d

/// Segments run with the region f < iso on their left; vertices are shared along cell edges.
Polyline2D marching_squares(const ScalarGrid& grid, double iso = 0.0);

/// Triangles are wound so their normals point towards increasing f.
TriangleMesh marching_cubes(const ScalarGrid& grid, double iso = 0.0);

/// Maps normalized-space output back to world units.
TriangleMesh to_world(TriangleMesh mesh, const NormalizationTransform& transform);
Polyline2D to_world(Polyline2D poly, const NormalizationTransform& transform);

/// Components counted over vertices referenced by at least one element.
int connected_components(const Polyline2D& poly);
int connected_components(const TriangleMesh& mesh);

/// V - E + F over referenced vertices and unique undirected edges.
long euler_characteristic(const TriangleMesh& mesh);
/// Every undirected edge is shared by exactly two triangles.
bool is_closed(const TriangleMesh& mesh);

}  // namespace nsh
