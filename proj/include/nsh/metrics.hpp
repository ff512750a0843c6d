#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsh/geometry.hpp"
#include "nsh/kdtree.hpp"
#include "nsh/sampler.hpp"

namespace nsh {

/// Points drawn on a surface with the normal of the element they came from.
struct SurfaceSamples {
  Points points;
  std::optional<Points> normals;
};

/// Area-weighted triangle choice, uniform barycentric placement, face normals.
SurfaceSamples sample_surface(const TriangleMesh& mesh, std::size_t n, Rng& rng);
/// Length-weighted segment choice; normals are the segment direction rotated by -90 degrees,
/// which points away from the f < 0 side of marching_squares output.
SurfaceSamples sample_polyline(const Polyline2D& poly, std::size_t n, Rng& rng);

/// Isotropic transform taking the ground truth's longest bbox axis to [-0.5, 0.5].
NormalizationTransform rescale_transform(const Points& gt);
/// Applies rescale_transform(gt) to both sets (normals are unaffected by the map).
std::pair<Points, Points> rescale_pair(const Points& gt, const Points& pred);

/// Distance from each column of `from` to its nearest point in `to`.
std::vector<double> nearest_distances(const Points& from, const KdTree& to);

/// 0.5 * mean nearest distance each way (unscaled).
double chamfer_l1(const Points& a, const Points& b);

struct FScore {
  double fscore = 0.0;     // percent
  double precision = 0.0;  // percent of pred within t of gt
  double recall = 0.0;     // percent of gt within t of pred
};

/// Distances count as matches when strictly below `threshold`.
FScore f_score(const Points& gt, const Points& pred, double threshold = 0.005);

/// Symmetric mean of n(p) . n(closest(p)), times 100. `absolute` takes |dot|.
double normal_consistency(const Points& a, const Points& a_normals, const Points& b, const Points& b_normals,
                          bool absolute = false);

struct MetricsReport {
  double chamfer = 0.0;  // chamfer_l1 x 1000
  FScore fscore;
  std::optional<double> normal_consistency;  // empty when either side lacks normals
  double threshold = 0.005;
  std::size_t gt_samples = 0;
  std::size_t pred_samples = 0;
  bool absolute_normals = false;

  std::string to_json() const;
  std::string summary() const;
};

/// Rescales both sample sets by the ground truth's bbox, then computes every metric.
MetricsReport evaluate_surfaces(const SurfaceSamples& gt, const SurfaceSamples& pred, double threshold = 0.005,
                                bool absolute_normals = false);

}  // namespace nsh
