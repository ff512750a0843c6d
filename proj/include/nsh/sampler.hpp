#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "nsh/geometry.hpp"

namespace nsh {

using Rng = std::mt19937_64;

/// One iteration's training samples, all in normalized coordinates.
struct SampleBatch {
  std::vector<std::size_t> surface_indices;
  Points surface_points;
  std::optional<Points> surface_normals;
  Points near_points;  // one Gaussian draw per selected surface point
  Points far_points;   // uniform in [-1, 1]^d
};

/// Distance from every point to its k-th nearest neighbour (self excluded).
/// k is clamped to |P| - 1 with a warning on stderr when the cloud is too small.
std::vector<double> compute_sigmas(const PointCloud& cloud, std::size_t k = 50);

SampleBatch draw_batch(const PointCloud& cloud, const std::vector<double>& sigmas,
                       std::size_t batch_size, Rng& rng);

/// Gaussian draws q = p_i + sigma_i * z around the given points.
Points gaussian_offsets(const Points& centers, std::span<const double> sigmas, Rng& rng);

}  // namespace nsh
