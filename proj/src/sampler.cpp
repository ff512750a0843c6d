#include "nsh/sampler.hpp"

#include <iostream>
#include <numeric>

#include "nsh/error.hpp"
#include "nsh/kdtree.hpp"

namespace nsh {

std::vector<double> compute_sigmas(const PointCloud& cloud, std::size_t k) {
  if (cloud.size() < 2) throw Error(Errc::empty_input, "need at least two points to compute sigmas");
  if (k == 0) throw Error(Errc::invalid_argument, "k must be positive");
  if (k >= cloud.size()) {
    std::cerr << "warning: k=" << k << " needs more than " << cloud.size()
              << " points; clamping to " << cloud.size() - 1 << "\n";
    k = cloud.size() - 1;
  }
  const KdTree tree(cloud.points);
  std::vector<double> sigmas(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(Vec(cloud.points.col(static_cast<Eigen::Index>(i))), k,
                             static_cast<std::ptrdiff_t>(i));
    sigmas[i] = nn.back().distance;
  }
  return sigmas;
}

Points gaussian_offsets(const Points& centers, std::span<const double> sigmas, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Points out(centers.rows(), centers.cols());
  for (Eigen::Index i = 0; i < centers.cols(); ++i) {
    const double s = sigmas[static_cast<std::size_t>(i)];
    for (Eigen::Index a = 0; a < centers.rows(); ++a) out(a, i) = centers(a, i) + s * normal(rng);
  }
  return out;
}

SampleBatch draw_batch(const PointCloud& cloud, const std::vector<double>& sigmas,
                       std::size_t batch_size, Rng& rng) {
  if (cloud.size() == 0) throw Error(Errc::empty_input, "cannot sample an empty cloud");
  if (sigmas.size() != cloud.size()) throw Error(Errc::invalid_argument, "one sigma per point required");
  if (batch_size == 0) throw Error(Errc::invalid_argument, "batch size must be positive");
  const int d = cloud.dim();
  SampleBatch batch;

  if (cloud.size() <= batch_size) {
    batch.surface_indices.resize(cloud.size());
    std::iota(batch.surface_indices.begin(), batch.surface_indices.end(), std::size_t{0});
  } else {
    // Partial Fisher-Yates: the first batch_size entries form a uniform subset.
    std::vector<std::size_t> perm(cloud.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, perm.size() - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    perm.resize(batch_size);
    batch.surface_indices = std::move(perm);
  }

  const auto n = static_cast<Eigen::Index>(batch.surface_indices.size());
  batch.surface_points.resize(d, n);
  if (cloud.normals) batch.surface_normals = Points(d, n);
  std::vector<double> selected_sigmas(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = static_cast<Eigen::Index>(batch.surface_indices[static_cast<std::size_t>(i)]);
    batch.surface_points.col(i) = cloud.points.col(src);
    if (cloud.normals) batch.surface_normals->col(i) = cloud.normals->col(src);
    selected_sigmas[static_cast<std::size_t>(i)] = sigmas[static_cast<std::size_t>(src)];
  }
  batch.near_points = gaussian_offsets(batch.surface_points, selected_sigmas, rng);

  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  batch.far_points.resize(d, static_cast<Eigen::Index>(batch_size));
  for (Eigen::Index i = 0; i < batch.far_points.cols(); ++i)
    for (int a = 0; a < d; ++a) batch.far_points(a, i) = uniform(rng);
  return batch;
}

}  // namespace nsh
