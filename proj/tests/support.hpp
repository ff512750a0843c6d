#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nsh/geometry.hpp"
#include "nsh/kdtree.hpp"
#include "nsh/sinenet.hpp"

namespace testing {

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("nsh_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline nsh::Points random_points(int dim, Eigen::Index n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  nsh::Points p(dim, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (int a = 0; a < dim; ++a) p(a, j) = u(rng);
  return p;
}

inline nsh::Vec column(const nsh::Points& p, Eigen::Index j) { return p.col(j); }

/// Brute-force k nearest neighbours ordered by (distance, index).
inline std::vector<std::pair<double, std::size_t>> brute_knn(const nsh::Points& pts, const nsh::Vec& q,
                                                            std::size_t k, std::ptrdiff_t exclude = -1) {
  std::vector<std::pair<double, std::size_t>> all;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    if (j == exclude) continue;
    all.emplace_back(std::sqrt(nsh::squared_distance(pts, static_cast<std::size_t>(j), q)),
                     static_cast<std::size_t>(j));
  }
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  return all;
}

inline double brute_nearest(const nsh::Points& to, const nsh::Vec& q) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < to.cols(); ++j) best = std::min(best, (to.col(j) - q).norm());
  return best;
}

/// Unit-radius circle sampled at n equally spaced angles.
inline nsh::PointCloud circle_cloud(std::size_t n, double radius = 1.0) {
  nsh::PointCloud c;
  c.points.resize(2, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    c.points(0, static_cast<Eigen::Index>(i)) = radius * std::cos(t);
    c.points(1, static_cast<Eigen::Index>(i)) = radius * std::sin(t);
  }
  return c;
}

/// Points uniformly distributed on the unit sphere (normalized Gaussian draws).
inline nsh::PointCloud sphere_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  nsh::PointCloud c;
  c.points.resize(3, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d v(g(rng), g(rng), g(rng));
    c.points.col(static_cast<Eigen::Index>(i)) = v.normalized();
  }
  return c;
}

}  // namespace testing
