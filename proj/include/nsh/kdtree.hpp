#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "nsh/types.hpp"

namespace nsh {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Exact k-nearest-neighbour index over a fixed point set (columns of `points`).
///
/// Results are ordered by (distance, index), so ties resolve to the lower index and
/// answers agree exactly with a brute-force scan.
class KdTree {
 public:
  static constexpr int kLeafSize = 16;

  explicit KdTree(Points points);

  int dim() const { return static_cast<int>(points_.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(points_.cols()); }
  const Points& points() const { return points_; }

  /// `exclude` removes one index from consideration (self-exclusion by identity).
  std::vector<Neighbor> knn(const Vec& query, std::size_t k,
                            std::ptrdiff_t exclude = -1) const;
  Neighbor nearest(const Vec& query) const;

 private:
  struct Node {
    // Leaf when `axis` < 0: covers order_[begin, end).
    int axis = -1;
    double split = 0.0;
    std::size_t begin = 0, end = 0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  void search(std::size_t node, const Vec& query, std::size_t k, std::ptrdiff_t exclude,
              std::vector<std::pair<double, std::size_t>>& heap) const;

  Points points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Squared Euclidean distance between column `i` of `points` and `query`,
/// accumulated in axis order (shared with brute-force checks).
double squared_distance(const Points& points, std::size_t i, const Vec& query);

}  // namespace nsh
