#include "nsh/kdtree.hpp"

#include <algorithm>
#include <cmath>

#include "nsh/error.hpp"

namespace nsh {

double squared_distance(const Points& points, std::size_t i, const Vec& query) {
  double sum = 0.0;
  for (Eigen::Index a = 0; a < points.rows(); ++a) {
    const double diff = points(a, static_cast<Eigen::Index>(i)) - query[a];
    sum += diff * diff;
  }
  return sum;
}

KdTree::KdTree(Points points) : points_(std::move(points)) {
  if (points_.cols() == 0) throw Error(Errc::empty_input, "cannot build a k-d tree over zero points");
  if (!points_.allFinite()) throw Error(Errc::non_finite, "k-d tree input has non-finite coordinates");
  order_.resize(size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * size() / kLeafSize + 2);
  build(0, size());
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= static_cast<std::size_t>(kLeafSize)) return id;

  int axis = 0;
  double widest = -1.0;
  for (int a = 0; a < dim(); ++a) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = points_(a, static_cast<Eigen::Index>(order_[i]));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = a;
    }
  }
  if (widest <= 0.0) return id;  // all coincident: keep as a leaf

  const std::size_t mid = begin + (end - begin) / 2;
  auto coord = [&](std::size_t idx) { return points_(axis, static_cast<Eigen::Index>(idx)); };
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) { return coord(a) < coord(b); });
  const double split = coord(order_[mid]);
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree::search(std::size_t id, const Vec& query, std::size_t k, std::ptrdiff_t exclude,
                    std::vector<std::pair<double, std::size_t>>& heap) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      if (static_cast<std::ptrdiff_t>(idx) == exclude) continue;
      std::pair<double, std::size_t> cand{squared_distance(points_, idx, query), idx};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  // Left subtree holds coordinates <= split, right holds >= split.
  const double diff = query[node.axis] - node.split;
  const std::size_t near_child = diff <= 0.0 ? node.left : node.right;
  const std::size_t far_child = diff <= 0.0 ? node.right : node.left;
  search(near_child, query, k, exclude, heap);
  // Equal distance still needs a visit: a tie may carry a lower index.
  if (heap.size() < k || diff * diff <= heap.front().first) search(far_child, query, k, exclude, heap);
}

std::vector<Neighbor> KdTree::knn(const Vec& query, std::size_t k, std::ptrdiff_t exclude) const {
  if (query.size() != dim()) throw Error(Errc::invalid_argument, "query dimension does not match tree");
  const std::size_t available =
      size() - ((exclude >= 0 && static_cast<std::size_t>(exclude) < size()) ? 1 : 0);
  if (k == 0 || k > available)
    throw Error(Errc::invalid_argument, "k=" + std::to_string(k) + " exceeds the " +
                                            std::to_string(available) + " available points");
  std::vector<std::pair<double, std::size_t>> heap;
  heap.reserve(k + 1);
  search(0, query, k, exclude, heap);
  std::sort_heap(heap.begin(), heap.end());
  std::vector<Neighbor> out;
  out.reserve(heap.size());
  for (const auto& [d2, idx] : heap) out.push_back({idx, std::sqrt(d2)});
  return out;
}

Neighbor KdTree::nearest(const Vec& query) const { return knn(query, 1).front(); }

}  // namespace nsh
