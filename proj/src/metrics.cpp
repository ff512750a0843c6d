#include "nsh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Geometry>
#include <json.hpp>

#include "nsh/error.hpp"
#include "nsh/parallel.hpp"

namespace nsh {

namespace {

constexpr std::size_t kQueryChunk = 4096;

void require_points(const Points& p, const char* what) {
  if (p.cols() == 0) throw Error(Errc::empty_input, std::string(what) + " point set is empty");
}

void require_same_dim(const Points& a, const Points& b) {
  if (a.rows() != b.rows()) throw Error(Errc::invalid_argument, "point sets differ in dimension");
}

// Index of the element owning u in [0, total) on a cumulative weight table; zero-weight
// elements own an empty interval and are never returned.
std::size_t pick(const std::vector<double>& cumulative, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, cumulative.back());
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u(rng));
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double fraction_below(const std::vector<double>& v, double t) {
  std::size_t n = 0;
  for (double x : v) n += x < t;
  return static_cast<double>(n) / static_cast<double>(v.size());
}

// Mean over `from` of the dot product of each normal with its nearest neighbour's normal.
double mean_normal_dot(const Points& from, const Points& from_n, const KdTree& to, const Points& to_n,
                       bool absolute) {
  std::vector<double> dots(static_cast<std::size_t>(from.cols()));
  parallel_for(dots.size(), [&](std::size_t i) {
    const auto c = static_cast<Eigen::Index>(i);
    const Neighbor nb = to.nearest(Vec(from.col(c)));
    const double d = from_n.col(c).dot(to_n.col(static_cast<Eigen::Index>(nb.index)));
    dots[i] = absolute ? std::abs(d) : d;
  });
  return mean(dots);
}

}  // namespace

SurfaceSamples sample_surface(const TriangleMesh& mesh, std::size_t n, Rng& rng) {
  check_mesh(mesh);
  if (mesh.triangles.empty()) throw Error(Errc::empty_input, "cannot sample an empty mesh");
  std::vector<double> cumulative;
  std::vector<Eigen::Vector3d> normals;
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    const Eigen::Vector3d cross =
        (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    const double area = 0.5 * cross.norm();
    total += area;
    cumulative.push_back(total);
    normals.push_back(area > 0.0 ? Eigen::Vector3d(cross.normalized()) : Eigen::Vector3d::Zero());
  }
  if (!(total > 0.0)) throw Error(Errc::empty_input, "mesh has zero surface area");
  SurfaceSamples out{Points(3, static_cast<Eigen::Index>(n)), Points(3, static_cast<Eigen::Index>(n))};
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = pick(cumulative, rng);
    const auto& t = mesh.triangles[f];
    const double s = std::sqrt(u01(rng));
    const double r = u01(rng);
    const auto c = static_cast<Eigen::Index>(i);
    out.points.col(c) = (1.0 - s) * mesh.vertices[t[0]] + s * (1.0 - r) * mesh.vertices[t[1]] +
                        s * r * mesh.vertices[t[2]];
    out.normals->col(c) = normals[f];
  }
  return out;
}

SurfaceSamples sample_polyline(const Polyline2D& poly, std::size_t n, Rng& rng) {
  if (poly.segments.empty()) throw Error(Errc::empty_input, "cannot sample an empty polyline");
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& s : poly.segments) {
    if (s[0] >= poly.vertices.size() || s[1] >= poly.vertices.size())
      throw Error(Errc::invalid_argument, "polyline segment index out of range");
    total += (poly.vertices[s[1]] - poly.vertices[s[0]]).norm();
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw Error(Errc::empty_input, "polyline has zero length");
  SurfaceSamples out{Points(2, static_cast<Eigen::Index>(n)), Points(2, static_cast<Eigen::Index>(n))};
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = poly.segments[pick(cumulative, rng)];
    const Eigen::Vector2d a = poly.vertices[s[0]], b = poly.vertices[s[1]];
    const Eigen::Vector2d dir = (b - a).normalized();
    const auto c = static_cast<Eigen::Index>(i);
    out.points.col(c) = a + u01(rng) * (b - a);
    out.normals->col(c) = Eigen::Vector2d(dir.y(), -dir.x());
  }
  return out;
}

NormalizationTransform rescale_transform(const Points& gt) {
  require_points(gt, "ground-truth");
  const Vec lo = gt.rowwise().minCoeff();
  const Vec hi = gt.rowwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) throw Error(Errc::invalid_argument, "ground-truth bounding box is degenerate");
  return {(lo + hi) / 2.0, 1.0 / extent};
}

std::pair<Points, Points> rescale_pair(const Points& gt, const Points& pred) {
  require_points(pred, "predicted");
  require_same_dim(gt, pred);
  const NormalizationTransform t = rescale_transform(gt);
  return {t.apply(gt), t.apply(pred)};
}

std::vector<double> nearest_distances(const Points& from, const KdTree& to) {
  if (from.rows() != to.dim()) throw Error(Errc::invalid_argument, "query and index dimensions differ");
  std::vector<double> out(static_cast<std::size_t>(from.cols()));
  const std::size_t chunks = (out.size() + kQueryChunk - 1) / kQueryChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(out.size(), (c + 1) * kQueryChunk);
    for (std::size_t i = c * kQueryChunk; i < end; ++i)
      out[i] = to.nearest(Vec(from.col(static_cast<Eigen::Index>(i)))).distance;
  });
  return out;
}

double chamfer_l1(const Points& a, const Points& b) {
  require_points(a, "first");
  require_points(b, "second");
  require_same_dim(a, b);
  const double ab = mean(nearest_distances(a, KdTree(b)));
  const double ba = mean(nearest_distances(b, KdTree(a)));
  return 0.5 * ab + 0.5 * ba;
}

FScore f_score(const Points& gt, const Points& pred, double threshold) {
  require_points(gt, "ground-truth");
  require_points(pred, "predicted");
  require_same_dim(gt, pred);
  if (!(threshold > 0.0)) throw Error(Errc::invalid_argument, "F-score threshold must be positive");
  FScore s;
  s.recall = 100.0 * fraction_below(nearest_distances(gt, KdTree(pred)), threshold);
  s.precision = 100.0 * fraction_below(nearest_distances(pred, KdTree(gt)), threshold);
  const double sum = s.recall + s.precision;
  s.fscore = sum > 0.0 ? 2.0 * s.recall * s.precision / sum : 0.0;
  return s;
}

double normal_consistency(const Points& a, const Points& a_normals, const Points& b, const Points& b_normals,
                          bool absolute) {
  require_points(a, "first");
  require_points(b, "second");
  require_same_dim(a, b);
  if (a_normals.cols() != a.cols() || b_normals.cols() != b.cols() || a_normals.rows() != a.rows() ||
      b_normals.rows() != b.rows())
    throw Error(Errc::normal_mismatch, "normal consistency needs one normal per point on both sides");
  const double ab = mean_normal_dot(a, a_normals, KdTree(b), b_normals, absolute);
  const double ba = mean_normal_dot(b, b_normals, KdTree(a), a_normals, absolute);
  return 100.0 * (0.5 * ab + 0.5 * ba);
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["chamfer_l1_x1000"] = chamfer;
  j["fscore"] = fscore.fscore;
  j["precision"] = fscore.precision;
  j["recall"] = fscore.recall;
  j["normal_consistency"] = normal_consistency ? nlohmann::json(*normal_consistency) : nlohmann::json(nullptr);
  j["normal_consistency_absolute"] = absolute_normals;
  j["fscore_threshold"] = threshold;
  j["gt_samples"] = gt_samples;
  j["pred_samples"] = pred_samples;
  return j.dump(2);
}

std::string MetricsReport::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "chamfer-L1(x1e3) %.4f  F-score@%g %.2f (P %.2f R %.2f)  NC %s", chamfer,
                threshold, fscore.fscore, fscore.precision, fscore.recall,
                normal_consistency ? std::to_string(*normal_consistency).c_str() : "n/a");
  return buf;
}

MetricsReport evaluate_surfaces(const SurfaceSamples& gt, const SurfaceSamples& pred, double threshold,
                                bool absolute_normals) {
  auto [g, p] = rescale_pair(gt.points, pred.points);
  MetricsReport r;
  r.threshold = threshold;
  r.gt_samples = static_cast<std::size_t>(g.cols());
  r.pred_samples = static_cast<std::size_t>(p.cols());
  r.absolute_normals = absolute_normals;
  r.chamfer = 1000.0 * chamfer_l1(g, p);
  r.fscore = f_score(g, p, threshold);
  if (gt.normals && pred.normals)
    r.normal_consistency = normal_consistency(g, *gt.normals, p, *pred.normals, absolute_normals);
  return r;
}

}  // namespace nsh
