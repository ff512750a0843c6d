#include <doctest.h>

#include <random>

#include <Eigen/Geometry>
#include <json.hpp>

#include "nsh/error.hpp"
#include "nsh/metrics.hpp"
#include "support.hpp"

using namespace nsh;

namespace {

double brute_chamfer(const Points& a, const Points& b) {
  double sa = 0.0, sb = 0.0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) sa += testing::brute_nearest(b, a.col(i));
  for (Eigen::Index j = 0; j < b.cols(); ++j) sb += testing::brute_nearest(a, b.col(j));
  return 0.5 * sa / a.cols() + 0.5 * sb / b.cols();
}

double brute_nc(const Points& a, const Points& an, const Points& b, const Points& bn) {
  auto one_way = [](const Points& p, const Points& pn, const Points& q, const Points& qn) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
      Eigen::Index best = 0;
      double d = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < q.cols(); ++j) {
        const double e = (q.col(j) - p.col(i)).squaredNorm();
        if (e < d) {
          d = e;
          best = j;
        }
      }
      s += pn.col(i).dot(qn.col(best));
    }
    return s / static_cast<double>(p.cols());
  };
  return 50.0 * (one_way(a, an, b, bn) + one_way(b, bn, a, an));
}

}  // namespace

TEST_CASE("surface sampling: single triangle") {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}};
  Rng rng(1);
  SurfaceSamples s = sample_surface(m, 2000, rng);
  REQUIRE(s.normals);
  for (Eigen::Index i = 0; i < s.points.cols(); ++i) {
    const Eigen::Vector3d p = s.points.col(i);
    CHECK(p.x() >= -1e-15);
    CHECK(p.y() >= -1e-15);
    CHECK(p.x() + p.y() <= 1.0 + 1e-15);
    CHECK(p.z() == 0.0);
    CHECK((s.normals->col(i) - Eigen::Vector3d(0, 0, 1)).norm() == 0.0);
  }
}

TEST_CASE("surface sampling: area weighting and degenerate triangles") {
  TriangleMesh m;
  // Areas 1 and 3, plus a zero-area sliver.
  m.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 1, 0}, {10, 0, 0}, {16, 0, 0}, {10, 1, 0}, {20, 0, 0}, {21, 0, 0}, {22, 0, 0}};
  m.triangles = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}};
  Rng rng(2);
  SurfaceSamples s = sample_surface(m, 100000, rng);
  std::size_t second = 0, sliver = 0;
  for (Eigen::Index i = 0; i < s.points.cols(); ++i) {
    if (s.points(0, i) >= 10.0 && s.points(0, i) <= 16.0) ++second;
    if (s.points(0, i) >= 20.0) ++sliver;
  }
  CHECK(std::abs(static_cast<double>(second) / 1e5 - 0.75) < 0.015);
  CHECK(sliver == 0);
  TriangleMesh empty;
  CHECK_THROWS_AS(sample_surface(empty, 10, rng), Error);
}

TEST_CASE("polyline sampling follows segments with rotated normals") {
  Polyline2D p;
  p.vertices = {{0, 0}, {0, 1}};
  p.segments = {{0, 1}};
  Rng rng(3);
  SurfaceSamples s = sample_polyline(p, 100, rng);
  for (Eigen::Index i = 0; i < 100; ++i) {
    CHECK(s.points(0, i) == 0.0);
    CHECK((s.normals->col(i) - Eigen::Vector2d(1, 0)).norm() == 0.0);
  }
}

TEST_CASE("rescale transform") {
  Points gt(3, 2);
  gt << 0, 2,
        0, 2,
        0, 2;
  const NormalizationTransform t = rescale_transform(gt);
  CHECK(t.scale == 0.5);
  CHECK((t.apply(Vec(gt.col(1))) - Vec::Constant(3, 0.5)).norm() < 1e-15);
  auto [a, b] = rescale_pair(gt, gt);
  CHECK(a == b);
  std::mt19937_64 rng(1);
  const Points r = testing::random_points(3, 100, rng, -7.0, 3.0);
  const NormalizationTransform tr = rescale_transform(r);
  CHECK((tr.invert(tr.apply(r)) - r).cwiseAbs().maxCoeff() < 1e-12 * 7.0);
  CHECK(tr.apply(r).cwiseAbs().maxCoeff() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(rescale_transform(Points::Ones(3, 5)), Error);
}

TEST_CASE("chamfer: identities, unit example and brute force") {
  std::mt19937_64 rng(4);
  const Points a = testing::random_points(3, 500, rng), b = testing::random_points(3, 500, rng);
  CHECK(chamfer_l1(a, a) == 0.0);
  Points o = Points::Zero(3, 1), x = Points::Zero(3, 1);
  x(0, 0) = 1.0;
  CHECK(chamfer_l1(o, x) == 1.0);
  CHECK(std::abs(chamfer_l1(a, b) - brute_chamfer(a, b)) < 1e-12);
  CHECK(chamfer_l1(a, b) == chamfer_l1(b, a));
  CHECK_THROWS_AS(chamfer_l1(Points(3, 0), a), Error);
}

TEST_CASE("nearest distances equal brute force exactly") {
  std::mt19937_64 rng(5);
  const Points a = testing::random_points(3, 300, rng), b = testing::random_points(3, 700, rng);
  KdTree tree(b);
  const auto d = nearest_distances(a, tree);
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    const auto want = testing::brute_knn(b, a.col(i), 1);
    CHECK(d[static_cast<std::size_t>(i)] == want[0].first);
  }
}

TEST_CASE("f-score cases") {
  std::mt19937_64 rng(6);
  const Points a = testing::random_points(3, 200, rng);
  FScore same = f_score(a, a, 0.005);
  CHECK(same.fscore == 100.0);
  CHECK(same.precision == 100.0);
  Points far = a;
  far.row(0).array() += 10.0;
  CHECK(f_score(a, far, 0.005).fscore == 0.0);

  // gt has two points, pred one near the first: recall 50, precision 100.
  Points gt(3, 2), pred(3, 1);
  gt << 0, 1,
        0, 0,
        0, 0;
  pred << 0.001, 0, 0;
  FScore f = f_score(gt, pred, 0.005);
  CHECK(f.recall == 50.0);
  CHECK(f.precision == 100.0);
  CHECK(f.fscore == doctest::Approx(200.0 / 3.0));

  const Points b = testing::random_points(3, 150, rng);
  FScore ab = f_score(a, b, 0.1), ba = f_score(b, a, 0.1);
  CHECK(ab.precision == ba.recall);
  CHECK(ab.recall == ba.precision);
}

TEST_CASE("f-score equals the brute-force count") {
  std::mt19937_64 rng(7);
  const Points a = testing::random_points(3, 500, rng), b = testing::random_points(3, 500, rng);
  const double t = 0.1;
  double rec = 0, prec = 0;
  for (Eigen::Index i = 0; i < 500; ++i) rec += testing::brute_nearest(b, a.col(i)) < t;
  for (Eigen::Index j = 0; j < 500; ++j) prec += testing::brute_nearest(a, b.col(j)) < t;
  rec *= 100.0 / 500;
  prec *= 100.0 / 500;
  const FScore f = f_score(a, b, t);
  CHECK(std::abs(f.recall - rec) < 1e-12);
  CHECK(std::abs(f.precision - prec) < 1e-12);
  CHECK(std::abs(f.fscore - 2 * rec * prec / (rec + prec)) < 1e-12);
}

TEST_CASE("normal consistency") {
  std::mt19937_64 rng(8);
  const Points a = testing::random_points(3, 300, rng), b = testing::random_points(3, 300, rng);
  Points an = testing::random_points(3, 300, rng), bn = testing::random_points(3, 300, rng);
  an.colwise().normalize();
  bn.colwise().normalize();
  CHECK(normal_consistency(a, an, a, an) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(normal_consistency(a, an, a, -an) == doctest::Approx(-100.0).epsilon(1e-14));
  CHECK(normal_consistency(a, an, a, -an, true) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(std::abs(normal_consistency(a, an, b, bn) - brute_nc(a, an, b, bn)) < 1e-10);
}

TEST_CASE("metrics are invariant under a common rigid motion") {
  std::mt19937_64 rng(9);
  const Points a = testing::random_points(3, 400, rng), b = testing::random_points(3, 400, rng);
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const Eigen::Vector3d shift(0.3, -2.0, 5.0);
  const Points ra = (rot * a).colwise() + shift, rb = (rot * b).colwise() + shift;
  CHECK(std::abs(chamfer_l1(a, b) - chamfer_l1(ra, rb)) < 1e-9);
  const FScore f = f_score(a, b, 0.15), rf = f_score(ra, rb, 0.15);
  CHECK(std::abs(f.fscore - rf.fscore) < 1e-9);
}

TEST_CASE("report fields and JSON") {
  std::mt19937_64 rng(10);
  SurfaceSamples gt{testing::random_points(3, 300, rng), std::nullopt};
  const MetricsReport self = evaluate_surfaces(gt, gt);
  CHECK(self.chamfer == 0.0);
  CHECK(self.fscore.fscore == 100.0);
  CHECK_FALSE(self.normal_consistency);
  const auto j = nlohmann::json::parse(self.to_json());
  CHECK(j["chamfer_l1_x1000"] == 0.0);
  CHECK(j["fscore"] == 100.0);
  CHECK(j["normal_consistency"].is_null());
  CHECK(self.summary().find("chamfer") != std::string::npos);
}
