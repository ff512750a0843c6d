#include "nsh/morse.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <json.hpp>

#include "nsh/error.hpp"
#include "nsh/graddiff.hpp"
#include "nsh/parallel.hpp"

namespace nsh {

namespace {

constexpr std::size_t kShellBatch = 4096;
constexpr std::size_t kMinAttemptsBeforeGiveUp = 100000;

Box resolve_domain(const Box& box, int dim) {
  if (box.lo.size() == 0) return Box::cube(dim);
  if (box.dim() != dim) throw Error(Errc::invalid_argument, "domain and field dimensions differ");
  return box;
}

// Grid nodes whose |grad f| is minimal over their 3^d neighbourhood; ties go to the lower index.
std::vector<std::size_t> local_minima(const ScalarGrid& g) {
  const int d = g.dim();
  std::vector<std::size_t> seeds;
  std::vector<int> idx(static_cast<std::size_t>(d)), nb(static_cast<std::size_t>(d));
  int offsets = 1;
  for (int a = 0; a < d; ++a) offsets *= 3;
  for (std::size_t flat = 0; flat < g.node_count(); ++flat) {
    std::size_t rest = flat;
    for (int a = d - 1; a >= 0; --a) {
      const auto n = static_cast<std::size_t>(g.dims[static_cast<std::size_t>(a)]);
      idx[static_cast<std::size_t>(a)] = static_cast<int>(rest % n);
      rest /= n;
    }
    const double v = g.values[flat];
    bool minimum = true;
    for (int o = 0; o < offsets && minimum; ++o) {
      int code = o;
      bool inside = true;
      for (int a = 0; a < d; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        nb[ua] = idx[ua] + code % 3 - 1;
        code /= 3;
        inside = inside && nb[ua] >= 0 && nb[ua] < g.dims[ua];
      }
      if (!inside) continue;
      const std::size_t other = g.flat_index(nb);
      if (other == flat) continue;
      const double w = g.values[other];
      if (w < v || (w == v && other < flat)) minimum = false;
    }
    if (minimum) seeds.push_back(flat);
  }
  return seeds;
}

Vec newton_step(const Jet& j, double mu) {
  const int d = static_cast<int>(j.grad.size());
  const Mat a = j.hess.transpose() * j.hess + mu * Mat::Identity(d, d);
  return -a.partialPivLu().solve(j.hess.transpose() * j.grad);
}

std::optional<CriticalPoint> refine(const ScalarField& field, Vec x, const CriticalSearchOptions& o, double max_step,
                                    const Box& domain) {
  const Vec slack = Vec::Constant(x.size(), max_step);
  for (int it = 0; it <= o.max_newton; ++it) {
    const Jet j = field.jet(x);
    if (!std::isfinite(j.value) || !j.grad.allFinite() || !j.hess.allFinite()) return std::nullopt;
    if (j.grad.norm() < o.grad_tol) {
      // Confirm the point is a fixed point of the iteration, not a stall.
      if (newton_step(j, o.tikhonov).norm() >= 1e-6) return std::nullopt;
      CriticalPoint p;
      p.position = x;
      p.value = j.value;
      p.grad_norm = j.grad.norm();
      Eigen::SelfAdjointEigenSolver<Mat> eig(j.hess, Eigen::EigenvaluesOnly);
      p.eigenvalues = eig.eigenvalues();
      p.degenerate = (p.eigenvalues.array().abs() < o.zero_eigenvalue).any();
      p.index = static_cast<int>((p.eigenvalues.array() < 0.0).count());
      return p;
    }
    Vec dx = newton_step(j, o.tikhonov);
    const double len = dx.norm();
    if (!std::isfinite(len)) return std::nullopt;
    if (len > max_step) dx *= max_step / len;
    x += dx;
    if ((x.array() < domain.lo.array() - slack.array()).any() || (x.array() > domain.hi.array() + slack.array()).any())
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::string kind_name(const CriticalPoint& p) {
  if (p.degenerate) return "degenerate";
  const int d = static_cast<int>(p.eigenvalues.size());
  if (p.index == 0) return "minimum";
  if (p.index == d) return "maximum";
  if (d == 2) return "saddle";
  return p.index == 1 ? "saddle_1" : "saddle_2";
}

CriticalSearchResult find_critical_points(const ScalarField& field, const CriticalSearchOptions& options) {
  if (options.resolution < 8) throw Error(Errc::invalid_argument, "critical point search needs resolution >= 8");
  if (!(options.shell > 0.0)) throw Error(Errc::invalid_argument, "shell half-width must be positive");
  if (!(options.grad_tol > 0.0) || !(options.dedup_radius > 0.0) || options.max_newton < 1)
    throw Error(Errc::invalid_argument, "critical point tolerances must be positive");
  const Box domain = resolve_domain(options.domain, field.dim());
  const GridQuantity q = GridQuantity::gradnorm;
  const ScalarGrid gradnorm = std::move(evaluate_grid(field, options.resolution, domain, std::span(&q, 1)).front());
  const std::vector<std::size_t> seeds = local_minima(gradnorm);
  const double max_step = 2.0 * gradnorm.spacing.maxCoeff();

  std::vector<std::optional<CriticalPoint>> refined(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t s) {
    refined[s] = refine(field, gradnorm.node_position(seeds[s]), options, max_step, domain);
  });

  CriticalSearchResult result;
  result.seeds = seeds.size();
  for (auto& r : refined) {
    if (!r) {
      ++result.non_converged;
      continue;
    }
    if (!domain.contains(r->position) || !(std::abs(r->value) < options.shell)) {
      ++result.outside_shell;
      continue;
    }
    const bool duplicate = std::any_of(result.points.begin(), result.points.end(), [&](const CriticalPoint& p) {
      return (p.position - r->position).norm() < options.dedup_radius;
    });
    if (!duplicate) result.points.push_back(std::move(*r));
  }
  return result;
}

MorseReport census(const std::vector<CriticalPoint>& points, int dim) {
  if (dim != 2 && dim != 3) throw Error(Errc::invalid_argument, "census supports 2D and 3D fields");
  MorseReport r;
  r.dim = dim;
  for (const CriticalPoint& p : points) {
    if (p.eigenvalues.size() != dim) throw Error(Errc::invalid_argument, "critical point dimension mismatch");
    if (p.degenerate) {
      ++r.degenerate;
      continue;
    }
    if (p.index == 0) ++r.c_min;
    else if (p.index == dim) ++r.c_max;
    else if (p.index == 1) ++r.c_1saddle;
    else ++r.c_2saddle;
  }
  r.euler_estimate = dim == 3 ? r.c_min - r.c_1saddle + r.c_2saddle - r.c_max : r.c_min - r.c_1saddle + r.c_max;
  return r;
}

std::string MorseReport::to_json(const std::vector<CriticalPoint>& points) const {
  nlohmann::json j;
  j["dim"] = dim;
  j["shell"] = shell;
  if (dim == 2) {
    j["counts"] = {{"minimum", c_min}, {"saddle", c_1saddle}, {"maximum", c_max}};
  } else {
    j["counts"] = {{"minimum", c_min}, {"saddle_1", c_1saddle}, {"saddle_2", c_2saddle}, {"maximum", c_max}};
  }
  j["degenerate"] = degenerate;
  j["euler_estimate"] = euler_estimate;
  j["shell_statistics"] = {{"samples", stats.samples},           {"attempts", stats.attempts},
                           {"mean_abs_det", stats.mean_abs_det},   {"max_abs_det", stats.max_abs_det},
                           {"mean_abs_trace", stats.mean_abs_trace}, {"max_abs_trace", stats.max_abs_trace},
                           {"mean_grad_norm", stats.mean_grad_norm}, {"max_grad_norm", stats.max_grad_norm}};
  nlohmann::json list = nlohmann::json::array();
  for (const CriticalPoint& p : points) {
    list.push_back({{"position", std::vector<double>(p.position.data(), p.position.data() + p.position.size())},
                    {"value", p.value},
                    {"grad_norm", p.grad_norm},
                    {"eigenvalues",
                     std::vector<double>(p.eigenvalues.data(), p.eigenvalues.data() + p.eigenvalues.size())},
                    {"kind", kind_name(p)}});
  }
  j["critical_points"] = std::move(list);
  return j.dump(2);
}

ShellStatistics shell_statistics(const ScalarField& field, const PointCloud* cloud, const Box& domain, double shell,
                                 std::size_t n, Rng& rng, std::size_t k) {
  if (!(shell > 0.0)) throw Error(Errc::invalid_argument, "shell half-width must be positive");
  if (n == 0) throw Error(Errc::invalid_argument, "shell statistics need at least one sample");
  const int d = field.dim();
  const Box box = resolve_domain(domain, d);
  std::vector<double> sigmas;
  if (cloud) {
    if (cloud->dim() != d) throw Error(Errc::invalid_argument, "cloud and field dimensions differ");
    sigmas = compute_sigmas(*cloud, k);
  }
  const std::size_t cap = std::max<std::size_t>(1000 * n, kMinAttemptsBeforeGiveUp);

  ShellStatistics s;
  double sum_det = 0.0, sum_trace = 0.0, sum_grad = 0.0;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  while (s.samples < n) {
    Points candidates(d, static_cast<Eigen::Index>(kShellBatch));
    if (cloud) {
      std::uniform_int_distribution<std::size_t> pick(0, cloud->size() - 1);
      Points centers(d, candidates.cols());
      std::vector<double> sig(kShellBatch);
      for (std::size_t i = 0; i < kShellBatch; ++i) {
        const std::size_t p = pick(rng);
        centers.col(static_cast<Eigen::Index>(i)) = cloud->points.col(static_cast<Eigen::Index>(p));
        sig[i] = sigmas[p];
      }
      candidates = gaussian_offsets(centers, sig, rng);
    } else {
      for (Eigen::Index i = 0; i < candidates.cols(); ++i)
        for (int a = 0; a < d; ++a) candidates(a, i) = std::lerp(box.lo[a], box.hi[a], u01(rng));
    }
    const std::vector<Jet> jets = field.jets(candidates, JetOrder::hessian);
    for (const Jet& j : jets) {
      ++s.attempts;
      if (!(std::abs(j.value) < shell)) continue;
      const double det = std::abs(determinant(j.hess));
      const double tr = std::abs(j.hess.trace());
      const double g = j.grad.norm();
      sum_det += det;
      sum_trace += tr;
      sum_grad += g;
      s.max_abs_det = std::max(s.max_abs_det, det);
      s.max_abs_trace = std::max(s.max_abs_trace, tr);
      s.max_grad_norm = std::max(s.max_grad_norm, g);
      if (++s.samples == n) break;
    }
    const bool starving = s.attempts >= kMinAttemptsBeforeGiveUp &&
                          static_cast<double>(s.samples) < 1e-3 * static_cast<double>(s.attempts);
    if (s.samples < n && (starving || s.attempts >= cap))
      throw Error(Errc::sampling_failed, "shell sampling accepted " + std::to_string(s.samples) + " of " +
                                             std::to_string(s.attempts) + " candidates with |f| < " +
                                             std::to_string(shell));
  }
  const double m = static_cast<double>(s.samples);
  s.mean_abs_det = sum_det / m;
  s.mean_abs_trace = sum_trace / m;
  s.mean_grad_norm = sum_grad / m;
  return s;
}

}  // namespace nsh
