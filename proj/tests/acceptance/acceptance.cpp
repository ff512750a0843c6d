// Acceptance checks, one PASS/FAIL line per criterion.
//   nsh_acceptance            run every criterion
//   nsh_acceptance 1 2 5      run the listed criteria
//   nsh_acceptance fast       run the criteria that finish in seconds

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <json.hpp>

#include "grid_census.hpp"
#include "nsh/contour.hpp"
#include "nsh/field.hpp"
#include "nsh/graddiff.hpp"
#include "nsh/losses.hpp"
#include "nsh/metrics.hpp"
#include "nsh/morse.hpp"
#include "nsh/parallel.hpp"
#include "nsh/trainer.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nsh;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

SineNetwork random_net(int dim, int layers, int width, double omega, std::uint64_t seed) {
  SineNetwork n = SineNetwork::init({dim, layers, width, Activation::sine(omega)}, seed);
  std::mt19937_64 rng(seed + 1000);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& layer : n.layers())
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = u(rng);
  return n;
}

Outcome jet_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(11);
  double worst_grad = 0.0, worst_hess = 0.0, worst_sym = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const SineNetwork net = random_net(3, 2, 32, 1.0, 100 + trial);
    const Points xs = testing::random_points(3, 5, rng);
    for (Eigen::Index j = 0; j < xs.cols(); ++j) {
      const Vec x = xs.col(j);
      const Jet jet = forward_jet(net, x);
      worst_grad = std::max(worst_grad, testing::relative_error(jet.grad, testing::fd_gradient(net, x, 1e-4)));
      worst_hess = std::max(worst_hess, testing::relative_error(jet.hess, testing::fd_hessian(net, x, 1e-4)));
      worst_sym = std::max(worst_sym, (jet.hess - jet.hess.transpose()).cwiseAbs().maxCoeff());
    }
  }
  const double secs = seconds_since(t0);
  return {worst_grad < 1e-6 && worst_hess < 1e-6 && worst_sym <= 1e-10 && secs < 5.0,
          fmt("grad rel %.2e, hess rel %.2e (< 1e-6), asymmetry %.1e (<= 1e-10), %.2f s (< 5)", worst_grad,
              worst_hess, worst_sym, secs)};
}

LossConfig single_term(const std::string& term) {
  LossConfig c;
  c.lambda_manifold = c.lambda_non_manifold = c.lambda_eikonal = c.lambda_regularizer = 0.0;
  c.regularizer = Regularizer::none;
  if (term == "manifold") c.lambda_manifold = 1.0;
  if (term == "non_manifold") c.lambda_non_manifold = 1.0;
  if (term.rfind("eikonal_", 0) == 0) {
    c.lambda_eikonal = 1.0;
    c.eikonal_mode = parse_eikonal_mode(term.substr(8));
  }
  if (term.rfind("reg_", 0) == 0) {
    c.lambda_regularizer = 1.0;
    c.regularizer = parse_regularizer(term.substr(4));
  }
  if (term == "neumann") {
    c.neumann = true;
    c.lambda_neumann = 1.0;
  }
  return c;
}

Outcome parameter_gradients() {
  const auto t0 = Clock::now();
  const char* terms[] = {"manifold",           "non_manifold",         "eikonal_relaxed_on_P", "eikonal_exact_on_P",
                         "eikonal_exact_on_all", "reg_singular_hessian", "reg_dirichlet",        "reg_hessian_l2",
                         "reg_hessian_l1",     "reg_laplacian",        "neumann"};
  std::mt19937_64 rng(21);
  double worst = 0.0;
  std::string worst_term;
  for (int dim : {2, 3}) {
    const SineNetwork net = random_net(dim, 2, 16, 1.0, 7 + static_cast<std::uint64_t>(dim));
    SampleBatch batch;
    batch.surface_points = testing::random_points(dim, 20, rng, -0.8, 0.8);
    for (std::size_t i = 0; i < 20; ++i) batch.surface_indices.push_back(i);
    batch.near_points = testing::random_points(dim, 20, rng, -0.9, 0.9);
    batch.far_points = testing::random_points(dim, 20, rng);
    Points normals = testing::random_points(dim, 20, rng);
    normals.colwise().normalize();
    batch.surface_normals = normals;
    for (const std::string term : terms) {
      const auto check = testing::check_parameter_gradient(net, batch, single_term(term), 1.0, 1e-5, 1e-5, 1e-8);
      if (check.worst > worst) {
        worst = check.worst;
        worst_term = term + " d=" + std::to_string(dim);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1.0 && secs < 30.0,
          fmt("worst error/tolerance %.3f (<= 1) at %s, %.2f s (< 30)", worst,
              worst_term.empty() ? "-" : worst_term.c_str(), secs)};
}

Outcome singular_hessian_identity() {
  Rng rng(31);
  double max_det = 0.0, max_grad_dev = 0.0;
  std::size_t total = 0;
  for (int dim : {2, 3}) {
    const Vec center = Vec::Zero(dim);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<Jet> jets;
    while (jets.size() < 10000) {
      Vec x(dim);
      for (int a = 0; a < dim; ++a) x[a] = u(rng);
      const Jet j = sphere_jet(x, center, 1.0);
      if (std::abs(j.value) < 0.05) jets.push_back(j);
    }
    for (const Jet& j : jets) {
      max_det = std::max(max_det, std::abs(determinant(j.hess)));
      max_grad_dev = std::max(max_grad_dev, std::abs(j.grad.norm() - 1.0));
    }
    max_det = std::max(max_det, singular_hessian_loss(jets));
    const auto field = make_builtin_field(dim == 2 ? "circle" : "sphere", dim);
    const ShellStatistics s = shell_statistics(*field, nullptr, Box::cube(dim), 0.05, 10000, rng);
    max_det = std::max(max_det, s.max_abs_det);
    max_grad_dev = std::max(max_grad_dev, std::abs(s.max_grad_norm - 1.0));
    total += jets.size() + s.samples;
  }
  return {max_det < 1e-12 && max_grad_dev <= 1e-9,
          fmt("%zu shell points: max |det H| %.2e (< 1e-12), max | |grad f| - 1 | %.2e (<= 1e-9)", total, max_det,
              max_grad_dev)};
}

Outcome annealing_schedule() {
  bool ok = true;
  double worst_jump = 0.0;
  for (int T : {1000, 3000, 5000, 10000, 10000000}) {
    AnnealSchedule s;
    s.total_iters = T;
    ok = ok && tau(s, 0) == 1.0 && tau(s, T / 5) == 1.0 && tau(s, 2 * T / 5) == 0.0003 && tau(s, T) == 0.00003;
    double prev = tau(s, 0);
    const int stride = T > 100000 ? 997 : 1;
    for (int it = 1; it <= T; it += stride) {
      const double v = tau(s, it);
      ok = ok && v <= prev;
      prev = v;
    }
    if (T == 10000000) {
      // At this resolution one step changes tau by at most 1e-6 on each linear leg.
      for (int knot : {T / 5, 2 * T / 5, T}) {
        worst_jump = std::max(worst_jump, std::abs(tau(s, knot) - tau(s, knot - 1)));
        if (knot < T) worst_jump = std::max(worst_jump, std::abs(tau(s, knot + 1) - tau(s, knot)));
      }
    }
  }
  ok = ok && worst_jump < 1e-6;
  return {ok, fmt("exact knot values, monotone over every iteration, largest step at a knot %.1e (< 1e-6)",
                  worst_jump)};
}

PointCloud unit_circle() { return testing::circle_cloud(100, 1.0); }

double max_radial_error(const Polyline2D& poly) {
  double e = 0.0;
  for (const auto& v : poly.vertices) e = std::max(e, std::abs(v.norm() - 1.0));
  return poly.vertices.empty() ? INFINITY : e;
}

TrainConfig circle_config(int iters) {
  TrainConfig c;
  c.iters = iters;
  c.log_every = 0;
  return c;
}

Outcome end_to_end_2d() {
  const auto t0 = Clock::now();
  const SineNetwork init = SineNetwork::init({2, 2, 64, Activation::sine(30.0)}, 0);
  const FitResult r = fit(unit_circle(), init, circle_config(3000));
  const NetworkField field(r.net);
  const Polyline2D poly = marching_squares(evaluate_grid(field, 256));
  const int components = connected_components(poly);
  const double err = max_radial_error(poly);
  const double secs = seconds_since(t0);
  const HistoryEntry& last = r.history.back();
  nlohmann::json record = {{"components", components},
                           {"max_radial_error", err},
                           {"seconds", secs},
                           {"final_terms",
                            {{"manifold", last.terms.manifold},
                             {"non_manifold", last.terms.non_manifold},
                             {"eikonal", last.terms.eikonal},
                             {"regularizer", last.terms.regularizer}}}};
  std::ofstream("acceptance_c5.json") << record.dump(1) << '\n';
  return {components == 1 && err < 0.02,
          fmt("%d component(s) (== 1), max radial error %.4f (< 0.02), %.0f s", components, err, secs)};
}

Outcome end_to_end_3d() {
  const auto t0 = Clock::now();
  const PointCloud cloud = testing::sphere_cloud(2000, 41);
  const SineNetwork init = SineNetwork::init({3, 3, 128, Activation::sine(30.0)}, 0);
  TrainConfig config;
  config.iters = 5000;
  config.log_every = 0;
  const FitResult r = fit(cloud, init, config);
  const NetworkField field(r.net);
  const TriangleMesh mesh = marching_cubes(evaluate_grid(field, 128));
  const long chi = euler_characteristic(mesh);
  const bool closed = is_closed(mesh);
  Rng rng(43);
  double fscore = 0.0;
  if (!mesh.triangles.empty()) {
    const SurfaceSamples pred = sample_surface(mesh, 100000, rng);
    const Points gt = testing::sphere_cloud(100000, 47).points;
    const auto [g, p] = rescale_pair(gt, pred.points);
    fscore = f_score(g, p, 0.01).fscore;
  }
  const double secs = seconds_since(t0);
  std::ofstream("acceptance_c6.json") << nlohmann::json{{"euler_characteristic", chi},
                                                        {"closed", closed},
                                                        {"fscore_at_0.01", fscore},
                                                        {"seconds", secs}}
                                             .dump(1)
                                      << '\n';
  return {closed && chi == 2 && fscore >= 95.0,
          fmt("%s, Euler characteristic %ld (== 2), F-score@0.01 %.2f (>= 95), %.0f s", closed ? "closed" : "open",
              chi, fscore, secs)};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(71);
  double worst = 0.0;
  bool identical_ok = true;
  for (int dim : {2, 3}) {
    const Points a = testing::random_points(dim, 500, rng);
    const Points b = testing::random_points(dim, 500, rng);
    auto brute_mean = [](const Points& from, const Points& to) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < from.cols(); ++j) s += testing::brute_nearest(to, from.col(j));
      return s / static_cast<double>(from.cols());
    };
    auto brute_fraction = [](const Points& from, const Points& to, double t) {
      double n = 0.0;
      for (Eigen::Index j = 0; j < from.cols(); ++j) n += testing::brute_nearest(to, from.col(j)) < t ? 1.0 : 0.0;
      return 100.0 * n / static_cast<double>(from.cols());
    };
    const double chamfer_ref = 0.5 * brute_mean(a, b) + 0.5 * brute_mean(b, a);
    worst = std::max(worst, std::abs(chamfer_l1(a, b) - chamfer_ref));
    for (double t : {0.01, 0.05, 0.1, 0.3}) {
      const double recall = brute_fraction(a, b, t), precision = brute_fraction(b, a, t);
      const double ref = recall + precision > 0.0 ? 2.0 * recall * precision / (recall + precision) : 0.0;
      const FScore s = f_score(a, b, t);
      worst = std::max({worst, std::abs(s.fscore - ref), std::abs(s.recall - recall),
                        std::abs(s.precision - precision)});
    }
    identical_ok = identical_ok && chamfer_l1(a, a) == 0.0 && f_score(a, a, 0.005).fscore == 100.0;
  }
  return {worst <= 1e-12 && identical_ok,
          fmt("max deviation from brute force %.1e (<= 1e-12), identical sets %s", worst,
              identical_ok ? "give chamfer 0 / fscore 100" : "WRONG")};
}

Outcome marching_cubes_checks() {
  double worst_z = 0.0;
  for (int res : {8, 12, 33, 64}) {
    const FunctionField plane(3, [](const Vec& x) { return Jet{x[2], Vec::Unit(3, 2), Mat::Zero(3, 3)}; });
    const TriangleMesh m = marching_cubes(evaluate_grid(plane, res));
    if (m.vertices.empty()) worst_z = INFINITY;
    for (const auto& v : m.vertices) worst_z = std::max(worst_z, std::abs(v.z()));
  }
  const auto sphere = make_builtin_field("sphere", 3);
  double err[2];
  for (int i = 0; i < 2; ++i) {
    const TriangleMesh m = marching_cubes(evaluate_grid(*sphere, i == 0 ? 64 : 128));
    err[i] = 0.0;
    for (const auto& v : m.vertices) err[i] = std::max(err[i], std::abs(v.norm() - 0.5));
  }
  const double ratio = err[0] / err[1];
  return {worst_z < 1e-12 && ratio >= 2.5 && ratio <= 6.0,
          fmt("plane max |z| %.1e (< 1e-12), sphere error 64^3 %.2e / 128^3 %.2e = %.2f (in [2.5, 6])", worst_z,
              err[0], err[1], ratio)};
}

Outcome morse_census() {
  const auto field = make_builtin_field("sinsin", 2);
  const double lo = -M_PI - 0.1, hi = M_PI + 0.1;
  CriticalSearchOptions o;
  o.domain.lo = Vec::Constant(2, lo);
  o.domain.hi = Vec::Constant(2, hi);
  o.shell = 10.0;  // every critical point, not only those near the zero set
  const MorseReport m = census(find_critical_points(*field, o).points, 2);
  const int n = 2001;
  const auto g = testing::grid_census([](double x, double y) { return std::sin(x) * std::sin(y); }, lo, hi, n,
                                      2.0 * (hi - lo) / (n - 1));
  const bool match = m.c_min == g.minima && m.c_1saddle == g.saddles && m.c_max == g.maxima;
  const bool sum = m.euler_estimate == m.c_min - m.c_1saddle + m.c_max;
  return {match && sum && m.degenerate == 0,
          fmt("search min/saddle/max %d/%d/%d, grid scan %d/%d/%d, alternating sum %d", m.c_min, m.c_1saddle,
              m.c_max, g.minima, g.saddles, g.maxima, m.euler_estimate)};
}

int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string("\"") + NSH_CLI_PATH + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Outcome determinism() {
  testing::TempDir dir("acceptance_det");
  save_point_cloud(testing::sphere_cloud(300, 5), dir / "cloud.xyz", CloudFormat::xyz);
  testing::write_text(dir / "run.toml", "[network]\nhidden_layers = 2\nwidth = 32\n[train]\nbatch_size = 3000\n");
  std::vector<std::string> models, sidecars;
  bool ran = true;
  for (int threads : {1, 3, 8}) {
    const std::string name = "m" + std::to_string(threads) + ".nsh";
    ran = ran && run_cli("fit \"" + (dir / "cloud.xyz").string() + "\" --seed 17 --iters 40 --threads " +
                             std::to_string(threads) + " --config \"" + (dir / "run.toml").string() + "\" --out \"" +
                             (dir / name).string() + "\"",
                         dir / "log.txt") == 0;
    models.push_back(testing::read_bytes(dir / name));
    sidecars.push_back(testing::read_bytes(dir / (name + ".json")));
  }
  const bool same = !models[0].empty() && models[0] == models[1] && models[0] == models[2] &&
                    sidecars[0] == sidecars[1] && sidecars[0] == sidecars[2];
  return {ran && same, fmt("fit with 1, 3 and 8 threads: checkpoints %s (%zu bytes)",
                           same ? "byte-identical" : "DIFFER", models[0].size())};
}

Outcome regularizer_ablation() {
  const auto t0 = Clock::now();
  const Regularizer kinds[] = {Regularizer::singular_hessian, Regularizer::dirichlet, Regularizer::hessian_l2,
                               Regularizer::laplacian};
  Rng rng(91);
  const Points gt = testing::circle_cloud(20000, 1.0).points;
  nlohmann::json record = nlohmann::json::array();
  std::vector<std::pair<double, std::string>> ranking;
  bool ok = true;
  for (Regularizer kind : kinds) {
    TrainConfig config = circle_config(1000);
    config.loss.regularizer = kind;
    const SineNetwork init = SineNetwork::init({2, 2, 64, Activation::sine(30.0)}, 0);
    const FitResult r = fit(unit_circle(), init, config);
    const NetworkField field(r.net);
    const Polyline2D poly = marching_squares(evaluate_grid(field, 256));
    double chamfer = INFINITY;
    if (!poly.segments.empty()) chamfer = chamfer_l1(gt, sample_polyline(poly, 20000, rng).points);
    nlohmann::json history = nlohmann::json::array();
    for (const HistoryEntry& e : r.history) {
      ok = ok && std::isfinite(e.total);
      history.push_back({e.iter, e.tau, e.terms.manifold, e.terms.non_manifold, e.terms.eikonal,
                         e.terms.regularizer, e.total});
    }
    ok = ok && r.history.size() == 1000;
    record.push_back({{"regularizer", to_string(kind)},
                      {"chamfer_l1", std::isfinite(chamfer) ? nlohmann::json(chamfer) : nlohmann::json(nullptr)},
                      {"components", connected_components(poly)},
                      {"history_columns", {"iter", "tau", "manifold", "non_manifold", "eikonal", "regularizer", "total"}},
                      {"history", std::move(history)}});
    ranking.emplace_back(chamfer, to_string(kind));
  }
  std::ofstream("acceptance_c11.json") << record.dump() << '\n';
  std::sort(ranking.begin(), ranking.end());
  std::string order;
  for (const auto& [c, name] : ranking) order += (order.empty() ? "" : " < ") + name + fmt(" %.4f", c);
  return {ok, fmt("4 runs x 1000 iterations, histories in acceptance_c11.json; chamfer order: %s; %.0f s",
                  order.c_str(), seconds_since(t0))};
}

struct Criterion {
  int id;
  const char* name;
  bool fast;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  retain_heap_buffers();
  const std::vector<Criterion> all = {
      {1, "jet exactness", true, jet_exactness},
      {2, "parameter-gradient exactness", true, parameter_gradients},
      {3, "singular-Hessian identity", true, singular_hessian_identity},
      {4, "annealing schedule", true, annealing_schedule},
      {5, "end-to-end 2D circle", false, end_to_end_2d},
      {6, "end-to-end 3D sphere", false, end_to_end_3d},
      {7, "metrics oracles", true, metric_oracles},
      {8, "marching cubes", true, marching_cubes_checks},
      {9, "Morse census oracle", true, morse_census},
      {10, "determinism across thread counts", true, determinism},
      {11, "regularizer-swap ablation", false, regularizer_ablation},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "fast") {
      for (const auto& c : all)
        if (c.fast) wanted.insert(c.id);
    } else {
      wanted.insert(std::atoi(a.c_str()));
    }
  }
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %2d  %-34s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
