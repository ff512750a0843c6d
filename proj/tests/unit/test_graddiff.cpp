#include <doctest.h>

#include <random>

#include <Eigen/LU>

#include "nsh/error.hpp"
#include "nsh/graddiff.hpp"
#include "nsh/parallel.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nsh;

namespace {

SampleBatch random_batch(int dim, Eigen::Index n, std::mt19937_64& rng, bool normals) {
  SampleBatch b;
  b.surface_points = testing::random_points(dim, n, rng, -0.8, 0.8);
  for (Eigen::Index i = 0; i < n; ++i) b.surface_indices.push_back(static_cast<std::size_t>(i));
  b.near_points = testing::random_points(dim, n, rng, -0.9, 0.9);
  b.far_points = testing::random_points(dim, n, rng);
  if (normals) {
    Points nn = testing::random_points(dim, n, rng);
    nn.colwise().normalize();
    b.surface_normals = nn;
  }
  return b;
}

LossConfig only(const std::string& term) {
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
  if (term == "laplacian_squared") {
    c.lambda_regularizer = 1.0;
    c.regularizer = Regularizer::laplacian;
    c.laplacian_squared = true;
  }
  if (term == "neumann") {
    c.neumann = true;
    c.lambda_neumann = 1.0;
  }
  return c;
}

SineNetwork small_net(int dim, std::uint64_t seed, double omega = 30.0) {
  SineNetwork n = SineNetwork::init({dim, 2, 16, Activation::sine(omega)}, seed);
  std::mt19937_64 rng(seed + 1000);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& layer : n.layers())
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = u(rng);
  return n;
}

}  // namespace

TEST_CASE("determinant derivative is the transposed adjugate") {
  Mat d3 = Eigen::Vector3d(1, 2, 3).asDiagonal();
  auto [det, der] = det_and_derivative(d3);
  CHECK(det == 6.0);
  CHECK(der.isApprox(Mat(Eigen::Vector3d(6, 3, 2).asDiagonal())));
  Mat s3 = Eigen::Vector3d(1, 2, 0).asDiagonal();
  auto [det0, der0] = det_and_derivative(s3);
  CHECK(det0 == 0.0);
  CHECK(der0.isApprox(Mat(Eigen::Vector3d(0, 0, 2).asDiagonal())));
  CHECK(der0.allFinite());

  std::mt19937_64 rng(1);
  for (int dim : {2, 3}) {
    for (int trial = 0; trial < 20; ++trial) {
      Mat h = testing::random_points(dim, dim, rng);
      h = (h + h.transpose()).eval();
      auto [v, g] = det_and_derivative(h);
      CHECK(v == doctest::Approx(h.determinant()).epsilon(1e-12));
      Mat fd(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          Mat p = h, m = h;
          p(i, j) += 1e-6;
          m(i, j) -= 1e-6;
          fd(i, j) = (determinant(p) - determinant(m)) / 2e-6;
        }
      CHECK(testing::relative_error(g, fd) < 1e-8);
    }
  }
}

TEST_CASE("output bias gradient of the manifold term") {
  // With a single positive-valued point, d mean|f| / d b_out = sign(f) = 1.
  SineNetwork n = small_net(2, 3);
  SampleBatch b;
  b.surface_points = Points::Zero(2, 1);
  b.surface_indices = {0};
  n.layers().back().bias[0] = 10.0;
  LossResult r = loss_and_grad(n, b, only("manifold"), 1.0);
  CHECK(r.grad.layers.back().bias[0] == 1.0);
  n.layers().back().bias[0] = -10.0;
  CHECK(loss_and_grad(n, b, only("manifold"), 1.0).grad.layers.back().bias[0] == -1.0);
}

TEST_CASE("every term's parameter gradient matches finite differences") {
  const char* terms[] = {"manifold",      "non_manifold",  "eikonal_relaxed_on_P", "eikonal_exact_on_P",
                         "eikonal_exact_on_all", "reg_singular_hessian", "reg_dirichlet", "reg_hessian_l2",
                         "reg_hessian_l1", "reg_laplacian", "laplacian_squared", "neumann"};
  std::mt19937_64 rng(5);
  for (int dim : {2, 3}) {
    // omega_0 = 1 with plain central differences; omega_0 = 30 needs Richardson extrapolation
    // because the h^2 truncation term grows like omega_0^4 for the Hessian-based terms; the
    // small step also keeps the kinks of |det H| and |H_ij| outside the stencil.
    for (double omega : {1.0, 30.0}) {
      const SineNetwork net = small_net(dim, 40 + static_cast<std::uint64_t>(dim), omega);
      const SampleBatch batch = random_batch(dim, 20, rng, true);
      for (const std::string term : terms) {
        CAPTURE(dim);
        CAPTURE(omega);
        CAPTURE(term);
        LossConfig c = only(term);
        if (term == "non_manifold") c.alpha = 5.0;
        const auto check = testing::check_parameter_gradient(net, batch, c, 1.0, omega > 1.0 ? 2e-6 : 1e-5, 1e-5,
                                                             1e-8, omega > 1.0);
        CAPTURE(check.worst_index);
        CHECK(check.worst <= 1.0);
      }
    }
  }
}

TEST_CASE("per-term breakdown sums to the total and matches forward evaluation") {
  std::mt19937_64 rng(6);
  const SineNetwork net = small_net(3, 8);
  const SampleBatch batch = random_batch(3, 50, rng, true);
  LossConfig c;
  c.neumann = true;
  for (double t : {1.0, 0.25}) {
    const LossResult r = loss_and_grad(net, batch, c, t);
    CHECK(r.total == doctest::Approx(total_loss(r.terms, c, t)).epsilon(1e-12));
    const TermValues f = evaluate_terms(net, batch, c);
    CHECK(f.manifold == doctest::Approx(r.terms.manifold).epsilon(1e-12));
    CHECK(f.non_manifold == doctest::Approx(r.terms.non_manifold).epsilon(1e-12));
    CHECK(f.eikonal == doctest::Approx(r.terms.eikonal).epsilon(1e-12));
    CHECK(f.regularizer == doctest::Approx(r.terms.regularizer).epsilon(1e-12));
    CHECK(f.neumann == doctest::Approx(r.terms.neumann).epsilon(1e-12));
  }
}

TEST_CASE("duplicating every sample leaves the mean loss and gradient unchanged") {
  std::mt19937_64 rng(7);
  const SineNetwork net = small_net(2, 9);
  const SampleBatch b = random_batch(2, 16, rng, false);
  SampleBatch dup = b;
  auto twice = [](const Points& p) {
    Points q(p.rows(), 2 * p.cols());
    q << p, p;
    return q;
  };
  dup.surface_points = twice(b.surface_points);
  dup.near_points = twice(b.near_points);
  dup.far_points = twice(b.far_points);
  dup.surface_indices.insert(dup.surface_indices.end(), b.surface_indices.begin(), b.surface_indices.end());
  const LossConfig c;
  const LossResult x = loss_and_grad(net, b, c, 1.0), y = loss_and_grad(net, dup, c, 1.0);
  CHECK(y.total == doctest::Approx(x.total).epsilon(1e-13));
  CHECK(testing::relative_error(y.grad.flatten(), x.grad.flatten()) < 1e-12);
}

TEST_CASE("gradient is deterministic and chunking is thread-independent") {
  std::mt19937_64 rng(8);
  const SineNetwork net = small_net(3, 10);
  const SampleBatch b = random_batch(3, 3000, rng, false);
  const LossConfig c;
  const LossResult x = loss_and_grad(net, b, c, 0.5);
  const int before = thread_count();
  set_thread_count(3);
  const LossResult y = loss_and_grad(net, b, c, 0.5);
  set_thread_count(before);
  CHECK(x.total == y.total);
  CHECK(x.grad.flatten() == y.grad.flatten());
}

TEST_CASE("empty required sets are reported") {
  const SineNetwork net = small_net(2, 11);
  SampleBatch b;
  b.surface_points = Points::Zero(2, 0);
  CHECK_THROWS_AS(loss_and_grad(net, b, LossConfig{}, 1.0), Error);
  std::mt19937_64 rng(1);
  SampleBatch nn = random_batch(2, 4, rng, false);
  nn.near_points = Points::Zero(2, 0);
  CHECK_THROWS_AS(loss_and_grad(net, nn, LossConfig{}, 1.0), Error);
  LossConfig neu;
  neu.neumann = true;
  CHECK_THROWS_AS(loss_and_grad(net, random_batch(2, 4, rng, false), neu, 1.0), Error);
}

TEST_CASE("parameter flattening round trips") {
  SineNetwork n = small_net(3, 12);
  const Eigen::VectorXd theta = flatten_parameters(n);
  CHECK(theta.size() == static_cast<Eigen::Index>(n.parameter_count()));
  SineNetwork m = SineNetwork::init(n.arch(), 99);
  unflatten_parameters(m, theta);
  CHECK(flatten_parameters(m) == theta);
  CHECK(n.layers()[1].weight == m.layers()[1].weight);
}
