#include "nsh/losses.hpp"

#include <cmath>

#include "nsh/error.hpp"
#include "nsh/graddiff.hpp"

namespace nsh {

namespace {

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

void require_nonempty(std::span<const Jet> jets, const char* term) {
  if (jets.empty()) throw Error(Errc::empty_input, std::string(term) + " loss needs at least one sample");
}

template <typename F>
double mean_of(std::span<const Jet> jets, F&& per_sample) {
  double sum = 0.0;
  for (const Jet& j : jets) sum += per_sample(j);
  return sum / static_cast<double>(jets.size());
}

void require_grad(const Jet& j) {
  if (j.grad.size() == 0) throw Error(Errc::invalid_argument, "loss term needs gradients");
}

void require_hess(const Jet& j) {
  if (j.hess.size() == 0) throw Error(Errc::invalid_argument, "loss term needs Hessians");
}

}  // namespace

const char* to_string(Regularizer r) {
  switch (r) {
    case Regularizer::singular_hessian: return "singular_hessian";
    case Regularizer::dirichlet: return "dirichlet";
    case Regularizer::hessian_l2: return "hessian_l2";
    case Regularizer::hessian_l1: return "hessian_l1";
    case Regularizer::laplacian: return "laplacian";
    case Regularizer::none: return "none";
  }
  return "?";
}

const char* to_string(EikonalMode m) {
  switch (m) {
    case EikonalMode::relaxed_on_P: return "relaxed_on_P";
    case EikonalMode::exact_on_P: return "exact_on_P";
    case EikonalMode::exact_on_all: return "exact_on_all";
  }
  return "?";
}

Regularizer parse_regularizer(const std::string& name) {
  for (auto r : {Regularizer::singular_hessian, Regularizer::dirichlet, Regularizer::hessian_l2,
                 Regularizer::hessian_l1, Regularizer::laplacian, Regularizer::none})
    if (name == to_string(r)) return r;
  throw Error(Errc::invalid_argument, "unknown regularizer '" + name + "'");
}

EikonalMode parse_eikonal_mode(const std::string& name) {
  for (auto m : {EikonalMode::relaxed_on_P, EikonalMode::exact_on_P, EikonalMode::exact_on_all})
    if (name == to_string(m)) return m;
  throw Error(Errc::invalid_argument, "unknown eikonal mode '" + name + "'");
}

void LossConfig::validate() const {
  for (double w : {lambda_manifold, lambda_non_manifold, lambda_eikonal, lambda_regularizer, lambda_neumann})
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::invalid_argument, "loss weights must be finite and >= 0");
  if (!(sigma_min > 0.0 && sigma_min <= 1.0)) throw Error(Errc::invalid_argument, "sigma_min must lie in (0, 1]");
  if (!(alpha > 0.0)) throw Error(Errc::invalid_argument, "alpha must be positive");
}

void AnnealSchedule::validate() const {
  if (total_iters <= 0) throw Error(Errc::invalid_argument, "schedule needs a positive iteration count");
  if (!(plateau_frac >= 0.0 && plateau_frac <= decay_frac && decay_frac <= 1.0))
    throw Error(Errc::invalid_argument, "schedule knots must satisfy 0 <= plateau <= decay <= 1");
  if (!(final_value > 0.0 && final_value <= mid_value && mid_value <= 1.0))
    throw Error(Errc::invalid_argument, "schedule values must satisfy 0 < final <= mid <= 1");
}

double tau(const AnnealSchedule& s, int iter) {
  if (iter < 0 || iter > s.total_iters)
    throw Error(Errc::invalid_argument, "iteration " + std::to_string(iter) + " outside [0, " +
                                            std::to_string(s.total_iters) + "]");
  if (!s.decay) return 1.0;
  const double T = s.total_iters;
  const double it = iter;
  const double knot1 = s.plateau_frac * T;
  const double knot2 = s.decay_frac * T;
  if (it < knot1) return 1.0;
  if (it < knot2) return std::lerp(1.0, s.mid_value, (it - knot1) / (knot2 - knot1));
  if (knot2 >= T) return s.final_value;
  const double u = (it - knot2) / (T - knot2);
  if (s.final_leg == AnnealShape::linear) return std::lerp(s.mid_value, s.final_value, u);
  if (u <= 0.0) return s.mid_value;
  if (u >= 1.0) return s.final_value;
  return std::exp(std::lerp(std::log(s.mid_value), std::log(s.final_value), u));
}

double total_loss(const TermValues& t, const LossConfig& c, double tau_value) {
  double total = c.lambda_manifold * t.manifold + c.lambda_non_manifold * t.non_manifold +
                 c.lambda_eikonal * t.eikonal;
  if (c.regularizer != Regularizer::none) total += c.lambda_regularizer * tau_value * t.regularizer;
  if (c.neumann) total += c.lambda_neumann * t.neumann;
  return total;
}

namespace sample {

double manifold(const Jet& j, JetAdjoint* adj, double weight) {
  if (adj) adj->value += weight * sign(j.value);
  return std::abs(j.value);
}

double non_manifold(const Jet& j, double alpha, JetAdjoint* adj, double weight) {
  const double e = std::exp(-alpha * std::abs(j.value));
  if (adj) adj->value += weight * (-alpha * sign(j.value) * e);
  return e;
}

double eikonal(const Jet& j, EikonalMode mode, double sigma_min, JetAdjoint* adj, double weight) {
  require_grad(j);
  const double norm = j.grad.norm();
  if (mode == EikonalMode::relaxed_on_P) {
    if (norm >= sigma_min) return 0.0;
    if (adj && norm > 0.0) adj->grad -= (weight / norm) * j.grad;
    return sigma_min - norm;
  }
  if (adj && norm > 0.0) adj->grad += (weight * sign(norm - 1.0) / norm) * j.grad;
  return std::abs(norm - 1.0);
}

double singular_hessian(const Jet& j, JetAdjoint* adj, double weight) {
  require_hess(j);
  if (!adj) return std::abs(determinant(j.hess));
  const auto [det, d_det] = det_and_derivative(j.hess);
  adj->hess += (weight * sign(det)) * d_det;
  return std::abs(det);
}

double smooth_energy(const Jet& j, Regularizer kind, bool laplacian_squared, JetAdjoint* adj, double weight) {
  switch (kind) {
    case Regularizer::dirichlet: {
      require_grad(j);
      if (adj) adj->grad += weight * j.grad;
      return 0.5 * j.grad.squaredNorm();
    }
    case Regularizer::hessian_l2: {
      require_hess(j);
      if (adj) adj->hess += (2.0 * weight) * j.hess;
      return j.hess.squaredNorm();
    }
    case Regularizer::hessian_l1: {
      require_hess(j);
      if (adj) adj->hess += weight * j.hess.unaryExpr([](double x) { return sign(x); });
      return j.hess.cwiseAbs().sum();
    }
    case Regularizer::laplacian: {
      require_hess(j);
      const double tr = j.hess.trace();
      if (adj) {
        const double d = laplacian_squared ? 2.0 * tr : sign(tr);
        adj->hess.diagonal().array() += weight * d;
      }
      return laplacian_squared ? tr * tr : std::abs(tr);
    }
    default:
      throw Error(Errc::invalid_argument, std::string("'") + to_string(kind) + "' is not a smooth energy");
  }
}

double neumann(const Jet& j, const Vec& normal, JetAdjoint* adj, double weight) {
  require_grad(j);
  if (adj) adj->grad -= weight * normal;
  return 1.0 - j.grad.dot(normal);
}

}  // namespace sample

double manifold_loss(std::span<const Jet> jets) {
  require_nonempty(jets, "manifold");
  return mean_of(jets, [](const Jet& j) { return sample::manifold(j); });
}

double non_manifold_loss(std::span<const Jet> jets, double alpha) {
  require_nonempty(jets, "non-manifold");
  if (!(alpha > 0.0)) throw Error(Errc::invalid_argument, "alpha must be positive");
  return mean_of(jets, [alpha](const Jet& j) { return sample::non_manifold(j, alpha); });
}

double eikonal_loss(std::span<const Jet> jets, EikonalMode mode, double sigma_min) {
  require_nonempty(jets, "eikonal");
  return mean_of(jets, [&](const Jet& j) { return sample::eikonal(j, mode, sigma_min); });
}

double singular_hessian_loss(std::span<const Jet> jets) {
  require_nonempty(jets, "singular-Hessian");
  return mean_of(jets, [](const Jet& j) { return sample::singular_hessian(j); });
}

double smooth_energy_loss(std::span<const Jet> jets, Regularizer kind, bool laplacian_squared) {
  require_nonempty(jets, "smooth-energy");
  return mean_of(jets, [&](const Jet& j) { return sample::smooth_energy(j, kind, laplacian_squared); });
}

double neumann_loss(std::span<const Jet> jets, const Points* normals) {
  require_nonempty(jets, "Neumann");
  if (!normals || normals->cols() != static_cast<Eigen::Index>(jets.size()))
    throw Error(Errc::invalid_argument, "Neumann loss needs one normal per sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < jets.size(); ++i)
    sum += sample::neumann(jets[i], Vec(normals->col(static_cast<Eigen::Index>(i))));
  return sum / static_cast<double>(jets.size());
}

}  // namespace nsh
