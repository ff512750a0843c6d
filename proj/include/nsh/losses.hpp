#pragma once

#include <span>
#include <string>

#include "nsh/sinenet.hpp"
#include "nsh/types.hpp"

namespace nsh {

enum class Regularizer { singular_hessian, dirichlet, hessian_l2, hessian_l1, laplacian, none };
enum class EikonalMode { relaxed_on_P, exact_on_P, exact_on_all };

const char* to_string(Regularizer r);
const char* to_string(EikonalMode m);
Regularizer parse_regularizer(const std::string& name);
EikonalMode parse_eikonal_mode(const std::string& name);

struct LossConfig {
  double lambda_manifold = 7000.0;
  double lambda_non_manifold = 600.0;
  double lambda_eikonal = 50.0;
  /// Weight of the regularizer slot, whichever regularizer fills it.
  double lambda_regularizer = 3.0;
  double alpha = 100.0;
  double sigma_min = 0.8;
  Regularizer regularizer = Regularizer::singular_hessian;
  EikonalMode eikonal_mode = EikonalMode::relaxed_on_P;
  bool neumann = false;
  double lambda_neumann = 100.0;
  /// Laplacian energy as trace(H)^2 instead of |trace(H)|.
  bool laplacian_squared = false;

  void validate() const;
};

enum class AnnealShape { linear, log_linear };

/// Annealing factor on the regularizer: 1 on the plateau, then down to `mid_value` at
/// `decay_frac * total_iters`, then down to `final_value` at the end.
struct AnnealSchedule {
  int total_iters = 10000;
  double plateau_frac = 0.2;
  double decay_frac = 0.4;
  double mid_value = 0.0003;
  double final_value = 0.00003;
  AnnealShape final_leg = AnnealShape::linear;
  /// When false the factor stays 1 throughout.
  bool decay = true;

  void validate() const;
};

double tau(const AnnealSchedule& schedule, int iter);

/// Unweighted mean value of every term over its own domain.
struct TermValues {
  double manifold = 0.0;
  double non_manifold = 0.0;
  double eikonal = 0.0;
  double regularizer = 0.0;
  double neumann = 0.0;
};

double total_loss(const TermValues& terms, const LossConfig& config, double tau);

/// d(loss)/d(jet). `hess` holds the derivative with respect to every matrix entry
/// treated as independent.
struct JetAdjoint {
  double value = 0.0;
  Vec grad;
  Mat hess;

  static JetAdjoint zero(int dim) { return {0.0, Vec::Zero(dim), Mat::Zero(dim, dim)}; }
};

/// Per-sample kernels. Each returns the sample's term value and, when `adj` is given,
/// adds `weight` times its derivative. Non-smooth points use sign(0) = 0.
namespace sample {
double manifold(const Jet& j, JetAdjoint* adj = nullptr, double weight = 1.0);
double non_manifold(const Jet& j, double alpha, JetAdjoint* adj = nullptr, double weight = 1.0);
double eikonal(const Jet& j, EikonalMode mode, double sigma_min, JetAdjoint* adj = nullptr,
               double weight = 1.0);
double singular_hessian(const Jet& j, JetAdjoint* adj = nullptr, double weight = 1.0);
double smooth_energy(const Jet& j, Regularizer kind, bool laplacian_squared, JetAdjoint* adj = nullptr,
                     double weight = 1.0);
double neumann(const Jet& j, const Vec& normal, JetAdjoint* adj = nullptr, double weight = 1.0);
}  // namespace sample

double manifold_loss(std::span<const Jet> jets);
double non_manifold_loss(std::span<const Jet> jets, double alpha);
double eikonal_loss(std::span<const Jet> jets, EikonalMode mode, double sigma_min);
double singular_hessian_loss(std::span<const Jet> jets);
double smooth_energy_loss(std::span<const Jet> jets, Regularizer kind, bool laplacian_squared = false);
double neumann_loss(std::span<const Jet> jets, const Points* normals);

}  // namespace nsh
