#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nsh/losses.hpp"
#include "nsh/sampler.hpp"
#include "nsh/sinenet.hpp"

namespace nsh {

/// Gradient of a scalar with respect to every network parameter, shaped like the layers.
struct ParamGradient {
  std::vector<Layer> layers;

  static ParamGradient zeros_like(const SineNetwork& net);
  ParamGradient& operator+=(const ParamGradient& other);
  bool all_finite() const;
  Eigen::VectorXd flatten() const;
};

/// Flattened parameter order used by ParamGradient::flatten: per layer, weights
/// row-major then biases.
Eigen::VectorXd flatten_parameters(const SineNetwork& net);
void unflatten_parameters(SineNetwork& net, const Eigen::VectorXd& flat);

struct LossResult {
  double total = 0.0;
  TermValues terms;
  ParamGradient grad;
};

/// Forward-only evaluation of every active term, computed through forward_batch and the
/// losses module.
TermValues evaluate_terms(const SineNetwork& net, const SampleBatch& batch, const LossConfig& config);

/// Total loss, per-term breakdown and the exact parameter gradient.
///
/// Samples are processed in chunks of kChunkSize; chunk gradients are combined in a fixed
/// order, so the result does not depend on the thread count.
LossResult loss_and_grad(const SineNetwork& net, const SampleBatch& batch, const LossConfig& config,
                         double tau);

/// Determinant by cofactor expansion (d <= 3) and its derivative, the transposed adjugate.
std::pair<double, Mat> det_and_derivative(const Mat& h);
double determinant(const Mat& h);

/// Adds the parameter gradient for output adjoint `out_adjoint` (1 x channels*batch) of a
/// tape recorded with intermediates.
void backpropagate(const SineNetwork& net, const JetTape& tape, const JetBlock& out_adjoint,
                   ParamGradient& grad);

}  // namespace nsh
