#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "nsh/geometry.hpp"
#include "nsh/types.hpp"

namespace nsh {

/// Value, spatial gradient and spatial Hessian of a scalar field at one point.
struct Jet {
  double value = 0.0;
  Vec grad;
  Mat hess;
};

enum class JetOrder { value = 0, gradient = 1, hessian = 2 };

enum class ActivationKind : std::uint32_t { sine = 0, softplus = 1 };

struct Activation {
  ActivationKind kind = ActivationKind::sine;
  double param = 30.0;  // omega_0 for sine, beta for softplus

  static Activation sine(double omega0 = 30.0) { return {ActivationKind::sine, omega0}; }
  static Activation softplus(double beta = 100.0) { return {ActivationKind::softplus, beta}; }
};

/// `hidden_layers` counts the activated layers; a final linear layer maps to the scalar output.
struct Architecture {
  int input_dim = 3;
  int hidden_layers = 4;
  int width = 256;
  Activation activation;
};

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Sinusoidal (or softplus) MLP f: R^d -> R, evaluated in normalized coordinates.
///
/// Hidden layer l computes s(c * (W_l a + b_l)) where c = omega_0 for sine and 1 for
/// softplus; the last layer is affine. The normalization transform maps world
/// coordinates into the space the network was trained in.
class SineNetwork {
 public:
  SineNetwork(Architecture arch, std::vector<Layer> layers, NormalizationTransform transform);

  /// SIREN-style initialization, deterministic in `seed`.
  static SineNetwork init(const Architecture& arch, std::uint64_t seed);

  const Architecture& arch() const { return arch_; }
  int input_dim() const { return arch_.input_dim; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  const NormalizationTransform& transform() const { return transform_; }
  void set_transform(NormalizationTransform t);

  /// Pre-activation multiplier of layer `l` (omega_0 on sine hidden layers, else 1).
  double layer_scale(std::size_t l) const;
  std::size_t parameter_count() const;

 private:
  Architecture arch_;
  std::vector<Layer> layers_;
  NormalizationTransform transform_;
};

void check_architecture(const Architecture& arch);

/// Number of jet channels carried per point: value, d gradient entries, d(d+1)/2 Hessian entries.
int channel_count(JetOrder order, int dim);
/// Channel holding d^2 f / dx_j dx_k (any order of j, k).
int hessian_channel(int j, int k, int dim);

/// Row-major block used for batched jets: one row per neuron, columns grouped by channel
/// (column = channel * batch + point).
using JetBlock = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Forward record of one batch. `inputs[l]` feeds linear layer l; `preacts[l]` is the scaled
/// pre-activation of hidden layer l. Intermediate blocks are only kept when requested.
struct JetTape {
  JetOrder order = JetOrder::value;
  int dim = 0;
  Eigen::Index batch = 0;
  std::vector<JetBlock> inputs;
  std::vector<JetBlock> preacts;
  JetBlock output;  // 1 x (channels * batch)

  int channels() const { return channel_count(order, dim); }
  Jet jet(Eigen::Index point) const;
};

JetTape forward_tape(const SineNetwork& net, const Eigen::Ref<const Points>& xs, JetOrder order,
                     bool keep_intermediates);

/// Exact value, gradient and Hessian at x (normalized coordinates).
Jet forward_jet(const SineNetwork& net, const Vec& x);

/// Pointwise equal to forward_jet; cheaper orders leave the skipped fields empty.
std::vector<Jet> forward_batch(const SineNetwork& net, const Points& xs, JetOrder need);
Eigen::VectorXd forward_values(const SineNetwork& net, const Points& xs);

/// Batch chunk size shared by evaluation and the gradient reduction.
inline constexpr Eigen::Index kChunkSize = 1024;

void save_model(const SineNetwork& net, const std::filesystem::path& path);
SineNetwork load_model(const std::filesystem::path& path);

inline constexpr std::uint32_t kModelVersion = 1;

}  // namespace nsh
