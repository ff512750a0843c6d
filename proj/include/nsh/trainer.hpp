#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nsh/graddiff.hpp"
#include "nsh/losses.hpp"
#include "nsh/sinenet.hpp"

namespace nsh {

struct AdamConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments mirroring the network parameters.
struct AdamState {
  std::vector<Layer> m;
  std::vector<Layer> v;
  std::int64_t step = 0;

  static AdamState zeros_like(const SineNetwork& net);
};

/// Bias-corrected Adam update in place. Throws on non-finite gradients; `source` names
/// the origin of the gradient in the diagnostic.
void adam_step(SineNetwork& net, const ParamGradient& grad, AdamState& state, const AdamConfig& config,
               const std::string& source = "loss");

struct TrainConfig {
  int iters = 10000;
  AdamConfig adam;
  std::size_t batch_size = 15000;
  std::size_t k_neighbors = 50;
  std::uint64_t seed = 0;
  LossConfig loss;
  AnnealSchedule schedule;  // total_iters follows `iters`
  int log_every = 100;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::filesystem::path checkpoint_path;

  void validate() const;
};

struct HistoryEntry {
  int iter = 0;
  double tau = 1.0;
  TermValues terms;
  double total = 0.0;
};

using LossHistory = std::vector<HistoryEntry>;

struct FitCallbacks {
  /// Called every `log_every` iterations and on the last one.
  std::function<void(const HistoryEntry&)> on_log;
  /// Polled after each iteration; returning true stops training (a checkpoint is still written).
  std::function<bool(int)> should_stop;
};

struct FitResult {
  SineNetwork net;
  LossHistory history;
  int iterations_run = 0;
};

/// Trains `net` on `cloud` (world units). The cloud is normalized internally and the
/// transform is stored in the returned network.
FitResult fit(const PointCloud& cloud, SineNetwork net, const TrainConfig& config,
              const FitCallbacks& callbacks = {});

/// Sidecar JSON written next to checkpoints: iteration, config hash and loss history.
std::string config_hash(const TrainConfig& config);
void write_checkpoint(const SineNetwork& net, const TrainConfig& config, const LossHistory& history,
                      int iteration, const std::filesystem::path& path);

}  // namespace nsh
