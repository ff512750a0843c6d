#include "nsh/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "nsh/error.hpp"
#include "nsh/sampler.hpp"

namespace nsh {

namespace {

nlohmann::json terms_json(const TermValues& t) {
  return {{"manifold", t.manifold},
          {"non_manifold", t.non_manifold},
          {"eikonal", t.eikonal},
          {"regularizer", t.regularizer},
          {"neumann", t.neumann}};
}

nlohmann::json config_json(const TrainConfig& c) {
  const LossConfig& l = c.loss;
  const AnnealSchedule& s = c.schedule;
  return {
      {"iters", c.iters},
      {"learning_rate", c.adam.learning_rate},
      {"beta1", c.adam.beta1},
      {"beta2", c.adam.beta2},
      {"epsilon", c.adam.epsilon},
      {"batch_size", c.batch_size},
      {"k_neighbors", c.k_neighbors},
      {"seed", c.seed},
      {"loss",
       {{"lambda_manifold", l.lambda_manifold},
        {"lambda_non_manifold", l.lambda_non_manifold},
        {"lambda_eikonal", l.lambda_eikonal},
        {"lambda_regularizer", l.lambda_regularizer},
        {"alpha", l.alpha},
        {"sigma_min", l.sigma_min},
        {"regularizer", to_string(l.regularizer)},
        {"eikonal_mode", to_string(l.eikonal_mode)},
        {"neumann", l.neumann},
        {"lambda_neumann", l.lambda_neumann},
        {"laplacian_squared", l.laplacian_squared}}},
      {"schedule",
       {{"plateau_frac", s.plateau_frac},
        {"decay_frac", s.decay_frac},
        {"mid_value", s.mid_value},
        {"final_value", s.final_value},
        {"final_leg", s.final_leg == AnnealShape::linear ? "linear" : "log_linear"},
        {"decay", s.decay}}},
  };
}

}  // namespace

AdamState AdamState::zeros_like(const SineNetwork& net) {
  AdamState s;
  for (const Layer& layer : net.layers()) {
    Layer z{Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()), Eigen::VectorXd::Zero(layer.bias.size())};
    s.m.push_back(z);
    s.v.push_back(z);
  }
  return s;
}

void adam_step(SineNetwork& net, const ParamGradient& grad, AdamState& state, const AdamConfig& config,
               const std::string& source) {
  auto& layers = net.layers();
  if (grad.layers.size() != layers.size() || state.m.size() != layers.size())
    throw Error(Errc::invalid_argument, "Adam shapes do not match the network");
  if (!grad.all_finite()) throw Error(Errc::non_finite, "non-finite gradient from the " + source);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  auto update = [&](auto param, auto g, auto m, auto v) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.square();
    param -= config.learning_rate * (m / c1) / ((v / c2).sqrt() + config.epsilon);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight.array(), grad.layers[l].weight.array(), state.m[l].weight.array(),
           state.v[l].weight.array());
    update(layers[l].bias.array(), grad.layers[l].bias.array(), state.m[l].bias.array(), state.v[l].bias.array());
  }
}

void TrainConfig::validate() const {
  if (iters <= 0) throw Error(Errc::invalid_argument, "iters must be positive");
  if (!(adam.learning_rate > 0.0)) throw Error(Errc::invalid_argument, "learning_rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw Error(Errc::invalid_argument, "Adam betas must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) throw Error(Errc::invalid_argument, "Adam epsilon must be positive");
  if (batch_size == 0) throw Error(Errc::invalid_argument, "batch_size must be positive");
  if (k_neighbors == 0) throw Error(Errc::invalid_argument, "k_neighbors must be positive");
  if (log_every < 0 || checkpoint_every < 0) throw Error(Errc::invalid_argument, "intervals must be >= 0");
  loss.validate();
  AnnealSchedule s = schedule;
  s.total_iters = iters;
  s.validate();
}

std::string config_hash(const TrainConfig& config) {
  const std::string text = config_json(config).dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void write_checkpoint(const SineNetwork& net, const TrainConfig& config, const LossHistory& history,
                      int iteration, const std::filesystem::path& path) {
  // Write-then-rename so an interrupted run never leaves a half-written checkpoint.
  const std::filesystem::path tmp = path.string() + ".tmp";
  save_model(net, tmp);
  std::filesystem::rename(tmp, path);

  nlohmann::json side;
  side["iteration"] = iteration;
  side["config_hash"] = config_hash(config);
  side["config"] = config_json(config);
  nlohmann::json hist = nlohmann::json::array();
  for (const HistoryEntry& e : history)
    hist.push_back({{"iter", e.iter}, {"tau", e.tau}, {"total", e.total}, {"terms", terms_json(e.terms)}});
  side["history"] = std::move(hist);
  const std::filesystem::path side_path = path.string() + ".json";
  const std::filesystem::path side_tmp = side_path.string() + ".tmp";
  {
    std::ofstream out(side_tmp);
    if (!out) throw Error(Errc::io, "cannot write '" + side_tmp.string() + "'");
    out << side.dump(1) << '\n';
    if (!out) throw Error(Errc::io, "write failed for '" + side_tmp.string() + "'");
  }
  std::filesystem::rename(side_tmp, side_path);
}

FitResult fit(const PointCloud& cloud, SineNetwork net, const TrainConfig& config, const FitCallbacks& callbacks) {
  config.validate();
  if (cloud.dim() != net.input_dim())
    throw Error(Errc::invalid_argument, "cloud dimension " + std::to_string(cloud.dim()) +
                                            " does not match network input dimension " +
                                            std::to_string(net.input_dim()));
  if (config.loss.neumann && !cloud.oriented())
    throw Error(Errc::invalid_argument, "Neumann term requested but the cloud has no normals");
  auto [normalized, transform] = normalize(cloud);
  net.set_transform(transform);

  AnnealSchedule schedule = config.schedule;
  schedule.total_iters = config.iters;
  const std::vector<double> sigmas = compute_sigmas(normalized, config.k_neighbors);
  Rng rng(config.seed);
  AdamState adam = AdamState::zeros_like(net);

  FitResult result{net, {}, 0};
  result.history.reserve(static_cast<std::size_t>(config.iters));
  const bool checkpoints = !config.checkpoint_path.empty();
  for (int it = 0; it < config.iters; ++it) {
    const SampleBatch batch = draw_batch(normalized, sigmas, config.batch_size, rng);
    const double t = tau(schedule, it);
    LossResult r;
    try {
      r = loss_and_grad(result.net, batch, config.loss, t);
    } catch (const Error& e) {
      if (checkpoints) write_checkpoint(result.net, config, result.history, it, config.checkpoint_path);
      throw Error(e.code(), "iteration " + std::to_string(it) + ": " + e.what());
    }
    result.history.push_back({it, t, r.terms, r.total});
    adam_step(result.net, r.grad, adam, config.adam);
    result.iterations_run = it + 1;

    const bool last = it + 1 == config.iters;
    if (callbacks.on_log && (last || (config.log_every > 0 && it % config.log_every == 0)))
      callbacks.on_log(result.history.back());
    const bool stop = callbacks.should_stop && callbacks.should_stop(it);
    if (checkpoints && (last || stop || (config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0)))
      write_checkpoint(result.net, config, result.history, it + 1, config.checkpoint_path);
    if (stop) break;
  }
  return result;
}

}  // namespace nsh
