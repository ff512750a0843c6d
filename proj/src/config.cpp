#include "nsh/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <toml.hpp>

#include "nsh/error.hpp"

namespace nsh {

namespace {

struct Entry {
  std::string name;
  std::string help;
  std::function<std::string(const RunConfig&)> show;
  std::function<void(RunConfig&, const toml::node&)> set;
};

[[noreturn]] void type_error(const std::string& key, const char* want) {
  throw Error(Errc::parse, "config key '" + key + "' expects " + want);
}

std::string show_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

template <typename T>
T integer(const toml::node& n, const std::string& key) {
  const auto v = n.value_exact<std::int64_t>();
  if (!v) type_error(key, "an integer");
  if (*v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
      static_cast<std::uint64_t>(*v) > static_cast<std::uint64_t>(std::numeric_limits<T>::max()))
    type_error(key, "an integer in range");
  return static_cast<T>(*v);
}

double real(const toml::node& n, const std::string& key) {
  const auto v = n.value<double>();
  if (!v || !(n.is_floating_point() || n.is_integer())) type_error(key, "a number");
  return *v;
}

bool boolean(const toml::node& n, const std::string& key) {
  const auto v = n.value_exact<bool>();
  if (!v) type_error(key, "true or false");
  return *v;
}

std::string text(const toml::node& n, const std::string& key) {
  const auto v = n.value_exact<std::string>();
  if (!v) type_error(key, "a string");
  return *v;
}

#define NSH_INT(key, field, type, help)                                                     \
  Entry {                                                                                   \
    key, help, [](const RunConfig& c) { return std::to_string(c.field); },                  \
        [](RunConfig& c, const toml::node& n) { c.field = integer<type>(n, key); }         \
  }
#define NSH_REAL(key, field, help)                                                          \
  Entry {                                                                                   \
    key, help, [](const RunConfig& c) { return show_double(c.field); },                     \
        [](RunConfig& c, const toml::node& n) { c.field = real(n, key); }                  \
  }
#define NSH_BOOL(key, field, help)                                                          \
  Entry {                                                                                   \
    key, help, [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }, \
        [](RunConfig& c, const toml::node& n) { c.field = boolean(n, key); }               \
  }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      NSH_INT("train.iters", train.iters, int, "optimizer iterations"),
      NSH_REAL("train.learning_rate", train.adam.learning_rate, "Adam step size"),
      NSH_REAL("train.beta1", train.adam.beta1, "Adam first-moment decay"),
      NSH_REAL("train.beta2", train.adam.beta2, "Adam second-moment decay"),
      NSH_REAL("train.epsilon", train.adam.epsilon, "Adam denominator guard"),
      NSH_INT("train.batch_size", train.batch_size, std::size_t, "surface samples per iteration"),
      NSH_INT("train.seed", train.seed, std::uint64_t, "initialization and sampling seed"),
      NSH_INT("train.log_every", train.log_every, int, "iterations between log lines (0 = last only)"),
      NSH_INT("train.checkpoint_every", train.checkpoint_every, int, "iterations between checkpoints (0 = end only)"),
      NSH_INT("sampler.k_neighbors", train.k_neighbors, std::size_t, "neighbour rank setting the near-sample spread"),
      NSH_INT("network.hidden_layers", arch.hidden_layers, int, "activated layers"),
      NSH_INT("network.width", arch.width, int, "units per hidden layer"),
      Entry{"network.activation", "sine or softplus",
            [](const RunConfig& c) {
              return std::string(c.arch.activation.kind == ActivationKind::sine ? "sine" : "softplus");
            },
            [](RunConfig& c, const toml::node& n) {
              // Tables iterate in key order, so an explicit activation_param is applied after this.
              const std::string v = text(n, "network.activation");
              if (v == "sine") c.arch.activation = Activation::sine(30.0);
              else if (v == "softplus") c.arch.activation = Activation::softplus(100.0);
              else type_error("network.activation", "\"sine\" or \"softplus\"");
            }},
      NSH_REAL("network.activation_param", arch.activation.param, "omega_0 (sine) or beta (softplus)"),
      NSH_REAL("loss.lambda_manifold", train.loss.lambda_manifold, "weight of |f| on the input points"),
      NSH_REAL("loss.lambda_non_manifold", train.loss.lambda_non_manifold, "weight of exp(-alpha|f|) off the surface"),
      NSH_REAL("loss.lambda_eikonal", train.loss.lambda_eikonal, "weight of the Eikonal term"),
      NSH_REAL("loss.lambda_regularizer", train.loss.lambda_regularizer, "weight of the regularizer slot"),
      NSH_REAL("loss.alpha", train.loss.alpha, "non-manifold decay rate"),
      NSH_REAL("loss.sigma_min", train.loss.sigma_min, "relaxed Eikonal lower bound"),
      Entry{"loss.regularizer", "singular_hessian, dirichlet, hessian_l2, hessian_l1, laplacian or none",
            [](const RunConfig& c) { return std::string(to_string(c.train.loss.regularizer)); },
            [](RunConfig& c, const toml::node& n) {
              try {
                c.train.loss.regularizer = parse_regularizer(text(n, "loss.regularizer"));
              } catch (const Error& e) {
                throw Error(Errc::parse, std::string("config key 'loss.regularizer': ") + e.what());
              }
            }},
      Entry{"loss.eikonal_mode", "relaxed_on_P, exact_on_P or exact_on_all",
            [](const RunConfig& c) { return std::string(to_string(c.train.loss.eikonal_mode)); },
            [](RunConfig& c, const toml::node& n) {
              try {
                c.train.loss.eikonal_mode = parse_eikonal_mode(text(n, "loss.eikonal_mode"));
              } catch (const Error& e) {
                throw Error(Errc::parse, std::string("config key 'loss.eikonal_mode': ") + e.what());
              }
            }},
      NSH_BOOL("loss.neumann", train.loss.neumann, "add 1 - <grad f, n> on oriented inputs"),
      NSH_REAL("loss.lambda_neumann", train.loss.lambda_neumann, "weight of the Neumann term"),
      NSH_BOOL("loss.laplacian_squared", train.loss.laplacian_squared, "Laplacian energy as trace(H)^2"),
      NSH_BOOL("schedule.decay", train.schedule.decay, "anneal the regularizer weight"),
      NSH_REAL("schedule.plateau_frac", train.schedule.plateau_frac, "fraction of iterations at full weight"),
      NSH_REAL("schedule.decay_frac", train.schedule.decay_frac, "fraction at which mid_value is reached"),
      NSH_REAL("schedule.mid_value", train.schedule.mid_value, "factor at decay_frac"),
      NSH_REAL("schedule.final_value", train.schedule.final_value, "factor at the last iteration"),
      Entry{"schedule.final_leg", "linear or log_linear",
            [](const RunConfig& c) {
              return std::string(c.train.schedule.final_leg == AnnealShape::linear ? "linear" : "log_linear");
            },
            [](RunConfig& c, const toml::node& n) {
              const std::string v = text(n, "schedule.final_leg");
              if (v == "linear") c.train.schedule.final_leg = AnnealShape::linear;
              else if (v == "log_linear") c.train.schedule.final_leg = AnnealShape::log_linear;
              else type_error("schedule.final_leg", "\"linear\" or \"log_linear\"");
            }},
      NSH_INT("extract.resolution", extract_resolution, int, "grid nodes per axis"),
      NSH_REAL("extract.iso", iso, "contour level"),
      NSH_BOOL("extract.world_units", world_units, "map output back to input coordinates"),
      NSH_INT("eval.samples", eval_samples, std::size_t, "points sampled per mesh"),
      NSH_REAL("eval.fscore_threshold", fscore_threshold, "F-score distance threshold"),
      NSH_BOOL("eval.absolute_normals", absolute_normals, "use |n1 . n2| in normal consistency"),
      NSH_REAL("analyze.shell", shell, "half-width of the shell |f| < shell"),
      NSH_INT("analyze.grid", analyze_grid, int, "seed grid nodes per axis"),
      NSH_INT("analyze.shell_samples", shell_samples, std::size_t, "samples for shell statistics"),
      Entry{"paths.input", "input file",
            [](const RunConfig& c) { return c.input.empty() ? std::string("\"\"") : c.input; },
            [](RunConfig& c, const toml::node& n) { c.input = text(n, "paths.input"); }},
      Entry{"paths.output", "output file",
            [](const RunConfig& c) { return c.output.empty() ? std::string("\"\"") : c.output; },
            [](RunConfig& c, const toml::node& n) { c.output = text(n, "paths.output"); }},
  };
  return entries;
}

#undef NSH_INT
#undef NSH_REAL
#undef NSH_BOOL

}  // namespace

void RunConfig::validate() const {
  train.validate();
  Architecture a = arch;
  check_architecture(a);
  if (extract_resolution < 2) throw Error(Errc::invalid_argument, "extract.resolution must be at least 2");
  if (!std::isfinite(iso)) throw Error(Errc::invalid_argument, "extract.iso must be finite");
  if (eval_samples == 0) throw Error(Errc::invalid_argument, "eval.samples must be positive");
  if (!(fscore_threshold > 0.0)) throw Error(Errc::invalid_argument, "eval.fscore_threshold must be positive");
  if (!(shell > 0.0)) throw Error(Errc::invalid_argument, "analyze.shell must be positive");
  if (analyze_grid < 8) throw Error(Errc::invalid_argument, "analyze.grid must be at least 8");
  if (shell_samples == 0) throw Error(Errc::invalid_argument, "analyze.shell_samples must be positive");
}

std::vector<ConfigKey> config_keys() {
  const RunConfig defaults;
  std::vector<ConfigKey> keys;
  for (const Entry& e : registry()) keys.push_back({e.name, e.show(defaults), e.help});
  return keys;
}

RunConfig parse_run_config(const std::string& toml_text, const std::string& source) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ':' << e.source().begin.line << ':' << e.source().begin.column << ": " << e.description();
    throw Error(Errc::parse, os.str());
  }
  RunConfig config;
  for (const auto& [section, node] : doc) {
    const toml::table* table = node.as_table();
    if (!table) throw Error(Errc::parse, "unknown config key '" + std::string(section.str()) + "'");
    for (const auto& [key, value] : *table) {
      const std::string name = std::string(section.str()) + "." + std::string(key.str());
      const auto& reg = registry();
      const auto it = std::find_if(reg.begin(), reg.end(), [&](const Entry& e) { return e.name == name; });
      if (it == reg.end()) throw Error(Errc::parse, "unknown config key '" + name + "'");
      it->set(config, value);
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.string());
}

}  // namespace nsh
