// Command-line front end: fit, extract, eval and analyze.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nsh/config.hpp"
#include "nsh/contour.hpp"
#include "nsh/error.hpp"
#include "nsh/field.hpp"
#include "nsh/geometry.hpp"
#include "nsh/metrics.hpp"
#include "nsh/morse.hpp"
#include "nsh/parallel.hpp"
#include "nsh/sinenet.hpp"
#include "nsh/trainer.hpp"

namespace fs = std::filesystem;
using namespace nsh;

namespace {

constexpr int kPipelineError = 1;
constexpr int kUsageError = 2;

// Thrown for bad configuration or arguments; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string keys_footer() {
  std::ostringstream os;
  os << "\nConfig keys (TOML sections; flags override the file):\n";
  for (const ConfigKey& k : config_keys()) os << "  " << k.name << " = " << k.default_value << "  # " << k.help << '\n';
  return os.str();
}

struct Options {
  std::string config;
  int threads = 0;
  // Flags left unset keep the config value.
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  int dim = 3;
  std::optional<int> resolution;
  std::optional<double> iso;
  bool world_units = false;
  std::optional<std::size_t> samples;
  std::optional<double> fscore_thresh;
  bool absolute_normals = false;
  std::optional<double> shell;
  std::optional<int> grid;
  std::string dump_fields;
  std::string builtin;
  std::string cloud;
  std::string input;
  std::string second_input;
  std::string output;
};

RunConfig resolve_config(const Options& o) {
  RunConfig c;
  if (!o.config.empty()) {
    try {
      c = load_run_config(o.config);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (o.seed) c.train.seed = *o.seed;
  if (o.iters) c.train.iters = *o.iters;
  if (o.resolution) c.extract_resolution = *o.resolution;
  if (o.iso) c.iso = *o.iso;
  if (o.world_units) c.world_units = true;
  if (o.samples) c.eval_samples = *o.samples;
  if (o.fscore_thresh) c.fscore_threshold = *o.fscore_thresh;
  if (o.absolute_normals) c.absolute_normals = true;
  if (o.shell) c.shell = *o.shell;
  if (o.grid) c.analyze_grid = *o.grid;
  if (!o.input.empty()) c.input = o.input;
  if (!o.output.empty()) c.output = o.output;
  c.arch.input_dim = o.dim;
  try {
    c.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write '" + path.string() + "'");
  out << text << '\n';
  if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

int cmd_fit(const Options& o) {
  RunConfig c = resolve_config(o);
  if (c.input.empty()) throw UsageError("fit needs an input point cloud");
  if (c.output.empty()) throw UsageError("fit needs --out");
  PointCloud cloud = load_point_cloud(c.input);
  if (cloud.dim() != o.dim) cloud = project_to_dim(cloud, o.dim);
  std::cerr << "fit: " << cloud.size() << " points, " << o.dim << "D, " << c.arch.hidden_layers << "x"
            << c.arch.width << " network, " << c.train.iters << " iterations, " << thread_count() << " threads\n";
  c.train.checkpoint_path = c.output;
  const SineNetwork init = SineNetwork::init(c.arch, c.train.seed);
  FitCallbacks cb;
  cb.on_log = [](const HistoryEntry& e) {
    std::fprintf(stderr, "iter %6d  tau %.3g  total %.6g  man %.4g  nonman %.4g  eik %.4g  reg %.4g\n", e.iter, e.tau,
                 e.total, e.terms.manifold, e.terms.non_manifold, e.terms.eikonal, e.terms.regularizer);
  };
  const FitResult r = fit(cloud, init, c.train, cb);
  const HistoryEntry& last = r.history.back();
  std::printf("final loss %.9g\n  manifold %.9g\n  non_manifold %.9g\n  eikonal %.9g\n  regularizer %.9g\n",
              last.total, last.terms.manifold, last.terms.non_manifold, last.terms.eikonal, last.terms.regularizer);
  if (c.train.loss.neumann) std::printf("  neumann %.9g\n", last.terms.neumann);
  std::printf("model written to %s (history in %s.json)\n", c.output.c_str(), c.output.c_str());
  return 0;
}

int cmd_extract(const Options& o) {
  const RunConfig c = resolve_config(o);
  if (c.input.empty() || c.output.empty()) throw UsageError("extract needs a model and --out");
  const SineNetwork net = load_model(c.input);
  const NetworkField field(net);
  const ScalarGrid grid = evaluate_grid(field, c.extract_resolution);
  if (net.input_dim() == 2) {
    Polyline2D poly = marching_squares(grid, c.iso);
    if (c.world_units) poly = to_world(std::move(poly), net.transform());
    save_polyline(poly, c.output);
    std::printf("%zu vertices, %zu segments, %d components -> %s\n", poly.vertices.size(), poly.segments.size(),
                connected_components(poly), c.output.c_str());
  } else {
    TriangleMesh mesh = marching_cubes(grid, c.iso);
    if (c.world_units) mesh = to_world(std::move(mesh), net.transform());
    save_mesh(mesh, c.output);
    std::printf("%zu vertices, %zu triangles, Euler characteristic %ld, %s -> %s\n", mesh.vertices.size(),
                mesh.triangles.size(), euler_characteristic(mesh), is_closed(mesh) ? "closed" : "open",
                c.output.c_str());
  }
  return 0;
}

// Meshes are sampled; point files (or faceless PLY) are used as given.
SurfaceSamples load_surface(const fs::path& path, std::size_t samples, Rng& rng) {
  if (!fs::exists(path)) throw Error(Errc::io, "cannot open '" + path.string() + "'");
  std::string ext = path.extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext != ".xyz") {
    const TriangleMesh mesh = load_mesh(path);
    if (!mesh.triangles.empty()) return sample_surface(mesh, samples, rng);
    if (ext == ".obj") throw Error(Errc::empty_input, "'" + path.string() + "' has no faces");
  }
  PointCloud cloud = load_point_cloud(path);
  return {cloud.points, cloud.normals};
}

int cmd_eval(const Options& o) {
  const RunConfig c = resolve_config(o);
  if (o.input.empty() || o.second_input.empty()) throw UsageError("eval needs <pred> and <gt>");
  Rng rng(c.train.seed);
  const SurfaceSamples pred = load_surface(o.input, c.eval_samples, rng);
  const SurfaceSamples gt = load_surface(o.second_input, c.eval_samples, rng);
  if (!pred.normals || !gt.normals)
    std::printf("normal consistency skipped: %s has no normals\n", !pred.normals ? "prediction" : "ground truth");
  const MetricsReport report = evaluate_surfaces(gt, pred, c.fscore_threshold, c.absolute_normals);
  std::printf("%s\n", report.summary().c_str());
  if (!c.output.empty()) write_text(c.output, report.to_json());
  return 0;
}

int cmd_analyze(const Options& o) {
  const RunConfig c = resolve_config(o);
  std::optional<SineNetwork> net;
  std::unique_ptr<ScalarField> field;
  if (!o.builtin.empty()) {
    try {
      field = make_builtin_field(o.builtin, o.dim);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  } else {
    if (c.input.empty()) throw UsageError("analyze needs a model or --builtin");
    net = load_model(c.input);
    field = std::make_unique<NetworkField>(*net);
  }
  const int d = field->dim();
  CriticalSearchOptions search;
  search.domain = Box::cube(d);
  search.resolution = c.analyze_grid;
  search.shell = c.shell;
  const CriticalSearchResult found = find_critical_points(*field, search);
  MorseReport report = census(found.points, d);
  report.shell = c.shell;

  // Shell samples come from the training cloud when given, else uniformly from the domain.
  std::optional<PointCloud> cloud;
  if (!o.cloud.empty()) {
    PointCloud raw = load_point_cloud(o.cloud);
    if (raw.dim() != d) raw = project_to_dim(raw, d);
    if (net) raw.points = net->transform().apply(raw.points);
    raw.normals.reset();
    cloud = std::move(raw);
  }
  Rng rng(c.train.seed);
  report.stats = shell_statistics(*field, cloud ? &*cloud : nullptr, search.domain, c.shell, c.shell_samples, rng,
                                  c.train.k_neighbors);
  std::printf("critical points: %zu (seeds %zu, non-converged %zu, outside shell %zu)\n", found.points.size(),
              found.seeds, found.non_converged, found.outside_shell);
  std::printf("census: min %d  saddle %d%s  max %d  degenerate %d  euler estimate %d\n", report.c_min,
              report.c_1saddle, d == 3 ? (" saddle_2 " + std::to_string(report.c_2saddle)).c_str() : "",
              report.c_max, report.degenerate, report.euler_estimate);
  std::printf("shell |f| < %g: mean |det H| %.3e  mean |tr H| %.3e  mean |grad f| %.6f\n", c.shell,
              report.stats.mean_abs_det, report.stats.mean_abs_trace, report.stats.mean_grad_norm);
  if (!o.dump_fields.empty()) {
    const fs::path dir = o.dump_fields;
    fs::create_directories(dir);
    const GridQuantity what[] = {GridQuantity::value, GridQuantity::gradnorm, GridQuantity::det, GridQuantity::trace};
    const char* names[] = {"value", "gradnorm", "det", "trace"};
    const std::vector<ScalarGrid> grids = evaluate_grid(*field, c.analyze_grid, search.domain, what);
    for (std::size_t i = 0; i < grids.size(); ++i) save_grid(grids[i], dir / (std::string(names[i]) + ".nshgrid"));
    std::printf("fields written to %s\n", dir.string().c_str());
  }
  if (!c.output.empty()) write_text(c.output, report.to_json(found.points));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  retain_heap_buffers();
  CLI::App app{"Neural SDF reconstruction from unoriented point clouds"};
  app.require_subcommand(1);
  app.footer(keys_footer());
  Options o;
  app.add_option("--threads", o.threads, "worker threads (default: NSH_THREADS or all cores)");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "TOML run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", o.output, "output path");
    sub->add_option("--threads", o.threads, "worker threads (default: NSH_THREADS or all cores)");
    sub->footer(keys_footer());
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "train a network on a point cloud");
  fit_cmd->add_option("cloud", o.input, "point cloud (.xyz or .ply)");
  fit_cmd->add_option("--seed", o.seed, "initialization and sampling seed");
  fit_cmd->add_option("--iters", o.iters, "optimizer iterations");
  fit_cmd->add_option("--dim", o.dim, "2 or 3 (2 drops the z column)")->check(CLI::IsMember({2, 3}));
  common(fit_cmd);

  CLI::App* extract_cmd = app.add_subcommand("extract", "contour a trained model");
  extract_cmd->add_option("model", o.input, "model file");
  extract_cmd->add_option("--res", o.resolution, "grid nodes per axis");
  extract_cmd->add_option("--iso", o.iso, "contour level");
  extract_cmd->add_flag("--world-units", o.world_units, "map output to input coordinates");
  common(extract_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "compare a reconstruction with ground truth");
  eval_cmd->add_option("pred", o.input, "predicted mesh or points")->required();
  eval_cmd->add_option("gt", o.second_input, "ground-truth mesh or points")->required();
  eval_cmd->add_option("--samples", o.samples, "points sampled per mesh");
  eval_cmd->add_option("--fscore-thresh", o.fscore_thresh, "F-score distance threshold");
  eval_cmd->add_flag("--abs-normals", o.absolute_normals, "use |n1 . n2| in normal consistency");
  eval_cmd->add_option("--seed", o.seed, "sampling seed");
  common(eval_cmd);

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "critical points and shell statistics");
  analyze_cmd->add_option("model", o.input, "model file");
  analyze_cmd->add_option("--builtin", o.builtin, "analytic field instead of a model (circle, sphere, torus, ...)");
  analyze_cmd->add_option("--dim", o.dim, "dimension of --builtin fields")->check(CLI::IsMember({2, 3}));
  analyze_cmd->add_option("--shell", o.shell, "shell half-width");
  analyze_cmd->add_option("--grid", o.grid, "seed grid nodes per axis");
  analyze_cmd->add_option("--cloud", o.cloud, "input cloud to draw shell samples around");
  analyze_cmd->add_option("--dump-fields", o.dump_fields, "directory for value/gradnorm/det/trace grids");
  analyze_cmd->add_option("--seed", o.seed, "sampling seed");
  common(analyze_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }
  if (o.threads > 0) set_thread_count(o.threads);
  if (!o.builtin.empty() && o.dim == 3 && o.builtin == "circle") o.dim = 2;
  if (!o.builtin.empty() && o.builtin == "sinsin") o.dim = 2;

  try {
    if (*fit_cmd) return cmd_fit(o);
    if (*extract_cmd) return cmd_extract(o);
    if (*eval_cmd) return cmd_eval(o);
    return cmd_analyze(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << '\n';
    return kPipelineError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPipelineError;
  }
}
