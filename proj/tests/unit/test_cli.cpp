#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>

#include <json.hpp>

#include "nsh/geometry.hpp"
#include "support.hpp"

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

Run run_cli(const testing::TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd =
      std::string("\"") + NSH_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = testing::read_bytes(out);
  r.err = testing::read_bytes(err);
  return r;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("cli: usage errors exit with 2 and pipeline errors with 1") {
  testing::TempDir dir("cli_errors");
  CHECK(run_cli(dir, "").status == 2);
  CHECK(run_cli(dir, "frobnicate").status == 2);

  const Run missing = run_cli(dir, "fit " + q(dir / "nope.xyz") + " --out " + q(dir / "m.nsh"));
  CHECK(missing.status == 1);
  CHECK(missing.err.find("I/O error") != std::string::npos);

  const Run bad_shell = run_cli(dir, "analyze --builtin sphere --shell -1");
  CHECK(bad_shell.status == 2);

  testing::write_text(dir / "bad.toml", "[train]\niterations = 3\n");
  const Run bad_key = run_cli(dir, "analyze --builtin sphere --config " + q(dir / "bad.toml"));
  CHECK(bad_key.status == 2);
  CHECK(bad_key.err.find("train.iterations") != std::string::npos);

  CHECK(run_cli(dir, "analyze --builtin teapot").status == 2);
  CHECK(run_cli(dir, "fit --dim 4 x.xyz").status == 2);
}

TEST_CASE("cli: help lists the config keys") {
  testing::TempDir dir("cli_help");
  const Run help = run_cli(dir, "--help");
  CHECK(help.status == 0);
  CHECK(help.out.find("train.iters") != std::string::npos);
  CHECK(help.out.find("loss.regularizer") != std::string::npos);
  CHECK(help.out.find("fit") != std::string::npos);
}

TEST_CASE("cli: fit, extract and eval chain together") {
  testing::TempDir dir("cli_chain");
  nsh::save_point_cloud(testing::circle_cloud(40), dir / "circle.xyz", nsh::CloudFormat::xyz);
  testing::write_text(dir / "small.toml", "[train]\nbatch_size = 64\nlog_every = 0\n[network]\nwidth = 16\n");

  const Run fit = run_cli(dir, "fit " + q(dir / "circle.xyz") + " --dim 2 --iters 10 --threads 2 --config " +
                                   q(dir / "small.toml") + " --out " + q(dir / "m.nsh"));
  REQUIRE(fit.status == 0);
  CHECK(fit.out.find("final loss") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "m.nsh"));
  const auto history = nlohmann::json::parse(testing::read_bytes(dir / "m.nsh.json"));
  CHECK(history.contains("iteration"));

  const Run extract = run_cli(dir, "extract " + q(dir / "m.nsh") + " --res 4 --out " + q(dir / "c.obj"));
  REQUIRE(extract.status == 0);
  CHECK(std::filesystem::exists(dir / "c.obj"));

  nsh::save_point_cloud(testing::sphere_cloud(300, 5), dir / "sphere.xyz", nsh::CloudFormat::xyz);
  const Run eval = run_cli(dir, "eval " + q(dir / "sphere.xyz") + " " + q(dir / "sphere.xyz") + " --samples 300 --out " +
                                    q(dir / "report.json"));
  REQUIRE(eval.status == 0);
  const auto report = nlohmann::json::parse(testing::read_bytes(dir / "report.json"));
  CHECK(report["chamfer_l1_x1000"].get<double>() == doctest::Approx(0.0));
  CHECK(report["fscore"].get<double>() == doctest::Approx(100.0));
}

TEST_CASE("cli: analyze reports a zero Hessian determinant on the sphere distance") {
  testing::TempDir dir("cli_analyze");
  const Run r = run_cli(dir, "analyze --builtin sphere --grid 16 --out " + q(dir / "morse.json"));
  REQUIRE(r.status == 0);
  const auto report = nlohmann::json::parse(testing::read_bytes(dir / "morse.json"));
  CHECK(std::abs(report["shell_statistics"]["mean_abs_det"].get<double>()) < 1e-12);
}
