#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nsh/sinenet.hpp"
#include "nsh/trainer.hpp"

namespace nsh {

/// Every setting of a run, with the standard defaults.
struct RunConfig {
  TrainConfig train;
  Architecture arch;  // input_dim comes from --dim / the data, not the file

  int extract_resolution = 256;
  double iso = 0.0;
  bool world_units = false;

  std::size_t eval_samples = 100000;
  double fscore_threshold = 0.005;
  bool absolute_normals = false;

  double shell = 0.05;
  int analyze_grid = 128;
  std::size_t shell_samples = 10000;

  std::string input;
  std::string output;

  void validate() const;
};

struct ConfigKey {
  std::string name;  // "section.key"
  std::string default_value;
  std::string help;
};

/// Recognized keys with their defaults, in file order.
std::vector<ConfigKey> config_keys();

/// Parses a TOML document over the defaults. Unknown keys and type mismatches throw
/// Error(Errc::parse) naming the key.
RunConfig parse_run_config(const std::string& toml_text, const std::string& source = "<string>");
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace nsh
