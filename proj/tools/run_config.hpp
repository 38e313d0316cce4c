// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <latentlstm/data.hpp>
#include <latentlstm/forecast.hpp>
#include <latentlstm/trainer.hpp>

namespace latentlstm::cli {

/// Bad config key or value; maps to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Everything a command may need, resolved from defaults, then the config
/// file, then command-line flags.
struct RunConfig {
  std::size_t hidden_dim = 128;
  TrainingConfig training;
  PipelineOptions pipeline;
  SyntheticSpec synth;
  std::size_t short_len = 40;
  std::size_t long_len = 80;
  std::size_t horizon = 40;
  std::filesystem::path out_dir = ".";
  /// Keys assigned by the file or a flag, as opposed to left at default.
  std::set<std::string> assigned;

  /// Sets one key; unknown keys and unparsable values throw ConfigError.
  void set(std::string_view key, std::string_view value);
  /// Flat `key = value` lines; `#` starts a comment.
  void apply_file(const std::filesystem::path& path);
  void apply_text(std::string_view text, std::string_view source);
};

/// Every accepted key, in documentation order.
const std::vector<std::string_view>& config_keys();

}  // namespace latentlstm::cli
