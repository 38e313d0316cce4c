// SPDX-License-Identifier: Apache-2.0
#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace latentlstm::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t to_count(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("config: " + std::string(key) + " expects a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("config: " + std::string(key) + " expects a number, got '" +
                      std::string(v) + "'");
  }
  return out;
}

}  // namespace

const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys = {
      "hidden_dim", "epochs",      "lr",          "batch_size", "grad_clip",
      "lr_decay",   "beta1",       "beta2",       "eps",        "seed",
      "checkpoint_every", "log_every", "threads", "window",     "coverage",
      "clusters",   "per_cluster", "length",      "noise",      "kind",
      "short_len",  "long_len",    "horizon",     "out_dir",
  };
  return keys;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  auto& t = training;
  if (key == "hidden_dim") {
    hidden_dim = to_count(key, value);
  } else if (key == "epochs") {
    t.epochs = to_count(key, value);
  } else if (key == "lr") {
    t.lr = to_real(key, value);
  } else if (key == "batch_size") {
    t.batch_size = to_count(key, value);
  } else if (key == "grad_clip") {
    if (value == "none" || value.empty()) {
      t.grad_clip.reset();
    } else {
      t.grad_clip = to_real(key, value);
    }
  } else if (key == "lr_decay") {
    t.lr_decay = to_real(key, value);
  } else if (key == "beta1") {
    t.beta1 = to_real(key, value);
  } else if (key == "beta2") {
    t.beta2 = to_real(key, value);
  } else if (key == "eps") {
    t.eps = to_real(key, value);
  } else if (key == "seed") {
    t.seed = to_count(key, value);
  } else if (key == "checkpoint_every") {
    t.checkpoint_every = to_count(key, value);
  } else if (key == "log_every") {
    t.log_every = to_count(key, value);
  } else if (key == "threads") {
    t.threads = to_count(key, value);
  } else if (key == "window") {
    pipeline.window = synth.window = to_count(key, value);
  } else if (key == "coverage") {
    pipeline.coverage = to_real(key, value);
  } else if (key == "clusters") {
    synth.clusters = to_count(key, value);
  } else if (key == "per_cluster") {
    synth.per_cluster = to_count(key, value);
  } else if (key == "length") {
    synth.length = to_count(key, value);
  } else if (key == "noise") {
    synth.noise = to_real(key, value);
  } else if (key == "kind") {
    try {
      synth.kind = parse_synthetic_kind(value);
    } catch (const Error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (key == "short_len") {
    short_len = to_count(key, value);
  } else if (key == "long_len") {
    long_len = to_count(key, value);
  } else if (key == "horizon") {
    horizon = to_count(key, value);
  } else if (key == "out_dir") {
    if (value.empty()) throw ConfigError("config: out_dir must not be empty");
    out_dir = std::string(value);
  } else {
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
  }
  assigned.insert(std::string(key));
}

void RunConfig::apply_text(std::string_view text, std::string_view source) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) +
                        ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_text(buf.str(), path.string());
}

}  // namespace latentlstm::cli
