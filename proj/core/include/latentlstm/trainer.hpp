// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "latentlstm/backprop.hpp"
#include "latentlstm/data.hpp"
#include "latentlstm/model.hpp"
#include "latentlstm/optimizer.hpp"

namespace latentlstm {

struct TrainingConfig {
  std::size_t epochs = 100000;
  double lr = 0.001;
  /// Sequences per optimizer step; 0 means the whole dataset.
  std::size_t batch_size = 0;
  /// Rescale the batch gradient to this global L2 norm when exceeded.
  std::optional<double> grad_clip;
  /// Learning rate multiplier applied after every epoch; 1 disables decay.
  double lr_decay = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  /// Write a checkpoint every this many epochs; 0 writes only the final one.
  std::size_t checkpoint_every = 0;
  std::size_t log_every = 1;
  /// Worker threads for per-sequence forward/backward. Results do not depend
  /// on this value.
  std::size_t threads = 1;

  void validate() const;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

/// Training diverged. `last_checkpoint()` is empty when none was written.
class NumericalAbort : public Error {
 public:
  NumericalAbort(const std::string& what, std::filesystem::path last_checkpoint)
      : Error(what), last_checkpoint_(std::move(last_checkpoint)) {}
  const std::filesystem::path& last_checkpoint() const noexcept {
    return last_checkpoint_;
  }

 private:
  std::filesystem::path last_checkpoint_;
};

struct LogEntry {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double wall_ms = 0.0;
};

inline constexpr std::string_view kCheckpointSchemaVersion = "1";

struct Checkpoint {
  std::string schema_version{kCheckpointSchemaVersion};
  ModelConfig model;
  TrainingConfig training;
  ModelParams params;
  AdamState adam;
  std::size_t epoch = 0;
  std::string rng_state;
  std::string dataset_fingerprint;
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  std::size_t train_length = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Checkpoint JSON. Every floating-point value is a decimal string with 17
/// significant digits, so a save/load cycle is bit-exact.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(std::string_view text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Where training progress goes besides memory. Empty paths disable output.
struct TrainingSinks {
  std::filesystem::path checkpoint_path;
  std::filesystem::path log_path;  // CSV epoch,mean_loss,wall_ms, appended
  std::function<void(const LogEntry&)> on_log;
};

/// Full-pass training loop over closed-loop reconstructions.
///
/// Each batch is visited in ascending sequence order; per-sequence passes may
/// run on worker threads but their gradients are always summed in that
/// order, then divided by the batch size before the Adam step.
class Trainer {
 public:
  Trainer(const Dataset& dataset, TrainingConfig cfg, const ModelConfig& model_cfg);
  /// Resumes from `ckpt`; the dataset fingerprint must match.
  Trainer(const Dataset& dataset, const Checkpoint& ckpt);

  /// Runs epochs until `config().epochs` is reached.
  void run(const TrainingSinks& sinks = {});
  /// Runs at most `count` further epochs.
  void run_epochs(std::size_t count, const TrainingSinks& sinks = {});
  /// One epoch; returns the mean per-sequence loss measured before each
  /// batch's update.
  double run_epoch();

  /// Extends or shortens the epoch budget, e.g. when resuming.
  void set_total_epochs(std::size_t epochs);

  Checkpoint checkpoint() const;
  const ModelParams& params() const noexcept { return params_; }
  const AdamState& adam() const noexcept { return adam_; }
  const TrainingConfig& config() const noexcept { return cfg_; }
  std::size_t epoch() const noexcept { return epoch_; }
  /// Mean loss of every epoch run by this object.
  const std::vector<LogEntry>& history() const noexcept { return history_; }

 private:
  Gradients batch_gradient(std::size_t first, std::size_t count) const;

  const Dataset* dataset_;
  TrainingConfig cfg_;
  ModelParams params_;
  AdamState adam_;
  std::size_t epoch_ = 0;
  std::string rng_state_;
  std::vector<LogEntry> history_;
};

struct TrainResult {
  ModelParams params;
  std::vector<LogEntry> log;
  Checkpoint final_checkpoint;
};

/// Fresh training run from a seeded initialization.
TrainResult train(const Dataset& dataset, const TrainingConfig& cfg,
                  const ModelConfig& model_cfg, const TrainingSinks& sinks = {});

/// Gradient of the mean loss over sequences [first, first + count), summed in
/// ascending order and divided by `count`.
Gradients batch_gradient(const ModelParams& params, const Dataset& dataset,
                         std::size_t first, std::size_t count,
                         std::size_t threads = 1);

/// Outputs of a closed-loop rollout for sequence k.
std::vector<Vector> reconstruct(const ModelParams& params, std::size_t seq_index,
                                std::size_t steps);

/// Mean over sequences and steps of the Euclidean output error.
double mean_step_error(const ModelParams& params, const Dataset& dataset);
/// Mean over sequences of the summed reconstruction loss.
double mean_sequence_loss(const ModelParams& params, const Dataset& dataset);

}  // namespace latentlstm
