// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "latentlstm/data.hpp"
#include "latentlstm/model.hpp"
#include "latentlstm/trainer.hpp"

namespace latentlstm {

/// Closed-loop outputs for steps train_len+1 .. train_len+horizon. Nothing
/// beyond the initial state is consumed.
std::vector<Vector> predict(const ModelParams& params, std::size_t seq_index,
                            std::size_t train_len, std::size_t horizon);

struct ForecastReport {
  std::vector<std::string> ids;
  std::vector<std::vector<Vector>> predictions;  // [sequence][horizon step]
  std::vector<double> per_date_mae;              // mean over sequences
  std::vector<double> per_sequence_mae;          // mean over horizon steps
  std::size_t best_index = 0;
  std::size_t worst_index = 0;

  const std::string& best_id() const { return ids.at(best_index); }
  const std::string& worst_id() const { return ids.at(worst_index); }
};

/// Absolute errors averaged over every component of a step. Ties in the
/// best/worst choice go to the lowest index.
ForecastReport evaluate_mae(const std::vector<std::string>& ids,
                            std::vector<std::vector<Vector>> predictions,
                            const std::vector<std::vector<Vector>>& actuals);

struct ExperimentConfig {
  std::size_t short_len = 40;
  std::size_t long_len = 80;
  std::size_t horizon = 40;
  TrainingConfig training;
  std::size_t hidden_dim = 128;
};

struct ExperimentResult {
  ForecastReport short_case;
  ForecastReport long_case;
  ModelParams short_params;
  ModelParams long_params;
};

/// Trains two independent models on the first short_len and long_len steps
/// and scores each on the `horizon` steps that follow its own window.
ExperimentResult run_short_long_experiment(const Dataset& dataset,
                                           const ExperimentConfig& cfg);

/// Mean of per-date values in [from, to).
double mean_over(const std::vector<double>& values, std::size_t from, std::size_t to);

// CSV writers; date_index is 1-based from the end of the training window.
void write_mae_csv(std::ostream& out, const ForecastReport& report);
void write_paired_mae_csv(std::ostream& out, const ExperimentResult& result);
void write_sequence_mae_csv(std::ostream& out, const ForecastReport& report);
/// Long format `id,date_index,predicted`; multi-dimensional outputs get
/// one `predicted_j` column per component.
void write_predictions_csv(std::ostream& out, const std::vector<std::string>& ids,
                           const std::vector<std::vector<Vector>>& predictions);

}  // namespace latentlstm
