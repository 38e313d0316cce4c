// SPDX-License-Identifier: Apache-2.0
#include "latentlstm/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace latentlstm {
namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double abs_error(const Vector& pred, const Vector& actual) {
  double acc = 0.0;
  for (std::size_t j = 0; j < pred.size(); ++j) acc += std::abs(pred[j] - actual[j]);
  return acc / static_cast<double>(pred.size());
}

}  // namespace

std::vector<Vector> predict(const ModelParams& params, std::size_t seq_index,
                            std::size_t train_len, std::size_t horizon) {
  if (horizon < 1) throw Error("predict: horizon must be >= 1");
  auto outputs = rollout_closed_loop(params, seq_index, train_len + horizon).outputs;
  return {std::make_move_iterator(outputs.begin() + static_cast<std::ptrdiff_t>(train_len)),
          std::make_move_iterator(outputs.end())};
}

ForecastReport evaluate_mae(const std::vector<std::string>& ids,
                            std::vector<std::vector<Vector>> predictions,
                            const std::vector<std::vector<Vector>>& actuals) {
  if (predictions.size() != actuals.size() || ids.size() != predictions.size()) {
    throw DimensionError("evaluate_mae: " + std::to_string(predictions.size()) +
                         " predicted sequences, " + std::to_string(actuals.size()) +
                         " actual, " + std::to_string(ids.size()) + " ids");
  }
  if (predictions.empty()) throw DimensionError("evaluate_mae: no sequences");
  const std::size_t horizon = predictions.front().size();
  if (horizon == 0) throw DimensionError("evaluate_mae: empty horizon");
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    if (predictions[k].size() != horizon || actuals[k].size() != horizon) {
      throw DimensionError("evaluate_mae: sequence " + std::to_string(k) +
                           " has mismatched horizon length");
    }
    for (std::size_t t = 0; t < horizon; ++t) {
      if (predictions[k][t].size() != actuals[k][t].size() || predictions[k][t].empty()) {
        throw DimensionError("evaluate_mae: dimension mismatch in sequence " +
                             std::to_string(k) + " at step " + std::to_string(t + 1));
      }
    }
  }

  ForecastReport r;
  r.ids = ids;
  const std::size_t n = predictions.size();
  r.per_date_mae.assign(horizon, 0.0);
  r.per_sequence_mae.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double seq_total = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const double e = abs_error(predictions[k][t], actuals[k][t]);
      r.per_date_mae[t] += e;
      seq_total += e;
    }
    r.per_sequence_mae[k] = seq_total / static_cast<double>(horizon);
  }
  for (double& m : r.per_date_mae) m /= static_cast<double>(n);
  for (std::size_t k = 1; k < n; ++k) {
    if (r.per_sequence_mae[k] < r.per_sequence_mae[r.best_index]) r.best_index = k;
    if (r.per_sequence_mae[k] > r.per_sequence_mae[r.worst_index]) r.worst_index = k;
  }
  r.predictions = std::move(predictions);
  return r;
}

double mean_over(const std::vector<double>& values, std::size_t from, std::size_t to) {
  if (from >= to || to > values.size()) throw Error("mean_over: empty or invalid range");
  double acc = 0.0;
  for (std::size_t i = from; i < to; ++i) acc += values[i];
  return acc / static_cast<double>(to - from);
}

ExperimentResult run_short_long_experiment(const Dataset& dataset,
                                           const ExperimentConfig& cfg) {
  dataset.validate();
  if (cfg.horizon < 1) throw Error("experiment: horizon must be >= 1");
  if (cfg.short_len < 1 || cfg.long_len < 1) {
    throw Error("experiment: training windows must be >= 1 step");
  }
  const std::size_t required = std::max(cfg.short_len, cfg.long_len) + cfg.horizon;
  if (dataset.length() < required) {
    throw Error("experiment: needs " + std::to_string(required) +
                " steps but the dataset has " + std::to_string(dataset.length()));
  }

  auto run_case = [&](std::size_t train_len, ModelParams& params_out) {
    const Dataset window = dataset.prefix(train_len);
    const ModelConfig model_cfg{dataset.dim(), cfg.hidden_dim, dataset.dim(), dataset.size()};
    TrainResult trained = train(window, cfg.training, model_cfg);

    std::vector<std::vector<Vector>> preds;
    std::vector<std::vector<Vector>> actual;
    for (std::size_t k = 0; k < dataset.size(); ++k) {
      preds.push_back(predict(trained.params, k, train_len, cfg.horizon));
      const auto& seq = dataset.targets[k];
      actual.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(train_len),
                          seq.begin() + static_cast<std::ptrdiff_t>(train_len + cfg.horizon));
    }
    params_out = std::move(trained.params);
    return evaluate_mae(dataset.ids, std::move(preds), actual);
  };

  ExperimentResult result;
  result.short_case = run_case(cfg.short_len, result.short_params);
  result.long_case = run_case(cfg.long_len, result.long_params);
  return result;
}

void write_mae_csv(std::ostream& out, const ForecastReport& report) {
  out << "date_index,mae\n";
  for (std::size_t t = 0; t < report.per_date_mae.size(); ++t) {
    out << (t + 1) << ',' << fmt(report.per_date_mae[t]) << '\n';
  }
}

void write_paired_mae_csv(std::ostream& out, const ExperimentResult& result) {
  const auto& s = result.short_case.per_date_mae;
  const auto& l = result.long_case.per_date_mae;
  if (s.size() != l.size()) throw Error("paired MAE: horizons differ");
  out << "date_index,mae_short,mae_long\n";
  for (std::size_t t = 0; t < s.size(); ++t) {
    out << (t + 1) << ',' << fmt(s[t]) << ',' << fmt(l[t]) << '\n';
  }
}

void write_sequence_mae_csv(std::ostream& out, const ForecastReport& report) {
  out << "id,mae\n";
  for (std::size_t k = 0; k < report.ids.size(); ++k) {
    out << report.ids[k] << ',' << fmt(report.per_sequence_mae[k]) << '\n';
  }
}

void write_predictions_csv(std::ostream& out, const std::vector<std::string>& ids,
                           const std::vector<std::vector<Vector>>& predictions) {
  if (ids.size() != predictions.size()) throw Error("predictions CSV: id count mismatch");
  const std::size_t dim =
      predictions.empty() || predictions.front().empty() ? 1 : predictions.front().front().size();
  out << "id,date_index";
  if (dim == 1) {
    out << ",predicted";
  } else {
    for (std::size_t j = 0; j < dim; ++j) out << ",predicted_" << j;
  }
  out << '\n';
  for (std::size_t k = 0; k < ids.size(); ++k) {
    for (std::size_t t = 0; t < predictions[k].size(); ++t) {
      out << ids[k] << ',' << (t + 1);
      for (double v : predictions[k][t]) out << ',' << fmt(v);
      out << '\n';
    }
  }
}

}  // namespace latentlstm
