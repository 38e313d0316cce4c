// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <latentlstm/forecast.hpp>
#include <latentlstm/latent.hpp>
#include <latentlstm/trainer.hpp>

#include "run_config.hpp"

namespace latentlstm::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kDatasetFile = "dataset.json";
constexpr const char* kCheckpointFile = "checkpoint.json";
constexpr const char* kLogFile = "train_log.csv";

struct Args {
  std::string config_path;
  std::map<std::string, std::string> flags;  // config key -> flag value
  std::string input;                         // csv, dataset or checkpoint
  std::string dataset;
  std::string id;
  std::string target;
};

/// Writes `fill` to out_dir/name through a temporary file.
fs::path write_output(const RunConfig& cfg, const std::string& name,
                      const std::function<void(std::ostream&)>& fill) {
  fs::create_directories(cfg.out_dir);
  const fs::path path = cfg.out_dir / name;
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    fill(f);
    if (!f.flush()) throw Error("cannot write " + path.string());
  }
  fs::rename(tmp, path);
  return path;
}

ModelConfig model_config_for(const Dataset& ds, std::size_t hidden) {
  return ModelConfig{ds.dim(), hidden, ds.dim(), ds.size()};
}

int cmd_ingest(const Args& a, const RunConfig& cfg, std::ostream& out) {
  const auto records = load_csv(a.input);
  const PipelineResult r = build_dataset(records, cfg.pipeline);
  fs::create_directories(cfg.out_dir);
  const fs::path path = cfg.out_dir / kDatasetFile;
  save_dataset(r.dataset, path);
  out << "ingested " << r.input_count << " series: N=" << r.dataset.size()
      << " T=" << r.dataset.length() << " excluded=" << r.excluded_count << " -> "
      << path.string() << '\n';
  return kOk;
}

int cmd_synth(const Args&, const RunConfig& cfg, std::ostream& out) {
  const Dataset ds = make_synthetic(cfg.synth, cfg.training.seed);
  fs::create_directories(cfg.out_dir);
  const fs::path path = cfg.out_dir / kDatasetFile;
  save_dataset(ds, path);
  out << "synthetic " << to_string(cfg.synth.kind) << ": N=" << ds.size()
      << " T=" << ds.length() << " excluded=0 -> " << path.string() << '\n';
  return kOk;
}

TrainingSinks sinks_for(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  return TrainingSinks{cfg.out_dir / kCheckpointFile, cfg.out_dir / kLogFile, {}};
}

void report_training(std::ostream& out, const Trainer& trainer, const Dataset& ds,
                     const TrainingSinks& sinks) {
  out << "epoch " << trainer.epoch() << "/" << trainer.config().epochs;
  if (!trainer.history().empty()) out << " mean_loss " << trainer.history().back().mean_loss;
  out << " mean_step_error " << mean_step_error(trainer.params(), ds) << '\n';
  out << "checkpoint -> " << sinks.checkpoint_path.string() << '\n';
}

int cmd_train(const Args& a, const RunConfig& cfg, std::ostream& out) {
  const Dataset ds = load_dataset(a.input);
  const TrainingSinks sinks = sinks_for(cfg);
  fs::remove(sinks.log_path);  // a fresh run starts a fresh log
  Trainer trainer(ds, cfg.training, model_config_for(ds, cfg.hidden_dim));
  trainer.run(sinks);
  report_training(out, trainer, ds, sinks);
  return kOk;
}

int cmd_resume(const Args& a, const RunConfig& cfg, std::ostream& out) {
  Checkpoint ckpt = load_checkpoint(a.input);
  const Dataset ds = load_dataset(a.dataset);
  if (cfg.assigned.contains("threads")) ckpt.training.threads = cfg.training.threads;
  Trainer trainer(ds, ckpt);
  if (cfg.assigned.contains("epochs")) trainer.set_total_epochs(cfg.training.epochs);
  const TrainingSinks sinks = sinks_for(cfg);
  trainer.run(sinks);
  report_training(out, trainer, ds, sinks);
  return kOk;
}

std::size_t index_in(const std::vector<std::string>& ids, const std::string& id) {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw Error("unknown sequence id '" + id + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

int cmd_reconstruct(const Args& a, const RunConfig& cfg, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.input);
  const Dataset ds = load_dataset(a.dataset);
  const std::size_t k = index_in(ckpt.ids, a.id);
  const std::size_t dk = ds.index_of(a.id);
  const auto& actual = ds.targets[dk];
  const auto predicted = reconstruct(ckpt.params, k, actual.size());
  const std::size_t dim = actual.front().size();

  const auto path = write_output(cfg, "reconstruction_" + a.id + ".csv", [&](std::ostream& f) {
    if (dim == 1) {
      f << "actual,predicted\n";
    } else {
      for (std::size_t j = 0; j < dim; ++j) f << (j ? "," : "") << "actual_" << j;
      for (std::size_t j = 0; j < dim; ++j) f << ",predicted_" << j;
      f << '\n';
    }
    char buf[40];
    for (std::size_t t = 0; t < actual.size(); ++t) {
      for (std::size_t j = 0; j < dim; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", actual[t][j]);
        f << (j ? "," : "") << buf;
      }
      for (std::size_t j = 0; j < dim; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", predicted[t][j]);
        f << ',' << buf;
      }
      f << '\n';
    }
  });
  std::vector<std::vector<Vector>> p{predicted};
  const ForecastReport r = evaluate_mae({a.id}, std::move(p), {actual});
  out << "reconstructed " << a.id << " over " << actual.size() << " steps, mae "
      << r.per_sequence_mae[0] << " -> " << path.string() << '\n';
  return kOk;
}

int cmd_predict(const Args& a, const RunConfig& cfg, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.input);
  // Score against the steps that follow the training window; validate before writing.
  std::optional<Dataset> ds;
  const std::size_t need = ckpt.train_length + cfg.horizon;
  if (!a.dataset.empty()) {
    ds = load_dataset(a.dataset);
    if (ds->length() < need) {
      throw Error("predict: scoring needs " + std::to_string(need) +
                  " steps but the dataset has " + std::to_string(ds->length()));
    }
  }
  std::vector<std::vector<Vector>> preds;
  for (std::size_t k = 0; k < ckpt.ids.size(); ++k) {
    preds.push_back(predict(ckpt.params, k, ckpt.train_length, cfg.horizon));
  }
  const auto path = write_output(cfg, "predictions.csv", [&](std::ostream& f) {
    write_predictions_csv(f, ckpt.ids, preds);
  });
  out << "predicted " << cfg.horizon << " steps for " << ckpt.ids.size() << " sequences -> "
      << path.string() << '\n';

  if (!ds) return kOk;
  std::vector<std::vector<Vector>> actual;
  for (const auto& id : ckpt.ids) {
    const auto& seq = ds->targets[ds->index_of(id)];
    actual.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(ckpt.train_length),
                        seq.begin() + static_cast<std::ptrdiff_t>(need));
  }
  const ForecastReport r = evaluate_mae(ckpt.ids, std::move(preds), actual);
  write_output(cfg, "mae.csv", [&](std::ostream& f) { write_mae_csv(f, r); });
  write_output(cfg, "sequence_mae.csv", [&](std::ostream& f) { write_sequence_mae_csv(f, r); });
  out << "mae " << mean_over(r.per_date_mae, 0, r.per_date_mae.size()) << " best "
      << r.best_id() << " worst " << r.worst_id() << '\n';
  return kOk;
}

int cmd_experiment(const Args& a, const RunConfig& cfg, std::ostream& out) {
  const Dataset ds = load_dataset(a.input);
  ExperimentConfig ec;
  ec.short_len = cfg.short_len;
  ec.long_len = cfg.long_len;
  ec.horizon = cfg.horizon;
  ec.training = cfg.training;
  ec.hidden_dim = cfg.hidden_dim;
  const ExperimentResult r = run_short_long_experiment(ds, ec);
  const auto path = write_output(cfg, "experiment_mae.csv",
                                 [&](std::ostream& f) { write_paired_mae_csv(f, r); });
  write_output(cfg, "experiment_short_sequence_mae.csv",
               [&](std::ostream& f) { write_sequence_mae_csv(f, r.short_case); });
  write_output(cfg, "experiment_long_sequence_mae.csv",
               [&](std::ostream& f) { write_sequence_mae_csv(f, r.long_case); });
  const std::size_t h = ec.horizon;
  for (const auto* c : {&r.short_case, &r.long_case}) {
    out << (c == &r.short_case ? "short" : "long") << ": mean mae "
        << mean_over(c->per_date_mae, 0, h) << " best " << c->best_id() << " worst "
        << c->worst_id() << '\n';
  }
  out << "paired mae -> " << path.string() << '\n';
  return kOk;
}

int cmd_embed(const Args& a, const RunConfig& cfg, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.input);
  const auto emb = LatentEmbedding::from_params(ckpt.params, ckpt.ids, ckpt.labels);
  const auto path = write_output(cfg, "embedding.csv",
                                 [&](std::ostream& f) { write_embedding_csv(f, emb); });
  out << "embedding " << emb.size() << "x" << emb.vectors.cols() << " -> " << path.string()
      << '\n';
  return kOk;
}

int cmd_analyze(const Args& a, const RunConfig& cfg, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.input);
  const Dataset ds = load_dataset(a.dataset);
  if (ds.ids != ckpt.ids) throw Error("analyze: dataset ids do not match the checkpoint");
  const auto emb = LatentEmbedding::from_params(ckpt.params, ckpt.ids, ckpt.labels);
  const std::size_t d = std::min<std::size_t>(2, std::min(emb.size(), emb.vectors.cols()));
  const PcaResult p = pca(emb, d);

  std::vector<Correlation> corr;
  if (!a.target.empty()) corr = correlation_map(ds, a.target);
  const auto path = write_output(cfg, "plot.csv", [&](std::ostream& f) {
    write_plot_csv(f, emb, p, a.target.empty() ? nullptr : &corr);
  });
  out << "pca explained ratio";
  for (std::size_t i = 0; i < d; ++i) out << ' ' << p.explained_ratio(i);
  out << '\n';
  if (emb.size() >= 3) {
    out << "distance_correlation_stat " << distance_correlation_stat(emb, ds) << '\n';
  }
  if (!emb.labels.empty() && emb.size() >= 4) {
    out << "silhouette " << silhouette_score(emb.vectors, emb.labels) << " knn3_agreement "
        << neighbor_label_agreement(emb, 3) << '\n';
  }
  if (!a.target.empty()) {
    const auto near = neighbors(emb, a.target, std::min<std::size_t>(5, emb.size() - 1));
    out << "nearest to " << a.target << ':';
    for (const auto& n : near) out << ' ' << n.id << '(' << n.distance << ')';
    out << '\n';
  }
  out << "plot data -> " << path.string() << '\n';
  return kOk;
}

std::string flag_name(std::string_view key) {
  std::string dashed(key);
  std::replace(dashed.begin(), dashed.end(), '_', '-');
  std::string names = "--" + dashed;
  if (dashed != key) names += ",--" + std::string(key);
  return names;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-state LSTM: train on time series, embed and forecast them"};
  app.name("latentlstm");
  app.require_subcommand(1);
  app.fallthrough();

  Args a;
  app.add_option("--config", a.config_path, "flat key = value config file")
      ->check(CLI::ExistingFile);
  std::map<std::string, CLI::Option*> flag_options;
  for (std::string_view key : config_keys()) {
    flag_options[std::string(key)] =
        app.add_option(flag_name(key), a.flags[std::string(key)],
                       "overrides config key " + std::string(key))
            ->group(key == "seed" || key == "threads" || key == "out_dir" ? "Global" : "Config");
  }

  using Handler = int (*)(const Args&, const RunConfig&, std::ostream&);
  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto add = [&](const char* name, const char* help, Handler h) {
    CLI::App* sub = app.add_subcommand(name, help);
    commands.emplace_back(sub, h);
    return sub;
  };

  add("ingest", "raw CSV (date,id,adj_close) -> dataset.json", cmd_ingest)
      ->add_option("csv", a.input, "input CSV")
      ->required()
      ->check(CLI::ExistingFile);
  add("synth", "generate a synthetic clustered dataset -> dataset.json", cmd_synth);
  add("train", "train from scratch -> checkpoint.json, train_log.csv", cmd_train)
      ->add_option("dataset", a.input, "dataset JSON")
      ->required()
      ->check(CLI::ExistingFile);
  {
    auto* s = add("resume", "continue training from a checkpoint", cmd_resume);
    s->add_option("checkpoint", a.input)->required()->check(CLI::ExistingFile);
    s->add_option("dataset", a.dataset, "the dataset the checkpoint was trained on")
        ->required()
        ->check(CLI::ExistingFile);
  }
  {
    auto* s = add("reconstruct", "actual vs reconstructed series for one id", cmd_reconstruct);
    s->add_option("checkpoint", a.input)->required()->check(CLI::ExistingFile);
    s->add_option("dataset", a.dataset)->required()->check(CLI::ExistingFile);
    s->add_option("--id", a.id, "sequence id")->required();
  }
  {
    auto* s = add("predict", "closed-loop forecast past the training window", cmd_predict);
    s->add_option("checkpoint", a.input)->required()->check(CLI::ExistingFile);
    s->add_option("--dataset", a.dataset, "score the forecast against this dataset")
        ->check(CLI::ExistingFile);
  }
  add("experiment", "short vs long training window forecast comparison", cmd_experiment)
      ->add_option("dataset", a.input)
      ->required()
      ->check(CLI::ExistingFile);
  add("embed", "export the learned initial states -> embedding.csv", cmd_embed)
      ->add_option("checkpoint", a.input)
      ->required()
      ->check(CLI::ExistingFile);
  {
    auto* s = add("analyze", "PCA and correlation plot data -> plot.csv", cmd_analyze);
    s->add_option("checkpoint", a.input)->required()->check(CLI::ExistingFile);
    s->add_option("dataset", a.dataset)->required()->check(CLI::ExistingFile);
    s->add_option("--target", a.target, "colour by correlation with this id");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig cfg;
    if (!a.config_path.empty()) cfg.apply_file(a.config_path);
    // Flags override the file.
    for (const auto& [key, opt] : flag_options) {
      if (opt->count() > 0) cfg.set(key, a.flags.at(key));
    }
    for (const auto& [sub, handler] : commands) {
      if (sub->parsed()) return handler(a, cfg, out);
    }
    return kUsage;
  } catch (const EmptyResultError& e) {
    err << "error: " << e.what() << '\n';
    return kEmptyResult;
  } catch (const NumericalAbort& e) {
    err << "error: " << e.what() << "\n";
    if (e.last_checkpoint().empty()) {
      err << "no checkpoint was written before the abort\n";
    } else {
      err << "last checkpoint: " << e.last_checkpoint().string() << '\n';
    }
    return kNumericalAbort;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace latentlstm::cli
