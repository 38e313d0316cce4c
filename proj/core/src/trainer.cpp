// SPDX-License-Identifier: Apache-2.0
#include "latentlstm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "io_util.hpp"

namespace latentlstm {
namespace {

using Json = nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double_string(const Json& j, std::string_view field) {
  const auto& s = j.get_ref<const std::string&>();
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error("checkpoint: field '" + std::string(field) +
                "' holds a malformed number '" + s + "'");
  }
  return x;
}

Json array_to_json(std::span<const double> values) {
  Json out = Json::array();
  for (double x : values) out.push_back(format_double(x));
  return out;
}

void array_from_json(const Json& j, std::span<double> dst, std::string_view field) {
  if (!j.is_array() || j.size() != dst.size()) {
    throw Error("checkpoint: field '" + std::string(field) + "' should hold " +
                std::to_string(dst.size()) + " values");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = parse_double_string(j[i], field);
}

template <typename Params>
Json groups_to_json(const Params& p) {
  Json out = Json::object();
  for_each_group(p, [&](std::string_view name, std::span<const double> values) {
    out[std::string(name)] = array_to_json(values);
  });
  return out;
}

template <typename Params>
void groups_from_json(const Json& j, Params& p, std::string_view prefix) {
  for_each_group(p, [&](std::string_view name, std::span<double> values) {
    const std::string key(name);
    if (!j.contains(key)) {
      throw Error("checkpoint: missing '" + std::string(prefix) + "." + key + "'");
    }
    array_from_json(j.at(key), values, std::string(prefix) + "." + key);
  });
}

Json model_config_to_json(const ModelConfig& c) {
  return Json{{"input_dim", c.input_dim},
              {"hidden_dim", c.hidden_dim},
              {"output_dim", c.output_dim},
              {"num_sequences", c.num_sequences}};
}

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c{j.at("input_dim").get<std::size_t>(), j.at("hidden_dim").get<std::size_t>(),
                j.at("output_dim").get<std::size_t>(),
                j.at("num_sequences").get<std::size_t>()};
  c.validate();
  return c;
}

Json training_config_to_json(const TrainingConfig& c) {
  Json j{{"epochs", c.epochs},
         {"lr", format_double(c.lr)},
         {"batch_size", c.batch_size},
         {"lr_decay", format_double(c.lr_decay)},
         {"beta1", format_double(c.beta1)},
         {"beta2", format_double(c.beta2)},
         {"eps", format_double(c.eps)},
         {"seed", c.seed},
         {"checkpoint_every", c.checkpoint_every},
         {"log_every", c.log_every},
         {"threads", c.threads}};
  j["grad_clip"] = c.grad_clip ? Json(format_double(*c.grad_clip)) : Json(nullptr);
  return j;
}

TrainingConfig training_config_from_json(const Json& j) {
  TrainingConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.lr = parse_double_string(j.at("lr"), "training.lr");
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lr_decay = parse_double_string(j.at("lr_decay"), "training.lr_decay");
  c.beta1 = parse_double_string(j.at("beta1"), "training.beta1");
  c.beta2 = parse_double_string(j.at("beta2"), "training.beta2");
  c.eps = parse_double_string(j.at("eps"), "training.eps");
  c.seed = j.at("seed").get<std::uint64_t>();
  c.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
  c.log_every = j.at("log_every").get<std::size_t>();
  c.threads = j.at("threads").get<std::size_t>();
  if (!j.at("grad_clip").is_null()) {
    c.grad_clip = parse_double_string(j.at("grad_clip"), "training.grad_clip");
  }
  return c;
}

void append_log_row(const std::filesystem::path& path, const LogEntry& e) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot open training log '" + path.string() + "'");
  if (fresh) out << "epoch,mean_loss,wall_ms\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.3f\n", e.epoch, e.mean_loss, e.wall_ms);
  out << buf;
}

void check_compatible(const Dataset& dataset, const ModelConfig& model_cfg) {
  dataset.validate();
  model_cfg.validate();
  if (model_cfg.num_sequences != dataset.size()) {
    throw Error("model num_sequences = " + std::to_string(model_cfg.num_sequences) +
                " but dataset has " + std::to_string(dataset.size()) + " sequences");
  }
  if (model_cfg.output_dim != dataset.dim()) {
    throw Error("model output_dim = " + std::to_string(model_cfg.output_dim) +
                " but dataset targets have dim " + std::to_string(dataset.dim()));
  }
}

}  // namespace

void TrainingConfig::validate() const {
  if (epochs < 1) throw Error("training: epochs must be >= 1");
  if (!(lr > 0.0)) throw Error("training: lr must be > 0");
  if (grad_clip && !(*grad_clip > 0.0)) throw Error("training: grad_clip must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw Error("training: lr_decay must be in (0, 1]");
  }
  if (log_every < 1) throw Error("training: log_every must be >= 1");
  if (threads < 1) throw Error("training: threads must be >= 1");
  AdamHyperParams{lr, beta1, beta2, eps}.validate();
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  Json doc;
  doc["schema_version"] = ckpt.schema_version;
  doc["model_config"] = model_config_to_json(ckpt.model);
  doc["training_config"] = training_config_to_json(ckpt.training);
  doc["params"] = groups_to_json(ckpt.params);
  doc["adam"] = Json{{"step_count", ckpt.adam.step_count},
                     {"lr", format_double(ckpt.adam.lr)},
                     {"beta1", format_double(ckpt.adam.beta1)},
                     {"beta2", format_double(ckpt.adam.beta2)},
                     {"eps", format_double(ckpt.adam.eps)},
                     {"m", groups_to_json(ckpt.adam.m)},
                     {"v", groups_to_json(ckpt.adam.v)}};
  doc["epoch"] = ckpt.epoch;
  doc["rng_state"] = ckpt.rng_state;
  doc["dataset_fingerprint"] = ckpt.dataset_fingerprint;
  doc["dataset"] = Json{{"ids", ckpt.ids},
                        {"labels", ckpt.labels},
                        {"train_length", ckpt.train_length}};
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(std::string("checkpoint: corrupt document: ") + e.what());
  }
  try {
    Checkpoint c;
    c.schema_version = doc.at("schema_version").get<std::string>();
    if (c.schema_version != kCheckpointSchemaVersion) {
      throw Error("checkpoint: schema_version " + c.schema_version +
                  " does not match supported version " +
                  std::string(kCheckpointSchemaVersion));
    }
    c.model = model_config_from_json(doc.at("model_config"));
    c.training = training_config_from_json(doc.at("training_config"));
    c.params = ModelParams::zeros(c.model);
    groups_from_json(doc.at("params"), c.params, "params");

    const Json& adam = doc.at("adam");
    c.adam = AdamState::create(c.model);
    c.adam.step_count = adam.at("step_count").get<std::uint64_t>();
    c.adam.lr = parse_double_string(adam.at("lr"), "adam.lr");
    c.adam.beta1 = parse_double_string(adam.at("beta1"), "adam.beta1");
    c.adam.beta2 = parse_double_string(adam.at("beta2"), "adam.beta2");
    c.adam.eps = parse_double_string(adam.at("eps"), "adam.eps");
    groups_from_json(adam.at("m"), c.adam.m, "adam.m");
    groups_from_json(adam.at("v"), c.adam.v, "adam.v");
    c.adam.validate();

    c.epoch = doc.at("epoch").get<std::size_t>();
    c.rng_state = doc.at("rng_state").get<std::string>();
    c.dataset_fingerprint = doc.at("dataset_fingerprint").get<std::string>();
    const Json& ds = doc.at("dataset");
    c.ids = ds.at("ids").get<std::vector<std::string>>();
    c.labels = ds.at("labels").get<std::vector<std::string>>();
    c.train_length = ds.at("train_length").get<std::size_t>();
    if (c.ids.size() != c.model.num_sequences) {
      throw Error("checkpoint: id list does not match num_sequences");
    }
    return c;
  } catch (const Json::exception& e) {
    throw Error(std::string("checkpoint: corrupt document: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  detail::write_text_file(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(detail::read_text_file(path));
}

Gradients batch_gradient(const ModelParams& params, const Dataset& dataset,
                         std::size_t first, std::size_t count, std::size_t threads) {
  if (count == 0 || first + count > dataset.size()) {
    throw Error("batch_gradient: batch [" + std::to_string(first) + ", " +
                std::to_string(first + count) + ") outside dataset of " +
                std::to_string(dataset.size()));
  }
  const std::size_t steps = dataset.length();
  Gradients total = Gradients::zeros_like(params);
  auto one = [&](std::size_t k) {
    const Rollout r = rollout_closed_loop(params, k, steps);
    return backward_sequence(params, r, dataset.sequence(k), k);
  };

  if (threads <= 1) {
    for (std::size_t k = first; k < first + count; ++k) accumulate_into(total, one(k));
  } else {
    // Windows of `threads` sequences; each window is reduced in index order.
    std::vector<SequenceGradients> slots(threads);
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t base = first; base < first + count; base += threads) {
      const std::size_t n = std::min(threads, first + count - base);
      {
        std::vector<std::jthread> workers;
        workers.reserve(n);
        for (std::size_t w = 0; w < n; ++w) {
          workers.emplace_back([&, w] {
            try {
              slots[w] = one(base + w);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
      }
      for (std::size_t w = 0; w < n; ++w) {
        if (errors[w]) std::rethrow_exception(errors[w]);
        accumulate_into(total, slots[w]);
      }
    }
  }
  total.scale(1.0 / static_cast<double>(count));
  return total;
}

Trainer::Trainer(const Dataset& dataset, TrainingConfig cfg, const ModelConfig& model_cfg)
    : dataset_(&dataset), cfg_(std::move(cfg)) {
  cfg_.validate();
  check_compatible(dataset, model_cfg);
  std::mt19937_64 rng(cfg_.seed);
  params_ = init_params(model_cfg, rng());
  adam_ = AdamState::create(model_cfg,
                            AdamHyperParams{cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps});
  std::ostringstream state;
  state << rng;
  rng_state_ = state.str();
}

Trainer::Trainer(const Dataset& dataset, const Checkpoint& ckpt)
    : dataset_(&dataset),
      cfg_(ckpt.training),
      params_(ckpt.params),
      adam_(ckpt.adam),
      epoch_(ckpt.epoch),
      rng_state_(ckpt.rng_state) {
  if (ckpt.schema_version != kCheckpointSchemaVersion) {
    throw Error("checkpoint: schema_version " + ckpt.schema_version +
                " does not match supported version " +
                std::string(kCheckpointSchemaVersion));
  }
  const std::string fp = dataset.fingerprint();
  if (fp != ckpt.dataset_fingerprint) {
    throw Error("checkpoint was written for dataset " + ckpt.dataset_fingerprint +
                " but this dataset has fingerprint " + fp);
  }
  cfg_.validate();
  check_compatible(dataset, ckpt.model);
  params_.check_shapes();
}

void Trainer::set_total_epochs(std::size_t epochs) {
  if (epochs < 1) throw Error("training: epochs must be >= 1");
  cfg_.epochs = epochs;
}

Gradients Trainer::batch_gradient(std::size_t first, std::size_t count) const {
  return latentlstm::batch_gradient(params_, *dataset_, first, count, cfg_.threads);
}

double Trainer::run_epoch() {
  const std::size_t n = dataset_->size();
  const std::size_t batch = cfg_.batch_size == 0 ? n : std::min(cfg_.batch_size, n);
  double loss_sum = 0.0;
  for (std::size_t first = 0; first < n; first += batch) {
    const std::size_t count = std::min(batch, n - first);
    Gradients g = batch_gradient(first, count);
    if (!g.all_finite()) {
      throw NumericalAbort("non-finite loss or gradient at epoch " +
                               std::to_string(epoch_ + 1),
                           {});
    }
    loss_sum += g.loss * static_cast<double>(count);
    if (cfg_.grad_clip) {
      const double norm = g.global_norm();
      if (norm > *cfg_.grad_clip) {
        const double keep = g.loss;
        g.scale(*cfg_.grad_clip / norm);
        g.loss = keep;
      }
    }
    adam_step(params_, g, adam_);
  }
  ++epoch_;
  if (cfg_.lr_decay != 1.0) adam_.lr *= cfg_.lr_decay;
  return loss_sum / static_cast<double>(n);
}

void Trainer::run(const TrainingSinks& sinks) {
  if (epoch_ < cfg_.epochs) run_epochs(cfg_.epochs - epoch_, sinks);
}

void Trainer::run_epochs(std::size_t count, const TrainingSinks& sinks) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::path last_checkpoint;
  const std::size_t stop = std::min(cfg_.epochs, epoch_ + count);
  while (epoch_ < stop) {
    double loss = 0.0;
    try {
      loss = run_epoch();
    } catch (const NumericalAbort& e) {
      throw NumericalAbort(e.what(), last_checkpoint);
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    const LogEntry entry{epoch_, loss, ms};
    history_.push_back(entry);
    if (epoch_ % cfg_.log_every == 0) {
      if (!sinks.log_path.empty()) append_log_row(sinks.log_path, entry);
      if (sinks.on_log) sinks.on_log(entry);
    }
    const bool periodic = cfg_.checkpoint_every > 0 && epoch_ % cfg_.checkpoint_every == 0;
    if (!sinks.checkpoint_path.empty() && (periodic || epoch_ == stop)) {
      save_checkpoint(checkpoint(), sinks.checkpoint_path);
      last_checkpoint = sinks.checkpoint_path;
    }
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.model = params_.config();
  c.training = cfg_;
  c.params = params_;
  c.adam = adam_;
  c.epoch = epoch_;
  c.rng_state = rng_state_;
  c.dataset_fingerprint = dataset_->fingerprint();
  c.ids = dataset_->ids;
  c.labels = dataset_->labels;
  c.train_length = dataset_->length();
  return c;
}

TrainResult train(const Dataset& dataset, const TrainingConfig& cfg,
                  const ModelConfig& model_cfg, const TrainingSinks& sinks) {
  Trainer trainer(dataset, cfg, model_cfg);
  trainer.run(sinks);
  return TrainResult{trainer.params(), trainer.history(), trainer.checkpoint()};
}

std::vector<Vector> reconstruct(const ModelParams& params, std::size_t seq_index,
                                std::size_t steps) {
  return rollout_closed_loop(params, seq_index, steps).outputs;
}

double mean_step_error(const ModelParams& params, const Dataset& dataset) {
  double total = 0.0;
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    const auto out = reconstruct(params, k, dataset.length());
    for (std::size_t t = 0; t < out.size(); ++t) {
      total += euclidean_distance(out[t], dataset.targets[k][t]);
    }
  }
  return total / static_cast<double>(dataset.size() * dataset.length());
}

double mean_sequence_loss(const ModelParams& params, const Dataset& dataset) {
  double total = 0.0;
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    const Rollout r = rollout_closed_loop(params, k, dataset.length());
    total += sequence_loss(r, dataset.sequence(k));
  }
  return total / static_cast<double>(dataset.size());
}

}  // namespace latentlstm
