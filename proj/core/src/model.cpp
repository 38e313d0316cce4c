// SPDX-License-Identifier: Apache-2.0
#include "latentlstm/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "portable_random.hpp"

namespace latentlstm {
namespace {

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                  std::string_view name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << "ModelParams." << name << ": expected " << rows << "x" << cols
        << ", got " << m.shape_string();
    throw DimensionError(msg.str());
  }
}

void expect_len(const Vector& v, std::size_t len, std::string_view name) {
  if (v.size() != len) {
    std::ostringstream msg;
    msg << "ModelParams." << name << ": expected length " << len << ", got "
        << v.size();
    throw DimensionError(msg.str());
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1 || num_sequences < 1) {
    std::ostringstream msg;
    msg << "ModelConfig: all counts must be >= 1 (input_dim=" << input_dim
        << ", hidden_dim=" << hidden_dim << ", output_dim=" << output_dim
        << ", num_sequences=" << num_sequences << ")";
    throw Error(msg.str());
  }
  if (input_dim != output_dim) {
    throw Error("ModelConfig: closed-loop feedback needs input_dim == "
                "output_dim (got " + std::to_string(input_dim) + " and " +
                std::to_string(output_dim) + ")");
  }
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t h = cfg.hidden_dim;
  return ModelParams{
      Matrix(4 * h, cfg.input_dim), Matrix(4 * h, h),
      Vector(4 * h),                Vector(4 * h),
      Matrix(cfg.output_dim, h),    Vector(cfg.output_dim),
      Matrix(cfg.num_sequences, h),
  };
}

ModelConfig ModelParams::config() const {
  return ModelConfig{w_ih.cols(), w_hh.cols(), w_out.rows(), h0_table.rows()};
}

void ModelParams::check_shapes() const {
  const ModelConfig cfg = config();
  cfg.validate();
  const std::size_t h = cfg.hidden_dim;
  expect_shape(w_ih, 4 * h, cfg.input_dim, "w_ih");
  expect_shape(w_hh, 4 * h, h, "w_hh");
  expect_len(b_ih, 4 * h, "b_ih");
  expect_len(b_hh, 4 * h, "b_hh");
  expect_shape(w_out, cfg.output_dim, h, "w_out");
  expect_len(b_out, cfg.output_dim, "b_out");
  expect_shape(h0_table, cfg.num_sequences, h, "h0_table");
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each_group(*this, [&](std::string_view, std::span<const double> values) {
    for (double x : values) ok = ok && std::isfinite(x);
  });
  return ok;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(cfg);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  for (Matrix* m : {&p.w_ih, &p.w_hh, &p.w_out}) {
    for (double& w : m->span()) w = detail::uniform(rng, -bound, bound);
  }
  return p;
}

StepResult lstm_step(const ModelParams& params, const Vector& x,
                     const CellState& prev) {
  const std::size_t h = params.w_hh.cols();
  const std::size_t in = params.w_ih.cols();
  if (x.size() != in) {
    throw DimensionError("lstm_step: input length " + std::to_string(x.size()) +
                         " but input_dim is " + std::to_string(in));
  }
  if (prev.h.size() != h || prev.c.size() != h) {
    throw DimensionError("lstm_step: previous state lengths (" +
                         std::to_string(prev.h.size()) + ", " +
                         std::to_string(prev.c.size()) +
                         ") do not match hidden_dim " + std::to_string(h));
  }

  // Pre-activations for all four gates in one pass over the packed rows.
  std::vector<double> z(4 * h);
  for (std::size_t r = 0; r < 4 * h; ++r) {
    const double* wi = params.w_ih.data() + r * in;
    const double* wh = params.w_hh.data() + r * h;
    double acc = 0.0;
    for (std::size_t c = 0; c < in; ++c) acc += wi[c] * x[c];
    acc += params.b_ih[r];
    double rec = 0.0;
    for (std::size_t c = 0; c < h; ++c) rec += wh[c] * prev.h[c];
    z[r] = acc + rec + params.b_hh[r];
  }

  StepResult out{CellState{Vector(h), Vector(h)},
                 Gates{Vector(h), Vector(h), Vector(h), Vector(h)}};
  Gates& g = out.gates;
  for (std::size_t j = 0; j < h; ++j) {
    g.i[j] = sigmoid(z[j]);
    g.f[j] = sigmoid(z[h + j]);
    g.g[j] = std::tanh(z[2 * h + j]);
    g.o[j] = sigmoid(z[3 * h + j]);
    const double c = g.f[j] * prev.c[j] + g.i[j] * g.g[j];
    out.state.c[j] = c;
    out.state.h[j] = g.o[j] * std::tanh(c);
  }
  return out;
}

Rollout rollout_closed_loop(const ModelParams& params, std::size_t seq_index,
                            std::size_t steps) {
  const std::size_t n = params.h0_table.rows();
  if (seq_index >= n) {
    throw IndexError("rollout_closed_loop: sequence index " +
                     std::to_string(seq_index) + " out of range [0, " +
                     std::to_string(n) + ")");
  }
  if (steps < 1) throw Error("rollout_closed_loop: steps must be >= 1");

  Rollout r;
  r.seq_index = seq_index;
  r.outputs.reserve(steps);
  r.hidden_trace.reserve(steps);
  r.gate_trace.reserve(steps);

  CellState state{params.h0_table.row_vector(seq_index),
                  Vector(params.w_hh.cols())};
  Vector x(params.w_ih.cols());
  for (std::size_t t = 0; t < steps; ++t) {
    StepResult step = lstm_step(params, x, state);
    Vector y = add(matvec(params.w_out, step.state.h), params.b_out);
    state = step.state;
    r.hidden_trace.push_back(std::move(step.state));
    r.gate_trace.push_back(std::move(step.gates));
    x = y;
    r.outputs.push_back(std::move(y));
  }
  return r;
}

}  // namespace latentlstm
