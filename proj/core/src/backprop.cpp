// SPDX-License-Identifier: Apache-2.0
#include "latentlstm/backprop.hpp"

#include <cmath>
#include <sstream>

namespace latentlstm {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view name) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << "accumulate: " << name << " shape " << a.shape_string() << " vs "
        << b.shape_string();
    throw DimensionError(msg.str());
  }
}

void require_same_len(const Vector& a, const Vector& b, std::string_view name) {
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << "accumulate: " << name << " length " << a.size() << " vs "
        << b.size();
    throw DimensionError(msg.str());
  }
}

void add_to(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void check_target(const Rollout& rollout, std::span<const Vector> target) {
  if (rollout.outputs.size() != target.size()) {
    throw DimensionError("sequence_loss: rollout has " +
                         std::to_string(rollout.outputs.size()) +
                         " steps but target has " +
                         std::to_string(target.size()));
  }
  for (std::size_t t = 0; t < target.size(); ++t) {
    if (rollout.outputs[t].size() != target[t].size()) {
      throw DimensionError("sequence_loss: output dim " +
                           std::to_string(rollout.outputs[t].size()) +
                           " vs target dim " +
                           std::to_string(target[t].size()) + " at step " +
                           std::to_string(t + 1));
    }
  }
}

}  // namespace

Gradients Gradients::zeros(const ModelConfig& cfg) {
  ModelParams p = ModelParams::zeros(cfg);
  return Gradients{std::move(p.w_ih),  std::move(p.w_hh),  std::move(p.b_ih),
                   std::move(p.b_hh),  std::move(p.w_out), std::move(p.b_out),
                   std::move(p.h0_table), 0.0};
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  return zeros(params.config());
}

ModelConfig Gradients::config() const {
  return ModelConfig{w_ih.cols(), w_hh.cols(), w_out.rows(), h0_table.rows()};
}

bool Gradients::all_finite() const {
  bool ok = std::isfinite(loss);
  for_each_group(*this, [&](std::string_view, std::span<const double> values) {
    for (double x : values) ok = ok && std::isfinite(x);
  });
  return ok;
}

double Gradients::global_norm() const {
  double acc = 0.0;
  for_each_group(*this, [&](std::string_view, std::span<const double> values) {
    for (double x : values) acc += x * x;
  });
  return std::sqrt(acc);
}

void Gradients::scale(double s) {
  for_each_group(*this, [&](std::string_view, std::span<double> values) {
    for (double& x : values) x *= s;
  });
  loss *= s;
}

Gradients SequenceGradients::to_dense(std::size_t num_sequences) const {
  if (seq_index >= num_sequences) {
    throw IndexError("SequenceGradients: index " + std::to_string(seq_index) +
                     " out of range for " + std::to_string(num_sequences) +
                     " sequences");
  }
  Gradients g{w_ih,  w_hh,  b_ih, b_hh, w_out, b_out,
              Matrix(num_sequences, h0_row.size()), loss};
  auto row = g.h0_table.row(seq_index);
  for (std::size_t j = 0; j < h0_row.size(); ++j) row[j] = h0_row[j];
  return g;
}

double sequence_loss(const Rollout& rollout, std::span<const Vector> target) {
  check_target(rollout, target);
  double total = 0.0;
  for (std::size_t t = 0; t < target.size(); ++t) {
    total += euclidean_distance(rollout.outputs[t], target[t]);
  }
  return total;
}

SequenceGradients backward_sequence(const ModelParams& params,
                                    const Rollout& rollout,
                                    std::span<const Vector> target,
                                    std::size_t seq_index,
                                    FeedbackGradient feedback) {
  params.check_shapes();
  const std::size_t h = params.w_hh.cols();
  const std::size_t in = params.w_ih.cols();
  const std::size_t out = params.w_out.rows();
  const std::size_t steps = rollout.outputs.size();

  if (seq_index >= params.h0_table.rows()) {
    throw IndexError("backward: sequence index " + std::to_string(seq_index) +
                     " out of range");
  }
  if (rollout.seq_index != seq_index) {
    throw Error("backward: rollout was generated for sequence " +
                std::to_string(rollout.seq_index) + ", not " +
                std::to_string(seq_index));
  }
  if (steps == 0 || rollout.hidden_trace.size() != steps ||
      rollout.gate_trace.size() != steps) {
    throw Error("backward: rollout traces missing or of unequal length");
  }
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& s = rollout.hidden_trace[t];
    const auto& g = rollout.gate_trace[t];
    if (s.h.size() != h || s.c.size() != h || g.i.size() != h ||
        g.f.size() != h || g.g.size() != h || g.o.size() != h ||
        rollout.outputs[t].size() != out) {
      throw DimensionError("backward: trace at step " + std::to_string(t + 1) +
                           " does not match the parameter shapes");
    }
  }
  const double loss = sequence_loss(rollout, target);

  SequenceGradients grad{seq_index,       Matrix(4 * h, in), Matrix(4 * h, h),
                         Vector(4 * h),   Vector(4 * h),     Matrix(out, h),
                         Vector(out),     Vector(h),         loss};

  const Vector h_init = params.h0_table.row_vector(seq_index);
  const Vector zero_h(h);
  const Vector zero_x(in);

  Vector dh_next(h);      // dE/dh_t arriving from step t+1
  Vector dc_next(h);      // dE/dc_t arriving from step t+1
  Vector dx_next(in);     // dE/dx_{t+1}, i.e. the feedback into y_t
  Vector dz(4 * h);

  for (std::size_t t = steps; t-- > 0;) {
    const Vector& y = rollout.outputs[t];
    const CellState& cur = rollout.hidden_trace[t];
    const Gates& gates = rollout.gate_trace[t];
    const Vector& h_prev = t > 0 ? rollout.hidden_trace[t - 1].h : h_init;
    const Vector& c_prev = t > 0 ? rollout.hidden_trace[t - 1].c : zero_h;
    const Vector& x = t > 0 ? rollout.outputs[t - 1] : zero_x;

    // dE/dy_t: distance term plus whatever flowed back through x_{t+1}.
    Vector dy(out);
    const double dist = euclidean_distance(y, target[t]);
    if (dist > 0.0) {
      for (std::size_t j = 0; j < out; ++j) dy[j] = (y[j] - target[t][j]) / dist;
    }
    if (feedback == FeedbackGradient::kPropagate) {
      for (std::size_t j = 0; j < out; ++j) dy[j] += dx_next[j];
    }

    add_outer(grad.w_out, dy, cur.h);
    for (std::size_t j = 0; j < out; ++j) grad.b_out[j] += dy[j];

    Vector dh = matvec_transposed(params.w_out, dy);
    for (std::size_t j = 0; j < h; ++j) dh[j] += dh_next[j];

    for (std::size_t j = 0; j < h; ++j) {
      const double tc = std::tanh(cur.c[j]);
      const double dc = dh[j] * gates.o[j] * (1.0 - tc * tc) + dc_next[j];
      const double di = dc * gates.g[j];
      const double df = dc * c_prev[j];
      const double dg = dc * gates.i[j];
      const double d_o = dh[j] * tc;
      dz[j] = di * gates.i[j] * (1.0 - gates.i[j]);
      dz[h + j] = df * gates.f[j] * (1.0 - gates.f[j]);
      dz[2 * h + j] = dg * (1.0 - gates.g[j] * gates.g[j]);
      dz[3 * h + j] = d_o * gates.o[j] * (1.0 - gates.o[j]);
      dc_next[j] = dc * gates.f[j];
    }

    add_outer(grad.w_ih, dz, x);
    add_outer(grad.w_hh, dz, h_prev);
    for (std::size_t r = 0; r < 4 * h; ++r) {
      grad.b_ih[r] += dz[r];
      grad.b_hh[r] += dz[r];
    }
    dh_next = matvec_transposed(params.w_hh, dz);
    dx_next = matvec_transposed(params.w_ih, dz);
  }

  grad.h0_row = std::move(dh_next);
  return grad;
}

Gradients backward(const ModelParams& params, const Rollout& rollout,
                   std::span<const Vector> target, std::size_t seq_index,
                   FeedbackGradient feedback) {
  return backward_sequence(params, rollout, target, seq_index, feedback)
      .to_dense(params.h0_table.rows());
}

void accumulate_into(Gradients& total, const Gradients& delta) {
  require_same_shape(total.w_ih, delta.w_ih, "w_ih");
  require_same_shape(total.w_hh, delta.w_hh, "w_hh");
  require_same_len(total.b_ih, delta.b_ih, "b_ih");
  require_same_len(total.b_hh, delta.b_hh, "b_hh");
  require_same_shape(total.w_out, delta.w_out, "w_out");
  require_same_len(total.b_out, delta.b_out, "b_out");
  require_same_shape(total.h0_table, delta.h0_table, "h0_table");
  add_to(total.w_ih.span(), delta.w_ih.span());
  add_to(total.w_hh.span(), delta.w_hh.span());
  add_to(total.b_ih.span(), delta.b_ih.span());
  add_to(total.b_hh.span(), delta.b_hh.span());
  add_to(total.w_out.span(), delta.w_out.span());
  add_to(total.b_out.span(), delta.b_out.span());
  add_to(total.h0_table.span(), delta.h0_table.span());
  total.loss += delta.loss;
}

void accumulate_into(Gradients& total, const SequenceGradients& delta) {
  require_same_shape(total.w_ih, delta.w_ih, "w_ih");
  require_same_shape(total.w_hh, delta.w_hh, "w_hh");
  require_same_len(total.b_ih, delta.b_ih, "b_ih");
  require_same_len(total.b_hh, delta.b_hh, "b_hh");
  require_same_shape(total.w_out, delta.w_out, "w_out");
  require_same_len(total.b_out, delta.b_out, "b_out");
  if (delta.seq_index >= total.h0_table.rows() ||
      delta.h0_row.size() != total.h0_table.cols()) {
    throw DimensionError("accumulate: h0 row does not fit the table (" +
                         total.h0_table.shape_string() + ")");
  }
  add_to(total.w_ih.span(), delta.w_ih.span());
  add_to(total.w_hh.span(), delta.w_hh.span());
  add_to(total.b_ih.span(), delta.b_ih.span());
  add_to(total.b_hh.span(), delta.b_hh.span());
  add_to(total.w_out.span(), delta.w_out.span());
  add_to(total.b_out.span(), delta.b_out.span());
  add_to(total.h0_table.row(delta.seq_index), delta.h0_row.span());
  total.loss += delta.loss;
}

}  // namespace latentlstm
