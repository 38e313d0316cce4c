// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "latentlstm/numerics.hpp"

namespace latentlstm {

/// Sequence index k into the initial-state table is out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

struct ModelConfig {
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 128;
  std::size_t output_dim = 1;
  std::size_t num_sequences = 1;

  /// Throws Error unless every count is at least one and input_dim equals
  /// output_dim (the output is fed back as the next input).
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Trainable parameters. The packed 4H gate rows are ordered (i, f, g, o).
///
/// Row k of `h0_table` is the learned initial hidden state of sequence k.
/// The initial cell state is not a parameter; it is always zero.
struct ModelParams {
  Matrix w_ih;      // 4H x input_dim
  Matrix w_hh;      // 4H x H
  Vector b_ih;      // 4H
  Vector b_hh;      // 4H
  Matrix w_out;     // output_dim x H
  Vector b_out;     // output_dim
  Matrix h0_table;  // N x H

  /// All-zero parameters shaped for `cfg`.
  static ModelParams zeros(const ModelConfig& cfg);

  ModelConfig config() const;
  /// Throws DimensionError when field shapes are inconsistent.
  void check_shapes() const;
  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline constexpr std::size_t kNumParamGroups = 7;
inline constexpr std::array<std::string_view, kNumParamGroups> kParamGroupNames{
    "w_ih", "w_hh", "b_ih", "b_hh", "w_out", "b_out", "h0_table"};

/// Visits every parameter group of a ModelParams-shaped struct as
/// (name, span). Works for ModelParams and Gradients alike.
template <typename Params, typename F>
void for_each_group(Params& p, F&& f) {
  f(kParamGroupNames[0], p.w_ih.span());
  f(kParamGroupNames[1], p.w_hh.span());
  f(kParamGroupNames[2], p.b_ih.span());
  f(kParamGroupNames[3], p.b_hh.span());
  f(kParamGroupNames[4], p.w_out.span());
  f(kParamGroupNames[5], p.b_out.span());
  f(kParamGroupNames[6], p.h0_table.span());
}

struct CellState {
  Vector h;
  Vector c;

  friend bool operator==(const CellState&, const CellState&) = default;
};

struct Gates {
  Vector i;
  Vector f;
  Vector g;
  Vector o;

  friend bool operator==(const Gates&, const Gates&) = default;
};

struct StepResult {
  CellState state;
  Gates gates;
};

/// Forward trace of one closed-loop generation. Entry t-1 of each list
/// belongs to step t.
struct Rollout {
  std::size_t seq_index = 0;
  std::vector<Vector> outputs;
  std::vector<CellState> hidden_trace;
  std::vector<Gates> gate_trace;

  std::size_t steps() const noexcept { return outputs.size(); }

  friend bool operator==(const Rollout&, const Rollout&) = default;
};

/// Weights uniform in ±1/sqrt(H) from a seeded mt19937_64; biases and the
/// initial-state table start at zero.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

StepResult lstm_step(const ModelParams& params, const Vector& x,
                     const CellState& prev);

/// Generates `steps` outputs for sequence `seq_index` from its initial state
/// alone: x_1 = 0, c_0 = 0, and x_t = y_{t-1} afterwards.
Rollout rollout_closed_loop(const ModelParams& params, std::size_t seq_index,
                            std::size_t steps);

}  // namespace latentlstm
