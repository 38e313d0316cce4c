// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latentlstm/model.hpp"
#include "latentlstm/numerics.hpp"

namespace latentlstm {

/// Gradient of the reconstruction loss, shaped exactly like ModelParams.
struct Gradients {
  Matrix w_ih;
  Matrix w_hh;
  Vector b_ih;
  Vector b_hh;
  Matrix w_out;
  Vector b_out;
  Matrix h0_table;
  double loss = 0.0;

  static Gradients zeros(const ModelConfig& cfg);
  static Gradients zeros_like(const ModelParams& params);

  ModelConfig config() const;
  bool all_finite() const;
  /// L2 norm over every entry, summed group by group in a fixed order.
  double global_norm() const;
  /// Multiplies every entry and the loss by `s`.
  void scale(double s);

  friend bool operator==(const Gradients&, const Gradients&) = default;
};

/// One sequence's gradient. Only row k of the initial-state table can be
/// nonzero, so that part is stored as a single row.
struct SequenceGradients {
  std::size_t seq_index = 0;
  Matrix w_ih;
  Matrix w_hh;
  Vector b_ih;
  Vector b_hh;
  Matrix w_out;
  Vector b_out;
  Vector h0_row;
  double loss = 0.0;

  /// Expands to a full Gradients with zero rows for every j != seq_index.
  Gradients to_dense(std::size_t num_sequences) const;
};

/// Whether the gradient crosses the x_t = y_{t-1} feedback edge. `kDetach`
/// is a deliberately wrong ablation kept for verification tests.
enum class FeedbackGradient { kPropagate, kDetach };

/// Sum over steps of the Euclidean distance between output and target.
double sequence_loss(const Rollout& rollout, std::span<const Vector> target);

/// Reverse-mode gradient of sequence_loss through a closed-loop rollout.
///
/// Flows through the recurrent (h, c) path and, unless detached, through
/// the output feedback. Where an output equals its target exactly the
/// distance term contributes subgradient zero.
SequenceGradients backward_sequence(
    const ModelParams& params, const Rollout& rollout,
    std::span<const Vector> target, std::size_t seq_index,
    FeedbackGradient feedback = FeedbackGradient::kPropagate);

Gradients backward(const ModelParams& params, const Rollout& rollout,
                   std::span<const Vector> target, std::size_t seq_index,
                   FeedbackGradient feedback = FeedbackGradient::kPropagate);

/// total += delta, loss included.
void accumulate_into(Gradients& total, const Gradients& delta);
void accumulate_into(Gradients& total, const SequenceGradients& delta);

inline Gradients accumulate(Gradients total, const Gradients& delta) {
  accumulate_into(total, delta);
  return total;
}

}  // namespace latentlstm
