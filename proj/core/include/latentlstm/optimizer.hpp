// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "latentlstm/backprop.hpp"
#include "latentlstm/model.hpp"

namespace latentlstm {

struct AdamHyperParams {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Moment estimates for Adam. `m` and `v` reuse the Gradients layout; their
/// loss fields are unused.
struct AdamState {
  Gradients m;
  Gradients v;
  std::uint64_t step_count = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState create(const ModelConfig& cfg, const AdamHyperParams& hp = {});

  void validate() const;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Gradient contained NaN or Inf; the message names the parameter group.
class NonFiniteGradientError : public Error {
 public:
  using Error::Error;
};

/// One bias-corrected Adam update applied to every parameter group,
/// the initial-state table included. Requires exclusive access to both
/// arguments. Nothing is modified when the gradient is rejected.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state);

}  // namespace latentlstm
