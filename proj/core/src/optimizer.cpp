// SPDX-License-Identifier: Apache-2.0
#include "latentlstm/optimizer.hpp"

#include <array>
#include <cmath>
#include <span>
#include <sstream>

namespace latentlstm {
namespace {

void check_hyper(double lr, double beta1, double beta2, double eps) {
  if (!(lr > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) ||
      !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    std::ostringstream msg;
    msg << "Adam: invalid hyperparameters (lr=" << lr << ", beta1=" << beta1
        << ", beta2=" << beta2 << ", eps=" << eps << ")";
    throw Error(msg.str());
  }
}

template <typename T>
std::array<std::span<double>, kNumParamGroups> groups_of(T& x) {
  std::array<std::span<double>, kNumParamGroups> out;
  std::size_t i = 0;
  for_each_group(x, [&](std::string_view, std::span<double> s) { out[i++] = s; });
  return out;
}

template <typename T>
std::array<std::span<const double>, kNumParamGroups> groups_of_const(const T& x) {
  std::array<std::span<const double>, kNumParamGroups> out;
  std::size_t i = 0;
  for_each_group(x, [&](std::string_view, std::span<const double> s) {
    out[i++] = s;
  });
  return out;
}

}  // namespace

void AdamHyperParams::validate() const { check_hyper(lr, beta1, beta2, eps); }

AdamState AdamState::create(const ModelConfig& cfg, const AdamHyperParams& hp) {
  hp.validate();
  return AdamState{Gradients::zeros(cfg), Gradients::zeros(cfg), 0,
                   hp.lr, hp.beta1, hp.beta2, hp.eps};
}

void AdamState::validate() const { check_hyper(lr, beta1, beta2, eps); }

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state) {
  state.validate();
  const ModelConfig cfg = params.config();
  if (grads.config() != cfg || state.m.config() != cfg ||
      state.v.config() != cfg) {
    throw DimensionError("adam_step: gradient or moment shapes do not match "
                         "the parameters");
  }
  params.check_shapes();

  auto g = groups_of_const(grads);
  for (std::size_t k = 0; k < kNumParamGroups; ++k) {
    for (std::size_t i = 0; i < g[k].size(); ++i) {
      if (!std::isfinite(g[k][i])) {
        std::ostringstream msg;
        msg << "adam_step: non-finite gradient in parameter group '"
            << kParamGroupNames[k] << "' at flat index " << i;
        throw NonFiniteGradientError(msg.str());
      }
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double bias1 = 1.0 - std::pow(b1, t);
  const double bias2 = 1.0 - std::pow(b2, t);

  auto p = groups_of(params);
  auto m = groups_of(state.m);
  auto v = groups_of(state.v);
  for (std::size_t k = 0; k < kNumParamGroups; ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      m[k][i] = b1 * m[k][i] + (1.0 - b1) * gi;
      v[k][i] = b2 * v[k][i] + (1.0 - b2) * gi * gi;
      const double m_hat = m[k][i] / bias1;
      const double v_hat = v[k][i] / bias2;
      p[k][i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace latentlstm
