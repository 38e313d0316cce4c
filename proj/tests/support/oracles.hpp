// SPDX-License-Identifier: Apache-2.0
// Independent reference computations shared by unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <latentlstm/backprop.hpp>
#include <latentlstm/model.hpp>

namespace latentlstm::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

/// A small model with every parameter group, h0 rows included, set to
/// non-trivial random values, plus random targets.
struct Instance {
  ModelParams params;
  std::vector<Vector> target;
  std::size_t seq_index = 0;
  std::size_t steps = 0;
};

inline Instance random_instance(std::uint64_t seed, std::size_t hidden, std::size_t steps,
                                std::size_t num_sequences, std::size_t dim) {
  std::mt19937_64 rng(seed);
  Instance inst;
  inst.params = init_params(ModelConfig{dim, hidden, dim, num_sequences}, rng());
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto& p = inst.params;
  for (double& x : p.b_ih) x = uniform(rng, -bound, bound);
  for (double& x : p.b_hh) x = uniform(rng, -bound, bound);
  for (double& x : p.b_out.span()) x = uniform(rng, -0.1, 0.1);
  for (double& x : p.w_out.span()) x = uniform(rng, -1.0, 1.0);
  for (double& x : p.h0_table.span()) x = uniform(rng, -0.8, 0.8);
  inst.seq_index = static_cast<std::size_t>(rng() % num_sequences);
  inst.steps = steps;
  for (std::size_t t = 0; t < steps; ++t) {
    Vector v(dim);
    for (double& x : v) x = uniform(rng, -1.0, 1.0);
    inst.target.push_back(std::move(v));
  }
  return inst;
}

inline double loss_at(const ModelParams& p, const Instance& inst) {
  return sequence_loss(rollout_closed_loop(p, inst.seq_index, inst.steps), inst.target);
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // largest relative (or floored absolute) error
  std::string first_failure;
};

/// Every coordinate of backward() against central differences.
inline GradCheck check_gradients(const Instance& inst,
                                 FeedbackGradient mode = FeedbackGradient::kPropagate,
                                 double eps = 1e-5, double tol = 1e-4,
                                 double abs_floor = 1e-8) {
  const Rollout r = rollout_closed_loop(inst.params, inst.seq_index, inst.steps);
  const Gradients analytic = backward(inst.params, r, inst.target, inst.seq_index, mode);

  std::vector<std::span<const double>> grad_groups;
  for_each_group(analytic, [&](std::string_view, std::span<const double> s) {
    grad_groups.push_back(s);
  });

  GradCheck out;
  ModelParams probe = inst.params;
  std::size_t group = 0;
  for_each_group(probe, [&](std::string_view name, std::span<double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = loss_at(probe, inst);
      values[i] = saved - eps;
      const double down = loss_at(probe, inst);
      values[i] = saved;

      const double numeric = (up - down) / (2.0 * eps);
      const double a = grad_groups[group][i];
      const double diff = std::abs(a - numeric);
      double err = 0.0;
      bool ok = true;
      if (std::abs(a) < abs_floor && std::abs(numeric) < abs_floor) {
        err = diff;
        ok = diff < abs_floor;
      } else {
        err = diff / std::max(std::abs(a), std::abs(numeric));
        ok = err < tol;
      }
      ++out.checked;
      out.worst = std::max(out.worst, err);
      if (!ok && out.failures++ == 0) {
        out.first_failure = std::string(name) + "[" + std::to_string(i) +
                            "]: analytic " + std::to_string(a) + " numeric " +
                            std::to_string(numeric);
      }
    }
    ++group;
  });
  return out;
}

}  // namespace latentlstm::testing
