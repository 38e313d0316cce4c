#include <doctest.h>

#include <cmath>

#include <latentlstm/model.hpp>

#include "oracles.hpp"

using namespace latentlstm;

namespace {

// H=1, input/output 1, every weight 1, biases 0.
ModelParams scalar_ones(std::size_t n = 1) {
  ModelParams p = ModelParams::zeros(ModelConfig{1, 1, 1, n});
  p.w_ih.fill(1.0);
  p.w_hh.fill(1.0);
  p.w_out.fill(1.0);
  return p;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(ModelConfig{}.validate());
  CHECK_THROWS(ModelConfig{1, 0, 1, 1}.validate());
  CHECK_THROWS(ModelConfig{1, 4, 1, 0}.validate());
  CHECK_THROWS(ModelConfig{2, 4, 1, 1}.validate());  // feedback needs in == out
}

TEST_CASE("init_params") {
  const ModelConfig cfg{1, 16, 1, 5};
  const ModelParams a = init_params(cfg, 42);
  CHECK(a == init_params(cfg, 42));
  CHECK_FALSE(a == init_params(cfg, 43));
  for (double x : a.h0_table.span()) CHECK(x == 0.0);
  for (double x : a.b_ih) CHECK(x == 0.0);
  for (double x : a.b_out) CHECK(x == 0.0);
  const double bound = 1.0 / std::sqrt(16.0);
  for (double x : a.w_hh.span()) CHECK(std::abs(x) <= bound);
  CHECK(a.w_ih.rows() == 64);
  CHECK(a.config() == cfg);
}

TEST_CASE("full-scale h0 table size") {
  const ModelParams p = ModelParams::zeros(ModelConfig{1, 128, 1, 735});
  CHECK(p.h0_table.size() == 94080);
}

TEST_CASE("lstm_step zero parameters") {
  const ModelParams p = ModelParams::zeros(ModelConfig{1, 3, 1, 1});
  const auto r = lstm_step(p, Vector{0.7}, CellState{Vector{0.2, -0.4, 0.9}, Vector(3)});
  CHECK(r.state.h == Vector(3));
  CHECK(r.state.c == Vector(3));
  CHECK(r.gates.i == Vector(3, 0.5));
  CHECK(r.gates.g == Vector(3));
}

TEST_CASE("lstm_step scalar hand computation") {
  const auto r = lstm_step(scalar_ones(), Vector{0.0}, CellState{Vector{0.5}, Vector{0.0}});
  // i = f = o = sigmoid(0.5), g = tanh(0.5); computed independently.
  CHECK(r.state.c[0] == doctest::Approx(0.28764913664496794).epsilon(1e-13));
  CHECK(r.state.h[0] == doctest::Approx(0.17426971865610508).epsilon(1e-13));
  CHECK(std::abs(r.state.c[0] - 0.28766) < 5e-5);
  CHECK(std::abs(r.state.h[0] - 0.17427) < 5e-6);
}

TEST_CASE("lstm_step zero input gates reflect biases only") {
  ModelParams p = init_params(ModelConfig{1, 2, 1, 1}, 3);
  p.b_ih = Vector{0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8};
  const auto r = lstm_step(p, Vector{0.0}, CellState{Vector(2), Vector(2)});
  CHECK(r.gates.i[0] == doctest::Approx(sigmoid(0.1)));
  CHECK(r.gates.f[1] == doctest::Approx(sigmoid(0.4)));
  CHECK(r.gates.g[0] == doctest::Approx(std::tanh(-0.5)));
  CHECK(r.gates.o[1] == doctest::Approx(sigmoid(-0.8)));
}

TEST_CASE("lstm_step dimension errors") {
  const ModelParams p = ModelParams::zeros(ModelConfig{1, 3, 1, 1});
  CHECK_THROWS_AS(lstm_step(p, Vector{0, 0}, CellState{Vector(3), Vector(3)}), DimensionError);
  CHECK_THROWS_AS(lstm_step(p, Vector{0}, CellState{Vector(2), Vector(3)}), DimensionError);
}

TEST_CASE("rollout two-step scalar hand computation") {
  ModelParams p = scalar_ones();
  p.h0_table(0, 0) = 0.5;
  const Rollout r = rollout_closed_loop(p, 0, 2);
  REQUIRE(r.steps() == 2);
  CHECK(r.outputs[0][0] == doctest::Approx(0.17426971865610508).epsilon(1e-13));
  // x_2 = y_1 = h_1, so every gate sees 2 h_1.
  CHECK(r.outputs[1][0] == doctest::Approx(0.20500658154437723).epsilon(1e-13));
}

TEST_CASE("rollout contracts") {
  const ModelConfig cfg{1, 4, 1, 3};
  CHECK(rollout_closed_loop(ModelParams::zeros(cfg), 2, 7).outputs ==
        std::vector<Vector>(7, Vector{0.0}));

  const auto inst = testing::random_instance(5, 4, 9, 3, 1);
  const Rollout a = rollout_closed_loop(inst.params, 1, 9);
  CHECK(a == rollout_closed_loop(inst.params, 1, 9));
  CHECK(a.outputs.size() == 9);
  CHECK(a.hidden_trace.size() == 9);
  CHECK(a.gate_trace.size() == 9);

  for (std::size_t t = 0; t < a.steps(); ++t) {
    const Vector& prev_c = t == 0 ? Vector(4) : a.hidden_trace[t - 1].c;
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(a.hidden_trace[t].h[j]) < 1.0);
      CHECK(std::abs(a.hidden_trace[t].c[j]) <= std::abs(prev_c[j]) + 1.0);
    }
  }

  // Only row k matters.
  ModelParams other = inst.params;
  other.h0_table(0, 2) += 0.3;
  other.h0_table(2, 0) -= 0.3;
  CHECK(rollout_closed_loop(other, 1, 9) == a);

  CHECK_THROWS_AS(rollout_closed_loop(inst.params, 3, 5), IndexError);
  CHECK_THROWS(rollout_closed_loop(inst.params, 0, 0));
}
