#include <doctest.h>

#include <algorithm>
#include <sstream>

#include <latentlstm/forecast.hpp>

#include "oracles.hpp"

using namespace latentlstm;

namespace {

std::vector<std::vector<Vector>> scalars(std::initializer_list<std::vector<double>> rows) {
  std::vector<std::vector<Vector>> out;
  for (const auto& r : rows) {
    std::vector<Vector> seq;
    for (double v : r) seq.push_back(Vector{v});
    out.push_back(std::move(seq));
  }
  return out;
}

// A dataset whose sequences are exactly the closed-loop outputs of `teacher`.
Dataset teacher_dataset(const ModelParams& teacher, std::size_t steps) {
  Dataset ds;
  for (std::size_t k = 0; k < teacher.h0_table.rows(); ++k) {
    ds.ids.push_back("t" + std::to_string(k));
    ds.targets.push_back(reconstruct(teacher, k, steps));
  }
  for (std::size_t t = 0; t < steps; ++t) ds.dates.push_back("d" + std::to_string(t));
  return ds;
}

}  // namespace

TEST_CASE("predict") {
  const ModelParams zero = ModelParams::zeros(ModelConfig{1, 4, 1, 2});
  CHECK(predict(zero, 1, 10, 3) == std::vector<Vector>(3, Vector{0.0}));
  CHECK_THROWS(predict(zero, 1, 10, 0));
  CHECK_THROWS(predict(zero, 2, 10, 1));

  const auto inst = testing::random_instance(12, 5, 4, 3, 2);
  const auto full = reconstruct(inst.params, 2, 30);
  const auto tail = predict(inst.params, 2, 18, 12);
  CHECK(std::equal(tail.begin(), tail.end(), full.begin() + 18));
}

TEST_CASE("exact continuation scores zero") {
  auto inst = testing::random_instance(21, 6, 4, 3, 1);
  const Dataset ds = teacher_dataset(inst.params, 50);
  std::vector<std::vector<Vector>> preds, actual;
  for (std::size_t k = 0; k < 3; ++k) {
    preds.push_back(predict(inst.params, k, 30, 20));
    actual.emplace_back(ds.targets[k].begin() + 30, ds.targets[k].end());
  }
  const ForecastReport r = evaluate_mae(ds.ids, preds, actual);
  for (double m : r.per_date_mae) CHECK(m == 0.0);
}

TEST_CASE("evaluate_mae") {
  const ForecastReport same = evaluate_mae({"a"}, scalars({{1, 2}}), scalars({{1, 2}}));
  CHECK(same.per_date_mae == std::vector<double>{0, 0});

  const ForecastReport r = evaluate_mae({"a"}, scalars({{0, 0}}), scalars({{1, -1}}));
  CHECK(r.per_date_mae == std::vector<double>{1, 1});
  CHECK(r.per_sequence_mae == std::vector<double>{1});

  const ForecastReport two =
      evaluate_mae({"x", "y"}, scalars({{0.1}, {0.3}}), scalars({{0.0}, {0.0}}));
  CHECK(two.best_id() == "x");
  CHECK(two.worst_id() == "y");

  const ForecastReport tie =
      evaluate_mae({"x", "y", "z"}, scalars({{0.2}, {0.1}, {0.1}}), scalars({{0}, {0}, {0}}));
  CHECK(tie.best_index == 1);
  CHECK(tie.worst_index == 0);

  CHECK_THROWS(evaluate_mae({"a"}, scalars({{0, 0}}), scalars({{1}})));
  CHECK_THROWS(evaluate_mae({"a", "b"}, scalars({{0}}), scalars({{1}})));
  CHECK_THROWS(evaluate_mae({}, {}, {}));
}

TEST_CASE("evaluate_mae properties") {
  std::mt19937_64 rng(4);
  std::vector<std::vector<Vector>> pred(6), actual(6);
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < 6; ++k) {
    ids.push_back("s" + std::to_string(k));
    for (int t = 0; t < 9; ++t) {
      pred[k].push_back(Vector{testing::uniform(rng, -1, 1)});
      actual[k].push_back(Vector{testing::uniform(rng, -1, 1)});
    }
  }
  const ForecastReport r = evaluate_mae(ids, pred, actual);
  for (double m : r.per_date_mae) CHECK(m >= 0.0);

  std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  std::vector<std::vector<Vector>> pp, pa;
  std::vector<std::string> pid;
  for (std::size_t k : perm) {
    pp.push_back(pred[k]);
    pa.push_back(actual[k]);
    pid.push_back(ids[k]);
  }
  const ForecastReport q = evaluate_mae(pid, pp, pa);
  for (std::size_t t = 0; t < 9; ++t) {
    CHECK(q.per_date_mae[t] == doctest::Approx(r.per_date_mae[t]).epsilon(1e-14));
  }

  // Zero predictor: MAE equals the mean absolute target.
  std::vector<std::vector<Vector>> zeros(6, std::vector<Vector>(9, Vector{0.0}));
  const ForecastReport z = evaluate_mae(ids, zeros, actual);
  double mean_abs = 0.0;
  for (const auto& s : actual) {
    for (const auto& v : s) mean_abs += std::abs(v[0]);
  }
  mean_abs /= 54.0;
  CHECK(mean_over(z.per_date_mae, 0, 9) == doctest::Approx(mean_abs).epsilon(1e-13));
}

TEST_CASE("short/long experiment") {
  const Dataset ds = make_synthetic(SyntheticSpec{2, 2, 30}, 3);
  ExperimentConfig cfg;
  cfg.short_len = 8;
  cfg.long_len = 16;
  cfg.horizon = 10;
  cfg.hidden_dim = 4;
  cfg.training.epochs = 5;
  const ExperimentResult r = run_short_long_experiment(ds, cfg);
  CHECK(r.short_case.per_date_mae.size() == 10);
  CHECK(r.long_case.per_date_mae.size() == 10);
  CHECK_FALSE(r.short_params == r.long_params);

  std::ostringstream csv;
  write_paired_mae_csv(csv, r);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "date_index,mae_short,mae_long");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 10);

  cfg.long_len = 25;
  try {
    run_short_long_experiment(ds, cfg);
    FAIL("expected a length error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("35") != std::string::npos);
    CHECK(msg.find("30") != std::string::npos);
  }
}

TEST_CASE("report CSVs") {
  const ForecastReport r =
      evaluate_mae({"a", "b"}, scalars({{0, 0}, {1, 1}}), scalars({{1, -1}, {1, 1}}));
  std::ostringstream mae, seq, preds;
  write_mae_csv(mae, r);
  CHECK(mae.str() == "date_index,mae\n1,0.5\n2,0.5\n");
  write_sequence_mae_csv(seq, r);
  CHECK(seq.str() == "id,mae\na,1\nb,0\n");
  write_predictions_csv(preds, {"a"}, scalars({{0.25, -0.5}}));
  CHECK(preds.str() == "id,date_index,predicted\na,1,0.25\na,2,-0.5\n");
}
