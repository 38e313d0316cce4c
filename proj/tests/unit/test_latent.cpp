#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <latentlstm/latent.hpp>

#include "oracles.hpp"

using namespace latentlstm;

namespace {

Matrix random_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(seed);
  Matrix m(rows, cols);
  for (double& x : m.span()) x = testing::uniform(rng, -1, 1);
  return m;
}

// Squared reconstruction error of the rows from d principal components.
double reconstruction_error(const Matrix& x, std::size_t d) {
  const PcaResult p = pca(x, d);
  double err = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double xhat = p.mean[c];
      for (std::size_t k = 0; k < d; ++k) xhat += p.projections(i, k) * p.components[k][c];
      err += (x(i, c) - xhat) * (x(i, c) - xhat);
    }
  }
  return err;
}

LatentEmbedding embedding_of(const Matrix& m) {
  LatentEmbedding e;
  for (std::size_t i = 0; i < m.rows(); ++i) e.ids.push_back("e" + std::to_string(i));
  e.vectors = m;
  return e;
}

// Sequences sin(t/4 + phase_k) with increasing phases.
Dataset phase_family(std::size_t n, std::size_t steps) {
  Dataset ds;
  for (std::size_t k = 0; k < n; ++k) {
    ds.ids.push_back("p" + std::to_string(k));
    const double phase = 2.5 * static_cast<double>(k) / static_cast<double>(n);
    std::vector<Vector> seq;
    for (std::size_t t = 0; t < steps; ++t) {
      seq.push_back(Vector{std::sin(0.25 * static_cast<double>(t) + phase) - std::sin(phase)});
    }
    ds.targets.push_back(std::move(seq));
  }
  for (std::size_t t = 0; t < steps; ++t) ds.dates.push_back(std::to_string(t));
  return ds;
}

}  // namespace

TEST_CASE("symmetric_eigen") {
  const EigenDecomposition e = symmetric_eigen(Matrix{{2, 1}, {1, 2}});
  CHECK(e.values[0] == doctest::Approx(3.0));
  CHECK(e.values[1] == doctest::Approx(1.0));
  CHECK(e.vectors[0][0] == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK_THROWS_AS(symmetric_eigen(Matrix(2, 3)), DimensionError);

  Matrix a = random_matrix(5, 20, 20);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
  }
  const EigenDecomposition big = symmetric_eigen(a);
  for (std::size_t k = 0; k < 20; ++k) {
    const Vector av = matvec(a, big.vectors[k]);
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(std::abs(av[i] - big.values[k] * big.vectors[k][i]) < 1e-10);
    }
    if (k > 0) CHECK(big.values[k] <= big.values[k - 1]);
  }
}

TEST_CASE("pca collinear points") {
  const PcaResult p = pca(Matrix{{0, 0}, {1, 1}, {2, 2}}, 1);
  CHECK(p.components[0][0] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(p.components[0][1] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(p.explained_ratio(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pca of identical points") {
  const PcaResult p = pca(Matrix{{1, 2, 3}, {1, 2, 3}, {1, 2, 3}}, 2);
  for (double v : p.explained_variance) CHECK(v == 0.0);
  CHECK(p.components.size() == 2);
  CHECK(p.explained_ratio(0) == 0.0);
}

TEST_CASE("pca reconstruction error shrinks to zero") {
  const Matrix x = random_matrix(10, 10, 4);
  double prev = INFINITY;
  for (std::size_t d = 1; d <= 4; ++d) {
    const double err = reconstruction_error(x, d);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-20);
  // Residual after d components equals (N-1) times the dropped variance.
  const PcaResult all = pca(x, 4);
  CHECK(reconstruction_error(x, 2) ==
        doctest::Approx(9.0 * (all.explained_variance[2] + all.explained_variance[3]))
            .epsilon(1e-10));
}

TEST_CASE("pca invariants") {
  const Matrix x = random_matrix(3, 12, 6);
  const PcaResult p = pca(x, 6);
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = 0; b < 6; ++b) {
      CHECK(std::abs(dot(p.components[a], p.components[b]) - (a == b ? 1.0 : 0.0)) < 1e-10);
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < 12; ++i) mean += p.projections(i, a);
    CHECK(std::abs(mean / 12.0) < 1e-10);
    if (a > 0) CHECK(p.explained_variance[a] <= p.explained_variance[a - 1]);
    CHECK(p.explained_variance[a] >= 0.0);

    // Sign convention.
    std::size_t arg = 0;
    for (std::size_t c = 1; c < 6; ++c) {
      if (std::abs(p.components[a][c]) > std::abs(p.components[a][arg])) arg = c;
    }
    CHECK(p.components[a][arg] > 0.0);
  }
  double sum = 0.0;
  for (double v : p.explained_variance) sum += v;
  CHECK(sum == doctest::Approx(p.total_variance).epsilon(1e-8));

  CHECK_THROWS(pca(x, 0));
  CHECK_THROWS(pca(x, 7));
  CHECK_THROWS(pca(Matrix{{1, 2}}, 1));
}

TEST_CASE("pearson") {
  CHECK(pearson(Vector{1, 2, 3}, Vector{2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(Vector{1, 2, 3}, Vector{-1, -2, -3}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pearson(Vector{1, 2, 3}, Vector{1, 2, 4}) ==
        doctest::Approx(0.9819805060619656).epsilon(1e-13));
  CHECK_THROWS_AS(pearson(Vector{1, 1, 1}, Vector{1, 2, 3}), UndefinedCorrelationError);
  CHECK_THROWS_AS(pearson(Vector{1, 2}, Vector{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(pearson(Vector{1}, Vector{1}), DimensionError);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Vector a(15), b(15);
    for (double& v : a) v = testing::uniform(rng, -3, 3);
    for (double& v : b) v = testing::uniform(rng, -3, 3);
    const double r = pearson(a, b);
    CHECK(r == pearson(b, a));
    CHECK(std::abs(r) <= 1.0);
    const double alpha = testing::uniform(rng, 0.1, 10), beta = testing::uniform(rng, -5, 5);
    Vector scaled(a);
    for (double& v : scaled) v = alpha * v + beta;
    CHECK(pearson(scaled, b) == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("spearman") {
  const std::vector<double> a{1, 2, 2, 3}, b{10, 20, 30, 40};
  // Average ranks {1, 2.5, 2.5, 4} against {1, 2, 3, 4}.
  CHECK(spearman(a, b) == doctest::Approx(pearson(Vector{1, 2.5, 2.5, 4}, Vector{1, 2, 3, 4})));
  const std::vector<double> c{0.1, 5, 7, 100}, d{-3, -2, 8, 9};
  CHECK(spearman(c, d) == doctest::Approx(1.0));
}

TEST_CASE("correlation_map") {
  Dataset ds = phase_family(4, 20);
  ds.ids.push_back("flat");
  ds.targets.push_back(std::vector<Vector>(20, Vector{0.0}));
  const auto corr = correlation_map(ds, "p1");
  REQUIRE(corr.size() == 5);
  CHECK(corr[1].id == "p1");
  CHECK(*corr[1].value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(corr[4].value.has_value());
  CHECK_THROWS(correlation_map(ds, "missing"));

  SyntheticSpec clean;
  clean.noise = 0.0;
  const Dataset syn = make_synthetic(clean, 8);
  const auto syn_corr = correlation_map(syn, syn.ids[0]);
  for (std::size_t k = 0; k < 5; ++k) CHECK(*syn_corr[k].value == doctest::Approx(1.0));
}

TEST_CASE("neighbors") {
  Matrix m{{0, 0}, {3, 0}, {1, 0}, {0, 0}, {-1, 0}};
  const LatentEmbedding e = embedding_of(m);
  CHECK(neighbors(e, "e0", 0).empty());
  const auto n = neighbors(e, "e0", 3);
  REQUIRE(n.size() == 3);
  CHECK(n[0].id == "e3");  // duplicate, distance 0
  CHECK(n[0].distance == 0.0);
  CHECK(n[1].id == "e2");  // tie with e4 goes to the lower index
  CHECK(n[2].id == "e4");
  CHECK_THROWS(neighbors(e, "e0", 5));
  CHECK_THROWS(neighbors(e, "zz", 1));
}

TEST_CASE("neighbors are invariant under rotation") {
  const Matrix x = random_matrix(31, 15, 5);
  Matrix s = random_matrix(32, 5, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < i; ++j) s(i, j) = s(j, i);
  }
  const EigenDecomposition q = symmetric_eigen(s);  // orthonormal basis
  Matrix rotated(15, 5);
  for (std::size_t i = 0; i < 15; ++i) {
    for (std::size_t k = 0; k < 5; ++k) rotated(i, k) = dot(x.row_vector(i), q.vectors[k]);
  }
  const auto a = neighbors(embedding_of(x), "e4", 6);
  const auto b = neighbors(embedding_of(rotated), "e4", 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].distance == doctest::Approx(b[i].distance).epsilon(1e-12));
  }
}

TEST_CASE("distance_correlation_stat") {
  const Dataset ds = phase_family(8, 40);
  // Latent coordinate = phase: nearby phases are the most correlated.
  Matrix phase(8, 1);
  for (std::size_t k = 0; k < 8; ++k) phase(k, 0) = static_cast<double>(k);
  const double stat = distance_correlation_stat(embedding_of(phase), ds);
  CHECK(stat > 0.9);
  CHECK(stat <= 1.0);

  // Independent random embedding and targets.
  std::mt19937_64 rng(77);
  Dataset noise;
  for (std::size_t k = 0; k < 50; ++k) {
    noise.ids.push_back("n" + std::to_string(k));
    std::vector<Vector> seq{Vector{0.0}};
    for (int t = 1; t < 30; ++t) seq.push_back(Vector{testing::uniform(rng, -1, 1)});
    noise.targets.push_back(std::move(seq));
  }
  for (int t = 0; t < 30; ++t) noise.dates.push_back(std::to_string(t));
  CHECK(std::abs(distance_correlation_stat(embedding_of(random_matrix(78, 50, 8)), noise)) < 0.2);

  const Dataset three = phase_family(2, 10);
  CHECK_THROWS(distance_correlation_stat(embedding_of(Matrix(2, 1)), three));
}

TEST_CASE("silhouette_score") {
  const Matrix pts{{0, 0}, {0, 1}, {10, 0}, {10, 1}};
  const double s = silhouette_score(pts, {"a", "a", "b", "b"});
  CHECK(s > 0.8);
  CHECK(silhouette_score(pts, {"a", "b", "a", "b"}) < 0.0);
  // Singletons contribute 0.
  CHECK(silhouette_score(Matrix{{0}, {1}, {5}}, {"a", "a", "b"}) > 0.0);
  CHECK_THROWS(silhouette_score(pts, {"a", "a", "a", "a"}));
  CHECK_THROWS(silhouette_score(pts, {"a"}));
}

TEST_CASE("neighbor label agreement") {
  LatentEmbedding e = embedding_of(Matrix{{0}, {0.1}, {0.2}, {5}, {5.1}, {5.2}});
  e.labels = {"a", "a", "a", "b", "b", "b"};
  CHECK(neighbor_label_agreement(e, 2) == 1.0);
  e.labels = {"a", "b", "a", "b", "a", "b"};
  CHECK(neighbor_label_agreement(e, 2) < 0.5);
}

TEST_CASE("latent CSVs") {
  LatentEmbedding e = embedding_of(Matrix{{1, 2, 3}, {4, 5, 6}, {0, 1, 0}});
  e.labels = {"x", "y", "x"};
  std::ostringstream emb;
  write_embedding_csv(emb, e);
  CHECK(emb.str() == "id,label,h0_0,h0_1,h0_2\ne0,x,1,2,3\ne1,y,4,5,6\ne2,x,0,1,0\n");

  const PcaResult p = pca(e, 2);
  std::ostringstream plot;
  write_plot_csv(plot, e, p, nullptr);
  std::istringstream in(plot.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "id,label,pc1,pc2,corr_to_target");
  std::getline(in, line);
  CHECK(line.back() == ',');  // empty correlation column

  CHECK_THROWS(LatentEmbedding::from_params(ModelParams::zeros(ModelConfig{1, 2, 1, 3}),
                                            {"a", "b"}));
}
