// SPDX-License-Identifier: Apache-2.0
#include "latentlstm/latent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace latentlstm {
namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void rotate(Matrix& a, std::size_t i, std::size_t j, std::size_t k, std::size_t l, double s,
            double tau) {
  const double g = a(i, j);
  const double h = a(k, l);
  a(i, j) = g - s * (h + g * tau);
  a(k, l) = h + s * (g - h * tau);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> flatten(const std::vector<Vector>& seq) {
  std::vector<double> out;
  for (const Vector& v : seq) out.insert(out.end(), v.begin(), v.end());
  return out;
}

double row_distance(const Matrix& m, std::size_t a, std::size_t b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const double d = m(a, c) - m(b, c);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

LatentEmbedding LatentEmbedding::from_params(const ModelParams& params,
                                             std::vector<std::string> ids,
                                             std::vector<std::string> labels) {
  LatentEmbedding e{std::move(ids), params.h0_table, std::move(labels)};
  e.validate();
  return e;
}

std::size_t LatentEmbedding::index_of(std::string_view id) const {
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] == id) return k;
  }
  throw Error("unknown sequence id '" + std::string(id) + "'");
}

void LatentEmbedding::validate() const {
  if (vectors.rows() != ids.size()) {
    throw DimensionError("embedding: " + std::to_string(ids.size()) + " ids for " +
                         std::to_string(vectors.rows()) + " vectors");
  }
  if (!labels.empty() && labels.size() != ids.size()) {
    throw DimensionError("embedding: label count does not match id count");
  }
}

double PcaResult::explained_ratio(std::size_t i) const {
  return total_variance > 0.0 ? explained_variance.at(i) / total_variance : 0.0;
}

EigenDecomposition symmetric_eigen(const Matrix& symmetric) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) {
    throw DimensionError("symmetric_eigen: matrix " + symmetric.shape_string() +
                         " is not square");
  }
  Matrix a = symmetric;
  Matrix v = Matrix::identity(n);
  std::vector<double> d(n);
  std::vector<double> b(n);
  std::vector<double> z(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i] = b[i] = a(i, i);

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += std::abs(a(p, q));
    }
    if (off == 0.0) break;
    const double threshold = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double g = 100.0 * std::abs(a(p, q));
        // Off-diagonal entries below rounding of both diagonals are dropped.
        if (sweep > 3 && std::abs(d[p]) + g == std::abs(d[p]) &&
            std::abs(d[q]) + g == std::abs(d[q])) {
          a(p, q) = 0.0;
          continue;
        }
        if (std::abs(a(p, q)) <= threshold) continue;

        double h = d[q] - d[p];
        double t = 0.0;
        if (std::abs(h) + g == std::abs(h)) {
          t = a(p, q) / h;
        } else {
          const double theta = 0.5 * h / a(p, q);
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        h = t * a(p, q);
        z[p] -= h;
        z[q] += h;
        d[p] -= h;
        d[q] += h;
        a(p, q) = 0.0;
        for (std::size_t j = 0; j < p; ++j) rotate(a, j, p, j, q, s, tau);
        for (std::size_t j = p + 1; j < q; ++j) rotate(a, p, j, j, q, s, tau);
        for (std::size_t j = q + 1; j < n; ++j) rotate(a, p, j, q, j, s, tau);
        for (std::size_t j = 0; j < n; ++j) rotate(v, j, p, j, q, s, tau);
      }
    }
    for (std::size_t p = 0; p < n; ++p) {
      b[p] += z[p];
      d[p] = b[p];
      z[p] = 0.0;
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return d[x] > d[y]; });

  EigenDecomposition out;
  for (std::size_t idx : order) {
    Vector vec(n);
    std::size_t arg = 0;
    for (std::size_t r = 0; r < n; ++r) {
      vec[r] = v(r, idx);
      if (std::abs(vec[r]) > std::abs(vec[arg])) arg = r;
    }
    if (vec[arg] < 0.0) {
      for (double& x : vec) x = -x;
    }
    out.values.push_back(d[idx]);
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

PcaResult pca(const Matrix& data, std::size_t d) {
  const std::size_t n = data.rows();
  const std::size_t h = data.cols();
  if (n < 2) throw Error("pca: needs at least 2 points, got " + std::to_string(n));
  if (d < 1 || d > std::min(n, h)) {
    throw Error("pca: d = " + std::to_string(d) + " outside [1, " +
                std::to_string(std::min(n, h)) + "]");
  }

  PcaResult r;
  r.mean = Vector(h);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < h; ++c) r.mean[c] += data(i, c);
  }
  for (double& m : r.mean) m /= static_cast<double>(n);

  Matrix centered(n, h);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < h; ++c) centered(i, c) = data(i, c) - r.mean[c];
  }
  Matrix cov(h, h);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t p = 0; p < h; ++p) {
    for (std::size_t q = p; q < h; ++q) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += centered(i, p) * centered(i, q);
      cov(p, q) = cov(q, p) = acc / denom;
    }
  }
  for (std::size_t p = 0; p < h; ++p) r.total_variance += cov(p, p);

  EigenDecomposition eig = symmetric_eigen(cov);
  r.projections = Matrix(n, d);
  for (std::size_t k = 0; k < d; ++k) {
    r.explained_variance.push_back(std::max(0.0, eig.values[k]));
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t c = 0; c < h; ++c) acc += centered(i, c) * eig.vectors[k][c];
      r.projections(i, k) = acc;
    }
    r.components.push_back(std::move(eig.vectors[k]));
  }
  return r;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("pearson: length mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw DimensionError("pearson: needs at least 2 samples");
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw UndefinedCorrelationError("pearson: correlation undefined for a constant input");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("spearman: length mismatch");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

std::vector<Correlation> correlation_map(const Dataset& dataset, std::string_view target_id) {
  const std::size_t target = dataset.index_of(target_id);
  const auto ref = flatten(dataset.targets[target]);
  std::vector<Correlation> out;
  out.reserve(dataset.size());
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    Correlation c{dataset.ids[k], std::nullopt};
    try {
      c.value = pearson(ref, flatten(dataset.targets[k]));
    } catch (const UndefinedCorrelationError&) {
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Neighbor> neighbors(const LatentEmbedding& embedding, std::string_view target_id,
                                std::size_t k) {
  embedding.validate();
  const std::size_t target = embedding.index_of(target_id);
  const std::size_t n = embedding.size();
  if (k >= n) {
    throw Error("neighbors: k = " + std::to_string(k) + " must be below N = " +
                std::to_string(n));
  }
  std::vector<Neighbor> all;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == target) continue;
    all.push_back({embedding.ids[j], j, row_distance(embedding.vectors, target, j)});
  }
  std::stable_sort(all.begin(), all.end(), [](const Neighbor& x, const Neighbor& y) {
    return x.distance < y.distance;
  });
  all.resize(k);
  return all;
}

double distance_correlation_stat(const LatentEmbedding& embedding, const Dataset& dataset) {
  embedding.validate();
  const std::size_t n = embedding.size();
  if (n < 3) throw Error("distance_correlation_stat: needs N >= 3, got " + std::to_string(n));
  if (dataset.size() != n) {
    throw DimensionError("distance_correlation_stat: embedding has " + std::to_string(n) +
                         " rows but dataset has " + std::to_string(dataset.size()));
  }
  std::vector<std::vector<double>> series;
  series.reserve(n);
  for (std::size_t k = 0; k < n; ++k) series.push_back(flatten(dataset.targets[k]));

  std::vector<double> dist;
  std::vector<double> dissim;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      dist.push_back(row_distance(embedding.vectors, j, k));
      dissim.push_back(1.0 - pearson(series[j], series[k]));
    }
  }
  return spearman(dist, dissim);
}

double silhouette_score(const Matrix& points, const std::vector<std::string>& labels) {
  const std::size_t n = points.rows();
  if (labels.size() != n) throw DimensionError("silhouette_score: label count mismatch");
  std::vector<std::string> distinct;
  for (const auto& l : labels) {
    if (std::find(distinct.begin(), distinct.end(), l) == distinct.end()) distinct.push_back(l);
  }
  if (distinct.size() < 2) throw Error("silhouette_score: needs at least 2 clusters");

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sum(distinct.size(), 0.0);
    std::vector<std::size_t> count(distinct.size(), 0);
    std::size_t own = 0;
    for (std::size_t c = 0; c < distinct.size(); ++c) {
      if (distinct[c] == labels[i]) own = c;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto c = static_cast<std::size_t>(
          std::find(distinct.begin(), distinct.end(), labels[j]) - distinct.begin());
      sum[c] += row_distance(points, i, j);
      ++count[c];
    }
    if (count[own] == 0) continue;  // singleton cluster
    const double a = sum[own] / static_cast<double>(count[own]);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < distinct.size(); ++c) {
      if (c != own && count[c] > 0) b = std::min(b, sum[c] / static_cast<double>(count[c]));
    }
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

double neighbor_label_agreement(const LatentEmbedding& embedding, std::size_t k) {
  embedding.validate();
  if (embedding.labels.empty()) throw Error("neighbor_label_agreement: embedding has no labels");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    const auto near = neighbors(embedding, embedding.ids[i], k);
    std::size_t same = 0;
    for (const auto& nb : near) same += embedding.labels[nb.index] == embedding.labels[i];
    if (2 * same > near.size()) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(embedding.size());
}

void write_embedding_csv(std::ostream& out, const LatentEmbedding& embedding) {
  embedding.validate();
  out << "id,label";
  for (std::size_t c = 0; c < embedding.vectors.cols(); ++c) out << ",h0_" << c;
  out << '\n';
  for (std::size_t k = 0; k < embedding.size(); ++k) {
    out << embedding.ids[k] << ',' << (embedding.labels.empty() ? "" : embedding.labels[k]);
    for (double x : embedding.vectors.row(k)) out << ',' << fmt(x);
    out << '\n';
  }
}

void write_plot_csv(std::ostream& out, const LatentEmbedding& embedding, const PcaResult& pca,
                    const std::vector<Correlation>* correlations) {
  embedding.validate();
  if (pca.projections.rows() != embedding.size()) {
    throw DimensionError("plot CSV: projection rows do not match the embedding");
  }
  if (correlations && correlations->size() != embedding.size()) {
    throw DimensionError("plot CSV: correlation count does not match the embedding");
  }
  out << "id,label,pc1,pc2,corr_to_target\n";
  for (std::size_t k = 0; k < embedding.size(); ++k) {
    out << embedding.ids[k] << ',' << (embedding.labels.empty() ? "" : embedding.labels[k])
        << ',' << fmt(pca.projections(k, 0)) << ',';
    if (pca.projections.cols() > 1) out << fmt(pca.projections(k, 1));
    out << ',';
    if (correlations && (*correlations)[k].value) out << fmt(*(*correlations)[k].value);
    out << '\n';
  }
}

}  // namespace latentlstm
