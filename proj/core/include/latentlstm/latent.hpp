// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latentlstm/data.hpp"
#include "latentlstm/model.hpp"
#include "latentlstm/numerics.hpp"

namespace latentlstm {

/// Correlation is undefined because an input has zero variance.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

/// Learned initial states, one row per sequence.
struct LatentEmbedding {
  std::vector<std::string> ids;
  Matrix vectors;                   // N x H
  std::vector<std::string> labels;  // empty or one per id

  static LatentEmbedding from_params(const ModelParams& params,
                                     std::vector<std::string> ids,
                                     std::vector<std::string> labels = {});

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t index_of(std::string_view id) const;
  void validate() const;
};

struct PcaResult {
  std::vector<Vector> components;       // orthonormal, length H each
  std::vector<double> explained_variance;  // descending, >= 0
  Matrix projections;                   // N x d
  Vector mean;                          // H
  double total_variance = 0.0;          // trace of the sample covariance

  /// explained_variance[i] / total_variance, or 0 for zero-variance data.
  double explained_ratio(std::size_t i) const;
};

struct EigenDecomposition {
  std::vector<double> values;  // descending
  std::vector<Vector> vectors;
};

/// Cyclic Jacobi on a symmetric matrix. Eigenvalues come back sorted in
/// descending order (stable on ties); each vector's largest-magnitude
/// coordinate is positive.
EigenDecomposition symmetric_eigen(const Matrix& symmetric);

/// Principal components of the mean-centered rows (sample covariance with
/// divisor N-1).
PcaResult pca(const Matrix& data, std::size_t d);
inline PcaResult pca(const LatentEmbedding& embedding, std::size_t d) {
  return pca(embedding.vectors, d);
}

/// Sample Pearson correlation, clamped to [-1, 1].
double pearson(std::span<const double> a, std::span<const double> b);
inline double pearson(const Vector& a, const Vector& b) {
  return pearson(a.span(), b.span());
}

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

struct Correlation {
  std::string id;
  std::optional<double> value;  // nullopt when a sequence is constant
};

/// Pearson correlation of every sequence's targets (all components,
/// flattened) with the target sequence's, in dataset order.
std::vector<Correlation> correlation_map(const Dataset& dataset, std::string_view target_id);

struct Neighbor {
  std::string id;
  std::size_t index = 0;
  double distance = 0.0;
};

/// The `k` rows closest to `target_id` in the full latent space, excluding
/// the target itself; ascending distance, ties to the lowest index.
std::vector<Neighbor> neighbors(const LatentEmbedding& embedding, std::string_view target_id,
                                std::size_t k);

/// Spearman correlation over all pairs between latent distance and target
/// dissimilarity (1 - Pearson). Positive when nearby states reconstruct
/// correlated series.
double distance_correlation_stat(const LatentEmbedding& embedding, const Dataset& dataset);

/// Mean silhouette coefficient of the rows under `labels`. Members of
/// singleton clusters score 0.
double silhouette_score(const Matrix& points, const std::vector<std::string>& labels);

/// Fraction of rows whose `k` nearest neighbours are mostly (strictly more
/// than half) of the same label.
double neighbor_label_agreement(const LatentEmbedding& embedding, std::size_t k);

/// `id,label,h0_0,...,h0_{H-1}`
void write_embedding_csv(std::ostream& out, const LatentEmbedding& embedding);
/// `id,label,pc1,pc2,corr_to_target`; pc2 is blank when only one component
/// exists and corr_to_target is blank without correlations.
void write_plot_csv(std::ostream& out, const LatentEmbedding& embedding, const PcaResult& pca,
                    const std::vector<Correlation>* correlations);

}  // namespace latentlstm
