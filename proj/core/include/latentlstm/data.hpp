// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latentlstm/numerics.hpp"

namespace latentlstm {

/// Malformed or inconsistent input data. `line()` is 1-based, 0 when the
/// error is not tied to a line.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A pipeline stage produced nothing to work with.
class EmptyResultError : public Error {
 public:
  using Error::Error;
};

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD; nullopt when malformed or not a calendar date.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& date);

/// One raw price series. A nullopt price marks a missing observation.
struct SeriesRecord {
  std::string id;
  std::vector<Date> dates;
  std::vector<std::optional<double>> prices;

  bool complete() const;
};

/// Aligned training targets: N sequences of T steps, each step a vector of
/// `dim()` values. Step 0 of every sequence is exactly zero.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<std::string> dates;  // ISO-8601, one per step
  std::vector<std::vector<Vector>> targets;
  std::vector<std::string> labels;  // optional, empty or one per id

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t length() const noexcept {
    return targets.empty() ? 0 : targets.front().size();
  }
  std::size_t dim() const noexcept {
    return length() == 0 ? 0 : targets.front().front().size();
  }
  bool has_labels() const noexcept { return !labels.empty(); }

  std::span<const Vector> sequence(std::size_t k) const { return targets.at(k); }
  /// First `dim`-th component of sequence k as a flat series.
  Vector channel(std::size_t k, std::size_t component = 0) const;

  /// Throws DataError unless the shape invariants hold.
  void validate() const;
  /// Index of `id`; throws DataError when absent.
  std::size_t index_of(std::string_view id) const;
  /// First `len` steps of every sequence.
  Dataset prefix(std::size_t len) const;
  /// Content hash (FNV-1a 64 over ids, dates and target bit patterns) as
  /// 16 hex digits.
  std::string fingerprint() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Reads the `date,id,adj_close` CSV. Records appear in first-seen id order,
/// each sorted by date. Empty, `NA`, `NaN` or `null` prices are missing.
std::vector<SeriesRecord> load_csv(const std::filesystem::path& path);
std::vector<SeriesRecord> parse_csv(std::string_view text);

/// Trailing moving average; output[j] is the mean of prices[j .. j+window).
Vector moving_average(std::span<const double> prices, std::size_t window);

/// Dates on which at least `coverage` of the records carry a value, sorted.
std::vector<Date> trading_axis(const std::vector<SeriesRecord>& records,
                               double coverage = 0.9);

/// Keeps records that have a value on every axis date, restricted to the
/// axis. May return an empty list.
std::vector<SeriesRecord> exclude_incomplete(
    const std::vector<SeriesRecord>& records, const std::vector<Date>& axis);

/// Relative change against the first price: (p_t - p_1) / p_1.
Vector to_targets(std::span<const double> prices);

struct PipelineOptions {
  std::size_t window = 5;
  double coverage = 0.9;
};

struct PipelineResult {
  Dataset dataset;
  std::size_t input_count = 0;
  std::size_t excluded_count = 0;
};

/// Exclusion on the raw calendar, then smoothing, then relative change.
/// Throws EmptyResultError when no record survives.
PipelineResult build_dataset(const std::vector<SeriesRecord>& records,
                             const PipelineOptions& options = {});

enum class SyntheticKind {
  kMixture,      // well-separated saturating trends, log-level 1.2-2.0
  kDampedTrend,  // smaller saturating trends, log-level 0.3-0.6
};

struct SyntheticSpec {
  std::size_t clusters = 4;
  std::size_t per_cluster = 5;
  std::size_t length = 60;
  double noise = 0.01;  // std-dev of daily log-price noise
  SyntheticKind kind = SyntheticKind::kMixture;
  std::size_t window = 5;

  void validate() const;
};

/// Deterministic clustered price series pushed through the same smoothing
/// and relative-change steps as real data. `labels` holds the cluster of
/// each sequence ("c0", "c1", ...).
Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

std::string_view to_string(SyntheticKind kind);
SyntheticKind parse_synthetic_kind(std::string_view text);

// Dataset JSON: {schema_version, ids, dates, dim, targets, meta}.
inline constexpr std::string_view kDatasetSchemaVersion = "1";
std::string dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(std::string_view text);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace latentlstm
