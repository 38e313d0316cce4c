// SPDX-License-Identifier: Apache-2.0
#include "latentlstm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <numbers>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "io_util.hpp"
#include "portable_random.hpp"

namespace latentlstm {
namespace {

using Json = nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

std::optional<double> parse_double(std::string_view s) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  const std::uint64_t len = s.size();
  h = fnv1a(h, &len, sizeof len);
  return fnv1a(h, s.data(), s.size());
}

// Business days starting 2019-01-02; only used to label synthetic steps.
std::vector<std::string> synthetic_dates(std::size_t count) {
  using namespace std::chrono;
  std::vector<std::string> out;
  out.reserve(count);
  sys_days day = sys_days{year{2019} / January / 2};
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) out.push_back(format_date(Date{day}));
    day += days{1};
  }
  return out;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto digits = [&](std::string_view part, auto& out) {
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc{} && ptr == part.data() + part.size();
  };
  if (!digits(text.substr(0, 4), y) || !digits(text.substr(5, 2), m) ||
      !digits(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()),
                static_cast<unsigned>(date.day()));
  return buf;
}

bool SeriesRecord::complete() const {
  return std::all_of(prices.begin(), prices.end(),
                     [](const auto& p) { return p.has_value(); });
}

Vector Dataset::channel(std::size_t k, std::size_t component) const {
  const auto& seq = targets.at(k);
  Vector out(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) out[t] = seq[t][component];
  return out;
}

void Dataset::validate() const {
  if (ids.empty()) throw DataError("dataset: no sequences");
  if (targets.size() != ids.size()) {
    throw DataError("dataset: " + std::to_string(ids.size()) + " ids but " +
                    std::to_string(targets.size()) + " target sequences");
  }
  if (!labels.empty() && labels.size() != ids.size()) {
    throw DataError("dataset: label count does not match id count");
  }
  const std::size_t len = length();
  const std::size_t d = dim();
  if (len == 0 || d == 0) throw DataError("dataset: empty target sequences");
  if (dates.size() != len) {
    throw DataError("dataset: " + std::to_string(dates.size()) +
                    " dates for sequences of length " + std::to_string(len));
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (targets[k].size() != len) {
      throw DataError("dataset: sequence '" + ids[k] + "' has length " +
                      std::to_string(targets[k].size()) + ", expected " +
                      std::to_string(len));
    }
    for (const Vector& v : targets[k]) {
      if (v.size() != d) throw DataError("dataset: ragged target dims in '" + ids[k] + "'");
      if (!v.all_finite()) throw DataError("dataset: non-finite target in '" + ids[k] + "'");
    }
    for (double x : targets[k][0]) {
      if (x != 0.0) {
        throw DataError("dataset: first target of '" + ids[k] + "' is not zero");
      }
    }
  }
  std::unordered_map<std::string_view, std::size_t> seen;
  for (const auto& id : ids) {
    if (!seen.emplace(id, 0).second) throw DataError("dataset: duplicate id '" + id + "'");
  }
}

std::size_t Dataset::index_of(std::string_view id) const {
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] == id) return k;
  }
  throw DataError("unknown sequence id '" + std::string(id) + "'");
}

Dataset Dataset::prefix(std::size_t len) const {
  if (len < 1 || len > length()) {
    throw DataError("dataset: prefix of " + std::to_string(len) +
                    " steps requested from sequences of length " +
                    std::to_string(length()));
  }
  Dataset out{ids, {dates.begin(), dates.begin() + static_cast<std::ptrdiff_t>(len)},
              {}, labels};
  out.targets.reserve(targets.size());
  for (const auto& seq : targets) {
    out.targets.emplace_back(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(len));
  }
  return out;
}

std::string Dataset::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t counts[3] = {ids.size(), length(), dim()};
  h = fnv1a(h, counts, sizeof counts);
  for (const auto& id : ids) h = fnv1a(h, id);
  for (const auto& d : dates) h = fnv1a(h, d);
  for (const auto& seq : targets) {
    for (const Vector& v : seq) h = fnv1a(h, v.data(), v.size() * sizeof(double));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<SeriesRecord> parse_csv(std::string_view text) {
  if (text.size() >= 3 && std::memcmp(text.data(), "\xEF\xBB\xBF", 3) == 0) {
    text.remove_prefix(3);
  }

  std::vector<SeriesRecord> records;
  std::unordered_map<std::string, std::size_t> by_id;
  // (record, date) -> line, for duplicate detection and error messages.
  std::vector<std::map<std::chrono::sys_days, std::size_t>> seen;

  int col_date = -1;
  int col_id = -1;
  int col_price = -1;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t rows = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    if (!have_header) {
      if (fields.size() != 3) {
        throw DataError("line " + std::to_string(line_no) +
                        ": header must have columns date,id,adj_close", line_no);
      }
      for (int i = 0; i < 3; ++i) {
        if (fields[i] == "date") col_date = i;
        else if (fields[i] == "id") col_id = i;
        else if (fields[i] == "adj_close") col_price = i;
      }
      if (col_date < 0 || col_id < 0 || col_price < 0) {
        throw DataError("line " + std::to_string(line_no) +
                        ": header must have columns date,id,adj_close", line_no);
      }
      have_header = true;
      continue;
    }

    if (fields.size() != 3) {
      throw DataError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                      std::to_string(fields.size()), line_no);
    }
    const auto date = parse_date(fields[col_date]);
    if (!date) {
      throw DataError("line " + std::to_string(line_no) + ": invalid date '" +
                      std::string(fields[col_date]) + "'", line_no);
    }
    const std::string id(fields[col_id]);
    if (id.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": empty id", line_no);
    }
    std::optional<double> price;
    if (!is_missing_token(fields[col_price])) {
      price = parse_double(fields[col_price]);
      if (!price || !std::isfinite(*price)) {
        throw DataError("line " + std::to_string(line_no) + ": non-numeric price '" +
                        std::string(fields[col_price]) + "'", line_no);
      }
      if (*price <= 0.0) {
        throw DataError("line " + std::to_string(line_no) +
                        ": price must be positive", line_no);
      }
    }

    auto [it, inserted] = by_id.emplace(id, records.size());
    if (inserted) {
      records.push_back(SeriesRecord{id, {}, {}});
      seen.emplace_back();
    }
    const std::size_t r = it->second;
    const auto [dup, fresh] = seen[r].emplace(std::chrono::sys_days{*date}, line_no);
    if (!fresh) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate row for (" + id +
                      ", " + format_date(*date) + "), first seen on line " +
                      std::to_string(dup->second), line_no);
    }
    records[r].dates.push_back(*date);
    records[r].prices.push_back(price);
    ++rows;
  }

  if (!have_header || rows == 0) throw DataError("empty CSV: no data rows");

  for (auto& rec : records) {
    std::vector<std::size_t> order(rec.dates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::chrono::sys_days{rec.dates[a]} < std::chrono::sys_days{rec.dates[b]};
    });
    SeriesRecord sorted{rec.id, {}, {}};
    for (std::size_t i : order) {
      sorted.dates.push_back(rec.dates[i]);
      sorted.prices.push_back(rec.prices[i]);
    }
    rec = std::move(sorted);
  }
  return records;
}

std::vector<SeriesRecord> load_csv(const std::filesystem::path& path) {
  return parse_csv(detail::read_text_file(path));
}

Vector moving_average(std::span<const double> prices, std::size_t window) {
  if (window < 1) throw DataError("moving_average: window must be >= 1");
  if (prices.size() < window) {
    throw DataError("moving_average: series of length " + std::to_string(prices.size()) +
                    " is shorter than window " + std::to_string(window));
  }
  Vector out(prices.size() - window + 1);
  const double inv = static_cast<double>(window);
  for (std::size_t j = 0; j < out.size(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < window; ++i) acc += prices[j + i];
    out[j] = acc / inv;
  }
  return out;
}

std::vector<Date> trading_axis(const std::vector<SeriesRecord>& records,
                               double coverage) {
  std::map<std::chrono::sys_days, std::size_t> counts;
  for (const auto& rec : records) {
    for (std::size_t i = 0; i < rec.dates.size(); ++i) {
      if (rec.prices[i]) ++counts[std::chrono::sys_days{rec.dates[i]}];
    }
  }
  // Tolerance keeps e.g. 0.9 * 30 from rounding up past 27.
  const double need = coverage * static_cast<double>(records.size()) * (1.0 - 1e-12);
  std::vector<Date> axis;
  for (const auto& [day, n] : counts) {
    if (static_cast<double>(n) >= need) axis.emplace_back(day);
  }
  return axis;
}

std::vector<SeriesRecord> exclude_incomplete(const std::vector<SeriesRecord>& records,
                                             const std::vector<Date>& axis) {
  std::vector<SeriesRecord> kept;
  for (const auto& rec : records) {
    std::map<std::chrono::sys_days, double> values;
    for (std::size_t i = 0; i < rec.dates.size(); ++i) {
      if (rec.prices[i]) values.emplace(std::chrono::sys_days{rec.dates[i]}, *rec.prices[i]);
    }
    SeriesRecord aligned{rec.id, {}, {}};
    bool ok = true;
    for (const Date& d : axis) {
      auto it = values.find(std::chrono::sys_days{d});
      if (it == values.end()) {
        ok = false;
        break;
      }
      aligned.dates.push_back(d);
      aligned.prices.emplace_back(it->second);
    }
    if (ok) kept.push_back(std::move(aligned));
  }
  return kept;
}

Vector to_targets(std::span<const double> prices) {
  if (prices.empty()) throw DataError("to_targets: empty series");
  const double first = prices[0];
  if (!(first > 0.0)) throw DataError("to_targets: first price must be positive");
  Vector out(prices.size());
  for (std::size_t t = 1; t < prices.size(); ++t) out[t] = (prices[t] - first) / first;
  return out;
}

PipelineResult build_dataset(const std::vector<SeriesRecord>& records,
                             const PipelineOptions& options) {
  if (options.window < 1) throw DataError("pipeline: window must be >= 1");
  const auto axis = trading_axis(records, options.coverage);
  const auto kept = exclude_incomplete(records, axis);

  PipelineResult result;
  result.input_count = records.size();
  result.excluded_count = records.size() - kept.size();
  if (kept.empty()) throw EmptyResultError("0 sequences survived exclusion");
  if (axis.size() < options.window + 1) {
    throw DataError("pipeline: " + std::to_string(axis.size()) +
                    " trading dates are too few for window " +
                    std::to_string(options.window));
  }

  Dataset& ds = result.dataset;
  for (std::size_t i = options.window - 1; i < axis.size(); ++i) {
    ds.dates.push_back(format_date(axis[i]));
  }
  for (const auto& rec : kept) {
    std::vector<double> prices;
    prices.reserve(rec.prices.size());
    for (const auto& p : rec.prices) prices.push_back(*p);
    const Vector targets = to_targets(moving_average(prices, options.window).span());
    std::vector<Vector> seq;
    seq.reserve(targets.size());
    for (double v : targets) seq.push_back(Vector{v});
    ds.ids.push_back(rec.id);
    ds.targets.push_back(std::move(seq));
  }
  ds.validate();
  return result;
}

void SyntheticSpec::validate() const {
  if (clusters < 1 || per_cluster < 1) {
    throw DataError("synthetic data: clusters and per_cluster must be >= 1");
  }
  if (length < 2) throw DataError("synthetic data: length must be >= 2");
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw DataError("synthetic data: noise must be finite and >= 0");
  }
  if (window < 1) throw DataError("synthetic data: window must be >= 1");
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::kMixture: return "mixture";
    case SyntheticKind::kDampedTrend: return "damped_trend";
  }
  return "mixture";
}

SyntheticKind parse_synthetic_kind(std::string_view text) {
  if (text == "mixture") return SyntheticKind::kMixture;
  if (text == "damped_trend") return SyntheticKind::kDampedTrend;
  throw DataError("unknown synthetic kind '" + std::string(text) +
                  "' (expected mixture or damped_trend)");
}

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  using detail::uniform;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  std::mt19937_64 rng(seed);
  const std::size_t raw_len = spec.length + spec.window - 1;
  const double span = static_cast<double>(raw_len - 1);

  Dataset ds;
  ds.dates = synthetic_dates(spec.length);
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    // Cluster prototype of the log price, as a function of u in [0, 1].
    std::vector<double> shape(raw_len);
    const double sign = (rng() & 1) ? 1.0 : -1.0;
    // Saturating trend plus a decaying oscillation; the kinds differ in scale.
    const bool mixture = spec.kind == SyntheticKind::kMixture;
    const double level = sign * (mixture ? uniform(rng, 1.2, 2.0) : uniform(rng, 0.3, 0.6));
    const double rate = mixture ? uniform(rng, 1.5, 4.0) : uniform(rng, 2.0, 5.0);
    const double wiggle = mixture ? uniform(rng, 0.05, 0.1) : uniform(rng, 0.03, 0.08);
    const double cycles = mixture ? uniform(rng, 1.0, 2.0) : uniform(rng, 1.5, 3.0);
    const double phase = uniform(rng, 0.0, kTwoPi);
    for (std::size_t t = 0; t < raw_len; ++t) {
      const double u = static_cast<double>(t) / span;
      shape[t] = level * (1.0 - std::exp(-rate * u)) +
                 wiggle * std::exp(-rate * u) * std::sin(kTwoPi * cycles * u + phase);
    }

    for (std::size_t s = 0; s < spec.per_cluster; ++s) {
      const double base = uniform(rng, 10.0, 1000.0);
      std::vector<double> prices(raw_len);
      for (std::size_t t = 0; t < raw_len; ++t) {
        const double eps = spec.noise > 0.0 ? spec.noise * detail::standard_normal(rng) : 0.0;
        prices[t] = base * std::exp(shape[t] + eps);
      }
      const Vector targets = to_targets(moving_average(prices, spec.window).span());
      std::vector<Vector> seq;
      seq.reserve(targets.size());
      for (double v : targets) seq.push_back(Vector{v});

      char id[32];
      std::snprintf(id, sizeof id, "syn%02zu_%03zu", c, s);
      ds.ids.emplace_back(id);
      ds.targets.push_back(std::move(seq));
      ds.labels.push_back("c" + std::to_string(c));
    }
  }
  ds.validate();
  return ds;
}

std::string dataset_to_json(const Dataset& dataset) {
  dataset.validate();
  Json doc;
  doc["schema_version"] = std::string(kDatasetSchemaVersion);
  doc["ids"] = dataset.ids;
  doc["dates"] = dataset.dates;
  doc["dim"] = dataset.dim();
  Json targets = Json::array();
  for (const auto& seq : dataset.targets) {
    Json row = Json::array();
    for (const Vector& v : seq) {
      if (v.size() == 1) {
        row.push_back(v[0]);
      } else {
        row.push_back(v.values());
      }
    }
    targets.push_back(std::move(row));
  }
  doc["targets"] = std::move(targets);
  Json meta = Json::object();
  if (dataset.has_labels()) meta["labels"] = dataset.labels;
  doc["meta"] = std::move(meta);
  return doc.dump() + "\n";
}

Dataset dataset_from_json(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("dataset JSON: ") + e.what());
  }
  try {
    const auto version = doc.at("schema_version").get<std::string>();
    if (version != kDatasetSchemaVersion) {
      throw DataError("dataset JSON: schema_version " + version + " unsupported (expected " +
                      std::string(kDatasetSchemaVersion) + ")");
    }
    Dataset ds;
    ds.ids = doc.at("ids").get<std::vector<std::string>>();
    ds.dates = doc.at("dates").get<std::vector<std::string>>();
    const auto d = doc.at("dim").get<std::size_t>();
    for (const auto& row : doc.at("targets")) {
      std::vector<Vector> seq;
      for (const auto& step : row) {
        if (d == 1 && step.is_number()) {
          seq.push_back(Vector::from_external({step.get<double>()}));
        } else {
          seq.push_back(Vector::from_external(step.get<std::vector<double>>()));
        }
      }
      ds.targets.push_back(std::move(seq));
    }
    if (doc.contains("meta") && doc["meta"].contains("labels")) {
      ds.labels = doc["meta"]["labels"].get<std::vector<std::string>>();
    }
    ds.validate();
    if (ds.dim() != d) throw DataError("dataset JSON: dim field disagrees with targets");
    return ds;
  } catch (const Json::exception& e) {
    throw DataError(std::string("dataset JSON: ") + e.what());
  } catch (const NonFiniteError& e) {
    throw DataError(std::string("dataset JSON: ") + e.what());
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  detail::write_text_file(path, dataset_to_json(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(detail::read_text_file(path));
}

}  // namespace latentlstm
