#include "safepredict/baselines.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string_view>

#include "safepredict/numeric.hpp"

namespace safepredict {

namespace {

void check_record(const ScoredRecord& r) {
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
    throw std::invalid_argument("confidence must lie in [0, 1]");
  }
  if (!(r.loss >= 0.0 && r.loss <= 1.0)) {
    throw std::invalid_argument("loss must lie in [0, 1]");
  }
}

// Validation records of one contiguous fold, ordered by confidence so a
// rising candidate threshold only ever advances `next`.
struct FoldView {
  std::vector<double> conf;
  std::vector<double> suffix_loss;  // suffix_loss[i] = sum of losses from i on
  std::size_t next = 0;             // first index with conf > current candidate
};

}  // namespace

double calibrate_threshold(std::span<const ScoredRecord> history, double target_error,
                           int folds) {
  if (history.empty()) throw std::invalid_argument("cannot calibrate on empty history");
  if (!(target_error >= 0.0 && target_error < 1.0)) {
    throw std::invalid_argument("target_error must lie in [0, 1)");
  }
  if (folds < 1) throw std::invalid_argument("folds must be positive");

  const std::size_t n = history.size();
  std::vector<double> candidates;
  candidates.reserve(n + 1);
  candidates.push_back(0.0);
  for (const ScoredRecord& r : history) {
    check_record(r);
    candidates.push_back(r.confidence);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<FoldView> views(static_cast<std::size_t>(folds));
  for (std::size_t f = 0; f < views.size(); ++f) {
    const std::size_t begin = n * f / static_cast<std::size_t>(folds);
    const std::size_t end = n * (f + 1) / static_cast<std::size_t>(folds);
    FoldView& v = views[f];
    std::vector<std::pair<double, double>> fold;
    fold.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      fold.emplace_back(history[i].confidence, history[i].loss);
    }
    std::sort(fold.begin(), fold.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    v.conf.resize(fold.size());
    v.suffix_loss.assign(fold.size() + 1, 0.0);
    for (std::size_t i = fold.size(); i-- > 0;) {
      v.conf[i] = fold[i].first;
      v.suffix_loss[i] = v.suffix_loss[i + 1] + fold[i].second;
    }
  }

  for (double theta : candidates) {
    double rate_sum = 0.0;
    int informative = 0;
    for (FoldView& v : views) {
      while (v.next < v.conf.size() && v.conf[v.next] <= theta) ++v.next;
      const std::size_t count = v.conf.size() - v.next;
      if (count == 0) continue;
      rate_sum += v.suffix_loss[v.next] / static_cast<double>(count);
      ++informative;
    }
    if (informative > 0 && rate_sum / informative <= target_error) return theta;
  }
  return 1.0;
}

bool amnesic_check(std::int64_t cbr_predicted, std::int64_t sp_refused) {
  return cbr_predicted > 0 && 2 * sp_refused > cbr_predicted;
}

void CbrConfig::validate() const {
  if (!(target_error >= 0.0 && target_error < 1.0)) {
    throw std::invalid_argument("target_error must lie in [0, 1)");
  }
  if (epoch_len < 1) throw std::invalid_argument("epoch_len must be positive");
  if (folds < 1) throw std::invalid_argument("folds must be positive");
}

RunTrace run_cbr(std::span<const ScoredRecord> records, const CbrConfig& config) {
  config.validate();
  RunTrace trace;
  trace.rows.reserve(records.size());
  double threshold = 0.0;  // predict everything until the first calibration
  int calibrations = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && static_cast<std::int64_t>(i) % config.epoch_len == 0) {
      threshold = calibrate_threshold(records.first(i), config.target_error, config.folds);
      ++calibrations;
    }
    const ScoredRecord& rec = records[i];
    check_record(rec);
    const bool predict = rec.confidence > threshold;
    TraceRow row;
    row.t = rec.step;
    row.w_p = predict ? 1.0 : 0.0;
    row.loss = rec.loss;
    row.decision = predict;
    row.eta = 0.0;
    row.epoch = calibrations;
    row.cbr = predict;
    trace.rows.push_back(row);
  }
  return trace;
}

void CombinedConfig::validate() const {
  cbr.validate();
  sp.validate();
}

RunTrace run_combined(std::span<const ScoredRecord> records, const CombinedConfig& config) {
  config.validate();
  SafePredict sp(config.sp, config.seed);
  RunTrace trace;
  trace.rows.reserve(records.size());
  double threshold = 0.0;
  std::size_t window_start = 0;
  std::int64_t epoch_cbr_predicted = 0;
  std::int64_t epoch_sp_refused = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    bool forgot = false;
    if (i > 0 && static_cast<std::int64_t>(i) % config.cbr.epoch_len == 0) {
      if (config.amnesic && amnesic_check(epoch_cbr_predicted, epoch_sp_refused)) {
        // Keep the epoch that fired the trigger: it is the evidence of the
        // new regime, and an empty window could never recalibrate.
        window_start = i - static_cast<std::size_t>(config.cbr.epoch_len);
        forgot = true;
      }
      threshold = calibrate_threshold(records.subspan(window_start, i - window_start),
                                      config.cbr.target_error, config.cbr.folds);
      epoch_cbr_predicted = 0;
      epoch_sp_refused = 0;
    }
    const ScoredRecord& rec = records[i];
    check_record(rec);
    const bool cbr_predict = rec.confidence > threshold;
    TraceRow row;
    row.t = rec.step;
    row.loss = rec.loss;
    row.eta = sp.learning_rate();
    row.epoch = sp.epoch();
    if (cbr_predict) {
      ++epoch_cbr_predicted;
      const Decision d = sp.decide();
      row.w_p = d.probability;
      row.decision = d.predict;
      if (!d.predict) ++epoch_sp_refused;
      sp.observe_loss(rec.loss);
    } else {
      row.w_p = 0.0;
      row.decision = false;
    }
    row.cbr = cbr_predict;
    if (config.amnesic) row.amnesia = forgot;
    trace.rows.push_back(row);
  }
  return trace;
}

void ScoredStreamSpec::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (change_step < 0 || change_step > horizon) {
    throw std::invalid_argument("change_step must lie in [0, horizon]");
  }
  if (band_edges.size() < 2 || band_rates.size() + 1 != band_edges.size()) {
    throw std::invalid_argument("need one rate per band between consecutive edges");
  }
  if (band_edges.front() != 0.0 || band_edges.back() != 1.0) {
    throw std::invalid_argument("band edges must span [0, 1]");
  }
  for (std::size_t i = 1; i < band_edges.size(); ++i) {
    if (!(band_edges[i - 1] < band_edges[i])) {
      throw std::invalid_argument("band edges must be strictly increasing");
    }
  }
  for (double r : band_rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("band rates must lie in [0, 1]");
  }
}

double scored_error_rate(const ScoredStreamSpec& spec, std::int64_t step, double confidence) {
  spec.validate();
  if (step < 1 || step > spec.horizon) throw std::out_of_range("step outside horizon");
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw std::invalid_argument("confidence must lie in [0, 1]");
  }
  const double x = step > spec.change_step ? 1.0 - confidence : confidence;
  auto it = std::upper_bound(spec.band_edges.begin(), spec.band_edges.end(), x);
  std::size_t band = static_cast<std::size_t>(it - spec.band_edges.begin()) - 1;
  if (band >= spec.band_rates.size()) band = spec.band_rates.size() - 1;  // x == 1
  return spec.band_rates[band];
}

std::vector<ScoredRecord> generate_scored(const ScoredStreamSpec& spec) {
  spec.validate();
  std::mt19937_64 gen(spec.seed);
  std::vector<ScoredRecord> records(static_cast<std::size_t>(spec.horizon));
  for (std::int64_t t = 1; t <= spec.horizon; ++t) {
    ScoredRecord& rec = records[static_cast<std::size_t>(t - 1)];
    rec.step = t;
    rec.confidence = u01(gen);
    const double rate = scored_error_rate(spec, t, rec.confidence);
    rec.loss = u01(gen) < rate ? 1.0 : 0.0;
  }
  return records;
}

namespace {

const char* kScoredHeader = "step,confidence,loss";

[[noreturn]] void fail(const std::string& name, std::size_t line, const std::string& what) {
  throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
}

double parse_double_field(std::string_view s, const std::string& name, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(name, line, "bad numeric field '" + std::string(s) + "'");
  return v;
}

std::int64_t parse_int_field(std::string_view s, const std::string& name, std::size_t line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(name, line, "bad integer field '" + std::string(s) + "'");
  return v;
}

}  // namespace

void write_scored_csv(std::span<const ScoredRecord> records, std::ostream& out) {
  out << kScoredHeader << '\n';
  for (const ScoredRecord& r : records) {
    out << r.step << ',' << format_double(r.confidence) << ',' << format_double(r.loss) << '\n';
  }
}

void write_scored_csv_file(std::span<const ScoredRecord> records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_scored_csv(records, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ScoredRecord> read_scored_csv(std::istream& in, const std::string& name) {
  std::vector<ScoredRecord> records;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw std::runtime_error(name + ": empty input");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kScoredHeader) {
    fail(name, lineno, "expected header '" + std::string(kScoredHeader) + "'");
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        line.find(',', c2 + 1) != std::string::npos) {
      fail(name, lineno, "expected 3 fields");
    }
    std::string_view sv = line;
    ScoredRecord r;
    r.step = parse_int_field(sv.substr(0, c1), name, lineno);
    r.confidence = parse_double_field(sv.substr(c1 + 1, c2 - c1 - 1), name, lineno);
    r.loss = parse_double_field(sv.substr(c2 + 1), name, lineno);
    check_record(r);
    records.push_back(r);
  }
  return records;
}

std::vector<ScoredRecord> read_scored_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return read_scored_csv(in, path);
}

}  // namespace safepredict
