#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "safepredict/safepredict.hpp"
#include "safepredict/trace.hpp"

namespace safepredict {

struct ScoredRecord {
  std::int64_t step = 0;
  double confidence = 0.0;  // in [0,1]
  double loss = 0.0;        // in [0,1]
};

// Smallest threshold theta such that predicting on confidence > theta keeps
// the mean validation error rate within target_error, cross-validated over
// `folds` contiguous folds. Candidates are the distinct confidences plus 0;
// folds with no validation predictions for a candidate are skipped; a
// candidate with no informative fold is disqualified; if nothing qualifies,
// returns 1 (refuse everything).
double calibrate_threshold(std::span<const ScoredRecord> history, double target_error, int folds);

// Forget trigger: more than half of the steps the confidence layer accepted
// in the last epoch were refused by the meta layer. An epoch with no accepted
// steps is no evidence.
bool amnesic_check(std::int64_t cbr_predicted, std::int64_t sp_refused);

struct CbrConfig {
  double target_error = 0.05;
  std::int64_t epoch_len = 100;  // recalibration period
  int folds = 5;

  void validate() const;  // throws std::invalid_argument
};

// Confidence-based refusal alone: predict iff confidence > threshold,
// threshold recalibrated every epoch_len steps on all records seen so far
// (refused ones included). Deterministic; w_p is 0 or 1.
RunTrace run_cbr(std::span<const ScoredRecord> records, const CbrConfig& config);

struct CombinedConfig {
  CbrConfig cbr;
  MetaConfig sp;
  bool amnesic = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Confidence layer gating the meta layer: on confidence-refused steps the
// meta layer is not consulted and not updated (no weight change, no variance
// accrual, no RNG draw); the row records w_p = 0. At each epoch boundary the
// amnesic variant first applies the forget trigger (window keeps the epoch
// that fired it), then recalibrates on the window.
RunTrace run_combined(std::span<const ScoredRecord> records, const CombinedConfig& config);

// Synthetic scored stream: confidence ~ U[0,1), loss ~ Bernoulli(rate of the
// band holding the confidence); from step change_step + 1 on, the band is
// looked up at 1 - confidence, inverting the score/loss relation.
struct ScoredStreamSpec {
  std::int64_t horizon = 16000;
  std::int64_t change_step = 8000;  // last step of the original relation
  std::vector<double> band_edges = {0.0, 0.1, 0.5, 0.9, 1.0};
  std::vector<double> band_rates = {0.01, 0.5, 0.02, 0.18};
  std::uint64_t seed = 0;

  void validate() const;
};

// Bernoulli rate governing a record's loss at this step and confidence.
double scored_error_rate(const ScoredStreamSpec& spec, std::int64_t step, double confidence);

std::vector<ScoredRecord> generate_scored(const ScoredStreamSpec& spec);

// Header is exactly: step,confidence,loss
void write_scored_csv(std::span<const ScoredRecord> records, std::ostream& out);
void write_scored_csv_file(std::span<const ScoredRecord> records, const std::string& path);
std::vector<ScoredRecord> read_scored_csv(std::istream& in, const std::string& name = "<stream>");
std::vector<ScoredRecord> read_scored_csv_file(const std::string& path);

}  // namespace safepredict
