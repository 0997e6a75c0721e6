#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace safepredict {

// One step of a run. w_p is the prediction probability in force when the step
// was decided; eta and epoch are the learning-rate state in force during the
// step (a reset triggered by this step shows up on the next row). In combined
// runs w_p is the stack-level probability: 0 on confidence-refused steps.
struct TraceRow {
  std::int64_t t = 0;  // 1-based
  double w_p = 0.0;
  double loss = 0.0;
  bool decision = false;
  double eta = 0.0;
  int epoch = 1;
  std::optional<bool> cbr;      // confidence-layer decision, scored runs only
  std::optional<bool> amnesia;  // history dropped at this step, amnesic runs only
};

struct RunTrace {
  std::vector<TraceRow> rows;
};

struct RunSummary {
  std::int64_t steps = 0;
  double t_star = 0.0;  // sum of w_p: expected prediction count
  double v_star = 0.0;  // sum of w_p (1 - w_p)
  double l_star = 0.0;  // sum of w_p * loss: expected error count
  double error_rate = 0.0;  // l_star / t_star; 0 when t_star == 0
  double efficiency = 0.0;  // t_star / steps
  std::int64_t predicted = 0;  // sampled predictions
  double errors = 0.0;         // loss total over sampled predictions
  std::vector<std::int64_t> reset_times;  // steps after which epoch increments
};

RunSummary summarize(const RunTrace& trace);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

// Header is exactly: t,w_p,loss,decision,eta,epoch,cbr,amnesia
// Optional fields serialize as empty cells.
void write_csv(const RunTrace& trace, std::ostream& out);
void write_csv_file(const RunTrace& trace, const std::string& path);
// Throws std::runtime_error naming the offending line on malformed input.
RunTrace read_csv(std::istream& in, const std::string& name = "<stream>");
RunTrace read_csv_file(const std::string& path);

// Flat key=value lines.
void write_summary(const RunSummary& s, std::ostream& out);
void write_summary_file(const RunSummary& s, const std::string& path);

}  // namespace safepredict
