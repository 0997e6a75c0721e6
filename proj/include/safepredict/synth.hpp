#pragma once

#include <cstdint>
#include <vector>

namespace safepredict {

// Piecewise-constant Bernoulli loss stream. The horizon splits into
// num_change + 1 equal blocks (the last absorbs the remainder); blocks
// alternate eps_hi, eps_low, eps_hi, ... so the stream always opens hostile.
struct ChangePointSpec {
  std::int64_t horizon = 50000;
  int num_change = 1;
  double eps_low = 0.02;
  double eps_hi = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

// Bernoulli rate in force at 1-based step t.
double error_rate_at(const ChangePointSpec& spec, std::int64_t t);

std::vector<double> generate_losses(const ChangePointSpec& spec);

// Hindsight refusal policy: predict exactly on the steps whose rate is
// within the target. Returned per-step weights are 0 or 1.
std::vector<double> oracle_weights(const ChangePointSpec& spec, double target_error);

}  // namespace safepredict
