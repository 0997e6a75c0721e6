#include "safepredict/synth.hpp"

#include <random>
#include <stdexcept>

#include "safepredict/numeric.hpp"

namespace safepredict {

void ChangePointSpec::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (num_change < 0) throw std::invalid_argument("num_change must be nonnegative");
  if (horizon < num_change + 1) {
    throw std::invalid_argument("horizon must cover num_change + 1 blocks");
  }
  if (!(eps_low >= 0.0 && eps_low <= 1.0 && eps_hi >= 0.0 && eps_hi <= 1.0)) {
    throw std::invalid_argument("rates must lie in [0, 1]");
  }
  if (eps_low > eps_hi) throw std::invalid_argument("eps_low must not exceed eps_hi");
}

double error_rate_at(const ChangePointSpec& spec, std::int64_t t) {
  spec.validate();
  if (t < 1 || t > spec.horizon) throw std::out_of_range("step outside horizon");
  const std::int64_t blocks = spec.num_change + 1;
  const std::int64_t block = (t * blocks + spec.horizon - 1) / spec.horizon;  // ceil(t*blocks/T)
  return block % 2 == 1 ? spec.eps_hi : spec.eps_low;
}

std::vector<double> generate_losses(const ChangePointSpec& spec) {
  spec.validate();
  std::mt19937_64 gen(spec.seed);
  std::vector<double> losses(static_cast<std::size_t>(spec.horizon));
  for (std::int64_t t = 1; t <= spec.horizon; ++t) {
    const double rate = error_rate_at(spec, t);
    losses[static_cast<std::size_t>(t - 1)] = u01(gen) < rate ? 1.0 : 0.0;
  }
  return losses;
}

std::vector<double> oracle_weights(const ChangePointSpec& spec, double target_error) {
  spec.validate();
  if (!(target_error >= 0.0 && target_error <= 1.0)) {
    throw std::invalid_argument("target_error must lie in [0, 1]");
  }
  std::vector<double> weights(static_cast<std::size_t>(spec.horizon));
  for (std::int64_t t = 1; t <= spec.horizon; ++t) {
    weights[static_cast<std::size_t>(t - 1)] =
        error_rate_at(spec, t) <= target_error ? 1.0 : 0.0;
  }
  return weights;
}

}  // namespace safepredict
