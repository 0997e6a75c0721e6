#include "safepredict/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace safepredict {

namespace {

void check_common(double initial_refuse_weight, double t_star) {
  if (!(initial_refuse_weight > 0.0 && initial_refuse_weight < 1.0)) {
    throw std::invalid_argument("initial refuse weight must lie in (0, 1)");
  }
  if (!(t_star >= 0.0)) throw std::invalid_argument("t_star must be nonnegative");
}

// log(1/w_D1) + T alpha + T alpha^2, shared by the constant-shift forms.
double shift_mass(double initial_refuse_weight, double alpha, std::int64_t horizon) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  const double t = static_cast<double>(horizon);
  return -std::log(initial_refuse_weight) + t * alpha + t * alpha * alpha;
}

constexpr double kDoublingFactor = 2.0 * 1.4142135623730951 / (1.4142135623730951 - 1.0);

}  // namespace

double naive_bound(double initial_refuse_weight, std::int64_t horizon, double t_star) {
  check_common(initial_refuse_weight, t_star);
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (t_star == 0.0) return std::numeric_limits<double>::infinity();
  const double t = static_cast<double>(horizon);
  return std::sqrt(t * -std::log(initial_refuse_weight) / 2.0) / t_star;
}

double fixed_rate_bound(double initial_refuse_weight, double target_error, double learning_rate,
                        double v_star, double t_star) {
  check_common(initial_refuse_weight, t_star);
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(v_star >= 0.0)) throw std::invalid_argument("v_star must be nonnegative");
  if (t_star == 0.0) return std::numeric_limits<double>::infinity();
  const double gap = 1.0 - target_error;
  return -std::log(initial_refuse_weight) / (learning_rate * t_star) +
         gap * gap * learning_rate * v_star / t_star;
}

double fixed_rate_bound_optimal(double initial_refuse_weight, double target_error,
                                double v_star, double t_star) {
  check_common(initial_refuse_weight, t_star);
  if (!(v_star >= 0.0)) throw std::invalid_argument("v_star must be nonnegative");
  if (t_star == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * (1.0 - target_error) *
         std::sqrt(-std::log(initial_refuse_weight) * v_star) / t_star;
}

double doubling_bound(double initial_refuse_weight, double target_error,
                      double v_star, double t_star) {
  check_common(initial_refuse_weight, t_star);
  if (!(v_star >= 0.0)) throw std::invalid_argument("v_star must be nonnegative");
  if (t_star == 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - target_error) * kDoublingFactor *
         std::sqrt(-std::log(initial_refuse_weight) * v_star) / t_star;
}

namespace {

// log(1/(w_D1 Delta)) with Delta = prod (1 - alpha_t).
double shifted_log_mass(double initial_refuse_weight, std::span<const double> alpha_schedule) {
  double mass = -std::log(initial_refuse_weight);
  for (double a : alpha_schedule) {
    if (!(a >= 0.0 && a < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
    mass -= std::log1p(-a);
  }
  return mass;
}

}  // namespace

double adaptive_bound_at_rate(double initial_refuse_weight, double target_error,
                              std::span<const double> alpha_schedule, double learning_rate,
                              double v_star, double t_star) {
  check_common(initial_refuse_weight, t_star);
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(v_star >= 0.0)) throw std::invalid_argument("v_star must be nonnegative");
  if (t_star == 0.0) return std::numeric_limits<double>::infinity();
  const double gap = 1.0 - target_error;
  return shifted_log_mass(initial_refuse_weight, alpha_schedule) / (learning_rate * t_star) +
         gap * gap * learning_rate * v_star / t_star;
}

double adaptive_bound(double initial_refuse_weight, double target_error,
                      std::span<const double> alpha_schedule, double v_star, double t_star) {
  check_common(initial_refuse_weight, t_star);
  if (!(v_star >= 0.0)) throw std::invalid_argument("v_star must be nonnegative");
  if (t_star == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * (1.0 - target_error) *
         std::sqrt(shifted_log_mass(initial_refuse_weight, alpha_schedule) * v_star) / t_star;
}

double constant_shift_bound(double initial_refuse_weight, double target_error, double alpha,
                            std::int64_t horizon, double v_star, double t_star) {
  check_common(initial_refuse_weight, t_star);
  if (!(v_star >= 0.0)) throw std::invalid_argument("v_star must be nonnegative");
  if (t_star == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * (1.0 - target_error) *
         std::sqrt(v_star * shift_mass(initial_refuse_weight, alpha, horizon)) / t_star;
}

double shift_doubling_bound(double initial_refuse_weight, double target_error, double alpha,
                            std::int64_t horizon, double v_star, double t_star) {
  check_common(initial_refuse_weight, t_star);
  if (!(v_star >= 0.0)) throw std::invalid_argument("v_star must be nonnegative");
  if (t_star == 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - target_error) * kDoublingFactor *
         std::sqrt(v_star * shift_mass(initial_refuse_weight, alpha, horizon)) / t_star;
}

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::naive: return "naive";
    case BoundKind::fixed_rate: return "fixed_rate";
    case BoundKind::fixed_rate_optimal: return "fixed_rate_optimal";
    case BoundKind::doubling: return "doubling";
    case BoundKind::adaptive: return "adaptive";
    case BoundKind::constant_shift: return "constant_shift";
    case BoundKind::shift_doubling: return "shift_doubling";
  }
  throw std::invalid_argument("unknown bound kind");
}

BoundReport check_trace(const RunTrace& trace, const MetaConfig& config) {
  config.validate();
  const RunSummary s = summarize(trace);

  BoundReport report;
  report.target_error = config.target_error;
  const double d1 = 1.0 - config.initial_weight;

  switch (config.variant) {
    case Variant::plain:
      report.kind = BoundKind::fixed_rate;
      report.excess =
          fixed_rate_bound(d1, config.target_error, *config.learning_rate, s.v_star, s.t_star);
      break;
    case Variant::doubling:
      report.kind = BoundKind::doubling;
      report.excess = doubling_bound(d1, config.target_error, s.v_star, s.t_star);
      break;
    case Variant::adaptive: {
      report.kind = BoundKind::adaptive;
      // Realized prefix of the shift schedule; unset entries mean no shift.
      std::vector<double> alphas(static_cast<std::size_t>(s.steps), 0.0);
      for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (config.alpha_schedule.size() == 1) {
          alphas[i] = config.alpha_schedule[0];
        } else if (i < config.alpha_schedule.size()) {
          alphas[i] = config.alpha_schedule[i];
        }
      }
      report.excess = adaptive_bound_at_rate(d1, config.target_error, alphas,
                                             *config.learning_rate, s.v_star, s.t_star);
      break;
    }
    case Variant::weight_shift_doubling:
      report.kind = BoundKind::shift_doubling;
      report.excess = shift_doubling_bound(d1, config.target_error, config.alpha,
                                           *config.horizon, s.v_star, s.t_star);
      break;
  }

  report.realized = s.error_rate;
  const double budget = report.target_error + report.excess;
  report.slack = budget - report.realized;
  report.satisfied = report.slack >= -1e-12 * std::max(1.0, std::abs(budget));
  report.vacuous = s.t_star == 0.0 || budget > 1.0;
  return report;
}

}  // namespace safepredict
