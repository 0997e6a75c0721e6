#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "safepredict/safepredict.hpp"
#include "safepredict/trace.hpp"

namespace safepredict {

// Every evaluator returns the excess over target_error that the realized
// error rate l_star/t_star is guaranteed not to exceed. All are nonnegative
// and nonincreasing in t_star.

// Horizon-only worst case at the tuned fixed rate: sqrt(T log(1/w_D1) / 2) / t_star.
double naive_bound(double initial_refuse_weight, std::int64_t horizon, double t_star);

// Fixed-rate excess log(1/w_D1)/(eta t_star) + (1-eps)^2 eta v_star / t_star.
double fixed_rate_bound(double initial_refuse_weight, double target_error, double learning_rate,
                        double v_star, double t_star);

// fixed_rate_bound at its minimizing rate: 2 (1-eps) sqrt(log(1/w_D1) v_star) / t_star.
double fixed_rate_bound_optimal(double initial_refuse_weight, double target_error,
                                double v_star, double t_star);

// Doubling-trick excess: (1-eps) (2 sqrt(2) / (sqrt(2)-1)) sqrt(log(1/w_D1) v_star) / t_star.
double doubling_bound(double initial_refuse_weight, double target_error,
                      double v_star, double t_star);

// Clamped-update excess at a fixed rate; the shift history enters through
// Delta = prod_t (1 - alpha_t). Reduces to fixed_rate_bound when all alpha_t = 0.
double adaptive_bound_at_rate(double initial_refuse_weight, double target_error,
                              std::span<const double> alpha_schedule, double learning_rate,
                              double v_star, double t_star);

// adaptive_bound_at_rate at its minimizing rate:
// 2 (1-eps) sqrt(log(1/(w_D1 Delta)) v_star) / t_star.
double adaptive_bound(double initial_refuse_weight, double target_error,
                      std::span<const double> alpha_schedule, double v_star, double t_star);

// Constant-shift simplification at the minimizing rate:
// 2 (1-eps) sqrt(v_star (log(1/w_D1) + T alpha + T alpha^2)) / t_star.
double constant_shift_bound(double initial_refuse_weight, double target_error, double alpha,
                            std::int64_t horizon, double v_star, double t_star);

// Weight shifting with doubled epochs:
// (1-eps) (2 sqrt(2 v_star) / (sqrt(2)-1)) sqrt(log(1/w_D1) + T alpha + T alpha^2) / t_star.
double shift_doubling_bound(double initial_refuse_weight, double target_error, double alpha,
                            std::int64_t horizon, double v_star, double t_star);

enum class BoundKind {
  naive,
  fixed_rate,
  fixed_rate_optimal,
  doubling,
  adaptive,
  constant_shift,
  shift_doubling,
};
std::string to_string(BoundKind kind);

struct BoundReport {
  BoundKind kind = BoundKind::fixed_rate;
  double target_error = 0.0;
  double excess = 0.0;       // guaranteed excess over target_error
  double realized = 0.0;     // l_star / t_star from the trace
  double slack = 0.0;        // target_error + excess - realized
  bool satisfied = false;
  bool vacuous = false;      // no expected predictions, or bound above 1
};

// Evaluates the bound matching config.variant against the trace's realized
// t_star, v_star, l_star. Combined traces already carry stack-level w_p
// (zero on confidence-refused steps), so the same sums serve both layers.
BoundReport check_trace(const RunTrace& trace, const MetaConfig& config);

}  // namespace safepredict
