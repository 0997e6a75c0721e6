#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "safepredict/trace.hpp"

namespace safepredict {

enum class Variant { plain, doubling, adaptive, weight_shift_doubling };

struct MetaConfig {
  double target_error = 0.05;   // dummy expert's constant loss
  double initial_weight = 0.5;  // w_P at the start of every epoch
  Variant variant = Variant::plain;
  // Required by plain and adaptive; the doubling variants derive per-epoch rates.
  std::optional<double> learning_rate;
  // Constant refuse->predict shift (weight_shift_doubling only).
  double alpha = 0.0;
  // Per-update clamp schedules (adaptive only). Size 1 broadcasts to every
  // step; empty means alpha_t = 0 resp. beta_t = 1.
  std::vector<double> alpha_schedule;
  std::vector<double> beta_schedule;
  // Required by weight_shift_doubling: its rate formula charges the shift
  // penalty for horizon-1 updates up front.
  std::optional<std::int64_t> horizon;

  // target_error >= 1/2 is accepted, but the validity bounds are vacuous there.
  bool bounds_guaranteed() const { return target_error < 0.5; }
  void validate() const;  // throws std::invalid_argument
};

struct Decision {
  std::int64_t t = 0;
  double probability = 0.0;
  bool predict = false;
};

struct CumulativeStats {
  double t_star = 0.0;     // sum of pre-update w_P
  double v_star = 0.0;     // sum of pre-update w_P (1 - w_P)
  double l_star = 0.0;     // sum of pre-update w_P * loss
  double base_loss = 0.0;  // sum of observed losses
};

// Refusal meta layer around one base predictor: predicts with probability w_P
// and refuses otherwise, driving w_P by a two-expert multiplicative-weights
// update against a dummy expert of constant loss target_error, optionally
// clamped into [alpha_t, beta_t] and optionally restarted on a doubling
// schedule keyed to accumulated weight variance.
class SafePredict {
 public:
  SafePredict(MetaConfig config, std::uint64_t seed);

  // Samples the predict bit at the current w_P. Consumes exactly one uniform
  // draw; weights and statistics are untouched.
  Decision decide();
  // Observes the base loss for the step last decided. Requires a preceding
  // decide; losses outside [0,1] are rejected, not clamped.
  void observe_loss(double loss);

  double prediction_prob() const;
  double log_prediction_prob() const { return log_p_; }
  double log_refusal_prob() const { return log_d_; }
  double learning_rate() const { return eta_; }
  int epoch() const { return epoch_; }
  double epoch_v_sum() const { return v_sum_; }
  std::int64_t step() const { return t_; }  // next step, 1-based
  const CumulativeStats& stats() const { return stats_; }
  const std::vector<std::int64_t>& reset_times() const { return reset_times_; }
  const MetaConfig& config() const { return cfg_; }

  // decide + observe_loss over a whole stream.
  RunTrace run(std::span<const double> losses);

 private:
  void apply_update(double loss);
  double alpha_at(std::int64_t t) const;
  double beta_at(std::int64_t t) const;

  MetaConfig cfg_;
  std::mt19937_64 rng_;
  double log_p_ = 0.0;
  double log_d_ = 0.0;
  double prob_ = 0.0;  // exp(log_p_) clamped into the step's [alpha, beta]
  double eta_ = 0.0;
  int epoch_ = 1;
  double v_sum_ = 0.0;
  std::int64_t t_ = 1;
  bool awaiting_loss_ = false;
  CumulativeStats stats_;
  std::vector<std::int64_t> reset_times_;
};

// Epoch rate sqrt(A / (1 - target_error)^2 / 2^k) of the doubling variants,
// where A = log(1/w_D1) plus, under weight shifting, (horizon-1) log(1/(1-alpha)).
double learning_rate_for_epoch(const MetaConfig& config, int k);

// Rate minimizing the fixed-rate validity bound at final variance v_star.
double optimal_fixed_rate(double initial_refuse_weight, double target_error, double v_star);

struct WeightBounds {
  double lower = 0.0;
  double upper = 1.0;
};
// Two-sided envelope for w_P after t fixed-rate unclamped updates with
// cumulative base loss cum_base_loss, clamped into [0,1] for reporting.
WeightBounds prediction_prob_bounds(double initial_weight, double learning_rate,
                                    double target_error, double cum_base_loss, std::int64_t t);

// Weight-shifting refusal-probability envelope over a span of span_len updates
// with base loss total span_base_loss, against the inflated target
// eps' = target_error + alpha/learning_rate. Not clamped; may exceed 1.
double ws_refusal_bound(double alpha, double learning_rate, double target_error,
                        double span_base_loss, std::int64_t span_len);

}  // namespace safepredict
