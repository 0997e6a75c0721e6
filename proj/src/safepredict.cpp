#include "safepredict/safepredict.hpp"

#include <cmath>
#include <stdexcept>

#include "safepredict/numeric.hpp"

namespace safepredict {

namespace {

double clamp01(double v) {
  if (v < 0.0) return 0.0;
  if (v > 1.0) return 1.0;
  return v;
}

bool is_doubling(Variant v) {
  return v == Variant::doubling || v == Variant::weight_shift_doubling;
}

}  // namespace

void MetaConfig::validate() const {
  if (!(target_error > 0.0 && target_error < 1.0))
    throw std::invalid_argument("target_error must lie in (0,1)");
  if (!(initial_weight > 0.0 && initial_weight < 1.0))
    throw std::invalid_argument("initial_weight must lie in (0,1)");
  if (variant == Variant::plain || variant == Variant::adaptive) {
    if (!learning_rate || !(*learning_rate > 0.0) || !std::isfinite(*learning_rate))
      throw std::invalid_argument("this variant needs a fixed positive learning_rate");
  }
  if (variant == Variant::weight_shift_doubling) {
    if (!(alpha >= 0.0 && alpha < 1.0))
      throw std::invalid_argument("alpha must lie in [0,1)");
    if (!horizon || *horizon < 1)
      throw std::invalid_argument("weight_shift_doubling needs a positive horizon");
  }
  if (variant == Variant::adaptive) {
    for (double a : alpha_schedule)
      if (!(a >= 0.0 && a < 1.0))
        throw std::invalid_argument("alpha_schedule entries must lie in [0,1)");
    for (double b : beta_schedule)
      if (!(b > 0.0 && b <= 1.0))
        throw std::invalid_argument("beta_schedule entries must lie in (0,1]");
    if (!alpha_schedule.empty() && !beta_schedule.empty()) {
      const std::size_t n = std::max(alpha_schedule.size(), beta_schedule.size());
      for (std::size_t i = 0; i < n; ++i) {
        const double a = alpha_schedule[alpha_schedule.size() == 1 ? 0 : std::min(i, alpha_schedule.size() - 1)];
        const double b = beta_schedule[beta_schedule.size() == 1 ? 0 : std::min(i, beta_schedule.size() - 1)];
        if (a > b) throw std::invalid_argument("alpha_t must not exceed beta_t");
      }
    }
  } else {
    if (!alpha_schedule.empty() || !beta_schedule.empty())
      throw std::invalid_argument("clamp schedules apply to the adaptive variant only");
  }
}

double learning_rate_for_epoch(const MetaConfig& config, int k) {
  if (!is_doubling(config.variant))
    throw std::invalid_argument("epoch rates apply to the doubling variants only");
  if (k < 1) throw std::invalid_argument("epoch index is 1-based");
  double a = -std::log(1.0 - config.initial_weight);
  if (config.variant == Variant::weight_shift_doubling) {
    if (!config.horizon) throw std::invalid_argument("weight_shift_doubling needs a horizon");
    a -= static_cast<double>(*config.horizon - 1) * std::log1p(-config.alpha);
  }
  const double g = 1.0 - config.target_error;
  return std::sqrt(a / (g * g) / std::exp2(static_cast<double>(k)));
}

double optimal_fixed_rate(double initial_refuse_weight, double target_error, double v_star) {
  if (!(initial_refuse_weight > 0.0 && initial_refuse_weight < 1.0))
    throw std::invalid_argument("initial refuse weight must lie in (0,1)");
  if (!(target_error >= 0.0 && target_error < 1.0))
    throw std::invalid_argument("target_error must lie in [0,1)");
  if (!(v_star > 0.0)) throw std::invalid_argument("v_star must be positive");
  return std::sqrt(-std::log(initial_refuse_weight) / v_star) / (1.0 - target_error);
}

WeightBounds prediction_prob_bounds(double initial_weight, double learning_rate,
                                    double target_error, double cum_base_loss, std::int64_t t) {
  if (!(initial_weight > 0.0 && initial_weight < 1.0))
    throw std::invalid_argument("initial_weight must lie in (0,1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (t < 0) throw std::invalid_argument("t must be nonnegative");
  const double ratio = initial_weight / (1.0 - initial_weight);
  const double drift = learning_rate * (target_error * static_cast<double>(t) - cum_base_loss);
  WeightBounds b;
  b.upper = clamp01(ratio * std::exp(drift));
  b.lower = clamp01(1.0 - std::exp(-drift) / ratio);
  return b;
}

double ws_refusal_bound(double alpha, double learning_rate, double target_error,
                        double span_base_loss, std::int64_t span_len) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (span_len < 0) throw std::invalid_argument("span_len must be nonnegative");
  const double eps_prime = target_error + alpha / learning_rate;
  return (1.0 - alpha) / alpha *
         std::exp(learning_rate * (span_base_loss - eps_prime * static_cast<double>(span_len)));
}

SafePredict::SafePredict(MetaConfig config, std::uint64_t seed)
    : cfg_(std::move(config)), rng_(seed) {
  cfg_.validate();
  log_p_ = std::log(cfg_.initial_weight);
  log_d_ = std::log1p(-cfg_.initial_weight);
  prob_ = cfg_.initial_weight;
  eta_ = is_doubling(cfg_.variant) ? learning_rate_for_epoch(cfg_, 1) : *cfg_.learning_rate;
}

double SafePredict::prediction_prob() const { return prob_; }

Decision SafePredict::decide() {
  Decision d;
  d.t = t_;
  d.probability = prob_;
  d.predict = u01(rng_) < d.probability;
  awaiting_loss_ = true;
  return d;
}

double SafePredict::alpha_at(std::int64_t t) const {
  switch (cfg_.variant) {
    case Variant::weight_shift_doubling:
      return cfg_.alpha;
    case Variant::adaptive: {
      if (cfg_.alpha_schedule.empty()) return 0.0;
      if (cfg_.alpha_schedule.size() == 1) return cfg_.alpha_schedule[0];
      const auto i = static_cast<std::size_t>(t - 1);
      if (i >= cfg_.alpha_schedule.size())
        throw std::out_of_range("alpha_schedule exhausted at step " + std::to_string(t));
      return cfg_.alpha_schedule[i];
    }
    default:
      return 0.0;
  }
}

double SafePredict::beta_at(std::int64_t t) const {
  if (cfg_.variant != Variant::adaptive || cfg_.beta_schedule.empty()) return 1.0;
  if (cfg_.beta_schedule.size() == 1) return cfg_.beta_schedule[0];
  const auto i = static_cast<std::size_t>(t - 1);
  if (i >= cfg_.beta_schedule.size())
    throw std::out_of_range("beta_schedule exhausted at step " + std::to_string(t));
  return cfg_.beta_schedule[i];
}

void SafePredict::apply_update(double loss) {
  // two-expert multiplicative-weights step in the log domain
  const double a = log_p_ - eta_ * loss;
  const double b = log_d_ - eta_ * cfg_.target_error;
  const double z = log_sum_exp(a, b);
  double lp = a - z;
  double ld = b - z;
  // clamp w' = alpha + (beta - alpha) w; log_sum_exp passes the finite side
  // through unchanged, so (alpha, beta) = (0, 1) is a bit-exact no-op and the
  // unclamped variants reduce to this same path.
  const double al = alpha_at(t_);
  const double be = beta_at(t_);
  const double lspan = std::log(be - al);
  lp = log_sum_exp(std::log(al), lspan + lp);
  ld = log_sum_exp(std::log1p(-be), lspan + ld);
  const double z2 = log_sum_exp(lp, ld);
  log_p_ = lp - z2;
  log_d_ = ld - z2;
  // The reported probability honors the clamp range exactly; renormalization
  // can shave an ulp off exp(log_p_). For (0, 1) this is a bit-exact identity
  // because log_p_ <= 0 after normalization.
  double p = std::exp(log_p_);
  if (p < al) p = al;
  if (p > be) p = be;
  prob_ = p;
}

void SafePredict::observe_loss(double loss) {
  if (!awaiting_loss_) throw std::logic_error("observe_loss without a preceding decide");
  if (!(loss >= 0.0 && loss <= 1.0)) throw std::invalid_argument("loss must lie in [0,1]");
  // Accrued with the probability that governed this step's decision, so the
  // instance totals match the trace-derived totals term for term.
  const double w = prob_;
  stats_.t_star += w;
  stats_.v_star += w * (1.0 - w);
  stats_.l_star += w * loss;
  stats_.base_loss += loss;

  apply_update(loss);

  if (is_doubling(cfg_.variant)) {
    v_sum_ += std::exp(log_p_ + log_d_);
    if (v_sum_ > std::exp2(static_cast<double>(epoch_))) {  // ties do not reset
      epoch_ += 1;
      v_sum_ = 0.0;
      log_p_ = std::log(cfg_.initial_weight);
      log_d_ = std::log1p(-cfg_.initial_weight);
      prob_ = cfg_.initial_weight;
      eta_ = learning_rate_for_epoch(cfg_, epoch_);
      reset_times_.push_back(t_);
    }
  }
  awaiting_loss_ = false;
  t_ += 1;
}

RunTrace SafePredict::run(std::span<const double> losses) {
  RunTrace trace;
  trace.rows.reserve(losses.size());
  for (double l : losses) {
    TraceRow row;
    row.eta = eta_;
    row.epoch = epoch_;
    const Decision d = decide();
    row.t = d.t;
    row.w_p = d.probability;
    row.decision = d.predict;
    row.loss = l;
    observe_loss(l);
    trace.rows.push_back(row);
  }
  return trace;
}

}  // namespace safepredict
