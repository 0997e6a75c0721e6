#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace safepredict {

// Finite expert ensemble under exponentially weighted averaging. Weights live
// in the log domain so zero-weight experts (log weight -inf) and long runs
// stay exact; accessors exponentiate on demand.
class ExpertEnsemble {
 public:
  // Weights must be in [0,1] and sum to 1 within 1e-12.
  static ExpertEnsemble from_weights(std::span<const double> weights, double learning_rate);
  // Unnormalized log weights (-inf allowed); normalized on construction and
  // required to be within 1e-10 of a distribution already.
  static ExpertEnsemble from_log_weights(std::vector<double> log_weights, double learning_rate);

  int size() const { return static_cast<int>(log_w_.size()); }
  double learning_rate() const { return eta_; }
  double log_weight(int i) const { return log_w_[static_cast<std::size_t>(i)]; }
  double weight(int i) const;
  std::vector<double> weights() const;

 private:
  ExpertEnsemble(std::vector<double> log_w, double eta) : log_w_(std::move(log_w)), eta_(eta) {}
  std::vector<double> log_w_;
  double eta_;
};

// w_i' = w_i e^{-eta l_i} / sum_j w_j e^{-eta l_j}. Losses must match the
// ensemble size and lie in [0,1].
ExpertEnsemble ewaf_update(const ExpertEnsemble& ens, std::span<const double> losses);

// sum_i w_i l_i
double expected_loss(const ExpertEnsemble& ens, std::span<const double> losses);

// -(1/eta) log sum_i w_i e^{-eta l_i}; lies between min loss and expected loss.
double mix_loss(const ExpertEnsemble& ens, std::span<const double> losses);

// expected_loss - mix_loss; nonnegative, at most eta * sum_i w_i (lbar - l_i)^2.
double mixability_gap(const ExpertEnsemble& ens, std::span<const double> losses);

// Cumulative mix loss never exceeds any expert's cumulative loss plus
// -log(initial_weight)/eta.
double mix_loss_regret_bound(double initial_weight, double learning_rate);

// Worst-case total regret sqrt(T log N / 2) of the tuned fixed rate
// sqrt(8 log N / T) with uniform initial weights.
double ewaf_regret_bound(int num_experts, std::int64_t horizon);

// One expert per refuse/predict bit pattern over `horizon` steps (2^horizon
// experts; horizon capped at 20). Expert i takes loss target_error where bit t
// of i is clear and the base loss where it is set. Initial weights are the
// path probabilities of the two-state chain that starts predicting with
// probability initial_weight and transitions with alpha_t (refuse -> predict)
// and beta_t (predict -> predict); the predicted-mass marginal of this
// ensemble reproduces the clamped two-expert update exactly.
struct VirtualEnsemble {
  ExpertEnsemble initial;
  std::vector<std::vector<double>> step_losses;  // [t-1][expert]
};
VirtualEnsemble build_virtual_ensemble(int horizon, double initial_weight, double target_error,
                                       std::span<const double> alpha, std::span<const double> beta,
                                       std::span<const double> base_losses, double learning_rate);

// Total weight of experts whose bit for step t (1-based) is set.
double predicted_mass(const ExpertEnsemble& ens, int t);

}  // namespace safepredict
