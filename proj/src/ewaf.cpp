#include "safepredict/ewaf.hpp"

#include <cmath>
#include <stdexcept>

#include "safepredict/numeric.hpp"

namespace safepredict {

namespace {

void check_rate(double eta) {
  if (!(std::isfinite(eta)) || eta <= 0.0)
    throw std::invalid_argument("learning rate must be finite and positive");
}

void check_losses(const ExpertEnsemble& ens, std::span<const double> losses) {
  if (static_cast<int>(losses.size()) != ens.size())
    throw std::invalid_argument("loss count does not match expert count");
  for (double l : losses)
    if (!(l >= 0.0 && l <= 1.0))  // rejects NaN too
      throw std::invalid_argument("losses must lie in [0,1]");
}

}  // namespace

ExpertEnsemble ExpertEnsemble::from_weights(std::span<const double> weights, double learning_rate) {
  check_rate(learning_rate);
  if (weights.empty()) throw std::invalid_argument("empty ensemble");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("weights must lie in [0,1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("weights must sum to 1 within 1e-12");
  std::vector<double> lw(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) lw[i] = std::log(weights[i]);
  return ExpertEnsemble(std::move(lw), learning_rate);
}

ExpertEnsemble ExpertEnsemble::from_log_weights(std::vector<double> log_weights, double learning_rate) {
  check_rate(learning_rate);
  if (log_weights.empty()) throw std::invalid_argument("empty ensemble");
  for (double lw : log_weights)
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity())
      throw std::invalid_argument("log weights must be finite or -inf");
  const double z = log_sum_exp(log_weights);
  if (z == kNegInf) throw std::invalid_argument("all weights are zero");
  if (std::abs(z) > 1e-10)
    throw std::invalid_argument("log weights must already sum to 1 within 1e-10");
  for (double& lw : log_weights) lw -= z;
  return ExpertEnsemble(std::move(log_weights), learning_rate);
}

double ExpertEnsemble::weight(int i) const { return std::exp(log_w_[static_cast<std::size_t>(i)]); }

std::vector<double> ExpertEnsemble::weights() const {
  std::vector<double> w(log_w_.size());
  for (std::size_t i = 0; i < log_w_.size(); ++i) w[i] = std::exp(log_w_[i]);
  return w;
}

ExpertEnsemble ewaf_update(const ExpertEnsemble& ens, std::span<const double> losses) {
  check_losses(ens, losses);
  std::vector<double> lw(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i)
    lw[i] = ens.log_weight(static_cast<int>(i)) - ens.learning_rate() * losses[i];
  const double z = log_sum_exp(lw);
  for (double& v : lw) v -= z;
  return ExpertEnsemble::from_log_weights(std::move(lw), ens.learning_rate());
}

double expected_loss(const ExpertEnsemble& ens, std::span<const double> losses) {
  check_losses(ens, losses);
  double s = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i)
    s += ens.weight(static_cast<int>(i)) * losses[i];
  return s;
}

double mix_loss(const ExpertEnsemble& ens, std::span<const double> losses) {
  check_losses(ens, losses);
  std::vector<double> lw(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i)
    lw[i] = ens.log_weight(static_cast<int>(i)) - ens.learning_rate() * losses[i];
  return -log_sum_exp(lw) / ens.learning_rate();
}

double mixability_gap(const ExpertEnsemble& ens, std::span<const double> losses) {
  return expected_loss(ens, losses) - mix_loss(ens, losses);
}

double mix_loss_regret_bound(double initial_weight, double learning_rate) {
  check_rate(learning_rate);
  if (!(initial_weight > 0.0 && initial_weight <= 1.0))
    throw std::invalid_argument("initial weight must lie in (0,1]");
  return -std::log(initial_weight) / learning_rate;
}

double ewaf_regret_bound(int num_experts, std::int64_t horizon) {
  if (num_experts < 1 || horizon < 1)
    throw std::invalid_argument("need at least one expert and one step");
  return std::sqrt(static_cast<double>(horizon) * std::log(static_cast<double>(num_experts)) / 2.0);
}

VirtualEnsemble build_virtual_ensemble(int horizon, double initial_weight, double target_error,
                                       std::span<const double> alpha, std::span<const double> beta,
                                       std::span<const double> base_losses, double learning_rate) {
  if (horizon < 1 || horizon > 20)
    throw std::invalid_argument("virtual ensemble horizon must be in [1,20]");
  if (!(initial_weight > 0.0 && initial_weight < 1.0))
    throw std::invalid_argument("initial weight must lie in (0,1)");
  if (!(target_error >= 0.0 && target_error <= 1.0))
    throw std::invalid_argument("target error must lie in [0,1]");
  if (static_cast<int>(alpha.size()) < horizon - 1 || static_cast<int>(beta.size()) < horizon - 1)
    throw std::invalid_argument("need horizon-1 clamp entries");
  if (static_cast<int>(base_losses.size()) < horizon)
    throw std::invalid_argument("need horizon base losses");
  for (int t = 0; t + 1 < horizon; ++t) {
    if (!(alpha[t] >= 0.0 && alpha[t] <= 1.0) || !(beta[t] >= 0.0 && beta[t] <= 1.0))
      throw std::invalid_argument("clamp entries must lie in [0,1]");
  }

  const std::size_t n = std::size_t{1} << horizon;
  std::vector<double> lw(n);
  for (std::size_t i = 0; i < n; ++i) {
    // bit t of i (1-based t) is the predict/refuse state at step t
    double acc = (i & 1) ? std::log(initial_weight) : std::log1p(-initial_weight);
    for (int t = 1; t < horizon; ++t) {
      const bool cur = (i >> (t - 1)) & 1;
      const bool nxt = (i >> t) & 1;
      const double p = cur ? (nxt ? beta[t - 1] : 1.0 - beta[t - 1])
                           : (nxt ? alpha[t - 1] : 1.0 - alpha[t - 1]);
      acc += std::log(p);
    }
    lw[i] = acc;
  }

  std::vector<std::vector<double>> step_losses(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    std::vector<double>& row = step_losses[static_cast<std::size_t>(t - 1)];
    row.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      row[i] = ((i >> (t - 1)) & 1) ? base_losses[static_cast<std::size_t>(t - 1)] : target_error;
  }

  return VirtualEnsemble{ExpertEnsemble::from_log_weights(std::move(lw), learning_rate),
                         std::move(step_losses)};
}

double predicted_mass(const ExpertEnsemble& ens, int t) {
  if (t < 1) throw std::invalid_argument("step index is 1-based");
  std::vector<double> sel;
  sel.reserve(static_cast<std::size_t>(ens.size()) / 2 + 1);
  for (int i = 0; i < ens.size(); ++i)
    if ((static_cast<std::size_t>(i) >> (t - 1)) & 1) sel.push_back(ens.log_weight(i));
  if (sel.empty()) return 0.0;
  return std::exp(log_sum_exp(sel));
}

}  // namespace safepredict
