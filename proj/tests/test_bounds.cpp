#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "safepredict/bounds.hpp"
#include "safepredict/numeric.hpp"
#include "safepredict/safepredict.hpp"
#include "safepredict/trace.hpp"

using namespace safepredict;

namespace {

using dv = std::vector<double>;

constexpr double kHalvingRatio = 3.414213562373095;  // sqrt(2)/(sqrt(2)-1)

RunTrace constant_trace(int steps, double w, double loss) {
  RunTrace trace;
  for (int t = 1; t <= steps; ++t) {
    TraceRow row;
    row.t = t;
    row.w_p = w;
    row.loss = loss;
    row.decision = true;
    row.eta = 0.1;
    row.epoch = 1;
    trace.rows.push_back(row);
  }
  return trace;
}

}  // namespace

TEST_CASE("horizon-only excess on known points") {
  CHECK(naive_bound(0.5, 10000, 100.0) == doctest::Approx(0.58870501125773735).epsilon(1e-15));
  CHECK(naive_bound(0.5, 10000, 0.0) == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(naive_bound(0.0, 10000, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(naive_bound(1.0, 10000, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(naive_bound(0.5, 0, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(naive_bound(0.5, 10000, -1.0), std::invalid_argument);
}

TEST_CASE("fixed-rate excess and its minimizing rate") {
  CHECK(fixed_rate_bound_optimal(0.5, 0.05, 100.0, 1000.0) ==
        doctest::Approx(0.015818537611996257).epsilon(1e-15));

  const double best = optimal_fixed_rate(0.5, 0.05, 100.0);
  CHECK(fixed_rate_bound(0.5, 0.05, best, 100.0, 1000.0) ==
        doctest::Approx(fixed_rate_bound_optimal(0.5, 0.05, 100.0, 1000.0)).epsilon(1e-12));

  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 100; ++trial) {
    const double eta = 0.001 + 3.0 * u01(gen);
    CHECK(fixed_rate_bound(0.5, 0.05, eta, 100.0, 1000.0) >=
          fixed_rate_bound_optimal(0.5, 0.05, 100.0, 1000.0) - 1e-12);
  }

  CHECK(fixed_rate_bound(0.5, 0.05, 0.5, 100.0, 0.0) ==
        std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(fixed_rate_bound(0.5, 0.05, 0.0, 100.0, 1000.0), std::invalid_argument);
  CHECK_THROWS_AS(fixed_rate_bound(0.5, 0.05, 0.5, -1.0, 1000.0), std::invalid_argument);
}

TEST_CASE("doubling excess is the tuned excess scaled by the epoch factor") {
  CHECK(doubling_bound(0.5, 0.05, 100.0, 1000.0) ==
        doctest::Approx(0.054007865651786534).epsilon(1e-15));
  CHECK(doubling_bound(0.5, 0.05, 100.0, 1000.0) /
            fixed_rate_bound_optimal(0.5, 0.05, 100.0, 1000.0) ==
        doctest::Approx(kHalvingRatio).epsilon(1e-14));
  CHECK(doubling_bound(0.5, 0.05, 0.0, 1000.0) == 0.0);
}

TEST_CASE("shift-aware excess with a realized schedule") {
  const dv schedule(49999, 2e-4);
  CHECK(adaptive_bound(0.5, 0.05, schedule, 100.0, 40000.0) ==
        doctest::Approx(0.0015533260630622865).epsilon(1e-13));

  // no shift reduces to the fixed-rate forms
  CHECK(adaptive_bound(0.5, 0.05, dv{}, 100.0, 1000.0) ==
        doctest::Approx(fixed_rate_bound_optimal(0.5, 0.05, 100.0, 1000.0)).epsilon(1e-15));
  CHECK(adaptive_bound_at_rate(0.5, 0.05, dv{}, 0.7, 100.0, 1000.0) ==
        fixed_rate_bound(0.5, 0.05, 0.7, 100.0, 1000.0));
  CHECK(adaptive_bound_at_rate(0.5, 0.05, dv(10, 0.0), 0.7, 100.0, 1000.0) ==
        fixed_rate_bound(0.5, 0.05, 0.7, 100.0, 1000.0));

  CHECK_THROWS_AS(adaptive_bound(0.5, 0.05, dv{1.0}, 100.0, 1000.0), std::invalid_argument);
  CHECK_THROWS_AS(adaptive_bound(0.5, 0.05, dv{-0.1}, 100.0, 1000.0), std::invalid_argument);
}

TEST_CASE("constant-shift excess and its doubled-epoch form") {
  CHECK(shift_doubling_bound(0.5, 0.05, 2e-4, 50000, 100.0, 40000.0) ==
        doctest::Approx(0.0053036844293434971).epsilon(1e-13));
  CHECK(shift_doubling_bound(0.5, 0.05, 2e-4, 50000, 100.0, 40000.0) /
            constant_shift_bound(0.5, 0.05, 2e-4, 50000, 100.0, 40000.0) ==
        doctest::Approx(kHalvingRatio).epsilon(1e-14));

  CHECK(constant_shift_bound(0.5, 0.05, 0.0, 50000, 100.0, 1000.0) ==
        doctest::Approx(fixed_rate_bound_optimal(0.5, 0.05, 100.0, 1000.0)).epsilon(1e-15));
  CHECK(shift_doubling_bound(0.5, 0.05, 0.0, 50000, 100.0, 1000.0) ==
        doctest::Approx(doubling_bound(0.5, 0.05, 100.0, 1000.0)).epsilon(1e-15));

  CHECK_THROWS_AS(constant_shift_bound(0.5, 0.05, 1.0, 50000, 100.0, 1000.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(shift_doubling_bound(0.5, 0.05, 0.1, 0, 100.0, 1000.0),
                  std::invalid_argument);
}

TEST_CASE("every excess is nonnegative and nonincreasing in the prediction mass") {
  std::mt19937_64 gen(43);
  for (int trial = 0; trial < 100; ++trial) {
    const double d1 = 0.05 + 0.9 * u01(gen);
    const double eps = 0.01 + 0.9 * u01(gen);
    const double v = 500.0 * u01(gen);
    const double t1 = 1.0 + 5000.0 * u01(gen);
    const double t2 = t1 * (1.0 + u01(gen));
    const double a = 0.5 * u01(gen);
    const dv sched(100, a / 100.0);

    const dv at_t1 = {naive_bound(d1, 50000, t1),
                      fixed_rate_bound(d1, eps, 0.4, v, t1),
                      fixed_rate_bound_optimal(d1, eps, v, t1),
                      doubling_bound(d1, eps, v, t1),
                      adaptive_bound(d1, eps, sched, v, t1),
                      constant_shift_bound(d1, eps, a / 100.0, 50000, v, t1),
                      shift_doubling_bound(d1, eps, a / 100.0, 50000, v, t1)};
    const dv at_t2 = {naive_bound(d1, 50000, t2),
                      fixed_rate_bound(d1, eps, 0.4, v, t2),
                      fixed_rate_bound_optimal(d1, eps, v, t2),
                      doubling_bound(d1, eps, v, t2),
                      adaptive_bound(d1, eps, sched, v, t2),
                      constant_shift_bound(d1, eps, a / 100.0, 50000, v, t2),
                      shift_doubling_bound(d1, eps, a / 100.0, 50000, v, t2)};
    for (std::size_t i = 0; i < at_t1.size(); ++i) {
      CHECK(at_t1[i] >= 0.0);
      CHECK(at_t2[i] <= at_t1[i] + 1e-15);
    }
  }
}

TEST_CASE("bound kinds have stable names") {
  CHECK(to_string(BoundKind::naive) == "naive");
  CHECK(to_string(BoundKind::fixed_rate) == "fixed_rate");
  CHECK(to_string(BoundKind::fixed_rate_optimal) == "fixed_rate_optimal");
  CHECK(to_string(BoundKind::doubling) == "doubling");
  CHECK(to_string(BoundKind::adaptive) == "adaptive");
  CHECK(to_string(BoundKind::constant_shift) == "constant_shift");
  CHECK(to_string(BoundKind::shift_doubling) == "shift_doubling");
}

TEST_CASE("trace check matches the variant to its bound and verdict") {
  MetaConfig plain;
  plain.variant = Variant::plain;
  plain.learning_rate = 0.3;

  SafePredict sp(plain, 5);
  const auto trace = sp.run(dv(500, 0.05));  // base loss exactly at target
  const auto report = check_trace(trace, plain);
  CHECK(report.kind == BoundKind::fixed_rate);
  CHECK(report.realized == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(report.satisfied);
  CHECK_FALSE(report.vacuous);
  CHECK(report.slack ==
        doctest::Approx(report.target_error + report.excess - report.realized).epsilon(1e-15));
}

TEST_CASE("trace check covers the remaining variants") {
  std::mt19937_64 gen(47);
  dv losses(4000);
  for (double& l : losses) l = u01(gen) < 0.02 ? 1.0 : 0.0;

  MetaConfig doubling;
  doubling.variant = Variant::doubling;
  SafePredict d(doubling, 3);
  auto report = check_trace(d.run(losses), doubling);
  CHECK(report.kind == BoundKind::doubling);
  CHECK(report.satisfied);

  MetaConfig wsd;
  wsd.variant = Variant::weight_shift_doubling;
  wsd.alpha = 10.0 / 4000;
  wsd.horizon = 4000;
  SafePredict w(wsd, 3);
  report = check_trace(w.run(losses), wsd);
  CHECK(report.kind == BoundKind::shift_doubling);
  CHECK(report.satisfied);

  MetaConfig adaptive;
  adaptive.variant = Variant::adaptive;
  adaptive.learning_rate = 0.2;
  adaptive.alpha_schedule = {0.001};
  SafePredict a(adaptive, 3);
  const auto atrace = a.run(losses);
  report = check_trace(atrace, adaptive);
  CHECK(report.kind == BoundKind::adaptive);
  CHECK(report.satisfied);
  // the size-1 schedule broadcasts across every realized step
  const auto s = summarize(atrace);
  CHECK(report.excess == adaptive_bound_at_rate(0.5, adaptive.target_error,
                                                dv(static_cast<std::size_t>(s.steps), 0.001),
                                                0.2, s.v_star, s.t_star));
}

TEST_CASE("trace check flags vacuous and violated cases") {
  MetaConfig plain;
  plain.variant = Variant::plain;
  plain.learning_rate = 0.1;

  const auto empty = check_trace(RunTrace{}, plain);
  CHECK(empty.vacuous);

  const auto violated = check_trace(constant_trace(100, 1.0, 1.0), plain);
  CHECK_FALSE(violated.satisfied);
  CHECK_FALSE(violated.vacuous);
  CHECK(violated.realized == 1.0);

  MetaConfig bad;
  bad.variant = Variant::plain;  // missing learning rate
  CHECK_THROWS_AS(check_trace(RunTrace{}, bad), std::invalid_argument);
}
