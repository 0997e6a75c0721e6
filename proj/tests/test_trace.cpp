#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "safepredict/numeric.hpp"
#include "safepredict/trace.hpp"

using namespace safepredict;

namespace {

TraceRow make_row(std::int64_t t, double w, double loss, bool decision, double eta, int epoch) {
  TraceRow r;
  r.t = t;
  r.w_p = w;
  r.loss = loss;
  r.decision = decision;
  r.eta = eta;
  r.epoch = epoch;
  return r;
}

bool rows_equal(const TraceRow& a, const TraceRow& b) {
  return a.t == b.t && a.w_p == b.w_p && a.loss == b.loss && a.decision == b.decision &&
         a.eta == b.eta && a.epoch == b.epoch && a.cbr == b.cbr && a.amnesia == b.amnesia;
}

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    read_csv(in);
  } catch (const std::runtime_error& e) {
    return e.what();
  }
  return "";
}

constexpr const char* kHeaderLine = "t,w_p,loss,decision,eta,epoch,cbr,amnesia\n";

}  // namespace

TEST_CASE("summary of constant-weight traces") {
  RunTrace ones;
  for (int t = 1; t <= 5; ++t) ones.rows.push_back(make_row(t, 1.0, 0.0, true, 0.3, 1));
  auto s = summarize(ones);
  CHECK(s.steps == 5);
  CHECK(s.t_star == 5.0);
  CHECK(s.v_star == 0.0);
  CHECK(s.l_star == 0.0);
  CHECK(s.error_rate == 0.0);
  CHECK(s.efficiency == 1.0);
  CHECK(s.predicted == 5);

  RunTrace halves;
  for (int t = 1; t <= 10; ++t) halves.rows.push_back(make_row(t, 0.5, 1.0, t % 2 == 0, 0.3, 1));
  s = summarize(halves);
  CHECK(s.t_star == 5.0);
  CHECK(s.v_star == 2.5);
  CHECK(s.l_star == 5.0);
  CHECK(s.error_rate == 1.0);
  CHECK(s.efficiency == 0.5);
  CHECK(s.predicted == 5);
  CHECK(s.errors == 5.0);
}

TEST_CASE("an empty trace summarizes to zeros") {
  const auto s = summarize(RunTrace{});
  CHECK(s.steps == 0);
  CHECK(s.t_star == 0.0);
  CHECK(s.error_rate == 0.0);
  CHECK(s.efficiency == 0.0);
  CHECK(s.reset_times.empty());
}

TEST_CASE("cumulative fields add up under concatenation") {
  // dyadic weights and binary losses keep every partial sum exact
  std::mt19937_64 gen(3);
  const std::vector<double> weights = {0.0, 0.25, 0.5, 0.75, 1.0};
  RunTrace a, b, joined;
  for (int t = 1; t <= 2000; ++t) {
    const auto row = make_row(t, weights[gen() % 5], gen() % 2 ? 1.0 : 0.0, gen() % 2, 0.3, 1);
    (t <= 800 ? a : b).rows.push_back(row);
    joined.rows.push_back(row);
  }
  const auto sa = summarize(a);
  const auto sb = summarize(b);
  const auto sj = summarize(joined);
  CHECK(sj.steps == sa.steps + sb.steps);
  CHECK(sj.t_star == sa.t_star + sb.t_star);
  CHECK(sj.v_star == sa.v_star + sb.v_star);
  CHECK(sj.l_star == sa.l_star + sb.l_star);
  CHECK(sj.predicted == sa.predicted + sb.predicted);
  CHECK(sj.errors == sa.errors + sb.errors);
}

TEST_CASE("reset times are read off the epoch column") {
  RunTrace trace;
  const int epochs[] = {1, 1, 2, 2, 3};
  for (int t = 1; t <= 5; ++t)
    trace.rows.push_back(make_row(t, 0.5, 0.0, false, 0.3, epochs[t - 1]));
  const auto s = summarize(trace);
  CHECK(s.reset_times == std::vector<std::int64_t>{2, 4});
}

TEST_CASE("csv round-trip preserves every field bitwise") {
  RunTrace trace;
  trace.rows.push_back(make_row(1, 0.1, 1.0 / 3.0, true, 0.61968948553446036, 1));
  trace.rows.push_back(make_row(2, 7.4851829887700591e-5, 0.0, false, 1e-300, 2));
  trace.rows.push_back(make_row(3, std::nextafter(0.5, 1.0), 1.0, true, 131.63844238670797, 3));
  trace.rows[1].cbr = true;
  trace.rows[2].cbr = false;
  trace.rows[2].amnesia = true;

  std::ostringstream out;
  write_csv(trace, out);
  std::istringstream in(out.str());
  const auto back = read_csv(in);
  REQUIRE(back.rows.size() == trace.rows.size());
  for (std::size_t i = 0; i < trace.rows.size(); ++i)
    CHECK(rows_equal(trace.rows[i], back.rows[i]));
}

TEST_CASE("an empty trace writes a header-only file") {
  std::ostringstream out;
  write_csv(RunTrace{}, out);
  CHECK(out.str() == kHeaderLine);
  std::istringstream in(out.str());
  CHECK(read_csv(in).rows.empty());
}

TEST_CASE("windows line endings are accepted") {
  std::string text = std::string(kHeaderLine) + "1,0.5,1,1,0.3,1,,\n2,0.25,0,0,0.3,1,1,0\n";
  std::string crlf;
  for (char c : text) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  std::istringstream in(crlf);
  const auto trace = read_csv(in);
  REQUIRE(trace.rows.size() == 2);
  CHECK(trace.rows[0].w_p == 0.5);
  CHECK_FALSE(trace.rows[0].cbr.has_value());
  CHECK(trace.rows[1].cbr == std::optional<bool>(true));
  CHECK(trace.rows[1].amnesia == std::optional<bool>(false));
}

TEST_CASE("malformed input is reported with its line number") {
  CHECK(error_of("w_p,loss\n").find("header") != std::string::npos);
  CHECK(error_of("").find("empty") != std::string::npos);

  const std::string short_row = std::string(kHeaderLine) + "1,0.5,1,1,0.3,1,,\n2,0.5,1\n";
  CHECK(error_of(short_row).find(":3:") != std::string::npos);

  const std::string bad_cell = std::string(kHeaderLine) + "1,abc,1,1,0.3,1,,\n";
  CHECK(error_of(bad_cell).find(":2:") != std::string::npos);

  const std::string bad_flag = std::string(kHeaderLine) + "1,0.5,1,2,0.3,1,,\n";
  CHECK(error_of(bad_flag).find(":2:") != std::string::npos);

  CHECK_THROWS_AS(read_csv_file("/nonexistent/trace.csv"), std::runtime_error);
}

TEST_CASE("a fifty-thousand-row trace parses in under a second") {
  RunTrace trace;
  std::mt19937_64 gen(9);
  trace.rows.reserve(50000);
  for (int t = 1; t <= 50000; ++t)
    trace.rows.push_back(make_row(t, u01(gen), u01(gen), gen() % 2, 0.1 + u01(gen), 1 + t / 9000));
  std::ostringstream out;
  write_csv(trace, out);

  const auto start = std::chrono::steady_clock::now();
  std::istringstream in(out.str());
  const auto back = read_csv(in);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  REQUIRE(back.rows.size() == 50000);
  CHECK(elapsed.count() < 1.0);

  for (std::size_t i = 0; i < back.rows.size(); i += 997)
    CHECK(rows_equal(trace.rows[i], back.rows[i]));
}

TEST_CASE("doubles serialize to the shortest form that parses back exactly") {
  const double values[] = {0.0,    1.0,       0.1,   1.0 / 3.0, 2.4762734244896921,
                           1e-300, 1e308,     -0.25, 5.0,       0.43818663745141987,
                           std::nextafter(1.0, 2.0)};
  for (double v : values) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(5.0) == "5");
}

TEST_CASE("summaries print as flat key=value lines") {
  RunSummary s;
  s.steps = 10;
  s.t_star = 5.0;
  s.v_star = 2.5;
  s.l_star = 0.5;
  s.error_rate = 0.1;
  s.efficiency = 0.5;
  s.predicted = 5;
  s.errors = 1.0;
  s.reset_times = {2, 4};
  std::ostringstream out;
  write_summary(s, out);
  const std::string text = out.str();
  CHECK(text.find("steps=10\n") != std::string::npos);
  CHECK(text.find("t_star=5\n") != std::string::npos);
  CHECK(text.find("error_rate=0.1\n") != std::string::npos);
  CHECK(text.find("efficiency=0.5\n") != std::string::npos);
  CHECK(text.find("resets=2;4\n") != std::string::npos);
}
