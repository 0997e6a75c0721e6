#include "safepredict/trace.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace safepredict {

namespace {

const char* kHeader = "t,w_p,loss,decision,eta,epoch,cbr,amnesia";

[[noreturn]] void fail(const std::string& name, std::size_t line, const std::string& what) {
  throw std::runtime_error(name + ":" + std::to_string(line) + ": " + what);
}

double parse_double_field(std::string_view s, const std::string& name, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(name, line, "bad numeric field '" + std::string(s) + "'");
  return v;
}

std::int64_t parse_int_field(std::string_view s, const std::string& name, std::size_t line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(name, line, "bad integer field '" + std::string(s) + "'");
  return v;
}

bool parse_bool_field(std::string_view s, const std::string& name, std::size_t line) {
  if (s == "0") return false;
  if (s == "1") return true;
  fail(name, line, "bad boolean field '" + std::string(s) + "'");
}

}  // namespace

RunSummary summarize(const RunTrace& trace) {
  RunSummary s;
  s.steps = static_cast<std::int64_t>(trace.rows.size());
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const TraceRow& r = trace.rows[i];
    s.t_star += r.w_p;
    s.v_star += r.w_p * (1.0 - r.w_p);
    s.l_star += r.w_p * r.loss;
    if (r.decision) {
      s.predicted += 1;
      s.errors += r.loss;
    }
    if (i + 1 < trace.rows.size() && trace.rows[i + 1].epoch > r.epoch)
      s.reset_times.push_back(r.t);
  }
  s.error_rate = s.t_star > 0.0 ? s.l_star / s.t_star : 0.0;
  s.efficiency = s.steps > 0 ? s.t_star / static_cast<double>(s.steps) : 0.0;
  return s;
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), p);
}

void write_csv(const RunTrace& trace, std::ostream& out) {
  out << kHeader << '\n';
  for (const TraceRow& r : trace.rows) {
    out << r.t << ',' << format_double(r.w_p) << ',' << format_double(r.loss) << ','
        << (r.decision ? '1' : '0') << ',' << format_double(r.eta) << ',' << r.epoch << ',';
    if (r.cbr) out << (*r.cbr ? '1' : '0');
    out << ',';
    if (r.amnesia) out << (*r.amnesia ? '1' : '0');
    out << '\n';
  }
}

void write_csv_file(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(trace, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

RunTrace read_csv(std::istream& in, const std::string& name) {
  RunTrace trace;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw std::runtime_error(name + ": empty input");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) fail(name, lineno, "expected header '" + std::string(kHeader) + "'");
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 8> f;
    std::string_view rest = line;
    for (int i = 0; i < 8; ++i) {
      auto pos = rest.find(',');
      if (i < 7) {
        if (pos == std::string_view::npos) fail(name, lineno, "expected 8 fields");
        f[i] = rest.substr(0, pos);
        rest = rest.substr(pos + 1);
      } else {
        if (pos != std::string_view::npos) fail(name, lineno, "expected 8 fields");
        f[i] = rest;
      }
    }
    TraceRow r;
    r.t = parse_int_field(f[0], name, lineno);
    r.w_p = parse_double_field(f[1], name, lineno);
    r.loss = parse_double_field(f[2], name, lineno);
    r.decision = parse_bool_field(f[3], name, lineno);
    r.eta = parse_double_field(f[4], name, lineno);
    r.epoch = static_cast<int>(parse_int_field(f[5], name, lineno));
    if (!f[6].empty()) r.cbr = parse_bool_field(f[6], name, lineno);
    if (!f[7].empty()) r.amnesia = parse_bool_field(f[7], name, lineno);
    trace.rows.push_back(r);
  }
  return trace;
}

RunTrace read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return read_csv(in, path);
}

void write_summary(const RunSummary& s, std::ostream& out) {
  out << "steps=" << s.steps << '\n';
  out << "t_star=" << format_double(s.t_star) << '\n';
  out << "v_star=" << format_double(s.v_star) << '\n';
  out << "l_star=" << format_double(s.l_star) << '\n';
  out << "error_rate=" << format_double(s.error_rate) << '\n';
  out << "efficiency=" << format_double(s.efficiency) << '\n';
  out << "predicted=" << s.predicted << '\n';
  out << "errors=" << format_double(s.errors) << '\n';
  out << "resets=";
  for (std::size_t i = 0; i < s.reset_times.size(); ++i) {
    if (i) out << ';';
    out << s.reset_times[i];
  }
  out << '\n';
}

void write_summary_file(const RunSummary& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_summary(s, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace safepredict
