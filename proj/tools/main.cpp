#include <algorithm>
#include <charconv>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "safepredict/baselines.hpp"
#include "safepredict/bounds.hpp"
#include "safepredict/safepredict.hpp"
#include "safepredict/synth.hpp"
#include "safepredict/trace.hpp"

namespace fs = std::filesystem;

using namespace safepredict;

namespace {

// Decorrelates the decision sampler from the stream generator: both are
// seeded per replicate, and identical raw seeds would make the predict draw
// at step t reuse the exact uniform that generated the loss at step t.
constexpr std::uint64_t kSamplerSalt = 0x9e3779b97f4a7c15ULL;

struct Options {
  std::string variant = "doubling";
  double epsilon = 0.05;
  double w_init = 0.5;
  std::optional<double> eta;
  double alpha = 0.0;
  double beta = 1.0;
  std::int64_t horizon = 50000;
  int num_change = 1;
  double eps_low = 0.02;
  double eps_hi = 0.2;
  std::uint64_t seed = 1;
  int replicates = 1;
  std::string out = "out";
  std::string pipeline = "sp";
  std::string config_path;
  std::string losses_path;
  std::string scored_path;
  bool scored_synth = false;
  std::int64_t change_step = -1;  // < 0: horizon / 2
  std::int64_t epoch_len = 100;
  int folds = 5;
};

// CLI11 only reads config files at the root app, so the per-subcommand
// --config is expanded by hand: each flat key=value line becomes a
// --key=value argument inserted right after the subcommand name, skipping
// keys whose flag was given explicitly. Explicit flags therefore win.
std::vector<std::string> inject_config_args(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty() || args.size() < 2) return args;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);

  auto trim = [](std::string s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return std::string();
    return s.substr(begin, s.find_last_not_of(" \t") - begin + 1);
  };
  std::vector<std::string> injected;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string flag = "--" + trim(stripped.substr(0, eq));
    bool overridden = false;
    for (std::size_t i = 2; i < args.size(); ++i) {
      if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) {
        overridden = true;
        break;
      }
    }
    if (!overridden) injected.push_back(flag + "=" + trim(stripped.substr(eq + 1)));
  }

  std::vector<std::string> out;
  out.reserve(args.size() + injected.size());
  out.push_back(args[0]);
  out.push_back(args[1]);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

void add_common(CLI::App& cmd, Options& o) {
  cmd.add_option("--variant", o.variant, "plain|doubling|adaptive|weight-shift-doubling")
      ->check(CLI::IsMember({"plain", "doubling", "adaptive", "weight-shift-doubling"}));
  cmd.add_option("--epsilon", o.epsilon, "target error rate");
  cmd.add_option("--w-init", o.w_init, "initial prediction probability");
  cmd.add_option("--eta", o.eta, "learning rate (plain and adaptive variants)");
  cmd.add_option("--alpha", o.alpha, "refuse->predict shift per update");
  cmd.add_option("--beta", o.beta, "prediction probability cap (adaptive variant)");
  cmd.add_option("--horizon", o.horizon, "synthetic stream length");
  cmd.add_option("--num-change", o.num_change, "change points in the synthetic stream");
  cmd.add_option("--eps-low", o.eps_low, "low Bernoulli rate");
  cmd.add_option("--eps-hi", o.eps_hi, "high Bernoulli rate");
  cmd.add_option("--seed", o.seed, "base seed; replicate r uses seed + r");
  cmd.add_option("--replicates", o.replicates)->check(CLI::PositiveNumber);
  cmd.add_option("--out", o.out, "output directory (env SAFEPREDICT_OUT)")
      ->envname("SAFEPREDICT_OUT");
  cmd.add_option("--config", o.config_path, "flat key=value config file; flags win")
      ->check(CLI::ExistingFile);
}

void add_sources(CLI::App& cmd, Options& o) {
  auto* losses = cmd.add_option("--losses", o.losses_path, "loss-per-line input file")
                     ->check(CLI::ExistingFile);
  auto* scored = cmd.add_option("--scored", o.scored_path, "scored CSV (step,confidence,loss)")
                     ->check(CLI::ExistingFile);
  auto* synth = cmd.add_flag("--scored-synth", o.scored_synth, "synthetic scored stream");
  losses->excludes(scored)->excludes(synth);
  scored->excludes(synth);
  cmd.add_option("--change-step", o.change_step, "scored-synth inversion step (default T/2)");
  cmd.add_option("--pipeline", o.pipeline, "sp|cbr|cbr-sp|amnesic-cbr-sp")
      ->check(CLI::IsMember({"sp", "cbr", "cbr-sp", "amnesic-cbr-sp"}));
  cmd.add_option("--epoch-len", o.epoch_len, "confidence-layer recalibration period")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--folds", o.folds, "calibration cross-validation folds")
      ->check(CLI::PositiveNumber);
}

Variant parse_variant(const std::string& s) {
  if (s == "plain") return Variant::plain;
  if (s == "doubling") return Variant::doubling;
  if (s == "adaptive") return Variant::adaptive;
  if (s == "weight-shift-doubling") return Variant::weight_shift_doubling;
  throw std::invalid_argument("unknown variant: " + s);
}

MetaConfig make_meta(const Options& o, std::int64_t stream_len) {
  MetaConfig cfg;
  cfg.target_error = o.epsilon;
  cfg.initial_weight = o.w_init;
  cfg.variant = parse_variant(o.variant);
  if (o.eta) cfg.learning_rate = *o.eta;
  if (cfg.variant == Variant::weight_shift_doubling) {
    cfg.alpha = o.alpha;
    cfg.horizon = stream_len;
  }
  if (cfg.variant == Variant::adaptive) {
    cfg.alpha_schedule = {o.alpha};
    cfg.beta_schedule = {o.beta};
  }
  cfg.validate();
  return cfg;
}

ChangePointSpec make_change_spec(const Options& o, std::uint64_t seed) {
  ChangePointSpec spec;
  spec.horizon = o.horizon;
  spec.num_change = o.num_change;
  spec.eps_low = o.eps_low;
  spec.eps_hi = o.eps_hi;
  spec.seed = seed;
  spec.validate();
  return spec;
}

ScoredStreamSpec make_scored_spec(const Options& o, std::uint64_t seed) {
  ScoredStreamSpec spec;
  spec.horizon = o.horizon;
  spec.change_step = o.change_step >= 0 ? o.change_step : o.horizon / 2;
  spec.seed = seed;
  spec.validate();
  return spec;
}

std::vector<double> read_loss_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<double> losses;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line == "loss") continue;
    double v = 0.0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || p != line.data() + line.size() || !(v >= 0.0 && v <= 1.0)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad loss '" + line + "'");
    }
    losses.push_back(v);
  }
  return losses;
}

void write_bound_report(const BoundReport& r, std::ostream& out) {
  out << "kind=" << to_string(r.kind) << '\n';
  out << "target_error=" << format_double(r.target_error) << '\n';
  out << "excess=" << format_double(r.excess) << '\n';
  out << "realized=" << format_double(r.realized) << '\n';
  out << "slack=" << format_double(r.slack) << '\n';
  out << "satisfied=" << (r.satisfied ? 1 : 0) << '\n';
  out << "vacuous=" << (r.vacuous ? 1 : 0) << '\n';
}

void write_bound_report_file(const BoundReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_bound_report(r, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

double mean_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct RepResult {
  RunTrace trace;
  RunSummary summary;
  std::optional<BoundReport> bound;
};

RepResult run_replicate(const Options& o, int rep,
                        const std::vector<double>* fixed_losses,
                        const std::vector<ScoredRecord>* fixed_records) {
  const std::uint64_t stream_seed = o.seed + static_cast<std::uint64_t>(rep);
  const std::uint64_t sampler_seed = stream_seed ^ kSamplerSalt;
  RepResult res;
  if (o.pipeline == "sp") {
    std::vector<double> losses;
    if (fixed_losses) {
      losses = *fixed_losses;
    } else if (fixed_records) {
      for (const ScoredRecord& r : *fixed_records) losses.push_back(r.loss);
    } else if (o.scored_synth) {
      for (const ScoredRecord& r : generate_scored(make_scored_spec(o, stream_seed)))
        losses.push_back(r.loss);
    } else {
      losses = generate_losses(make_change_spec(o, stream_seed));
    }
    const MetaConfig cfg = make_meta(o, static_cast<std::int64_t>(losses.size()));
    SafePredict sp(cfg, sampler_seed);
    res.trace = sp.run(losses);
    res.bound = check_trace(res.trace, cfg);
  } else {
    const std::vector<ScoredRecord> records =
        fixed_records ? *fixed_records : generate_scored(make_scored_spec(o, stream_seed));
    CbrConfig cbr;
    cbr.target_error = o.epsilon;
    cbr.epoch_len = o.epoch_len;
    cbr.folds = o.folds;
    if (o.pipeline == "cbr") {
      res.trace = run_cbr(records, cbr);
    } else {
      CombinedConfig cc;
      cc.cbr = cbr;
      cc.sp = make_meta(o, static_cast<std::int64_t>(records.size()));
      cc.amnesic = o.pipeline == "amnesic-cbr-sp";
      cc.seed = sampler_seed;
      res.trace = run_combined(records, cc);
      res.bound = check_trace(res.trace, cc.sp);
    }
  }
  res.summary = summarize(res.trace);
  return res;
}

int cmd_run(const Options& o) {
  if (o.pipeline != "sp" && o.scored_path.empty() && !o.scored_synth) {
    throw std::invalid_argument("pipeline '" + o.pipeline + "' needs --scored or --scored-synth");
  }
  fs::create_directories(o.out);
  std::optional<std::vector<double>> file_losses;
  std::optional<std::vector<ScoredRecord>> file_records;
  if (!o.losses_path.empty()) file_losses = read_loss_file(o.losses_path);
  if (!o.scored_path.empty()) file_records = read_scored_csv_file(o.scored_path);

  std::vector<std::future<RepResult>> futures;
  futures.reserve(static_cast<std::size_t>(o.replicates));
  for (int r = 0; r < o.replicates; ++r) {
    futures.push_back(std::async(std::launch::async, run_replicate, std::cref(o), r,
                                 file_losses ? &*file_losses : nullptr,
                                 file_records ? &*file_records : nullptr));
  }

  bool all_satisfied = true;
  std::vector<double> error_rates, efficiencies;
  std::ofstream agg(fs::path(o.out) / "aggregate.txt");
  if (!agg) throw std::runtime_error("cannot open for writing: " + o.out + "/aggregate.txt");
  for (int r = 0; r < o.replicates; ++r) {
    const RepResult res = futures[static_cast<std::size_t>(r)].get();
    const std::string tag = "_r" + std::to_string(r);
    write_csv_file(res.trace, (fs::path(o.out) / ("trace" + tag + ".csv")).string());
    write_summary_file(res.summary, (fs::path(o.out) / ("summary" + tag + ".txt")).string());
    agg << "replicate=" << r << " seed=" << o.seed + static_cast<std::uint64_t>(r)
        << " t_star=" << format_double(res.summary.t_star)
        << " error_rate=" << format_double(res.summary.error_rate)
        << " efficiency=" << format_double(res.summary.efficiency);
    if (res.bound) {
      write_bound_report_file(*res.bound, (fs::path(o.out) / ("bound" + tag + ".txt")).string());
      agg << " bound_excess=" << format_double(res.bound->excess)
          << " bound_satisfied=" << (res.bound->satisfied ? 1 : 0);
      all_satisfied = all_satisfied && res.bound->satisfied;
    }
    agg << '\n';
    error_rates.push_back(res.summary.error_rate);
    efficiencies.push_back(res.summary.efficiency);
  }
  agg << "mean_error_rate=" << format_double(mean_of(error_rates)) << '\n';
  agg << "median_error_rate=" << format_double(median_of(error_rates)) << '\n';
  agg << "mean_efficiency=" << format_double(mean_of(efficiencies)) << '\n';
  agg << "median_efficiency=" << format_double(median_of(efficiencies)) << '\n';
  agg << "all_bounds_satisfied=" << (all_satisfied ? 1 : 0) << '\n';
  if (!agg) throw std::runtime_error("write failed: " + o.out + "/aggregate.txt");
  return all_satisfied ? 0 : 1;
}

int cmd_oracle(const Options& o) {
  fs::create_directories(o.out);
  const ChangePointSpec spec = make_change_spec(o, o.seed);
  const std::vector<double> losses = generate_losses(spec);
  const std::vector<double> weights = oracle_weights(spec, o.epsilon);
  RunTrace trace;
  trace.rows.reserve(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    TraceRow row;
    row.t = static_cast<std::int64_t>(i) + 1;
    row.w_p = weights[i];
    row.loss = losses[i];
    row.decision = weights[i] == 1.0;
    row.eta = 0.0;
    row.epoch = 0;
    trace.rows.push_back(row);
  }
  write_csv_file(trace, (fs::path(o.out) / "oracle_trace.csv").string());
  write_summary_file(summarize(trace), (fs::path(o.out) / "oracle_summary.txt").string());
  return 0;
}

int cmd_series(const std::vector<std::string>& inputs, const std::string& out) {
  fs::create_directories(out);
  for (const std::string& input : inputs) {
    const RunTrace trace = read_csv_file(input);
    const fs::path dest = fs::path(out) / (fs::path(input).stem().string() + "_series.csv");
    std::ofstream f(dest);
    if (!f) throw std::runtime_error("cannot open for writing: " + dest.string());
    f << "t,efficiency,error_rate\n";
    double t_star = 0.0;
    double l_star = 0.0;
    std::int64_t steps = 0;
    for (const TraceRow& row : trace.rows) {
      ++steps;
      t_star += row.w_p;
      l_star += row.w_p * row.loss;
      f << row.t << ',' << format_double(t_star / static_cast<double>(steps)) << ','
        << format_double(t_star > 0.0 ? l_star / t_star : 0.0) << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + dest.string());
  }
  return 0;
}

int cmd_grid(const Options& o, std::vector<double> alphas) {
  fs::create_directories(o.out);
  if (alphas.empty()) {
    const double t = static_cast<double>(o.horizon);
    alphas = {0.0, 1.0 / t, 5.0 / t, 10.0 / t};
  }
  std::vector<std::vector<std::future<RepResult>>> futures(alphas.size());
  std::vector<Options> per_alpha(alphas.size(), o);
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    per_alpha[a].alpha = alphas[a];
    for (int r = 0; r < o.replicates; ++r) {
      futures[a].push_back(std::async(std::launch::async, run_replicate,
                                      std::cref(per_alpha[a]), r, nullptr, nullptr));
    }
  }

  std::ofstream grid(fs::path(o.out) / "grid.csv");
  if (!grid) throw std::runtime_error("cannot open for writing: " + o.out + "/grid.csv");
  grid << "alpha,replicate,seed,t_star,v_star,l_star,error_rate,efficiency,excess,satisfied\n";
  std::ofstream agg(fs::path(o.out) / "grid_summary.txt");
  if (!agg) throw std::runtime_error("cannot open for writing: " + o.out + "/grid_summary.txt");
  bool all_satisfied = true;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    std::vector<double> error_rates, efficiencies;
    for (int r = 0; r < o.replicates; ++r) {
      const RepResult res = futures[a][static_cast<std::size_t>(r)].get();
      grid << format_double(alphas[a]) << ',' << r << ','
           << o.seed + static_cast<std::uint64_t>(r) << ','
           << format_double(res.summary.t_star) << ',' << format_double(res.summary.v_star)
           << ',' << format_double(res.summary.l_star) << ','
           << format_double(res.summary.error_rate) << ','
           << format_double(res.summary.efficiency) << ','
           << format_double(res.bound ? res.bound->excess : 0.0) << ','
           << (res.bound && res.bound->satisfied ? 1 : 0) << '\n';
      all_satisfied = all_satisfied && res.bound && res.bound->satisfied;
      error_rates.push_back(res.summary.error_rate);
      efficiencies.push_back(res.summary.efficiency);
    }
    agg << "alpha=" << format_double(alphas[a])
        << " median_error_rate=" << format_double(median_of(error_rates))
        << " mean_error_rate=" << format_double(mean_of(error_rates))
        << " median_efficiency=" << format_double(median_of(efficiencies))
        << " mean_efficiency=" << format_double(mean_of(efficiencies)) << '\n';
  }
  agg << "all_bounds_satisfied=" << (all_satisfied ? 1 : 0) << '\n';
  if (!grid || !agg) throw std::runtime_error("write failed in: " + o.out);
  return all_satisfied ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SafePredict refusal meta-algorithm experiment harness"};
  app.require_subcommand(1);

  Options run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "run one configuration, emit traces and bounds");
  add_common(*run_cmd, run_opts);
  add_sources(*run_cmd, run_opts);

  Options oracle_opts;
  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "hindsight predict-iff-valid baseline on a synthetic stream");
  add_common(*oracle_cmd, oracle_opts);

  std::vector<std::string> series_inputs;
  std::string series_out = "out";
  CLI::App* series_cmd =
      app.add_subcommand("series", "cumulative efficiency/error time series from traces");
  series_cmd->add_option("traces", series_inputs, "trace CSV files")
      ->required()
      ->check(CLI::ExistingFile);
  series_cmd->add_option("--out", series_out, "output directory (env SAFEPREDICT_OUT)")
      ->envname("SAFEPREDICT_OUT");

  Options grid_opts;
  grid_opts.variant = "weight-shift-doubling";
  std::vector<double> grid_alphas;
  CLI::App* grid_cmd = app.add_subcommand("grid", "sweep alpha on the synthetic stream");
  add_common(*grid_cmd, grid_opts);
  grid_cmd->add_option("--alphas", grid_alphas, "alpha values (default 0,1/T,5/T,10/T)")
      ->delimiter(',');

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = inject_config_args(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    args.erase(args.begin());                 // drop the program name
    std::reverse(args.begin(), args.end());   // App::parse consumes back to front
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_opts);
    if (oracle_cmd->parsed()) return cmd_oracle(oracle_opts);
    if (series_cmd->parsed()) return cmd_series(series_inputs, series_out);
    if (grid_cmd->parsed()) return cmd_grid(grid_opts, grid_alphas);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
