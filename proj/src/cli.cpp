#include "brw/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "brw/config.hpp"
#include "brw/error.hpp"
#include "brw/numeric.hpp"
#include "brw/oracle.hpp"
#include "brw/rates.hpp"
#include "brw/report.hpp"
#include "brw/simulate.hpp"
#include "brw/strategy.hpp"

namespace brw::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Options {
  std::string model_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  std::uint64_t replicas = 10000;
  std::string n_list;
  std::string ell;
  std::string x_grid;
  std::uint64_t cap = kDefaultPopulationCap;
  double span = 0.05;
  double p_cut = 1e-12;
  int trunc = 64;
  std::string eps_list = "1e-3";
  double delta = 0.01;
  std::optional<double> eta;
  std::string schedule = "auto";
  std::string estimator = "oracle";
  bool tail_slope = false;
  std::string report_kind;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_double(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error(ErrorCode::ConfigError, std::string("bad ") + what + ": " + s);
  return v;
}

std::vector<int> parse_n_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : split(s, ',')) {
    const double v = to_double(part, "--n entry");
    if (v < 0 || v != std::floor(v) || v > 1e7) throw Error(ErrorCode::ConfigError, "--n entries must be integers >= 0");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "--n is required");
  return out;
}

// "a,b,c" or "lo:hi:count".
std::vector<double> parse_grid(const std::string& s) {
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw Error(ErrorCode::ConfigError, "grid range is lo:hi:count");
    const double lo = to_double(parts[0], "grid start");
    const double hi = to_double(parts[1], "grid end");
    const double count = to_double(parts[2], "grid count");
    if (count < 1 || count != std::floor(count)) throw Error(ErrorCode::ConfigError, "grid count must be a positive integer");
    std::vector<double> out;
    const int c = static_cast<int>(count);
    for (int i = 0; i < c; ++i) out.push_back(c == 1 ? lo : lo + (hi - lo) * i / (c - 1));
    return out;
  }
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(to_double(part, "grid entry"));
  return out;
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
  out.back() = hi;
  return out;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class ArtifactWriter {
 public:
  ArtifactWriter(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
    fs::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& content, Clock::time_point start,
             const std::vector<double>& record_times = {}) {
    const fs::path path = dir_ / name;
    write_atomic(path, content);
    Json meta;
    meta["artifact"] = name;
    meta["command"] = command_;
    meta["written_utc"] = utc_now();
    meta["wall_time_ms"] = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    if (!record_times.empty()) meta["record_wall_time_ms"] = record_times;
    fs::path meta_path = path;
    meta_path += ".meta.json";
    write_atomic(meta_path, dump_json(meta) + "\n");
  }

 private:
  fs::path dir_;
  std::string command_;
};

// Lattice model for the oracle paths; parametric steps are discretized.
Model lattice_model(const Model& model, const Options& o) {
  if (model.step.is_lattice()) return model;
  const Discretization d = discretize_step(model.step, o.span, o.p_cut);
  return Model::make(model.offspring, d.law);
}

RateReport report(std::string name, double value, std::map<std::string, double> params, double argopt = 0.0,
                  double residual = 0.0) {
  RateReport r;
  r.name = std::move(name);
  r.value = value;
  r.params = std::move(params);
  r.argopt = argopt;
  r.residual = residual;
  if (!std::isfinite(value)) r.flag = value < 0 ? "probability decays faster than exponentially" : "infinite";
  return r;
}

std::vector<RateReport> collect_rates(const Model& model, const Options& o) {
  const ModelConstants& c = model.constants;
  const OffspringLaw& off = model.offspring;
  const StepLaw& step = model.step;
  std::vector<RateReport> out;
  out.push_back(report("x_star", c.x_star, {{"log_m", c.log_m}}, c.x_star, c.speed_residual));
  if (!model.has_theta()) return out;
  const double theta = c.theta_star;
  const Optimum tilt = brw::theta_star(step, c.log_m, c.x_star);
  out.push_back(report("theta_star", theta, {{"x_star", c.x_star}}, tilt.argopt, tilt.residual));
  if (!o.n_list.empty()) {
    for (int n : parse_n_list(o.n_list)) {
      out.push_back(report("m_n", m_n(model, n), {{"n", static_cast<double>(n)}, {"x_star", c.x_star}, {"theta_star", theta}}));
    }
  }

  std::vector<double> xs;
  if (!o.x_grid.empty()) {
    xs = parse_grid(o.x_grid);
  } else if (std::isfinite(c.L)) {
    xs = linspace(-c.L, c.x_star, 11);
  } else {
    xs = linspace(c.x_star - 2.0, c.x_star, 11);
  }
  for (double x : xs) {
    const Optimum r = rate_I_traced(step, x);
    out.push_back(report("rate_I", r.value, {{"x", x}}, r.argopt, r.residual));
  }

  const double b = static_cast<double>(off.b());
  if (off.is_boettcher()) {
    if (step.is_lattice()) {
      const double beta = beta_moderate(model);
      const std::map<std::string, double> p{{"b", b}, {"x_star", c.x_star}, {"L", c.L}, {"theta_star", theta}};
      out.push_back(report("beta", beta, p));
      out.push_back(report("smallball_bounded_exponent", smallball_bounded_exponent(beta, theta), p));
      for (double x : xs) {
        if (x < -c.L || x > c.x_star) continue;
        out.push_back(report("rate_bounded", rate_bounded(model, x), {{"x", x}, {"b", b}, {"x_star", c.x_star}, {"L", c.L}}));
      }
    } else if (step.kind() == StepKind::WeibullTail) {
      const std::map<std::string, double> p{{"alpha", step.alpha()}, {"lambda", step.lambda()}, {"b", b}, {"theta_star", theta}};
      out.push_back(report("rate_weibull", rate_weibull(step.alpha(), step.lambda(), b), p));
      out.push_back(report("smallball_weibull", smallball_weibull(step.alpha(), step.lambda(), b, theta), p));
    } else {
      const std::map<std::string, double> p{{"alpha", step.alpha()}, {"b", b}, {"theta_star", theta}};
      out.push_back(report("rate_gumbel", rate_gumbel(step.alpha(), b), p));
      out.push_back(report("smallball_gumbel", smallball_gumbel(step.alpha(), b, theta), p));
    }
  }
  if (off.is_schroeder()) {
    const double gamma = schroder_gamma(off);
    out.push_back(report("gamma", gamma, {{"q", extinction_probability(off)}}));
    if (std::isfinite(gamma)) {
      const Optimum ts = schroder_t_star(model);
      out.push_back(report("t_star", ts.value, {{"gamma", gamma}, {"x_star", c.x_star}}, ts.argopt, ts.residual));
    }
    std::vector<double> ells{0.0};
    if (!o.ell.empty()) ells = {EllSchedule::parse(o.ell).limsup_ratio()};
    for (double ls : ells) {
      const Optimum h = schroder_H(model, ls);
      out.push_back(report("schroder_H", h.value, {{"ell_star", ls}, {"gamma", gamma}, {"x_star", c.x_star}}, h.argopt, h.residual));
    }
    for (double x : xs) {
      if (x >= c.x_star || (std::isfinite(c.L) && x < -c.L)) continue;
      const LinearRate r = schroder_linear_rate(model, x);
      out.push_back(report("schroder_linear_rate", r.value, {{"x", x}, {"gamma", gamma}, {"sup_form", r.sup_form}, {"inf_form", r.inf_form}},
                           r.argmax_a, std::abs(r.sup_form - r.inf_form)));
    }
  }
  for (double x : xs) {
    if (x > c.x_star) out.push_back(report("large_dev_rate", large_dev_rate(model, x), {{"x", x}}));
  }
  return out;
}

int cmd_rates(const Model& model, const Options& o, ArtifactWriter& w, Clock::time_point start) {
  Json doc;
  doc["model_constants"] = constants_json(model);
  Json list = Json::array();
  for (const auto& r : collect_rates(model, o)) list.push_back(to_json(r));
  doc["rates"] = list;
  w.write("rates.json", dump_json(doc) + "\n", start);
  return kExitOk;
}

int cmd_oracle(const Model& model, const Options& o, ArtifactWriter& w, Clock::time_point start) {
  const Model lm = lattice_model(model, o);
  const auto ns = parse_n_list(o.n_list);
  const auto grids = max_cdf_recursion(lm, ns);
  std::string csv = csv_constants_line(model);
  csv += "n,x,G,F_direct_if_representable,conditioned_G\n";
  for (const LogCdfGrid& g : grids) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double G = g.G[i];
      csv += std::to_string(g.n) + "," + format_double(g.x_at(i)) + "," + format_double(G) + ",";
      if (G <= 700.0) csv += format_double(std::exp(-G));
      csv += ",";
      if (g.G_surv) csv += format_double((*g.G_surv)[i]);
      csv += "\n";
    }
  }
  w.write("oracle_cdf.csv", csv, start);
  return kExitOk;
}

int cmd_gw(const Model& model, const Options& o, ArtifactWriter& w, Clock::time_point start) {
  const auto ns = parse_n_list(o.n_list);
  if (o.trunc < 0) throw Error(ErrorCode::ConfigError, "--trunc must be >= 0");
  std::string csv = csv_constants_line(model);
  csv += "n,k,probability,tail_mass\n";
  for (int n : ns) {
    const PgfSeries s = gw_pmf(model.offspring, n, o.trunc);
    const std::string tail = format_double(s.tail_mass());
    for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
      csv += std::to_string(n) + "," + std::to_string(k) + "," + format_double(s.coeffs[k]) + "," + tail + "\n";
    }
  }
  w.write("gw_pmf.csv", csv, start);
  return kExitOk;
}

int cmd_simulate(const Model& model, const Options& o, ArtifactWriter& w, Clock::time_point start) {
  const auto ns = parse_n_list(o.n_list);
  std::string csv = csv_constants_line(model);
  csv += "n,replica,max,martingale,population\n";
  std::string jsonl;
  std::vector<double> times;
  for (int n : ns) {
    const auto t0 = Clock::now();
    const ForwardSamples s = simulate_forward(model, n, o.replicas, o.seed, o.cap);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    const double total = static_cast<double>(o.replicas);
    CompensatedSum dsum;
    CompensatedSum dsq;
    double survivors = 0.0;
    CompensatedSum zsum;
    for (std::size_t r = 0; r < s.max.size(); ++r) {
      csv += std::to_string(n) + "," + std::to_string(r) + "," + format_double(s.max[r]) + "," +
             format_double(s.martingale[r]) + "," + std::to_string(s.population[r]) + "\n";
      dsum.add(s.martingale[r]);
      dsq.add(s.martingale[r] * s.martingale[r]);
      if (s.population[r] > 0) survivors += 1.0;
      zsum.add(static_cast<double>(s.population[r]));
    }
    const double mean = dsum.value() / total;
    const double var = total > 1.0 ? std::max(0.0, (dsq.value() - total * mean * mean) / (total - 1.0)) : 0.0;
    const auto record = [&](std::string name, double est, double se) {
      EstimateRecord rec;
      rec.name = std::move(name);
      rec.estimate = est;
      rec.std_error = se;
      rec.replicas = o.replicas;
      rec.seed = o.seed;
      rec.method = EstimateMethod::ForwardMc;
      rec.details = {{"n", static_cast<double>(n)}};
      rec.wall_time_ms = ms;
      jsonl += dump_json(to_json(rec, false)) + "\n";
      times.push_back(ms);
    };
    const double surv = survivors / total;
    record("mean_martingale", mean, std::sqrt(var / total));
    record("survival_fraction", surv, std::sqrt(surv * (1.0 - surv) / total));
    record("mean_population", zsum.value() / total, 0.0);
    if (o.tail_slope) {
      const TailFit fit = fit_tail_slope(s.martingale);
      EstimateRecord rec;
      rec.name = "d_tail_slope";
      rec.estimate = fit.slope;
      rec.std_error = fit.std_error;
      rec.replicas = o.replicas;
      rec.seed = o.seed;
      rec.method = EstimateMethod::TailRegression;
      rec.details = {{"n", static_cast<double>(n)}, {"window_lo", fit.window_lo}, {"window_hi", fit.window_hi},
                     {"points", static_cast<double>(fit.points)}};
      jsonl += dump_json(to_json(rec, false)) + "\n";
      times.push_back(ms);
    }
  }
  w.write("simulate.csv", csv, start);
  w.write("simulate.jsonl", jsonl, start, times);
  return kExitOk;
}

StrategySchedule pick_schedule(const Model& model, const Options& o, double target_size, int n, bool moderate) {
  const StepLaw& step = model.step;
  std::string kind = o.schedule;
  if (kind == "auto") {
    kind = step.kind() == StepKind::WeibullTail && step.alpha() > 1.0 ? "weibull"
           : step.kind() == StepKind::GumbelTail                       ? "gumbel"
                                                                       : "bounded";
  }
  const int b = model.offspring.b();
  if (kind == "weibull") return weibull_schedule(step.alpha(), b, target_size);
  if (kind == "gumbel") return gumbel_schedule(step.alpha(), b, target_size);
  if (kind != "bounded") throw Error(ErrorCode::ConfigError, "unknown schedule: " + o.schedule);
  if (!std::isfinite(model.constants.L)) throw Error(ErrorCode::ConfigError, "bounded schedule needs a step bounded below");
  // L' = L - eta; a lattice atom at -L allows eta = 0.
  const double L = model.constants.L;
  const double eta = o.eta.value_or(step.atom_mass(-L) > 0.0 ? 0.0 : L / 100.0);
  const double shift = L - eta;
  const double xs = model.constants.x_star;
  // Depth that lifts the subtree level to the typical maximum.
  const double t_real = moderate ? target_size / (shift + xs) : (xs - target_size) * n / (xs + shift);
  const int t = std::clamp(static_cast<int>(std::ceil(t_real - 1e-9)), 1, std::max(1, n));
  return bounded_schedule(b, t, shift);
}

int cmd_strategy(const Model& model, const Options& o, ArtifactWriter& w, Clock::time_point start) {
  const auto ns = parse_n_list(o.n_list);
  std::unique_ptr<TailEstimator> tail;
  if (o.estimator == "oracle") {
    tail = make_oracle_estimator(model, o.span, o.p_cut);
  } else if (o.estimator == "mc") {
    tail = make_mc_estimator(model, o.replicas, o.seed, o.cap);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown estimator: " + o.estimator);
  }
  if (o.ell.empty() == o.x_grid.empty()) throw Error(ErrorCode::ConfigError, "give exactly one of --ell and --x");
  std::string jsonl;
  std::vector<double> times;
  for (int n : ns) {
    std::vector<std::pair<DeviationTarget, double>> targets;
    if (!o.ell.empty()) {
      const EllSchedule sched = EllSchedule::parse(o.ell);
      check_moderate_hypothesis(model, sched);
      for (double ell : sched.values(n)) targets.push_back({{DeviationTarget::Kind::Moderate, ell}, ell});
    } else {
      for (double x : parse_grid(o.x_grid)) targets.push_back({{DeviationTarget::Kind::Linear, x}, x});
    }
    for (const auto& [target, size] : targets) {
      const bool moderate = target.kind == DeviationTarget::Kind::Moderate;
      const StrategySchedule s = pick_schedule(model, o, size, n, moderate);
      EstimateRecord rec = strategy_lower_bound(model, n, target, s, *tail);
      rec.seed = o.estimator == "mc" ? o.seed : 0;
      rec.replicas = o.estimator == "mc" ? o.replicas : 1;
      times.push_back(rec.wall_time_ms.value_or(0.0));
      jsonl += dump_json(to_json(rec, false)) + "\n";
    }
  }
  w.write("strategy_bound.jsonl", jsonl, start, times);
  return kExitOk;
}

int cmd_smallball(const Model& model, const Options& o, ArtifactWriter& w, Clock::time_point start) {
  std::string jsonl;
  std::vector<double> times;
  for (double eps : parse_grid(o.eps_list)) {
    const EstimateRecord rec = smallball_strategy_bound(model, eps, o.delta);
    times.push_back(rec.wall_time_ms.value_or(0.0));
    jsonl += dump_json(to_json(rec, false)) + "\n";
  }
  w.write("smallball.jsonl", jsonl, start, times);
  return kExitOk;
}

int cmd_report(const Model& model, const Options& o, ArtifactWriter& w, Clock::time_point start) {
  const auto ns = parse_n_list(o.n_list);
  if (o.report_kind == "moderate") {
    if (o.ell.empty()) throw Error(ErrorCode::ConfigError, "report moderate needs --ell");
    const EllSchedule sched = EllSchedule::parse(o.ell);
    check_moderate_hypothesis(model, sched);
    const Model lm = lattice_model(model, o);
    w.write("report_moderate.csv", moderate_csv(model, report_moderate(lm, ns, sched)), start);
    return kExitOk;
  }
  if (o.report_kind != "linear") throw Error(ErrorCode::ConfigError, "report kind is moderate or linear");
  const Model lm = lattice_model(model, o);
  if (!o.ell.empty()) {
    w.write("report_linear.csv", linear_csv(model, report_linear_ell(lm, ns, EllSchedule::parse(o.ell)), "ell"), start);
    return kExitOk;
  }
  if (o.x_grid.empty()) throw Error(ErrorCode::ConfigError, "report linear needs --x or --ell");
  w.write("report_linear.csv", linear_csv(model, report_linear(lm, ns, parse_grid(o.x_grid)), "x"), start);
  return kExitOk;
}

void diagnostic(std::ostream& err, std::string_view code, const std::string& message) {
  Json d;
  d["error"] = std::string(code);
  d["message"] = message;
  err << dump_json(d) << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Deviation rates, exact oracles and simulation for branching random walks", "brw"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--model", o.model_path, "Model config (JSON)")->required();
  app.add_option("--out", o.out_dir, "Output directory");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--replicas", o.replicas, "Monte Carlo replicas");
  app.add_option("--n", o.n_list, "Generations, comma separated");
  app.add_option("--ell", o.ell, "Deviation schedule: const:a,b | lin:c | pow:C:p | log:C");
  app.add_option("--x", o.x_grid, "Positions: a,b,c or lo:hi:count");
  app.add_option("--cap", o.cap, "Population cap per replica");
  app.add_option("--span", o.span, "Lattice span for discretizing parametric steps");
  app.add_option("--pcut", o.p_cut, "Tail cut for discretizing parametric steps");
  app.add_option("--trunc", o.trunc, "Truncation degree for gw-pmf");
  app.add_option("--eps", o.eps_list, "Small-ball levels");
  app.add_option("--delta", o.delta, "Small-ball slack");
  app.add_option("--eta", o.eta, "L' = L - eta for the bounded schedule");
  app.add_option("--schedule", o.schedule, "auto | bounded | weibull | gumbel");
  app.add_option("--estimator", o.estimator, "oracle | mc");

  auto* rates = app.add_subcommand("rates", "Rate constants as JSON");
  auto* oracle = app.add_subcommand("oracle-cdf", "Exact -log P(M_n <= x) on the lattice");
  auto* gw = app.add_subcommand("gw-pmf", "Population-size probabilities");
  auto* sim = app.add_subcommand("simulate", "Forward Monte Carlo of M_n, D_n, Z_n");
  sim->add_flag("--tail-slope", o.tail_slope, "Also fit the upper tail slope of D_n");
  auto* strat = app.add_subcommand("strategy-bound", "Explicit lower bounds");
  auto* ball = app.add_subcommand("smallball", "Small-ball lower bounds");
  auto* rep = app.add_subcommand("report", "Convergence reports");
  rep->add_option("kind", o.report_kind, "moderate | linear")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    diagnostic(err, "UsageError", e.what());
    return kExitInvalid;
  }

  std::string joined;
  for (const auto& a : args) joined += (joined.empty() ? "" : " ") + a;
  const auto start = Clock::now();
  try {
    const Model model = load_model(o.model_path);
    ArtifactWriter w(o.out_dir, joined);
    if (*rates) return cmd_rates(model, o, w, start);
    if (*oracle) return cmd_oracle(model, o, w, start);
    if (*gw) return cmd_gw(model, o, w, start);
    if (*sim) return cmd_simulate(model, o, w, start);
    if (*strat) return cmd_strategy(model, o, w, start);
    if (*ball) return cmd_smallball(model, o, w, start);
    if (*rep) return cmd_report(model, o, w, start);
  } catch (const Error& e) {
    diagnostic(err, to_string(e.code()), e.what());
    return is_resource_error(e.code()) ? kExitResource : kExitInvalid;
  } catch (const std::exception& e) {
    diagnostic(err, "Failure", e.what());
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace brw::cli
