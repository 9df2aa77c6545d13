#include "brw/strategy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "brw/error.hpp"
#include "brw/numeric.hpp"
#include "brw/rates.hpp"

namespace brw {

double StrategySchedule::total_displacement() const {
  CompensatedSum s;
  for (double a : displacements) s.add(a);
  return s.value();
}

StrategySchedule bounded_schedule(int b, int t, double shift) {
  if (b < 2 || t < 1 || !(shift >= 0.0)) throw Error(ErrorCode::OutOfRange, "need b >= 2, t >= 1, shift >= 0");
  return {ScheduleKind::Bounded, b, t, std::vector<double>(static_cast<std::size_t>(t), shift)};
}

StrategySchedule weibull_schedule_with_depth(double alpha, int b, double ell, int t) {
  if (!(alpha > 1.0)) throw Error(ErrorCode::OutOfRange, "geometric schedule needs alpha > 1");
  if (b < 2 || t < 1 || !(ell > 0.0)) throw Error(ErrorCode::OutOfRange, "need b >= 2, t >= 1, ell > 0");
  const double ba = std::pow(static_cast<double>(b), 1.0 / (alpha - 1.0));
  StrategySchedule s{ScheduleKind::Weibull, b, t, {}};
  for (int k = 1; k <= t; ++k) s.displacements.push_back((ba - 1.0) * ell * std::pow(ba, -k));
  return s;
}

StrategySchedule weibull_schedule(double alpha, int b, double ell) {
  if (!(ell > 0.0)) throw Error(ErrorCode::OutOfRange, "ell must be > 0");
  const double raw = (alpha - 1.0) * std::log(ell) / std::log(static_cast<double>(b));
  const int t = std::max(1, static_cast<int>(std::ceil(raw - 1e-12)));
  return weibull_schedule_with_depth(alpha, b, ell, t);
}

StrategySchedule gumbel_schedule_with_depth(double alpha, int b, int t) {
  if (!(alpha > 0.0) || b < 2 || t < 1) throw Error(ErrorCode::OutOfRange, "need alpha > 0, b >= 2, t >= 1");
  const double lb = std::pow(std::log(static_cast<double>(b)), 1.0 / alpha);
  StrategySchedule s{ScheduleKind::Gumbel, b, t, {}};
  for (int k = 1; k <= t; ++k) s.displacements.push_back(lb * std::pow(static_cast<double>(t + 1 - k), 1.0 / alpha));
  return s;
}

StrategySchedule gumbel_schedule(double alpha, int b, double ell) {
  if (!(alpha > 0.0) || !(ell > 0.0)) throw Error(ErrorCode::OutOfRange, "need alpha > 0, ell > 0");
  const double e = alpha / (alpha + 1.0);
  const double c = std::pow((1.0 + alpha) / alpha, e) * std::pow(std::log(static_cast<double>(b)), -1.0 / (alpha + 1.0));
  const int t = std::max(1, static_cast<int>(std::ceil(c * std::pow(ell, e) - 1e-12)));
  return gumbel_schedule_with_depth(alpha, b, t);
}

WeibullChecksums weibull_checksums(const StrategySchedule& s, double alpha, double ell) {
  const double ba = std::pow(static_cast<double>(s.b), 1.0 / (alpha - 1.0));
  const double keep = -std::expm1(-static_cast<double>(s.t) * std::log(ba));
  CompensatedSum energy;
  double bk = 1.0;
  for (double a : s.displacements) {
    bk *= s.b;
    energy.add(std::pow(a, alpha) * bk);
  }
  return {s.total_displacement(), keep * ell, energy.value(),
          std::pow(ell, alpha) * std::pow(ba - 1.0, alpha - 1.0) * keep};
}

GumbelChecksums gumbel_checksums(const StrategySchedule& s, double alpha) {
  CompensatedSum total;
  double bk = 1.0;
  for (double a : s.displacements) {
    bk *= s.b;
    total.add(std::exp(std::pow(a, alpha)) * bk);
  }
  return {total.value(), static_cast<double>(s.t) * std::pow(static_cast<double>(s.b), s.t + 1)};
}

double prefix_log_cost(const Model& model, const StrategySchedule& s) {
  const OffspringLaw& off = model.offspring;
  if (!off.is_boettcher()) throw Error(ErrorCode::RequiresBoettcher, "regular-tree prefix needs p0 = p1 = 0");
  if (s.b != off.b()) throw Error(ErrorCode::OutOfRange, "schedule branching differs from the minimal offspring");
  const double b = static_cast<double>(s.b);
  const double nodes = (std::pow(b, s.t) - 1.0) / (b - 1.0);
  double cost = nodes * std::log(off.p(s.b));
  double bk = 1.0;
  for (double a : s.displacements) {
    bk *= b;
    const double lp = model.step.log_cdf(-a);
    if (lp == -kInf) return -kInf;
    cost += bk * lp;
  }
  return cost;
}

// ------------------------------------------------------------- estimators

namespace {

class OracleEstimator final : public TailEstimator {
 public:
  OracleEstimator(Model model, std::string tag) : model_(std::move(model)), tag_(std::move(tag)) {}

  TailValue log_cdf(int generations, double level) override {
    auto it = grids_.find(generations);
    if (it == grids_.end()) it = grids_.emplace(generations, max_cdf_recursion(model_, generations)).first;
    return {-it->second.G_at(level), 0.0};
  }
  std::string tag() const override { return tag_; }

 private:
  Model model_;
  std::string tag_;
  std::map<int, LogCdfGrid> grids_;
};

class MonteCarloEstimator final : public TailEstimator {
 public:
  MonteCarloEstimator(Model model, std::uint64_t replicas, std::uint64_t seed, std::uint64_t cap)
      : model_(std::move(model)), replicas_(replicas), seed_(seed), cap_(cap) {}

  TailValue log_cdf(int generations, double level) override {
    auto it = runs_.find(generations);
    if (it == runs_.end()) {
      std::vector<double> m = simulate_forward(model_, generations, replicas_, seed_, cap_).max;
      std::sort(m.begin(), m.end());
      it = runs_.emplace(generations, std::move(m)).first;
    }
    const auto& sorted = it->second;
    const auto hits = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), level) - sorted.begin());
    const double total = static_cast<double>(sorted.size());
    if (hits == 0.0) return {-kInf, kInf};
    const double p = hits / total;
    return {std::log(p), std::sqrt((1.0 - p) / (p * total))};
  }
  std::string tag() const override { return "forward-mc"; }

 private:
  Model model_;
  std::uint64_t replicas_;
  std::uint64_t seed_;
  std::uint64_t cap_;
  std::map<int, std::vector<double>> runs_;
};

}  // namespace

std::unique_ptr<TailEstimator> make_oracle_estimator(const Model& model, double h, double p_cut) {
  if (model.step.is_lattice()) return std::make_unique<OracleEstimator>(model, "oracle");
  const Discretization d = discretize_step(model.step, h, p_cut);
  return std::make_unique<OracleEstimator>(Model::make(model.offspring, d.law), "oracle-discretized");
}

std::unique_ptr<TailEstimator> make_mc_estimator(const Model& model, std::uint64_t replicas, std::uint64_t seed,
                                                 std::uint64_t cap) {
  return std::make_unique<MonteCarloEstimator>(model, replicas, seed, cap);
}

double DeviationTarget::level(const Model& model, int n) const {
  if (kind == Kind::Linear) return value * static_cast<double>(n);
  return m_n(model, n) - value;
}

EstimateRecord strategy_lower_bound(const Model& model, int n, const DeviationTarget& target,
                                    const StrategySchedule& schedule, TailEstimator& tail) {
  if (!model.offspring.is_boettcher()) throw Error(ErrorCode::RequiresBoettcher, "regular-tree prefix needs p0 = p1 = 0");
  if (schedule.t > n) throw Error(ErrorCode::OutOfRange, "prefix depth exceeds n");
  const auto start = std::chrono::steady_clock::now();
  const double cost = prefix_log_cost(model, schedule);
  const double level = target.level(model, n) + schedule.total_displacement();
  const double leaves = std::pow(static_cast<double>(schedule.b), schedule.t);
  const TailValue sub = tail.log_cdf(n - schedule.t, level);

  EstimateRecord rec;
  rec.name = target.kind == DeviationTarget::Kind::Linear ? "strategy_bound_linear" : "strategy_bound_moderate";
  rec.log_domain = true;
  rec.method = EstimateMethod::StrategyBound;
  rec.tag = tail.tag();
  rec.estimate = (cost == -kInf || sub.log_prob == -kInf) ? -kInf : cost + leaves * sub.log_prob;
  rec.std_error = sub.std_error == 0.0 ? 0.0 : leaves * sub.std_error;
  rec.details = {{"n", static_cast<double>(n)},
                 {"target", target.value},
                 {"t", static_cast<double>(schedule.t)},
                 {"prefix_log_cost", cost},
                 {"subtree_level", level},
                 {"subtree_log_cdf", sub.log_prob}};
  rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

StrategySchedule smallball_schedule(const Model& model, double epsilon, double delta) {
  if (!model.offspring.is_boettcher()) throw Error(ErrorCode::RequiresBoettcher, "small-ball bound needs p0 = p1 = 0");
  if (!(epsilon > 0.0) || !(delta > 0.0)) throw Error(ErrorCode::OutOfRange, "need epsilon > 0 and delta > 0");
  const double theta = model.theta_star();
  const double xs = model.constants.x_star;
  const int b = model.offspring.b();
  const double depth = -std::log(epsilon);
  if (depth <= 0.0) return bounded_schedule(b, 1, 0.0);

  // Required total displacement at depth t.
  const auto need = [&](int t) { return (1.0 + delta) * depth / theta - static_cast<double>(t) * xs; };
  const StepLaw& step = model.step;
  switch (step.kind()) {
    case StepKind::Lattice: {
      const double L = step.L();
      const int t = std::max(1, static_cast<int>(std::ceil((1.0 + delta) * depth / (theta * (L + xs)) - 1e-12)));
      return bounded_schedule(b, t, L);
    }
    case StepKind::WeibullTail: {
      const double alpha = step.alpha();
      if (alpha == 1.0) return bounded_schedule(b, 1, std::max(0.0, need(1)));
      const double scale = (1.0 + 2.0 * delta) * depth / theta;
      int t = std::max(1, static_cast<int>(std::ceil((alpha - 1.0) * std::log((1.0 + delta) * depth) /
                                                     std::log(static_cast<double>(b)) - 1e-12)));
      StrategySchedule s = weibull_schedule_with_depth(alpha, b, scale, t);
      while (s.total_displacement() < need(t)) s = weibull_schedule_with_depth(alpha, b, scale, ++t);
      return s;
    }
    case StepKind::GumbelTail: {
      const double alpha = step.alpha();
      StrategySchedule s = gumbel_schedule(alpha, b, (1.0 + 2.0 * delta) * depth / theta);
      while (s.total_displacement() < need(s.t)) s = gumbel_schedule_with_depth(alpha, b, s.t + 1);
      return s;
    }
  }
  return bounded_schedule(b, 1, 0.0);
}

EstimateRecord smallball_strategy_bound(const Model& model, double epsilon, double delta) {
  const auto start = std::chrono::steady_clock::now();
  const StrategySchedule s = smallball_schedule(model, epsilon, delta);
  const double cost = prefix_log_cost(model, s);
  EstimateRecord rec;
  rec.name = "smallball_bound";
  rec.log_domain = true;
  rec.method = EstimateMethod::StrategyBound;
  rec.tag = "prefix";
  rec.estimate = std::log(0.5) + cost;
  rec.details = {{"epsilon", epsilon},
                 {"delta", delta},
                 {"t", static_cast<double>(s.t)},
                 {"total_displacement", s.total_displacement()}};
  rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace brw
