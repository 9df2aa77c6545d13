#pragma once
// Configurations on which a strategy lower bound is compared with the exact
// probability of the same event. Parametric steps enter through their
// discretized lattice model, so bound and truth refer to the same law.

#include <cmath>
#include <string>
#include <vector>

#include "brw/oracle.hpp"
#include "brw/rates.hpp"
#include "brw/strategy.hpp"
#include "support.hpp"

namespace brw::test {

struct StrategyCase {
  std::string label;
  double bound;
  double truth;
};

inline std::vector<StrategyCase> strategy_matrix() {
  std::vector<StrategyCase> out;
  const auto run = [&](const Model& m, const std::string& family, int n, const DeviationTarget& target,
                       const StrategySchedule& s) {
    auto tail = make_oracle_estimator(m);
    const EstimateRecord rec = strategy_lower_bound(m, n, target, s, *tail);
    const double truth = -max_cdf_recursion(m, n).G_at(target.level(m, n));
    out.push_back({family + " n=" + std::to_string(n) + " target=" + std::to_string(target.value) +
                       " t=" + std::to_string(s.t),
                   rec.estimate, truth});
  };

  const Model b = b2l();
  for (int n : {10, 30, 60}) {
    for (double x : {-0.5, 0.0, 0.4}) {
      for (int t : {1, 3}) run(b, "bounded", n, {DeviationTarget::Kind::Linear, x}, bounded_schedule(2, t, 1.0));
    }
  }
  for (double ell : {5.0, 10.0, 20.0}) {
    run(b, "bounded", 60, {DeviationTarget::Kind::Moderate, ell}, bounded_schedule(2, 4, 1.0));
  }

  const Model w = Model::make(OffspringLaw::from_map({{2, 1.0}}), discretize_step(StepLaw::weibull(2.0, 1.0), 0.1, 1e-12).law);
  const Model g = Model::make(OffspringLaw::from_map({{2, 1.0}}), discretize_step(StepLaw::gumbel(2.0), 0.1, 1e-12).law);
  for (int n : {20, 40}) {
    for (double ell : {2.0, 4.0, 8.0}) {
      run(w, "weibull", n, {DeviationTarget::Kind::Moderate, ell}, weibull_schedule(2.0, 2, ell));
      run(g, "gumbel", n, {DeviationTarget::Kind::Moderate, ell}, gumbel_schedule(2.0, 2, ell));
    }
  }
  return out;
}

}  // namespace brw::test
