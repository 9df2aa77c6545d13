#pragma once

// Explicit lower bounds for lower-deviation probabilities. The event forces a
// b-regular tree for t generations with every generation-k displacement at
// most -a_k, then asks the b^t subtrees to stay below the shifted level.

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "brw/oracle.hpp"
#include "brw/simulate.hpp"

namespace brw {

enum class ScheduleKind { Bounded, Weibull, Gumbel };

struct StrategySchedule {
  ScheduleKind kind = ScheduleKind::Bounded;
  int b = 2;
  int t = 1;
  /// a_1 .. a_t.
  std::vector<double> displacements;

  double total_displacement() const;
};

/// t generations with the constant displacement a_k = shift.
StrategySchedule bounded_schedule(int b, int t, double shift);

/// Geometric schedule a_k = (b_a - 1) ell / b_a^k, b_a = b^{1/(alpha-1)}, with
/// t = ceil((alpha - 1) log ell / log b), at least 1. Requires alpha > 1.
StrategySchedule weibull_schedule(double alpha, int b, double ell);
StrategySchedule weibull_schedule_with_depth(double alpha, int b, double ell, int t);

/// a_k = (log b)^{1/alpha} (t + 1 - k)^{1/alpha} with
/// t = ceil(c ell^{alpha/(alpha+1)}), c = ((1+alpha)/alpha)^{alpha/(alpha+1)} (log b)^{-1/(alpha+1)}.
StrategySchedule gumbel_schedule(double alpha, int b, double ell);
StrategySchedule gumbel_schedule_with_depth(double alpha, int b, int t);

/// Summation checks against closed forms.
struct WeibullChecksums {
  double sum_displacement;
  double sum_displacement_closed;  // (1 - b_a^{-t}) ell
  double energy;                   // sum_k a_k^alpha b^k
  double energy_closed;            // ell^alpha (b_a - 1)^{alpha-1} (1 - b_a^{-t})
};
WeibullChecksums weibull_checksums(const StrategySchedule& s, double alpha, double ell);

struct GumbelChecksums {
  double sum_exp;         // sum_k e^{a_k^alpha} b^k
  double sum_exp_closed;  // t b^{t+1}
};
GumbelChecksums gumbel_checksums(const StrategySchedule& s, double alpha);

/// log P(Z_t = b^t, X_u <= -a_{|u|} for all |u| <= t)
///   = ((b^t - 1)/(b - 1)) log p_b + sum_k b^k log P(X <= -a_k).
double prefix_log_cost(const Model& model, const StrategySchedule& s);

/// log P(M_generations <= level) with its standard error.
struct TailValue {
  double log_prob;
  double std_error;
};

/// Supplies the subtree factor of a strategy bound.
class TailEstimator {
 public:
  virtual ~TailEstimator() = default;
  virtual TailValue log_cdf(int generations, double level) = 0;
  virtual std::string tag() const = 0;
};

/// Exact recursion on a lattice model. Parametric steps are discretized first
/// (span h, cut p_cut) and tagged accordingly.
std::unique_ptr<TailEstimator> make_oracle_estimator(const Model& model, double h = 0.05, double p_cut = 1e-12);

/// Forward Monte Carlo; the log of the empirical cdf with a delta-method error.
std::unique_ptr<TailEstimator> make_mc_estimator(const Model& model, std::uint64_t replicas, std::uint64_t seed,
                                                 std::uint64_t cap = kDefaultPopulationCap);

struct DeviationTarget {
  enum class Kind { Linear, Moderate } kind = Kind::Linear;
  /// x for Linear (level x n), ell for Moderate (level m_n - ell).
  double value = 0.0;
  double level(const Model& model, int n) const;
};

/// log of prefix_cost * P(M_{n-t} <= level + sum_k a_k)^{b^t}. Requires
/// p_0 = p_1 = 0 (RequiresBoettcher) and t <= n.
EstimateRecord strategy_lower_bound(const Model& model, int n, const DeviationTarget& target,
                                    const StrategySchedule& schedule, TailEstimator& tail);

/// Prefix schedule used by the small-ball bound at level epsilon.
StrategySchedule smallball_schedule(const Model& model, double epsilon, double delta);

/// log(1/2) + log P(Z_t = b^t, all generation-t positions <= (1+delta) log(eps)/theta* + t x*).
EstimateRecord smallball_strategy_bound(const Model& model, double epsilon, double delta);

}  // namespace brw
