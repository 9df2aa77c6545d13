#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace brw {

/// Offspring distribution with finite support.
class OffspringLaw {
 public:
  /// Probabilities indexed by child count. Throws InvalidLaw when entries are
  /// negative, non-finite, or do not sum to 1 within 1e-12.
  static OffspringLaw from_pmf(std::vector<double> pmf);
  static OffspringLaw from_map(const std::map<int, double>& pmf);

  const std::vector<double>& pmf() const { return pmf_; }
  double p(int k) const { return (k >= 0 && k < static_cast<int>(pmf_.size())) ? pmf_[k] : 0.0; }
  int max_k() const { return static_cast<int>(pmf_.size()) - 1; }
  double mean() const { return mean_; }
  /// Smallest k with p_k > 0.
  int b() const { return b_; }
  /// Smallest k >= 1 with p_k > 0.
  int b1() const { return b1_; }
  /// Finite support makes every moment finite.
  bool xi_moment_ok() const { return true; }

  bool is_boettcher() const { return b_ >= 2; }
  bool is_schroeder() const {
    const double s = p(0) + p(1);
    return s > 0.0 && s < 1.0;
  }

  /// f(s) = sum_k p_k s^k.
  double pgf(double s) const;
  double pgf_derivative(double s) const;
  /// -log f(e^{-y}) for y in [0, +inf], stable for large y.
  double neg_log_pgf_of_exp(double y) const;
  /// Divided difference (f(a) - f(b)) / (a - b), computed without cancellation.
  double pgf_divided_difference(double a, double b) const;

 private:
  std::vector<double> pmf_;
  double mean_ = 0.0;
  int b_ = 0;
  int b1_ = 0;
};

enum class StepKind { Lattice, WeibullTail, GumbelTail };

/// Interval where the moment generating function is finite.
struct MgfDomain {
  double lo;
  double hi;
  bool open;  // endpoints excluded when finite
  bool contains(double t) const {
    return open ? (t > lo && t < hi) : (t >= lo && t <= hi);
  }
};

/// Displacement law. Lattice laws live on multiples of `span`; the parametric
/// kinds are the symmetric realizations
///   Weibull: P(X <= -z) = P(X >= z) = e^{-lambda z^alpha} / 2
///   Gumbel:  P(X <= -z) = P(X >= z) = exp(1 - e^{z^alpha}) / 2
/// for z >= 0.
class StepLaw {
 public:
  static StepLaw lattice(double span, const std::map<long, double>& pmf);
  static StepLaw lattice(double span, long min_offset, std::vector<double> probs);
  static StepLaw weibull(double alpha, double lambda);
  static StepLaw gumbel(double alpha);

  StepKind kind() const { return kind_; }
  bool is_lattice() const { return kind_ == StepKind::Lattice; }

  // Lattice accessors: atoms at (min_offset + i) * span with mass probs[i].
  double span() const { return span_; }
  long min_offset() const { return min_offset_; }
  long max_offset() const { return min_offset_ + static_cast<long>(probs_.size()) - 1; }
  const std::vector<double>& probs() const { return probs_; }
  double prob_at_offset(long k) const;

  // Parametric accessors.
  double alpha() const { return alpha_; }
  double lambda() const { return lambda_; }

  double mean() const;
  /// L = -ess inf X (+inf for the parametric kinds).
  double L() const;
  /// R = ess sup X.
  double R() const;
  /// P(X = x); zero for continuous kinds.
  double atom_mass(double x) const;
  /// P(X <= x).
  double cdf(double x) const;
  /// log P(X <= x), accurate deep in the left tail.
  double log_cdf(double x) const;
  /// Parametric tail S(z) = 2 P(X > z) = 2 P(X < -z) for z >= 0, in log form.
  double log_tail_shape(double z) const;
  /// Quantile for the parametric kinds.
  double quantile(double p) const;
  MgfDomain mgf_domain() const;

  std::string describe() const;

 private:
  StepKind kind_ = StepKind::Lattice;
  double span_ = 1.0;
  long min_offset_ = 0;
  std::vector<double> probs_;
  double alpha_ = 0.0;
  double lambda_ = 0.0;
};

struct AssumptionFlag {
  bool ok = false;
  std::string reason;
};

/// Constants derived from a validated (offspring, step) pair.
struct ModelConstants {
  double x_star = 0.0;
  /// NaN when degenerate.
  double theta_star = 0.0;
  double log_m = 0.0;
  double L = 0.0;
  double R = 0.0;
  bool degenerate = false;
  AssumptionFlag a11;
  AssumptionFlag a12;
  AssumptionFlag a13;
  AssumptionFlag a14;
  /// Residual |I(x*) - log m| (zero-width when x* = R).
  double speed_residual = 0.0;
};

/// Validates the standing assumptions and derives x*, theta*, L, R.
/// Throws SubcriticalModel, NonZeroMean, EmptySupport.
ModelConstants validate_model(const OffspringLaw& off, const StepLaw& step);

/// Smallest fixed point of the pgf in [0, 1). Requires m > 1.
double extinction_probability(const OffspringLaw& off);

/// gamma = log f'(q); -inf when f'(q) = 0. Throws NotSchroeder unless
/// 0 < p_0 + p_1 < 1.
double schroder_gamma(const OffspringLaw& off);

/// A validated model: laws plus their derived constants.
struct Model {
  OffspringLaw offspring;
  StepLaw step;
  ModelConstants constants;

  static Model make(OffspringLaw off, StepLaw step);

  bool has_theta() const { return !constants.degenerate; }
  /// Throws DegenerateBoundary when theta* does not exist.
  double theta_star() const;
};

}  // namespace brw
