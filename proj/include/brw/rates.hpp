#pragma once

#include <map>
#include <string>

#include "brw/model.hpp"

namespace brw {

/// log psi(t) and its first two derivatives at t.
struct Cumulants {
  double k0;  // log psi(t); +inf outside the mgf domain
  double k1;  // psi'(t) / psi(t), the tilted mean
  double k2;  // tilted variance
};

/// log E[e^{tX}]; +inf outside the mgf domain.
double log_mgf(const StepLaw& step, double t);
Cumulants cumulants(const StepLaw& step, double t);

/// Value of a one-dimensional optimization and where it was attained.
struct Optimum {
  double value;
  double argopt;
  double residual;
};

/// Cramer rate function I(x) = sup_t {t x - log psi(t)}.
double rate_I(const StepLaw& step, double x);
Optimum rate_I_traced(const StepLaw& step, double x);

struct SpeedResult {
  double x_star;
  bool at_boundary;  // x* = R
  double residual;   // |I(x*) - log m|, 0 at the boundary
};

/// x* = sup{x >= 0 : I(x) <= log m} by bisection on the nondecreasing I.
SpeedResult speed_x_star(const StepLaw& step, double log_m);
double speed_x_star(const Model& model);

/// Solves psi'(theta)/psi(theta) = x* by safeguarded Newton. Throws
/// DegenerateBoundary when x* = R and m P(X = R) >= 1.
Optimum theta_star(const StepLaw& step, double log_m, double x_star);
double theta_star(const Model& model);

/// m_n = x* n - (3 / (2 theta*)) log n.
double m_n(double x_star, double theta_star, int n);
double m_n(const Model& model, int n);

/// Double-exponential lower-deviation rate (x* - x)/(x* + L) log b for
/// -L <= x <= x* (Boettcher, bounded below). Throws OutOfRange, AtomRequired.
double rate_bounded(const Model& model, double x);

/// beta = log b / (x* + L), checked to lie in (0, theta*).
double beta_moderate(const Model& model);

/// lambda (b^{1/(alpha-1)} - 1)^{alpha-1}; equals lambda b at alpha = 1.
double rate_weibull(double alpha, double lambda, double b);
/// rate_weibull * (x* - x)^alpha.
double rate_weibull_linear(double alpha, double lambda, double b, double gap);

/// ((1 + alpha)/alpha log b)^{alpha/(alpha+1)}.
double rate_gumbel(double alpha, double b);
/// rate_gumbel * (x* - x)^{alpha/(alpha+1)}.
double rate_gumbel_linear(double alpha, double b, double gap);

double smallball_weibull(double alpha, double lambda, double b, double theta_star);
double smallball_gumbel(double alpha, double b, double theta_star);
/// beta / (theta* - beta) for 0 < beta < theta*.
double smallball_bounded_exponent(double beta, double theta_star);

/// Lower cutoff on a in schroder_H.
inline constexpr double kHCutoff = 1e-12;

/// H(x*, gamma) = sup_{a >= ell*} (gamma - I(x* - a)) / a. Returns -inf when
/// gamma = -inf. Throws NotSchroeder, EmptyFeasible.
Optimum schroder_H(const Model& model, double ell_star);

struct LinearRate {
  double value;           // common value of both forms
  double sup_form;        // (x* - x) sup_{a <= x} (gamma - I(a)) / (x* - a)
  double inf_form;        // -inf_{t in (0,1]} {-t gamma + t I((x - (1-t) x*)/t)}
  double argmax_a;
  double argmin_t;
};

/// Exponential rate of P^s(M_n <= x n) for x < x* (Schroeder); both dual
/// forms are evaluated and must agree within 1e-6.
LinearRate schroder_linear_rate(const Model& model, double x);

/// log m - I(x) for x >= x*.
double large_dev_rate(const Model& model, double x);

/// Root of gamma + t x* + log psi(-t) = 0. Throws NotSchroeder, NoRoot.
Optimum schroder_t_star(const Model& model);

struct EnergyBound {
  double analytic;        // (b_alpha - 1)^{alpha-1} c^alpha
  double numeric;         // constrained minimum over a finite horizon
  double pruned_factor;   // (1 - b^{-s})^{alpha+1}, the pruned-tree prefactor
  std::vector<double> minimizer;
};

/// Lower bound on min sum_k b^k xbar_k^alpha subject to sum_k xbar_k >= c,
/// k = 1..horizon, checked against the Lagrange minimizer.
EnergyBound min_energy_bound(double alpha, double b, int s, int horizon, double c);

/// One named rate constant with its inputs and optimizer trace, as serialized
/// by the CLI.
struct RateReport {
  std::string name;
  double value;
  std::map<std::string, double> params;
  double argopt = 0.0;
  double residual = 0.0;
  std::string flag;  // reason when value is infinite
};

}  // namespace brw
