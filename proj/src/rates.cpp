#include "brw/rates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "brw/error.hpp"
#include "brw/numeric.hpp"

namespace brw {

namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(b)); }

/// Root of k1(t) = target on the side of 0 given by its sign.
RootResult solve_tilt(const StepLaw& step, double target) {
  const MgfDomain dom = step.mgf_domain();
  const double dir = target > 0.0 ? 1.0 : -1.0;
  const double edge = dir > 0.0 ? dom.hi : -dom.lo;  // distance to the domain boundary
  double lo = 0.0;
  double hi = std::isfinite(edge) ? 0.5 * edge : 1.0;
  const auto tilted_mean = [&](double s) { return dir * cumulants(step, dir * s).k1; };
  const double goal = dir * target;
  for (int i = 0; i < 2000 && tilted_mean(hi) < goal; ++i) {
    lo = hi;
    hi = std::isfinite(edge) ? hi + 0.5 * (edge - hi) : 2.0 * hi;
    if (std::isfinite(edge) && !(hi < edge)) break;
  }
  const auto eval = [&](double s) {
    const Cumulants c = cumulants(step, dir * s);
    return std::pair<double, double>{dir * c.k1 - goal, c.k2};
  };
  RootResult r = safeguarded_newton(eval, lo, hi, 0.5 * (lo + hi), 1e-15 * std::max(1.0, std::abs(goal)));
  r.root *= dir;
  return r;
}

}  // namespace

// -------------------------------------------------------------- rate function

Optimum rate_I_traced(const StepLaw& step, double x) {
  if (x == 0.0) return {0.0, 0.0, 0.0};
  if (step.is_lattice()) {
    const double R = step.R();
    const double L = step.L();
    if (x > R && !near(x, R)) return {kInf, kInf, 0.0};
    if (x < -L && !near(x, -L)) return {kInf, -kInf, 0.0};
    // Boundary atoms: the supremum is approached as t -> +-inf.
    if (near(x, R)) return {-std::log(step.atom_mass(R)), kInf, 0.0};
    if (near(x, -L)) return {-std::log(step.atom_mass(-L)), -kInf, 0.0};
  }
  const RootResult r = solve_tilt(step, x);
  const Cumulants c = cumulants(step, r.root);
  return {r.root * x - c.k0, r.root, std::abs(c.k1 - x)};
}

double rate_I(const StepLaw& step, double x) { return rate_I_traced(step, x).value; }

// --------------------------------------------------------------- speed, tilt

SpeedResult speed_x_star(const StepLaw& step, double log_m) {
  const double R = step.R();
  if (std::isfinite(R) && rate_I(step, R) <= log_m) return {R, true, 0.0};
  const auto excess = [&](double x) { return rate_I(step, x) - log_m; };
  double hi = std::isfinite(R) ? R : 1.0;
  while (!std::isfinite(R) && excess(hi) <= 0.0) hi *= 2.0;
  // Keep a finite upper endpoint: at R itself the value may be an atom limit.
  const RootResult r = bisect(excess, 0.0, hi, 1e-16);
  return {r.root, false, std::abs(excess(r.root))};
}

double speed_x_star(const Model& model) { return model.constants.x_star; }

Optimum theta_star(const StepLaw& step, double log_m, double x_star) {
  const double R = step.R();
  if (std::isfinite(R) && x_star >= R && std::exp(log_m) * step.atom_mass(R) >= 1.0) {
    throw Error(ErrorCode::DegenerateBoundary, "x* = ess sup X with m P(X = x*) >= 1");
  }
  const RootResult r = solve_tilt(step, x_star);
  const double theta = r.root;
  if (!(theta > 0.0)) throw Error(ErrorCode::DegenerateBoundary, "tilt equation has no positive root");
  const double eq13 = theta * x_star - log_mgf(step, theta) - log_m;
  return {theta, theta, std::abs(eq13)};
}

double theta_star(const Model& model) { return model.theta_star(); }

double m_n(double x_star, double theta_star, int n) {
  return x_star * n - (3.0 / (2.0 * theta_star)) * std::log(static_cast<double>(n));
}

double m_n(const Model& model, int n) { return m_n(model.constants.x_star, model.theta_star(), n); }

// ----------------------------------------------------------- Boettcher rates

double rate_bounded(const Model& model, double x) {
  const auto& c = model.constants;
  if (!model.offspring.is_boettcher()) throw Error(ErrorCode::RequiresBoettcher, "rate_bounded needs b >= 2");
  if (!std::isfinite(c.L)) throw Error(ErrorCode::OutOfRange, "step is unbounded below");
  if (x > c.x_star || x < -c.L) {
    std::ostringstream os;
    os << "x = " << x << " outside [-L, x*] = [" << -c.L << ", " << c.x_star << "]";
    throw Error(ErrorCode::OutOfRange, os.str());
  }
  if (x == -c.L && !(model.step.atom_mass(-c.L) > 0.0)) {
    throw Error(ErrorCode::AtomRequired, "x = -L needs P(X = -L) > 0");
  }
  return (c.x_star - x) / (c.x_star + c.L) * std::log(static_cast<double>(model.offspring.b()));
}

double beta_moderate(const Model& model) {
  const auto& c = model.constants;
  if (!model.offspring.is_boettcher()) throw Error(ErrorCode::RequiresBoettcher, "beta needs b >= 2");
  if (!std::isfinite(c.L)) throw Error(ErrorCode::OutOfRange, "beta needs a step bounded below");
  const double theta = model.theta_star();
  const double beta = std::log(static_cast<double>(model.offspring.b())) / (c.x_star + c.L);
  if (!(beta > 0.0 && beta < theta)) {
    throw std::logic_error("beta outside (0, theta*): inconsistent model constants");
  }
  return beta;
}

double rate_weibull(double alpha, double lambda, double b) {
  if (alpha == 1.0) return lambda * b;
  // (b_alpha - 1)^{alpha-1} in log form; b_alpha overflows as alpha -> 1.
  const double log_ba = std::log(b) / (alpha - 1.0);
  return lambda * std::exp((alpha - 1.0) * (log_ba + log1mexp(log_ba)));
}

double rate_weibull_linear(double alpha, double lambda, double b, double gap) {
  return rate_weibull(alpha, lambda, b) * std::pow(gap, alpha);
}

double rate_gumbel(double alpha, double b) {
  return std::pow((1.0 + alpha) / alpha * std::log(b), alpha / (alpha + 1.0));
}

double rate_gumbel_linear(double alpha, double b, double gap) {
  return rate_gumbel(alpha, b) * std::pow(gap, alpha / (alpha + 1.0));
}

double smallball_weibull(double alpha, double lambda, double b, double theta_star) {
  return rate_weibull(alpha, lambda, b) / std::pow(theta_star, alpha);
}

double smallball_gumbel(double alpha, double b, double theta_star) {
  return std::pow((1.0 + alpha) / (theta_star * alpha) * std::log(b), alpha / (alpha + 1.0));
}

double smallball_bounded_exponent(double beta, double theta_star) {
  if (!(beta > 0.0 && beta < theta_star)) throw Error(ErrorCode::OutOfRange, "need 0 < beta < theta*");
  return beta / (theta_star - beta);
}

// ----------------------------------------------------------- Schroeder rates

namespace {

void require_schroeder(const Model& model) {
  if (!model.offspring.is_schroeder()) {
    throw Error(ErrorCode::NotSchroeder, "Schroeder case requires 0 < p_0 + p_1 < 1");
  }
}

}  // namespace

Optimum schroder_H(const Model& model, double ell_star) {
  require_schroeder(model);
  if (!(ell_star >= 0.0)) throw Error(ErrorCode::OutOfRange, "ell* must be >= 0");
  const double gamma = schroder_gamma(model.offspring);
  if (gamma == -kInf) return {-kInf, kNaN, 0.0};
  const auto& c = model.constants;
  const double a_lo = std::max(ell_star, kHCutoff);
  const auto objective = [&](double a) { return (gamma - rate_I(model.step, c.x_star - a)) / a; };

  double a_hi = c.x_star + c.L;
  if (std::isfinite(a_hi)) {
    if (a_lo > a_hi && !near(a_lo, a_hi)) {
      throw Error(ErrorCode::EmptyFeasible, "I(x* - a) = +inf for every a >= ell*");
    }
    if (a_lo >= a_hi || near(a_lo, a_hi)) return {objective(a_hi), a_hi, 0.0};
  } else {
    a_hi = std::max(1.0, 2.0 * a_lo);
    while (a_hi < 1e6 && objective(2.0 * a_hi) >= objective(a_hi)) a_hi *= 2.0;
    a_hi *= 2.0;
  }
  const Extremum best = grid_golden_max(objective, a_lo, a_hi, 1024, 1e-10);
  return {best.value, best.location, best.bracket};
}

LinearRate schroder_linear_rate(const Model& model, double x) {
  require_schroeder(model);
  const auto& c = model.constants;
  const double xs = c.x_star;
  if (!(x < xs)) throw Error(ErrorCode::OutOfRange, "schroder_linear_rate needs x < x*");
  if (x < -c.L) throw Error(ErrorCode::EmptyFeasible, "x below ess inf X");
  const double gamma = schroder_gamma(model.offspring);
  if (gamma == -kInf) return {-kInf, -kInf, -kInf, kNaN, kNaN};

  const auto& step = model.step;
  const auto ratio = [&](double a) { return (gamma - rate_I(step, a)) / (xs - a); };

  // Sup form over a <= x.
  double a_lo = -c.L;
  if (!std::isfinite(a_lo)) {
    double d = 1.0;
    while (d < 1e6 && ratio(x - 2.0 * d) >= ratio(x - d)) d *= 2.0;
    a_lo = x - 2.0 * d;
  }
  const Extremum sup_a = grid_golden_max(ratio, a_lo, x, 1024, 1e-10);
  const double sup_form = (xs - x) * sup_a.value;

  // Inf form over t in [t_min, 1], where the argument of I stays >= a_lo.
  const double t_min = (xs - x) / (xs - a_lo);
  const auto neg_inner = [&](double t) {
    return -(-t * gamma + t * rate_I(step, (x - (1.0 - t) * xs) / t));
  };
  const Extremum inf_t = grid_golden_max(neg_inner, t_min, 1.0, 1024, 1e-10);
  const double inf_form = inf_t.value;

  if (std::abs(sup_form - inf_form) > 1e-6) {
    std::ostringstream os;
    os << "dual forms disagree at x = " << x << ": " << sup_form << " vs " << inf_form;
    throw std::logic_error(os.str());
  }
  return {std::max(sup_form, inf_form), sup_form, inf_form, sup_a.location, inf_t.location};
}

double large_dev_rate(const Model& model, double x) {
  const double xs = model.constants.x_star;
  if (x < xs && !near(x, xs)) throw Error(ErrorCode::OutOfRange, "large_dev_rate needs x >= x*");
  if (near(x, xs)) return 0.0;
  return model.constants.log_m - rate_I(model.step, x);
}

Optimum schroder_t_star(const Model& model) {
  require_schroeder(model);
  const double gamma = schroder_gamma(model.offspring);
  if (gamma == -kInf) throw Error(ErrorCode::NoRoot, "gamma = -inf: P(Z_n = b_1) decays superexponentially");
  const double xs = model.constants.x_star;
  const auto g = [&](double t) { return gamma + t * xs + log_mgf(model.step, -t); };
  if (gamma == 0.0) return {0.0, 0.0, 0.0};
  const MgfDomain dom = model.step.mgf_domain();
  double hi = 1.0;
  const auto inside = [&](double t) { return dom.contains(-t); };
  if (!inside(hi)) hi = 0.5 * (-dom.lo);
  while (g(hi) < 0.0) {
    if (std::isfinite(dom.lo)) {
      const double edge = -dom.lo;
      if (edge - hi < 1e-12 * edge) {
        throw Error(ErrorCode::NoRoot, "psi(-t) blows up before gamma + t x* + log psi(-t) reaches 0");
      }
      hi = hi + 0.5 * (edge - hi);
    } else {
      hi *= 2.0;
      if (hi > 1e12) throw Error(ErrorCode::NoRoot, "no sign change found");
    }
  }
  const RootResult r = bisect(g, 0.0, hi, 1e-16);
  return {r.root, r.root, std::abs(g(r.root))};
}

// ------------------------------------------------------------ energy bound

EnergyBound min_energy_bound(double alpha, double b, int s, int horizon, double c) {
  if (!(alpha > 1.0)) throw Error(ErrorCode::OutOfRange, "min_energy_bound needs alpha > 1");
  if (!(b >= 2.0)) throw Error(ErrorCode::OutOfRange, "min_energy_bound needs b >= 2");
  if (horizon < 1 || s < 1 || s > horizon) throw Error(ErrorCode::OutOfRange, "need 1 <= s <= horizon");
  if (!(c >= 0.0)) throw Error(ErrorCode::OutOfRange, "need c >= 0");

  const double b_alpha = std::pow(b, 1.0 / (alpha - 1.0));
  EnergyBound out;
  out.analytic = std::pow(b_alpha - 1.0, alpha - 1.0) * std::pow(c, alpha);
  out.pruned_factor = std::pow(1.0 - std::pow(b, -static_cast<double>(s)), alpha + 1.0);

  // Stationarity alpha b^k x_k^{alpha-1} = mu gives x_k proportional to b_alpha^{-k}.
  CompensatedSum norm;
  for (int k = 1; k <= horizon; ++k) norm.add(std::pow(b_alpha, -static_cast<double>(k)));
  out.minimizer.resize(static_cast<std::size_t>(horizon));
  CompensatedSum energy;
  for (int k = 1; k <= horizon; ++k) {
    const double xk = c * std::pow(b_alpha, -static_cast<double>(k)) / norm.value();
    out.minimizer[static_cast<std::size_t>(k - 1)] = xk;
    energy.add(std::pow(b, static_cast<double>(k)) * std::pow(xk, alpha));
  }
  out.numeric = energy.value();
  if (out.numeric < out.analytic - 1e-9 * std::max(1.0, out.analytic)) {
    throw std::logic_error("minimizer beats the analytic energy bound");
  }
  return out;
}

}  // namespace brw
