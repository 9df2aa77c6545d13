// log psi(t) and its derivatives. Lattice laws are summed exactly in log
// space; the parametric laws are integrated numerically through the
// integration-by-parts forms
//   psi(t)   = 1 + t * int_0^inf sinh(tz) S(z) dz
//   psi'(t)  = int_0^inf [sinh(tz) + tz cosh(tz)] S(z) dz
//   psi''(t) = int_0^inf [2z cosh(tz) + t z^2 sinh(tz)] S(z) dz
// where S(z) = 2 P(X > z), valid for the symmetric tails used here.

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "brw/numeric.hpp"
#include "brw/rates.hpp"

namespace brw {

namespace {

Cumulants lattice_cumulants(const StepLaw& step, double t) {
  const auto& p = step.probs();
  const double h = step.span();
  double hi = -kInf;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    const double x = static_cast<double>(step.min_offset() + static_cast<long>(i)) * h;
    hi = std::max(hi, std::log(p[i]) + t * x);
  }
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    const double x = static_cast<double>(step.min_offset() + static_cast<long>(i)) * h;
    const double w = std::exp(std::log(p[i]) + t * x - hi);
    s0 += w;
    s1 += w * x;
    s2 += w * x * x;
  }
  const double mean = s1 / s0;
  return {hi + std::log(s0), mean, std::max(0.0, s2 / s0 - mean * mean)};
}

// Integrals of the three kernels against S(z), each scaled by e^{-shift}.
struct ScaledMoments {
  double shift;
  std::array<double, 3> j;
};

ScaledMoments parametric_moments(const StepLaw& step, double t) {
  // log of the dominant factor e^{tz} S(z); concave in z for these tails.
  const auto log_env = [&](double z) { return t * z + step.log_tail_shape(z); };

  // Bracket the peak of the envelope, then find where it has decayed by e^{-60}.
  double z_peak = 0.0;
  if (t > 0.0) {
    double hi = 1.0;
    while (log_env(2.0 * hi) > log_env(hi) && hi < 1e6) hi *= 2.0;
    z_peak = golden_section_max(log_env, 0.0, 2.0 * hi, 1e-9 * (1.0 + hi)).location;
  }
  const double shift = std::max(0.0, log_env(z_peak));
  const double floor_level = log_env(z_peak) - 60.0;
  double z_end = std::max(1.0, 2.0 * z_peak);
  while (log_env(z_end) + 2.0 * std::log1p(z_end) > floor_level && z_end < 1e8) z_end *= 1.5;

  const auto kernel = [&](int which) {
    return [&, which](double z) {
      const double tz = t * z;
      const double ls = step.log_tail_shape(z);
      // e^{+-tz} S(z) e^{-shift}
      const double ep = std::exp(tz + ls - shift);
      const double em = std::exp(-tz + ls - shift);
      const double sh = 0.5 * (ep - em);
      const double ch = 0.5 * (ep + em);
      switch (which) {
        case 0: return sh;
        case 1: return sh + tz * ch;
        default: return 2.0 * z * ch + t * z * z * sh;
      }
    };
  };

  ScaledMoments out{shift, {}};
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  for (int which = 0; which < 3; ++which) {
    const auto f = kernel(which);
    double total = 0.0;
    if (z_peak > 0.0) total += GK::integrate(f, 0.0, z_peak, 20, 1e-14);
    total += GK::integrate(f, z_peak, z_end, 20, 1e-14);
    out.j[which] = total;
  }
  return out;
}

Cumulants parametric_cumulants(const StepLaw& step, double t) {
  if (!step.mgf_domain().contains(t)) return {kInf, kNaN, kNaN};
  if (step.kind() == StepKind::WeibullTail && step.alpha() == 1.0) {
    // Laplace law: psi(t) = lambda^2 / (lambda^2 - t^2).
    const double l2 = step.lambda() * step.lambda();
    const double d = (step.lambda() - t) * (step.lambda() + t);
    return {std::log(l2) - std::log(d), 2.0 * t / d, 2.0 * (l2 + t * t) / (d * d)};
  }
  if (t == 0.0) {
    const ScaledMoments m = parametric_moments(step, 0.0);
    return {0.0, 0.0, m.j[2]};
  }
  // psi is even: evaluate at |t| and reflect the odd derivative.
  const double sign = t < 0.0 ? -1.0 : 1.0;
  const double at = std::abs(t);
  const ScaledMoments m = parametric_moments(step, at);
  const double scaled_psi = std::exp(-m.shift) + at * m.j[0];
  const double k1 = m.j[1] / scaled_psi;
  const double k2 = m.j[2] / scaled_psi - k1 * k1;
  return {m.shift + std::log(scaled_psi), sign * k1, std::max(0.0, k2)};
}

}  // namespace

Cumulants cumulants(const StepLaw& step, double t) {
  return step.is_lattice() ? lattice_cumulants(step, t) : parametric_cumulants(step, t);
}

double log_mgf(const StepLaw& step, double t) {
  if (t == 0.0) return 0.0;
  return cumulants(step, t).k0;
}

}  // namespace brw
