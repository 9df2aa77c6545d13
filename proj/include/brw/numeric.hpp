#pragma once

// Extended-real helpers and the one-dimensional solvers shared by the rate
// and oracle code. +inf is a legal value throughout: it absorbs addition and
// log-sum-exp ignores -inf terms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace brw {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// log(e^a + e^b) without overflow.
inline double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

/// log(sum_i e^{v_i}); -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v) {
  double hi = -kInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == -kInf || hi == kInf) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

/// log(1 - e^{-x}) for x >= 0, accurate at both ends.
inline double log1mexp(double x) {
  if (x <= 0.0) return -kInf;
  return x < 0.693147180559945 ? std::log(-std::expm1(-x)) : std::log1p(-std::exp(-x));
}

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct RootResult {
  double root;
  double residual;  // |g(root)|
  double bracket;   // final bracket width
};

/// Bisection for a sign change of g on [lo, hi]. Requires g(lo) and g(hi) of
/// opposite sign (zero allowed).
inline RootResult bisect(const std::function<double(double)>& g, double lo, double hi,
                         double xtol = 1e-15, int max_iter = 400) {
  double glo = g(lo);
  double ghi = g(hi);
  if (glo == 0.0) return {lo, 0.0, 0.0};
  if (ghi == 0.0) return {hi, 0.0, 0.0};
  for (int i = 0; i < max_iter && hi - lo > xtol * std::max(1.0, std::abs(lo) + std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0.0) return {mid, 0.0, 0.0};
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  const bool take_lo = std::abs(glo) <= std::abs(ghi);
  return {take_lo ? lo : hi, take_lo ? std::abs(glo) : std::abs(ghi), hi - lo};
}

/// Newton's method on an increasing function g inside a sign-change bracket
/// [lo, hi]; falls back to bisection whenever the step leaves the bracket.
/// `eval` returns (g(t), g'(t)).
template <class Eval>
RootResult safeguarded_newton(Eval&& eval, double lo, double hi, double start, double ftol,
                              int max_iter = 200) {
  double t = std::clamp(start, lo, hi);
  double best_t = t;
  double best_res = kInf;
  for (int i = 0; i < max_iter; ++i) {
    const auto [g, dg] = eval(t);
    if (std::abs(g) < best_res) {
      best_res = std::abs(g);
      best_t = t;
    }
    if (std::abs(g) <= ftol) break;
    if (g > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) break;
    double next = (dg > 0.0 && std::isfinite(dg)) ? t - g / dg : kNaN;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    t = next;
  }
  return {best_t, best_res, hi - lo};
}

struct Extremum {
  double location;
  double value;
  double bracket;
};

/// Golden-section search for the maximum of a unimodal f on [lo, hi].
inline Extremum golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                   double width = 1e-10, int max_iter = 500) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iter && hi - lo > width; ++i) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double fm = f(mid);
  Extremum best{mid, fm, hi - lo};
  if (fc > best.value) best = {c, fc, hi - lo};
  if (fd > best.value) best = {d, fd, hi - lo};
  return best;
}

/// Grid scan followed by golden-section refinement around the best grid
/// point. The scan guards against objectives that are not unimodal; the
/// endpoints are always candidates.
inline Extremum grid_golden_max(const std::function<double(double)>& f, double lo, double hi,
                                int points = 1024, double width = 1e-10) {
  if (!(hi > lo)) return {lo, f(lo), 0.0};
  const double step = (hi - lo) / (points - 1);
  int best_i = 0;
  double best_v = -kInf;
  for (int i = 0; i < points; ++i) {
    const double x = (i == points - 1) ? hi : lo + i * step;
    const double v = f(x);
    if (v > best_v) {
      best_v = v;
      best_i = i;
    }
  }
  const double a = std::max(lo, lo + (best_i - 1) * step);
  const double b = std::min(hi, lo + (best_i + 1) * step);
  Extremum refined = golden_section_max(f, a, b, width);
  const double at_grid = (best_i == points - 1) ? hi : lo + best_i * step;
  if (best_v > refined.value) refined = {at_grid, best_v, refined.bracket};
  return refined;
}

}  // namespace brw
