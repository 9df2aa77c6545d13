#include "brw/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "brw/error.hpp"
#include "brw/numeric.hpp"
#include "brw/rates.hpp"

namespace brw {

namespace {

constexpr double kSumTol = 1e-12;

void check_probabilities(const std::vector<double>& probs, const char* what) {
  CompensatedSum total;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::InvalidLaw, std::string(what) + ": probabilities must be finite and >= 0");
    }
    total.add(p);
  }
  if (std::abs(total.value() - 1.0) > kSumTol) {
    std::ostringstream os;
    os << what << ": probabilities sum to " << total.value() << ", expected 1";
    throw Error(ErrorCode::InvalidLaw, os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------- offspring

OffspringLaw OffspringLaw::from_pmf(std::vector<double> pmf) {
  while (!pmf.empty() && pmf.back() == 0.0) pmf.pop_back();
  if (pmf.empty()) throw Error(ErrorCode::EmptySupport, "offspring law has no mass");
  check_probabilities(pmf, "offspring law");

  OffspringLaw law;
  law.pmf_ = std::move(pmf);
  CompensatedSum mean;
  for (std::size_t k = 0; k < law.pmf_.size(); ++k) mean.add(static_cast<double>(k) * law.pmf_[k]);
  law.mean_ = mean.value();
  law.b_ = static_cast<int>(std::find_if(law.pmf_.begin(), law.pmf_.end(), [](double p) { return p > 0.0; }) -
                            law.pmf_.begin());
  law.b1_ = 0;
  for (std::size_t k = 1; k < law.pmf_.size(); ++k) {
    if (law.pmf_[k] > 0.0) {
      law.b1_ = static_cast<int>(k);
      break;
    }
  }
  return law;
}

OffspringLaw OffspringLaw::from_map(const std::map<int, double>& pmf) {
  if (pmf.empty()) throw Error(ErrorCode::EmptySupport, "offspring law has no entries");
  if (pmf.begin()->first < 0) throw Error(ErrorCode::InvalidLaw, "offspring counts must be >= 0");
  std::vector<double> dense(static_cast<std::size_t>(pmf.rbegin()->first) + 1, 0.0);
  for (const auto& [k, p] : pmf) dense[static_cast<std::size_t>(k)] = p;
  return from_pmf(std::move(dense));
}

double OffspringLaw::pgf(double s) const {
  double acc = 0.0;
  for (auto it = pmf_.rbegin(); it != pmf_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double OffspringLaw::pgf_derivative(double s) const {
  double acc = 0.0;
  for (std::size_t k = pmf_.size() - 1; k >= 1; --k) {
    acc = acc * s + static_cast<double>(k) * pmf_[k];
  }
  return acc;
}

double OffspringLaw::neg_log_pgf_of_exp(double y) const {
  if (y <= 30.0) return -std::log(pgf(std::exp(-y)));
  if (y == kInf) return b_ == 0 ? -std::log(pmf_[0]) : kInf;
  // Leading term p_b e^{-b y} with a log1p correction from higher powers.
  const double pb = pmf_[b_];
  double corr = 0.0;
  for (std::size_t k = pmf_.size() - 1; k > static_cast<std::size_t>(b_); --k) {
    corr += (pmf_[k] / pb) * std::exp(-static_cast<double>(k - b_) * y);
  }
  return -std::log(pb) + static_cast<double>(b_) * y - std::log1p(corr);
}

double OffspringLaw::pgf_divided_difference(double a, double b) const {
  // sum_k p_k sum_{j<k} a^j b^{k-1-j}, built by the recurrence
  // h_k = a h_{k-1} + b^{k-1}, h_1 = 1.
  double total = 0.0;
  double h = 0.0;
  double bpow = 1.0;
  for (std::size_t k = 1; k < pmf_.size(); ++k) {
    h = a * h + bpow;
    bpow *= b;
    total += pmf_[k] * h;
  }
  return total;
}

// --------------------------------------------------------------------- step

StepLaw StepLaw::lattice(double span, const std::map<long, double>& pmf) {
  if (pmf.empty()) throw Error(ErrorCode::EmptySupport, "step law has no atoms");
  const long lo = pmf.begin()->first;
  const long hi = pmf.rbegin()->first;
  std::vector<double> probs(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (const auto& [k, p] : pmf) probs[static_cast<std::size_t>(k - lo)] = p;
  return lattice(span, lo, std::move(probs));
}

StepLaw StepLaw::lattice(double span, long min_offset, std::vector<double> probs) {
  if (!(span > 0.0) || !std::isfinite(span)) throw Error(ErrorCode::InvalidLaw, "lattice span must be > 0");
  check_probabilities(probs, "step law");
  std::size_t first = 0;
  while (first < probs.size() && probs[first] == 0.0) ++first;
  std::size_t last = probs.size();
  while (last > first && probs[last - 1] == 0.0) --last;
  if (first == last) throw Error(ErrorCode::EmptySupport, "step law has no mass");

  StepLaw s;
  s.kind_ = StepKind::Lattice;
  s.span_ = span;
  s.min_offset_ = min_offset + static_cast<long>(first);
  s.probs_.assign(probs.begin() + static_cast<long>(first), probs.begin() + static_cast<long>(last));
  if (s.min_offset_ >= 0 || s.max_offset() <= 0) {
    throw Error(ErrorCode::EmptySupport, "lattice support must contain atoms on both sides of zero");
  }
  return s;
}

StepLaw StepLaw::weibull(double alpha, double lambda) {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidLaw, "weibull alpha must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::InvalidLaw, "weibull lambda must be > 0");
  StepLaw s;
  s.kind_ = StepKind::WeibullTail;
  s.alpha_ = alpha;
  s.lambda_ = lambda;
  return s;
}

StepLaw StepLaw::gumbel(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidLaw, "gumbel alpha must be > 0");
  StepLaw s;
  s.kind_ = StepKind::GumbelTail;
  s.alpha_ = alpha;
  return s;
}

double StepLaw::prob_at_offset(long k) const {
  if (k < min_offset_ || k > max_offset()) return 0.0;
  return probs_[static_cast<std::size_t>(k - min_offset_)];
}

double StepLaw::mean() const {
  if (!is_lattice()) return 0.0;
  CompensatedSum m;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    m.add(static_cast<double>(min_offset_ + static_cast<long>(i)) * probs_[i]);
  }
  return m.value() * span_;
}

double StepLaw::L() const { return is_lattice() ? -static_cast<double>(min_offset_) * span_ : kInf; }

double StepLaw::R() const { return is_lattice() ? static_cast<double>(max_offset()) * span_ : kInf; }

double StepLaw::atom_mass(double x) const {
  if (!is_lattice()) return 0.0;
  const double k = x / span_;
  const double kr = std::round(k);
  if (std::abs(k - kr) > 1e-9) return 0.0;
  return prob_at_offset(static_cast<long>(kr));
}

double StepLaw::log_tail_shape(double z) const {
  switch (kind_) {
    case StepKind::WeibullTail: return -lambda_ * std::pow(z, alpha_);
    case StepKind::GumbelTail: return 1.0 - std::exp(std::pow(z, alpha_));
    case StepKind::Lattice: break;
  }
  return kNaN;
}

double StepLaw::cdf(double x) const {
  if (is_lattice()) {
    const long k = static_cast<long>(std::floor(x / span_ + 1e-9));
    if (k < min_offset_) return 0.0;
    if (k >= max_offset()) return 1.0;
    CompensatedSum acc;
    for (long j = min_offset_; j <= k; ++j) acc.add(prob_at_offset(j));
    return std::min(1.0, acc.value());
  }
  if (x < 0.0) return 0.5 * std::exp(log_tail_shape(-x));
  return 1.0 - 0.5 * std::exp(log_tail_shape(x));
}

double StepLaw::log_cdf(double x) const {
  if (is_lattice()) {
    const double c = cdf(x);
    return c > 0.0 ? std::log(c) : -kInf;
  }
  if (x < 0.0) return std::log(0.5) + log_tail_shape(-x);
  return std::log1p(-0.5 * std::exp(log_tail_shape(x)));
}

double StepLaw::quantile(double p) const {
  if (is_lattice()) throw Error(ErrorCode::InvalidLaw, "quantile is defined for parametric laws only");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::OutOfRange, "quantile level must lie in (0, 1)");
  const bool left = p < 0.5;
  const double tail = left ? p : 1.0 - p;  // P(X <= -z) = tail
  if (tail >= 0.5) return 0.0;
  const double log_shape = std::log(2.0 * tail);  // log S(z)
  double z = 0.0;
  if (kind_ == StepKind::WeibullTail) {
    z = std::pow(-log_shape / lambda_, 1.0 / alpha_);
  } else {
    z = std::pow(std::log(1.0 - log_shape), 1.0 / alpha_);
  }
  return left ? -z : z;
}

MgfDomain StepLaw::mgf_domain() const {
  if (kind_ == StepKind::WeibullTail && alpha_ == 1.0) return {-lambda_, lambda_, true};
  return {-kInf, kInf, true};
}

std::string StepLaw::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case StepKind::Lattice:
      os << "lattice(span=" << span_ << ", offsets " << min_offset_ << ".." << max_offset() << ")";
      break;
    case StepKind::WeibullTail: os << "weibull(alpha=" << alpha_ << ", lambda=" << lambda_ << ")"; break;
    case StepKind::GumbelTail: os << "gumbel(alpha=" << alpha_ << ")"; break;
  }
  return os.str();
}

// ------------------------------------------------------------- derivations

double extinction_probability(const OffspringLaw& off) {
  if (!(off.mean() > 1.0)) throw Error(ErrorCode::SubcriticalModel, "extinction probability needs m > 1");
  if (off.p(0) == 0.0) return 0.0;
  // Monotone iteration from 0 converges to the smallest fixed point, slowly
  // when f'(q) is close to 1; switch to bisection once progress stalls.
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double next = off.pgf(s);
    const double step = next - s;
    s = next;
    if (step < 1e-15) break;
  }
  // s <= q, and f(x) < x on (q, 1): widen upward until the sign flips.
  const double top = std::nextafter(1.0, 0.0);
  const auto g = [&](double x) { return off.pgf(x) - x; };
  double lo = s;
  double hi = s;
  for (double width = 1e-12; g(hi) >= 0.0 && hi < top; width *= 2.0) {
    lo = hi;
    hi = std::min(top, hi + width);
  }
  return bisect(g, lo, hi, 1e-17).root;
}

double schroder_gamma(const OffspringLaw& off) {
  if (!off.is_schroeder()) {
    throw Error(ErrorCode::NotSchroeder, "Schroeder case requires 0 < p_0 + p_1 < 1");
  }
  const double q = extinction_probability(off);
  const double slope = off.pgf_derivative(q);
  return slope > 0.0 ? std::log(slope) : -kInf;
}

ModelConstants validate_model(const OffspringLaw& off, const StepLaw& step) {
  ModelConstants c;
  if (!(off.mean() > 1.0)) {
    std::ostringstream os;
    os << "m = " << off.mean() << " <= 1";
    throw Error(ErrorCode::SubcriticalModel, os.str());
  }
  if (std::abs(step.mean()) > 1e-12) {
    std::ostringstream os;
    os << "E[X] = " << step.mean();
    throw Error(ErrorCode::NonZeroMean, os.str());
  }
  c.log_m = std::log(off.mean());
  c.L = step.L();
  c.R = step.R();
  c.a11 = {true, "m > 1 and finite offspring support gives every moment"};

  const MgfDomain dom = step.mgf_domain();
  if (dom.lo < 0.0 && dom.hi > 0.0) {
    c.a12 = {true, "E[X] = 0 and psi finite on a neighbourhood of 0"};
  } else {
    c.a12 = {false, "psi is not finite near 0"};
  }

  const SpeedResult speed = speed_x_star(step, c.log_m);
  c.x_star = speed.x_star;
  c.speed_residual = speed.residual;
  if (speed.at_boundary) {
    c.degenerate = true;
    c.theta_star = kNaN;
    c.a13 = {false, "x* = ess sup X and m P(X = x*) >= 1: no finite theta* solves I(x*) = log m"};
    c.a14 = {false, "theta* does not exist"};
    return c;
  }
  const Optimum th = theta_star(step, c.log_m, c.x_star);
  c.theta_star = th.argopt;
  c.a13 = {true, "finite theta* > 0 with theta* x* - log psi(theta*) = log m"};
  if (th.argopt < dom.hi) {
    c.a14 = {true, dom.hi == kInf ? "psi finite on all of R" : "theta* lies strictly inside the mgf domain"};
  } else {
    c.a14 = {false, "psi is infinite right of theta*"};
  }
  return c;
}

Model Model::make(OffspringLaw off, StepLaw step) {
  ModelConstants c = validate_model(off, step);
  return Model{std::move(off), std::move(step), c};
}

double Model::theta_star() const {
  if (constants.degenerate) {
    throw Error(ErrorCode::DegenerateBoundary, "x* = ess sup X; theta* does not exist");
  }
  return constants.theta_star;
}

}  // namespace brw
