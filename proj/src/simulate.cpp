#include "brw/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <boost/random/binomial_distribution.hpp>

#include "brw/error.hpp"
#include "brw/numeric.hpp"
#include "brw/rng.hpp"

namespace brw {

std::string to_string(EstimateMethod method) {
  switch (method) {
    case EstimateMethod::ForwardMc: return "forward-mc";
    case EstimateMethod::StrategyBound: return "strategy-bound";
    case EstimateMethod::TailRegression: return "tail-regression";
  }
  return "unknown";
}

namespace {

// Splits `trials` over categories with probabilities `probs` by sequential
// binomials; calls emit(category, count) for nonzero counts.
template <class Emit>
void multinomial(std::uint64_t trials, std::span<const double> probs, PhiloxStream& rng, Emit&& emit) {
  double remaining_prob = 1.0;
  std::uint64_t remaining = trials;
  std::size_t last = probs.size();
  while (last > 0 && probs[last - 1] == 0.0) --last;
  for (std::size_t k = 0; k < last && remaining > 0; ++k) {
    if (probs[k] == 0.0) continue;
    if (k + 1 == last) {
      emit(k, remaining);
      return;
    }
    const double p = std::clamp(probs[k] / remaining_prob, 0.0, 1.0);
    std::uint64_t draw = 0;
    if (p >= 1.0) {
      draw = remaining;
    } else if (p > 0.0) {
      boost::random::binomial_distribution<long long, double> bin(static_cast<long long>(remaining), p);
      draw = static_cast<std::uint64_t>(bin(rng));
    }
    if (draw > 0) emit(k, draw);
    remaining -= draw;
    remaining_prob -= probs[k];
  }
}

struct ReplicaOutcome {
  double max;
  double martingale;
  std::uint64_t population;
};

class MartingaleTerm {
 public:
  MartingaleTerm(const Model& model, int n) : n_(n) {
    if (model.has_theta()) {
      theta_ = model.theta_star();
      shift_ = static_cast<double>(n) * model.constants.x_star;
    }
  }
  double operator()(double position) const {
    if (std::isnan(theta_)) return kNaN;
    const double gap = shift_ - position;
    return theta_ * gap * std::exp(-theta_ * gap);
  }

 private:
  int n_;
  double theta_ = kNaN;
  double shift_ = 0.0;
};

ReplicaOutcome run_lattice(const Model& model, int n, std::uint64_t replica, std::uint64_t seed,
                           std::uint64_t cap, const MartingaleTerm& term) {
  const auto& off = model.offspring.pmf();
  const StepLaw& step = model.step;
  const long jmin = step.min_offset();
  const long width = static_cast<long>(step.probs().size());
  const auto rep = static_cast<std::uint32_t>(replica);
  const int single_k = [&] {
    int found = -1;
    for (std::size_t k = 0; k < off.size(); ++k) {
      if (off[k] == 0.0) continue;
      if (found >= 0) return -1;
      found = static_cast<int>(k);
    }
    return found;
  }();

  // counts[i] is the occupation of site lo + i.
  long lo = 0;
  std::vector<std::uint64_t> counts{1};
  std::vector<std::uint64_t> next;
  for (int g = 1; g <= n; ++g) {
    const long next_lo = lo + jmin;
    next.assign(counts.size() + static_cast<std::size_t>(width) - 1, 0);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const std::uint64_t c = counts[i];
      if (c == 0) continue;
      PhiloxStream rng(seed, rep, static_cast<std::uint32_t>(g), static_cast<std::uint32_t>(i));
      std::uint64_t children = 0;
      if (single_k >= 0) {
        children = c * static_cast<std::uint64_t>(single_k);
      } else {
        multinomial(c, off, rng, [&](std::size_t k, std::uint64_t m) { children += k * m; });
      }
      if (children == 0) continue;
      total += children;
      if (total > cap) {
        throw Error(ErrorCode::CapExceeded, "replica " + std::to_string(replica) + " exceeded the population cap at generation " +
                                                std::to_string(g));
      }
      multinomial(children, step.probs(), rng, [&](std::size_t j, std::uint64_t m) { next[i + j] += m; });
    }
    counts.swap(next);
    lo = next_lo;
    if (total == 0) return {-kInf, 0.0, 0};
  }

  const double h = step.span();
  ReplicaOutcome out{-kInf, 0.0, 0};
  CompensatedSum d;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    const double x = static_cast<double>(lo + static_cast<long>(i)) * h;
    out.max = x;
    out.population += counts[i];
    d.add(static_cast<double>(counts[i]) * term(x));
  }
  out.martingale = d.value();
  return out;
}

ReplicaOutcome run_particles(const Model& model, int n, std::uint64_t replica, std::uint64_t seed,
                             std::uint64_t cap, const MartingaleTerm& term) {
  const auto& off = model.offspring.pmf();
  std::vector<double> cum(off.size());
  std::partial_sum(off.begin(), off.end(), cum.begin());
  const auto rep = static_cast<std::uint32_t>(replica);

  std::vector<double> pos{0.0};
  std::vector<double> next;
  for (int g = 1; g <= n; ++g) {
    next.clear();
    for (std::size_t i = 0; i < pos.size(); ++i) {
      PhiloxStream rng(seed, rep, static_cast<std::uint32_t>(g), static_cast<std::uint32_t>(i));
      const double u = rng.uniform();
      std::size_t k = 0;
      while (k + 1 < cum.size() && u > cum[k]) ++k;
      if (next.size() + k > cap) {
        throw Error(ErrorCode::CapExceeded, "replica " + std::to_string(replica) + " exceeded the population cap at generation " +
                                                std::to_string(g));
      }
      for (std::size_t c = 0; c < k; ++c) next.push_back(pos[i] + model.step.quantile(rng.uniform()));
    }
    pos.swap(next);
    if (pos.empty()) return {-kInf, 0.0, 0};
  }
  ReplicaOutcome out{-kInf, 0.0, pos.size()};
  CompensatedSum d;
  for (double x : pos) {
    out.max = std::max(out.max, x);
    d.add(term(x));
  }
  out.martingale = d.value();
  return out;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

struct SlopeOnly {
  double slope;
  double lo;
  double hi;
  std::size_t points;
};

SlopeOnly tail_slope_sorted(std::vector<double> values, std::size_t top, std::size_t min_points) {
  std::sort(values.begin(), values.end(), std::greater<>());
  if (values.size() < top || !(values[top - 1] > 0.0)) {
    throw Error(ErrorCode::InsufficientTail, "not enough positive samples for the tail window");
  }
  const double hi = values[top - 1];
  const double lo = hi / 10.0;
  const double total = static_cast<double>(values.size());
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = top - 1; i < values.size() && values[i] >= lo; ++i) {
    lx.push_back(std::log(values[i]));
    ly.push_back(std::log(static_cast<double>(i + 1) / total));
  }
  if (lx.size() < min_points) {
    throw Error(ErrorCode::InsufficientTail,
                "only " + std::to_string(lx.size()) + " exceedances in the fit window");
  }
  return {ols_slope(lx, ly), lo, hi, lx.size()};
}

}  // namespace

ForwardSamples simulate_forward(const Model& model, int n, std::uint64_t replicas, std::uint64_t seed,
                                std::uint64_t cap) {
  if (n < 0) throw Error(ErrorCode::OutOfRange, "n must be >= 0");
  if (replicas == 0) throw Error(ErrorCode::OutOfRange, "replicas must be >= 1");
  if (replicas > std::uint64_t{1} << 32) throw Error(ErrorCode::OutOfRange, "at most 2^32 replicas");
  const MartingaleTerm term(model, n);
  ForwardSamples out;
  out.n = n;
  out.seed = seed;
  out.max.resize(replicas);
  out.martingale.resize(replicas);
  out.population.resize(replicas);
  for (std::uint64_t r = 0; r < replicas; ++r) {
    const ReplicaOutcome o = model.step.is_lattice() ? run_lattice(model, n, r, seed, cap, term)
                                                     : run_particles(model, n, r, seed, cap, term);
    out.max[r] = o.max;
    out.martingale[r] = o.martingale;
    out.population[r] = o.population;
  }
  return out;
}

TailFit fit_tail_slope(std::span<const double> samples, std::size_t top, std::size_t groups, std::size_t min_points) {
  if (top == 0 || groups < 2) throw Error(ErrorCode::OutOfRange, "need top >= 1 and at least two groups");
  const SlopeOnly full = tail_slope_sorted({samples.begin(), samples.end()}, top, min_points);

  std::vector<double> leave_out(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<double> sub;
    sub.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (i % groups != g) sub.push_back(samples[i]);
    }
    leave_out[g] = tail_slope_sorted(std::move(sub), top, 2).slope;
  }
  const double mean = std::accumulate(leave_out.begin(), leave_out.end(), 0.0) / static_cast<double>(groups);
  double ss = 0.0;
  for (double s : leave_out) ss += (s - mean) * (s - mean);
  const double gd = static_cast<double>(groups);
  return {full.slope, std::sqrt((gd - 1.0) / gd * ss), full.lo, full.hi, full.points};
}

EstimateRecord d_tail_slope(const Model& model, int n, std::uint64_t replicas, std::uint64_t seed, std::uint64_t cap) {
  model.theta_star();
  const auto start = std::chrono::steady_clock::now();
  const ForwardSamples s = simulate_forward(model, n, replicas, seed, cap);
  const TailFit fit = fit_tail_slope(s.martingale);
  EstimateRecord rec;
  rec.name = "d_tail_slope";
  rec.estimate = fit.slope;
  rec.std_error = fit.std_error;
  rec.replicas = replicas;
  rec.seed = seed;
  rec.method = EstimateMethod::TailRegression;
  rec.details = {{"n", static_cast<double>(n)},
                 {"window_lo", fit.window_lo},
                 {"window_hi", fit.window_hi},
                 {"points", static_cast<double>(fit.points)}};
  rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

double ks_distance_lattice(std::span<const double> samples, double span, const std::function<double(double)>& cdf) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double total = static_cast<double>(sorted.size());
  double lo_x = kInf;
  for (double v : sorted) {
    if (std::isfinite(v)) {
      lo_x = v;
      break;
    }
  }
  if (!std::isfinite(lo_x)) return std::abs(1.0 - cdf(-kInf));
  const long k_lo = static_cast<long>(std::floor(lo_x / span + 1e-9)) - 1;
  const long k_hi = static_cast<long>(std::floor(sorted.back() / span + 1e-9));
  double worst = 0.0;
  std::size_t idx = 0;
  for (long k = k_lo; k <= k_hi; ++k) {
    const double x = static_cast<double>(k) * span;
    while (idx < sorted.size() && sorted[idx] <= x + 1e-9 * span) ++idx;
    worst = std::max(worst, std::abs(static_cast<double>(idx) / total - cdf(x)));
  }
  return worst;
}

}  // namespace brw
