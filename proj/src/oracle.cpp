// Exact distribution of the maximum on a lattice.
//
// With G_n = -log F_n the recursion reads
//   y_n(x) = -log sum_j p_j exp(-G_{n-1}(x - j h)),   G_n(x) = -log f(e^{-y_n(x)}).
// G_n is nonincreasing in x, so inside each convolution window the smallest
// value sits at the largest argument. When that value is moderate the sum is
// done in the direct domain on precomputed exp(-G); otherwise it is a
// log-sum-exp truncated once terms fall 80 nats below the leader.
//
// For Schroeder laws the extinction part F^ext and the survival part
// U = F - F^ext are propagated separately:
//   F^ext_n = f(B),  U_n = D f[A, B],
//   A = E F_{n-1}(x - X),  B = E F^ext_{n-1}(x - X),  D = E U_{n-1}(x - X),
// with f[A, B] the divided difference, which avoids subtracting two nearly
// equal probabilities.

#include "brw/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "brw/error.hpp"
#include "brw/numeric.hpp"

namespace brw {

namespace {

constexpr double kDirectLimit = 600.0;
constexpr double kLogWindow = 80.0;

// Values of one generation over [lo, hi] with constant extension below lo and
// the given value above hi.
struct Layer {
  long lo = 0;
  long hi = 0;
  std::vector<double> v;
  double below = 0.0;
  double above = 0.0;

  double at(long k) const {
    if (k < lo) return below;
    if (k > hi) return above;
    return v[static_cast<std::size_t>(k - lo)];
  }
  // Copy of the values on [a, b] with extension applied.
  std::vector<double> padded(long a, long b) const {
    std::vector<double> out(static_cast<std::size_t>(b - a + 1));
    for (long k = a; k <= b; ++k) out[static_cast<std::size_t>(k - a)] = at(k);
    return out;
  }
};

std::vector<LogCdfGrid> run_recursion(const Model& model, std::span<const int> generations,
                                      const GridParams& params, bool want_conditioned) {
  const StepLaw& step = model.step;
  if (!step.is_lattice()) {
    throw Error(ErrorCode::InvalidLaw, "oracle recursion needs a lattice step; discretize first");
  }
  const OffspringLaw& off = model.offspring;
  const bool schroeder = off.is_schroeder();
  if (want_conditioned && !schroeder) {
    throw Error(ErrorCode::NotSchroeder, "conditioned distribution needs 0 < p0 + p1 < 1");
  }

  std::vector<int> gens(generations.begin(), generations.end());
  std::sort(gens.begin(), gens.end());
  gens.erase(std::unique(gens.begin(), gens.end()), gens.end());
  if (gens.empty()) return {};
  if (gens.front() < 0) throw Error(ErrorCode::OutOfRange, "generation must be >= 0");
  const int n_max = gens.back();

  const double h = step.span();
  const long jmin = step.min_offset();
  const long jmax = step.max_offset();
  std::vector<double> pj;
  std::vector<double> log_pj;
  for (double p : step.probs()) {
    pj.push_back(p);
    log_pj.push_back(p > 0.0 ? std::log(p) : -kInf);
  }
  const std::size_t width = pj.size();

  // Grid bounds per generation, trimmed backwards from min_x if requested.
  std::vector<long> lo(static_cast<std::size_t>(n_max) + 1);
  std::vector<long> hi(static_cast<std::size_t>(n_max) + 1);
  std::vector<bool> trimmed(static_cast<std::size_t>(n_max) + 1, false);
  for (int g = n_max; g >= 0; --g) {
    const long natural = static_cast<long>(g) * jmin - 2;
    long bound = natural;
    if (g == n_max) {
      if (std::isfinite(params.min_x)) bound = std::max(natural, static_cast<long>(std::floor(params.min_x / h)) - 1);
    } else {
      bound = std::max(natural, lo[g + 1] - jmax);
    }
    lo[g] = bound;
    trimmed[g] = bound > natural;
    hi[g] = static_cast<long>(g) * jmax + 2;
  }

  const std::size_t arrays = schroeder ? 8 : 4;
  const double points = static_cast<double>(hi[n_max] - lo[n_max] + 1 + static_cast<long>(width));
  if (points * static_cast<double>(arrays) * sizeof(double) > static_cast<double>(params.memory_budget)) {
    throw Error(ErrorCode::GridOverflow, "grid for n = " + std::to_string(n_max) + " exceeds the memory budget");
  }

  const double q = schroeder ? extinction_probability(off) : 0.0;
  const bool track_ext = schroeder && q > 0.0;

  Layer G{lo[0], hi[0], {}, kInf, 0.0};
  Layer Fext{lo[0], hi[0], {}, 0.0, q};
  Layer logU{lo[0], hi[0], {}, -kInf, std::log1p(-q)};
  for (long k = lo[0]; k <= hi[0]; ++k) {
    G.v.push_back(k >= 0 ? 0.0 : kInf);
    if (track_ext) {
      Fext.v.push_back(k >= 0 ? q : 0.0);
      logU.v.push_back(k >= 0 ? std::log1p(-q) : -kInf);
    }
  }

  std::vector<LogCdfGrid> out;
  const auto snapshot = [&](int g) {
    LogCdfGrid grid;
    grid.n = g;
    grid.span = h;
    grid.lo = G.lo;
    grid.hi = G.hi;
    grid.G = G.v;
    grid.trimmed = trimmed[g];
    if (schroeder) {
      std::vector<double> ge(G.v.size());
      std::vector<double> gs(G.v.size());
      const double log_surv = std::log1p(-q);
      for (std::size_t i = 0; i < G.v.size(); ++i) {
        if (track_ext) {
          ge[i] = -std::log(Fext.v[i]);
          gs[i] = -(logU.v[i] - log_surv);
        } else {
          ge[i] = kInf;
          gs[i] = G.v[i];
        }
      }
      grid.G_ext = std::move(ge);
      grid.G_surv = std::move(gs);
    }
    out.push_back(std::move(grid));
  };

  std::size_t next = 0;
  if (gens[next] == 0) {
    snapshot(0);
    ++next;
  }

  for (int g = 1; g <= n_max; ++g) {
    const long glo = lo[g];
    const long ghi = hi[g];
    // Window for point k covers previous indices k - jmax .. k - jmin.
    const long pad_lo = glo - jmax;
    const long pad_hi = ghi - jmin;
    const std::vector<double> Gp = G.padded(pad_lo, pad_hi);
    std::vector<double> Fp(Gp.size());
    for (std::size_t i = 0; i < Gp.size(); ++i) Fp[i] = std::exp(-Gp[i]);
    std::vector<double> Ep;
    std::vector<double> Up;
    if (track_ext) {
      Ep = Fext.padded(pad_lo, pad_hi);
      Up = logU.padded(pad_lo, pad_hi);
    }

    Layer nextG{glo, ghi, std::vector<double>(static_cast<std::size_t>(ghi - glo + 1)), 0.0, 0.0};
    Layer nextE{glo, ghi, {}, 0.0, q};
    Layer nextU{glo, ghi, {}, -kInf, std::log1p(-q)};
    if (track_ext) {
      nextE.v.resize(nextG.v.size());
      nextU.v.resize(nextG.v.size());
    }

    std::vector<double> terms(width);
    for (long k = glo; k <= ghi; ++k) {
      // Index into the padded arrays of the previous value at k - j is
      // (k - j) - pad_lo = (k - glo) + (jmax - j).
      const std::size_t base = static_cast<std::size_t>(k - glo);
      const auto idx = [&](std::size_t jj) {  // jj = j - jmin
        return base + static_cast<std::size_t>(jmax - jmin) - jj;
      };
      const double m = Gp[idx(0)];
      double y;
      if (m == kInf) {
        y = kInf;
      } else if (m <= kDirectLimit) {
        double a = 0.0;
        for (std::size_t jj = 0; jj < width; ++jj) a += pj[jj] * Fp[idx(jj)];
        // a can exceed 1 by rounding.
        y = a >= 1.0 ? 0.0 : -std::log(a);
      } else {
        double s = 0.0;
        for (std::size_t jj = 0; jj < width; ++jj) {
          const double d = Gp[idx(jj)] - m;
          if (d > kLogWindow) break;
          if (pj[jj] > 0.0) s += pj[jj] * std::exp(-d);
        }
        y = m - std::log(s);
      }
      const std::size_t out_i = static_cast<std::size_t>(k - glo);
      nextG.v[out_i] = std::max(0.0, off.neg_log_pgf_of_exp(y));

      if (track_ext) {
        double b = 0.0;
        for (std::size_t jj = 0; jj < width; ++jj) b += pj[jj] * Ep[idx(jj)];
        std::size_t used = 0;
        for (std::size_t jj = 0; jj < width; ++jj) {
          if (pj[jj] > 0.0 && Up[idx(jj)] > -kInf) terms[used++] = log_pj[jj] + Up[idx(jj)];
        }
        const double log_d = log_sum_exp(std::span<const double>(terms.data(), used));
        const double a = std::exp(-y);
        nextE.v[out_i] = std::min(q, off.pgf(b));
        nextU.v[out_i] = log_d == -kInf ? -kInf : log_d + std::log(off.pgf_divided_difference(a, b));
      }
    }
    nextG.below = nextG.v.front();
    G = std::move(nextG);
    if (track_ext) {
      nextE.below = nextE.v.front();
      Fext = std::move(nextE);
      logU = std::move(nextU);
    }

    if (next < gens.size() && gens[next] == g) {
      snapshot(g);
      ++next;
    }
  }
  return out;
}

}  // namespace

double LogCdfGrid::G_at(double x) const {
  const long k = static_cast<long>(std::floor(x / span + 1e-9));
  if (k > hi) return 0.0;
  if (k < lo) {
    if (trimmed) throw Error(ErrorCode::OutOfRange, "position below the trimmed grid");
    return G.front();
  }
  return G[static_cast<std::size_t>(k - lo)];
}

double LogCdfGrid::G_surv_at(double x) const {
  if (!G_surv) throw Error(ErrorCode::NotSchroeder, "grid has no conditioned values");
  const long k = static_cast<long>(std::floor(x / span + 1e-9));
  if (k > hi) return 0.0;
  if (k < lo) {
    if (trimmed) throw Error(ErrorCode::OutOfRange, "position below the trimmed grid");
    return G_surv->front();
  }
  return (*G_surv)[static_cast<std::size_t>(k - lo)];
}

std::vector<LogCdfGrid> max_cdf_recursion(const Model& model, std::span<const int> generations,
                                          const GridParams& params) {
  return run_recursion(model, generations, params, false);
}

LogCdfGrid max_cdf_recursion(const Model& model, int n, const GridParams& params) {
  const int g[] = {n};
  return run_recursion(model, g, params, false).front();
}

LogCdfGrid conditioned_cdf(const Model& model, int n, const GridParams& params) {
  const int g[] = {n};
  return run_recursion(model, g, params, true).front();
}

// ------------------------------------------------------------ discretization

Discretization discretize_step(const StepLaw& step, double h, double p_cut) {
  if (step.is_lattice()) throw Error(ErrorCode::InvalidLaw, "step is already a lattice law");
  if (!(h > 0.0) || !(p_cut > 0.0 && p_cut < 0.5)) {
    throw Error(ErrorCode::OutOfRange, "need h > 0 and 0 < p_cut < 1/2");
  }
  const double z_hi = step.quantile(1.0 - p_cut);
  const long K = std::max(1L, static_cast<long>(std::ceil(z_hi / h)));
  const auto log_s = [&](double z) { return step.log_tail_shape(z); };
  // S(a) - S(b) for 0 <= a < b.
  const auto s_diff = [&](double a, double b) {
    const double la = log_s(a);
    return -std::exp(la) * std::expm1(log_s(b) - la);
  };

  std::vector<double> probs(static_cast<std::size_t>(2 * K + 1));
  probs[static_cast<std::size_t>(K)] = -std::expm1(log_s(0.5 * h));
  for (long k = 1; k <= K; ++k) {
    const double cell = 0.5 * s_diff((static_cast<double>(k) - 0.5) * h, (static_cast<double>(k) + 0.5) * h);
    probs[static_cast<std::size_t>(K + k)] = cell;
    probs[static_cast<std::size_t>(K - k)] = cell;
  }
  const double lost = std::exp(log_s((static_cast<double>(K) + 0.5) * h));
  CompensatedSum total;
  for (double p : probs) total.add(p);
  const double norm = total.value();
  for (double& p : probs) p /= norm;

  CompensatedSum mean;
  for (long k = 1; k <= K; ++k) {
    mean.add(static_cast<double>(k) * (probs[static_cast<std::size_t>(K + k)] - probs[static_cast<std::size_t>(K - k)]));
  }
  const double shift = mean.value();  // in units of h
  if (shift > 0.0) {
    probs[static_cast<std::size_t>(K + 1)] -= shift;
    probs[static_cast<std::size_t>(K)] += shift;
  } else if (shift < 0.0) {
    probs[static_cast<std::size_t>(K - 1)] += shift;
    probs[static_cast<std::size_t>(K)] -= shift;
  }
  return {StepLaw::lattice(h, -K, std::move(probs)), lost, std::abs(shift) * h};
}

// ------------------------------------------------------------------ GW pmf

double PgfSeries::tail_mass() const {
  CompensatedSum s;
  for (double c : coeffs) s.add(c);
  return std::max(0.0, 1.0 - s.value());
}

PgfSeries gw_pmf(const OffspringLaw& off, int n, int N) {
  if (n < 0 || N < 0) throw Error(ErrorCode::OutOfRange, "need n >= 0 and N >= 0");
  const std::size_t len = static_cast<std::size_t>(N) + 1;
  std::vector<double> cur(len, 0.0);
  if (len > 1) cur[1] = 1.0;  // Z_0 = 1
  const auto& p = off.pmf();
  for (int g = 0; g < n; ++g) {
    // Horner evaluation of f at the truncated series cur.
    std::vector<double> acc(len, 0.0);
    acc[0] = p.back();
    for (std::size_t k = p.size() - 1; k-- > 0;) {
      std::vector<double> prod(len, 0.0);
      for (std::size_t i = 0; i < len; ++i) {
        if (acc[i] == 0.0) continue;
        for (std::size_t j = 0; i + j < len; ++j) prod[i + j] += acc[i] * cur[j];
      }
      prod[0] += p[k];
      acc = std::move(prod);
    }
    cur = std::move(acc);
  }
  return {n, N, std::move(cur)};
}

// ----------------------------------------------------------- walk and D_n

LatticePmf walk_pmf(const StepLaw& step, int n) {
  if (!step.is_lattice()) throw Error(ErrorCode::InvalidLaw, "walk_pmf needs a lattice step");
  if (n < 0) throw Error(ErrorCode::OutOfRange, "n must be >= 0");
  LatticePmf result{0, {1.0}};
  LatticePmf power{step.min_offset(), step.probs()};
  for (int e = n; e > 0; e >>= 1) {
    if (e & 1) {
      result.probs = convolve(result.probs, power.probs);
      result.min_offset += power.min_offset;
    }
    if (e > 1) {
      power.probs = convolve(power.probs, power.probs);
      power.min_offset *= 2;
    }
  }
  for (double& p : result.probs) p = std::max(0.0, p);
  return result;
}

MartingaleMean derivative_martingale_mean(const Model& model, int n) {
  if (n == 0) return {0.0, 0.0, 0.0};
  const double theta = model.theta_star();
  const double xs = model.constants.x_star;
  const double log_m = model.constants.log_m;
  const LatticePmf s = walk_pmf(model.step, n);
  const double h = model.step.span();
  const double nd = static_cast<double>(n);
  CompensatedSum pos;
  CompensatedSum neg;
  for (std::size_t i = 0; i < s.probs.size(); ++i) {
    if (s.probs[i] <= 0.0) continue;
    const double x = static_cast<double>(s.min_offset + static_cast<long>(i)) * h;
    const double w = nd * log_m + std::log(s.probs[i]) + theta * (x - nd * xs);
    const double term = theta * (nd * xs - x) * std::exp(w);
    if (term >= 0.0) pos.add(term); else neg.add(-term);
  }
  return {pos.value() - neg.value(), pos.value(), neg.value()};
}

}  // namespace brw
