#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "brw/model.hpp"

namespace brw {

/// G(x) = -log P(M_n <= x) on lattice points x = k * span, lo <= k <= hi.
/// Values are extended reals; +inf means probability zero.
struct LogCdfGrid {
  int n = 0;
  double span = 1.0;
  long lo = 0;
  long hi = 0;
  std::vector<double> G;
  /// -log P(M_n <= x, extinction), Schroeder models only.
  std::optional<std::vector<double>> G_ext;
  /// -log P(M_n <= x | survival), Schroeder models only.
  std::optional<std::vector<double>> G_surv;
  /// True when the lower range was cut by GridParams::min_x; values below lo
  /// are then unavailable.
  bool trimmed = false;

  std::size_t size() const { return G.size(); }
  double x_at(std::size_t i) const { return static_cast<double>(lo + static_cast<long>(i)) * span; }

  /// G at an arbitrary real x (floored onto the lattice); the grid is constant
  /// below lo and zero above hi.
  double G_at(double x) const;
  double G_surv_at(double x) const;
};

struct GridParams {
  /// Maximum bytes for grid storage; GridOverflow beyond.
  std::size_t memory_budget = std::size_t{2} << 30;
  /// Positions below this at the final generation are not needed; earlier
  /// generations are trimmed accordingly. -inf keeps the full range.
  double min_x = -std::numeric_limits<double>::infinity();
};

/// Exact log-domain recursion F_n(x) = f(E[F_{n-1}(x - X)]) with F_0 = 1{x >= 0},
/// returning one grid per requested generation (sorted ascending). Schroeder
/// models also carry the extinction-joint and survival-conditioned grids.
std::vector<LogCdfGrid> max_cdf_recursion(const Model& model, std::span<const int> generations,
                                          const GridParams& params = {});
LogCdfGrid max_cdf_recursion(const Model& model, int n, const GridParams& params = {});

/// Same recursion with the conditioned variant required (NotSchroeder otherwise).
LogCdfGrid conditioned_cdf(const Model& model, int n, const GridParams& params = {});

struct Discretization {
  StepLaw law;
  double lost_tail_mass;
  double mean_correction;
};

/// Cell-mass discretization of a parametric step onto multiples of h,
/// covering the quantile range [p_cut, 1 - p_cut], re-centered to mean 0.
Discretization discretize_step(const StepLaw& step, double h, double p_cut);

/// Coefficients P(Z_n = k), k <= N, of the n-fold pgf composition.
struct PgfSeries {
  int n = 0;
  int N = 0;
  std::vector<double> coeffs;
  double tail_mass() const;
};

PgfSeries gw_pmf(const OffspringLaw& off, int n, int N);

/// Distribution of S_n on the lattice: offsets min_offset .. min_offset + size - 1.
struct LatticePmf {
  long min_offset = 0;
  std::vector<double> probs;
};

/// n-fold convolution of the step pmf; direct below kFftThreshold output size.
LatticePmf walk_pmf(const StepLaw& step, int n);

inline constexpr std::size_t kFftThreshold = 4096;

/// Linear convolution (direct or FFT by size). Exposed for testing.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);
std::vector<double> convolve_direct(std::span<const double> a, std::span<const double> b);
std::vector<double> convolve_fft(std::span<const double> a, std::span<const double> b);

struct MartingaleMean {
  double value;
  double positive_mass;
  double negative_mass;
};

/// E[D_n] computed exactly from the law of S_n; vanishes by the tilt equation.
MartingaleMean derivative_martingale_mean(const Model& model, int n);

}  // namespace brw
