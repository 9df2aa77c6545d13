#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brw/model.hpp"

namespace brw {

enum class EstimateMethod { ForwardMc, StrategyBound, TailRegression };

std::string to_string(EstimateMethod method);

/// A Monte Carlo or bound estimate together with what is needed to reproduce it.
struct EstimateRecord {
  std::string name;
  double estimate = 0.0;
  bool log_domain = false;
  double std_error = 0.0;
  std::uint64_t replicas = 1;
  std::uint64_t seed = 0;
  std::optional<double> wall_time_ms;
  EstimateMethod method = EstimateMethod::ForwardMc;
  /// Free-form provenance, e.g. which tail estimator fed a strategy bound.
  std::string tag;
  std::map<std::string, double> details;
};

inline constexpr std::uint64_t kDefaultPopulationCap = 10'000'000;

/// Per-replica outcomes of a forward run. Extinct replicas have
/// max = -inf, population = 0 and martingale = 0.
struct ForwardSamples {
  int n = 0;
  std::uint64_t seed = 0;
  std::vector<double> max;
  std::vector<double> martingale;  // D_n; NaN when theta* does not exist
  std::vector<std::uint64_t> population;
};

/// Exact forward simulation of n generations. Lattice steps are simulated by
/// occupation counts per site (offspring and displacement multinomials);
/// parametric steps particle by particle. Replica r draws from streams keyed
/// by (seed, r, generation, slot), slot being the site or the particle index.
/// Throws CapExceeded when a replica's population exceeds `cap`.
ForwardSamples simulate_forward(const Model& model, int n, std::uint64_t replicas, std::uint64_t seed,
                                std::uint64_t cap = kDefaultPopulationCap);

struct TailFit {
  double slope;
  double std_error;
  double window_lo;
  double window_hi;
  std::size_t points;
};

/// Least-squares slope of log(i/N) against log x_(i) over the decade below
/// the order statistic of rank `top`; top = 1 anchors the window at the
/// sample maximum. The error is a grouped jackknife with samples assigned to
/// `groups` groups by index. Throws InsufficientTail below `min_points` in
/// the window.
TailFit fit_tail_slope(std::span<const double> samples, std::size_t top = 1, std::size_t groups = 20,
                       std::size_t min_points = 100);

/// Tail slope of D_n from a forward run.
EstimateRecord d_tail_slope(const Model& model, int n, std::uint64_t replicas, std::uint64_t seed,
                            std::uint64_t cap = kDefaultPopulationCap);

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and a
/// lattice cdf given at the sample support points.
double ks_distance_lattice(std::span<const double> samples, double span,
                           const std::function<double(double)>& cdf);

}  // namespace brw
