#pragma once
// Shared fixtures and the brute-force tree enumerator used as an independent
// oracle for the CDF recursion.

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "brw/model.hpp"

namespace brw::test {

inline Model b2l() {
  return Model::make(OffspringLaw::from_map({{2, 1.0}}), StepLaw::lattice(1.0, {{-1, 0.25}, {0, 0.5}, {1, 0.25}}));
}

inline Model sch() {
  return Model::make(OffspringLaw::from_map({{0, 0.25}, {1, 0.25}, {2, 0.5}}),
                     StepLaw::lattice(1.0, {{-1, 0.25}, {0, 0.5}, {1, 0.25}}));
}

inline Model weibull_model(double alpha, double lambda = 1.0, int b = 2) {
  return Model::make(OffspringLaw::from_map({{b, 1.0}}), StepLaw::weibull(alpha, lambda));
}

inline Model gumbel_model(double alpha, int b = 2) {
  return Model::make(OffspringLaw::from_map({{b, 1.0}}), StepLaw::gumbel(alpha));
}

/// Law of M_n by enumerating every tree realization generation by generation.
/// Keys are lattice offsets of the maximum; extinct trees are counted apart.
struct EnumeratedLaw {
  std::map<long, double> max_mass;
  /// Sum over surviving realizations of prob * q^{Z_n}, keyed by the maximum.
  std::map<long, double> ext_weighted;
  double extinct = 0.0;

  /// P(M_n <= k, eventual extinction).
  double ext_cdf(long k) const {
    double s = extinct;
    for (const auto& [m, p] : ext_weighted) {
      if (m <= k) s += p;
    }
    return s;
  }

  double cdf(long k) const {
    double s = extinct;
    for (const auto& [m, p] : max_mass) {
      if (m <= k) s += p;
    }
    return s;
  }
  double survival_cdf(long k) const {
    double s = 0.0;
    for (const auto& [m, p] : max_mass) {
      if (m <= k) s += p;
    }
    return s;
  }
};

inline EnumeratedLaw enumerate_max(const OffspringLaw& off, const StepLaw& step, int n, double q = 0.0) {
  EnumeratedLaw law;
  std::vector<std::pair<int, double>> kids;
  for (int k = 0; k <= off.max_k(); ++k) {
    if (off.p(k) > 0.0) kids.emplace_back(k, off.p(k));
  }
  std::vector<std::pair<long, double>> steps;
  for (long j = step.min_offset(); j <= step.max_offset(); ++j) {
    if (step.prob_at_offset(j) > 0.0) steps.emplace_back(j, step.prob_at_offset(j));
  }

  std::function<void(const std::vector<long>&, int, double)> generation;
  std::function<void(const std::vector<long>&, std::size_t, std::vector<long>&, int, double)> node;

  generation = [&](const std::vector<long>& pos, int g, double prob) {
    if (pos.empty()) {
      law.extinct += prob;
      return;
    }
    if (g == n) {
      long m = pos.front();
      for (long p : pos) m = std::max(m, p);
      law.max_mass[m] += prob;
      law.ext_weighted[m] += prob * std::pow(q, static_cast<double>(pos.size()));
      return;
    }
    std::vector<long> next;
    node(pos, 0, next, g, prob);
  };

  node = [&](const std::vector<long>& pos, std::size_t i, std::vector<long>& next, int g, double prob) {
    if (i == pos.size()) {
      generation(next, g + 1, prob);
      return;
    }
    for (const auto& [k, pk] : kids) {
      // All k children: iterate over step choices as a k-digit counter.
      std::vector<std::size_t> digit(static_cast<std::size_t>(k), 0);
      while (true) {
        double p = prob * pk;
        const std::size_t mark = next.size();
        for (std::size_t c = 0; c < digit.size(); ++c) {
          next.push_back(pos[i] + steps[digit[c]].first);
          p *= steps[digit[c]].second;
        }
        node(pos, i + 1, next, g, p);
        next.resize(mark);
        std::size_t c = 0;
        while (c < digit.size() && ++digit[c] == steps.size()) digit[c++] = 0;
        if (c == digit.size()) break;
      }
    }
  };

  generation({0}, 0, 1.0);
  return law;
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

}  // namespace brw::test
