#pragma once

#include <string>
#include <vector>

#include "brw/model.hpp"

namespace brw {

/// Deviation sizes as a function of n. Descriptors:
///   const:20,40,60   fixed list, the same for every n
///   lin:c            ell_n = c n
///   pow:C:p          ell_n = C n^p, 0 < p <= 1
///   log:C            ell_n = C log n
class EllSchedule {
 public:
  enum class Kind { Constant, Linear, Power, Logarithmic };

  static EllSchedule parse(const std::string& descriptor);

  Kind kind() const { return kind_; }
  std::vector<double> values(int n) const;
  /// limsup ell_n / n.
  double limsup_ratio() const;
  const std::string& descriptor() const { return descriptor_; }

 private:
  Kind kind_ = Kind::Constant;
  std::vector<double> constants_;
  double scale_ = 0.0;
  double power_ = 1.0;
  std::string descriptor_;
};

/// Refuses schedules with limsup ell_n / n >= x* + L (HypothesisViolated).
void check_moderate_hypothesis(const Model& model, const EllSchedule& schedule);

struct ModerateRow {
  int n;
  double ell;
  double G;           // -log P(M_n <= m_n - ell)
  double y;           // log G
  double y_over_ell;  // NaN at ell = 0
  double beta;
  double fitted_slope;  // slope of y on ell over the top half of this n's ell values; NaN if fewer than two
};

/// Requires a Boettcher lattice model; checks the schedule hypothesis.
std::vector<ModerateRow> report_moderate(const Model& model, const std::vector<int>& ns, const EllSchedule& schedule);

struct LinearRow {
  int n;
  double position;  // x, or ell_n on the ell path
  double empirical;
  double analytic;
  double rel_gap;  // NaN where the analytic rate is 0
};

/// Boettcher: (1/n) log(-log F_n(x n)) next to the bounded-step rate.
/// Schroeder: (1/n) log P^s(M_n <= x n) next to the linear lower-deviation rate.
std::vector<LinearRow> report_linear(const Model& model, const std::vector<int>& ns, const std::vector<double>& xs);

/// Schroeder path with a deviation schedule: (1/ell_n) log P^s(M_n <= m_n - ell_n)
/// next to H at ell* = limsup ell_n / n.
std::vector<LinearRow> report_linear_ell(const Model& model, const std::vector<int>& ns, const EllSchedule& schedule);

std::string moderate_csv(const Model& model, const std::vector<ModerateRow>& rows);
std::string linear_csv(const Model& model, const std::vector<LinearRow>& rows, const std::string& position_name);

}  // namespace brw
