#include "brw/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "brw/config.hpp"
#include "brw/error.hpp"
#include "brw/numeric.hpp"
#include "brw/oracle.hpp"
#include "brw/rates.hpp"

namespace brw {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& descriptor) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::ConfigError, "bad number '" + s + "' in schedule " + descriptor);
  }
  return v;
}

void require_lattice(const Model& model) {
  if (!model.step.is_lattice()) throw Error(ErrorCode::InvalidLaw, "report needs a lattice step");
}

double rel_gap(double empirical, double analytic) {
  if (analytic == 0.0 || !std::isfinite(analytic)) return kNaN;
  return std::abs(empirical - analytic) / std::abs(analytic);
}

}  // namespace

EllSchedule EllSchedule::parse(const std::string& descriptor) {
  EllSchedule s;
  s.descriptor_ = descriptor;
  const auto colon = descriptor.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::ConfigError, "schedule needs kind:params, got " + descriptor);
  const std::string kind = descriptor.substr(0, colon);
  const std::string rest = descriptor.substr(colon + 1);
  if (kind == "const") {
    s.kind_ = Kind::Constant;
    for (const auto& part : split(rest, ',')) {
      const double v = parse_number(part, descriptor);
      if (v < 0.0) throw Error(ErrorCode::ConfigError, "schedule values must be >= 0");
      s.constants_.push_back(v);
    }
    if (s.constants_.empty()) throw Error(ErrorCode::ConfigError, "empty constant schedule");
  } else if (kind == "lin") {
    s.kind_ = Kind::Linear;
    s.scale_ = parse_number(rest, descriptor);
  } else if (kind == "pow") {
    const auto parts = split(rest, ':');
    if (parts.size() != 2) throw Error(ErrorCode::ConfigError, "pow schedule is pow:C:p");
    s.kind_ = Kind::Power;
    s.scale_ = parse_number(parts[0], descriptor);
    s.power_ = parse_number(parts[1], descriptor);
    if (!(s.power_ > 0.0 && s.power_ <= 1.0)) throw Error(ErrorCode::ConfigError, "pow exponent must lie in (0, 1]");
  } else if (kind == "log") {
    s.kind_ = Kind::Logarithmic;
    s.scale_ = parse_number(rest, descriptor);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown schedule kind: " + kind);
  }
  if (s.scale_ < 0.0) throw Error(ErrorCode::ConfigError, "schedule scale must be >= 0");
  return s;
}

std::vector<double> EllSchedule::values(int n) const {
  const double nd = static_cast<double>(n);
  switch (kind_) {
    case Kind::Constant: return constants_;
    case Kind::Linear: return {scale_ * nd};
    case Kind::Power: return {scale_ * std::pow(nd, power_)};
    case Kind::Logarithmic: return {scale_ * std::log(nd)};
  }
  return {};
}

double EllSchedule::limsup_ratio() const {
  switch (kind_) {
    case Kind::Constant:
    case Kind::Logarithmic: return 0.0;
    case Kind::Linear: return scale_;
    case Kind::Power: return power_ == 1.0 ? scale_ : 0.0;
  }
  return 0.0;
}

void check_moderate_hypothesis(const Model& model, const EllSchedule& schedule) {
  const double bound = model.constants.x_star + model.constants.L;
  const double ratio = schedule.limsup_ratio();
  if (!(ratio < bound)) {
    throw Error(ErrorCode::HypothesisViolated, "limsup ell_n/n = " + format_double(ratio) + " is not below x* + L = " +
                                                   format_double(bound));
  }
}

std::vector<ModerateRow> report_moderate(const Model& model, const std::vector<int>& ns, const EllSchedule& schedule) {
  require_lattice(model);
  if (!model.offspring.is_boettcher()) throw Error(ErrorCode::RequiresBoettcher, "moderate report needs p0 = p1 = 0");
  check_moderate_hypothesis(model, schedule);
  const double beta = beta_moderate(model);
  const auto grids = max_cdf_recursion(model, ns);

  std::vector<ModerateRow> rows;
  for (const LogCdfGrid& g : grids) {
    const double mn = m_n(model, g.n);
    std::vector<double> ells = schedule.values(g.n);
    std::sort(ells.begin(), ells.end());
    const std::size_t first = rows.size();
    for (double ell : ells) {
      const double G = g.G_at(mn - ell);
      const double y = std::log(G);
      rows.push_back({g.n, ell, G, y, ell > 0.0 ? y / ell : kNaN, beta, kNaN});
    }
    // Least squares over ell >= midpoint of the ell range.
    if (!ells.empty()) {
      const double mid = 0.5 * (ells.front() + ells.back());
      double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, cnt = 0.0;
      for (std::size_t i = first; i < rows.size(); ++i) {
        if (rows[i].ell < mid || !std::isfinite(rows[i].y)) continue;
        sx += rows[i].ell;
        sy += rows[i].y;
        sxx += rows[i].ell * rows[i].ell;
        sxy += rows[i].ell * rows[i].y;
        cnt += 1.0;
      }
      const double denom = cnt * sxx - sx * sx;
      const double slope = (cnt >= 2.0 && denom > 0.0) ? (cnt * sxy - sx * sy) / denom : kNaN;
      for (std::size_t i = first; i < rows.size(); ++i) rows[i].fitted_slope = slope;
    }
  }
  return rows;
}

std::vector<LinearRow> report_linear(const Model& model, const std::vector<int>& ns, const std::vector<double>& xs) {
  require_lattice(model);
  const auto grids = max_cdf_recursion(model, ns);
  std::vector<LinearRow> rows;
  if (model.offspring.is_boettcher()) {
    for (const LogCdfGrid& g : grids) {
      const double nd = static_cast<double>(g.n);
      for (double x : xs) {
        const double empirical = std::log(g.G_at(x * nd)) / nd;
        const double analytic = rate_bounded(model, x);
        rows.push_back({g.n, x, empirical, analytic, rel_gap(empirical, analytic)});
      }
    }
    return rows;
  }
  if (!model.offspring.is_schroeder()) throw Error(ErrorCode::NotSchroeder, "offspring law is neither Boettcher nor Schroeder");
  for (const LogCdfGrid& g : grids) {
    const double nd = static_cast<double>(g.n);
    for (double x : xs) {
      const double empirical = -g.G_surv_at(x * nd) / nd;
      const double analytic = x < model.constants.x_star ? schroder_linear_rate(model, x).value : 0.0;
      rows.push_back({g.n, x, empirical, analytic, rel_gap(empirical, analytic)});
    }
  }
  return rows;
}

std::vector<LinearRow> report_linear_ell(const Model& model, const std::vector<int>& ns, const EllSchedule& schedule) {
  require_lattice(model);
  if (!model.offspring.is_schroeder()) throw Error(ErrorCode::NotSchroeder, "deviation-schedule report needs a Schroeder law");
  const double analytic = schroder_H(model, schedule.limsup_ratio()).value;
  const auto grids = max_cdf_recursion(model, ns);
  std::vector<LinearRow> rows;
  for (const LogCdfGrid& g : grids) {
    const double mn = m_n(model, g.n);
    for (double ell : schedule.values(g.n)) {
      const double empirical = ell > 0.0 ? -g.G_surv_at(mn - ell) / ell : kNaN;
      rows.push_back({g.n, ell, empirical, analytic, rel_gap(empirical, analytic)});
    }
  }
  return rows;
}

std::string moderate_csv(const Model& model, const std::vector<ModerateRow>& rows) {
  std::string out = csv_constants_line(model);
  out += "n,ell,G,y,y_over_ell,beta,fitted_slope\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + format_double(r.ell) + "," + format_double(r.G) + "," + format_double(r.y) + "," +
           (std::isnan(r.y_over_ell) ? std::string() : format_double(r.y_over_ell)) + "," + format_double(r.beta) + "," +
           (std::isnan(r.fitted_slope) ? std::string() : format_double(r.fitted_slope)) + "\n";
  }
  return out;
}

std::string linear_csv(const Model& model, const std::vector<LinearRow>& rows, const std::string& position_name) {
  std::string out = csv_constants_line(model);
  out += "n," + position_name + ",empirical_rate,analytic_rate,rel_gap\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + format_double(r.position) + "," + format_double(r.empirical) + "," +
           format_double(r.analytic) + "," + (std::isnan(r.rel_gap) ? std::string() : format_double(r.rel_gap)) + "\n";
  }
  return out;
}

}  // namespace brw
