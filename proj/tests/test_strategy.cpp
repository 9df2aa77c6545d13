#include <doctest.h>

#include <cmath>

#include "brw/error.hpp"
#include "brw/strategy.hpp"
#include "strategy_matrix.hpp"
#include "support.hpp"

using namespace brw;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected brw::Error");
  return ErrorCode::InvalidLaw;
}

}  // namespace

TEST_CASE("geometric schedule example") {
  const StrategySchedule s = weibull_schedule(2.0, 2, 8.0);
  REQUIRE(s.t == 3);
  CHECK(s.displacements == std::vector<double>{4.0, 2.0, 1.0});
  const WeibullChecksums c = weibull_checksums(s, 2.0, 8.0);
  CHECK(c.sum_displacement == 7.0);
  CHECK(c.sum_displacement_closed == 7.0);
  CHECK(c.energy == 56.0);
  CHECK(c.energy_closed == doctest::Approx(56.0).epsilon(1e-15));
}

TEST_CASE("geometric schedule checksums") {
  for (auto [alpha, b, ell] : {std::tuple{1.5, 3, 10.0}, std::tuple{2.5, 2, 40.0}, std::tuple{4.0, 5, 123.0}}) {
    const WeibullChecksums c = weibull_checksums(weibull_schedule(alpha, b, ell), alpha, ell);
    CHECK(std::abs(c.sum_displacement - c.sum_displacement_closed) <= 1e-12 * c.sum_displacement_closed);
    CHECK(std::abs(c.energy - c.energy_closed) <= 1e-12 * c.energy_closed);
  }
  const StrategySchedule far = weibull_schedule(2.0, 2, 1e6);
  CHECK(far.total_displacement() / 1e6 == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("Gumbel schedule") {
  const StrategySchedule s = gumbel_schedule_with_depth(1.0, 2, 3);
  const double l2 = std::log(2.0);
  CHECK(s.displacements[0] == doctest::Approx(3.0 * l2).epsilon(1e-15));
  CHECK(s.displacements[2] == doctest::Approx(l2).epsilon(1e-15));
  const GumbelChecksums c = gumbel_checksums(s, 1.0);
  CHECK(c.sum_exp == doctest::Approx(48.0).epsilon(1e-14));
  CHECK(c.sum_exp_closed == 48.0);
  for (double alpha : {0.5, 2.0, 3.0}) {
    const StrategySchedule one = gumbel_schedule_with_depth(alpha, 3, 1);
    CHECK(one.displacements.front() == doctest::Approx(std::pow(std::log(3.0), 1.0 / alpha)).epsilon(1e-15));
    const StrategySchedule deep = gumbel_schedule(alpha, 2, 50.0);
    for (std::size_t k = 1; k < deep.displacements.size(); ++k) CHECK(deep.displacements[k] < deep.displacements[k - 1]);
    const GumbelChecksums g = gumbel_checksums(deep, alpha);
    CHECK(std::abs(g.sum_exp - g.sum_exp_closed) <= 1e-12 * g.sum_exp_closed);
  }
}

TEST_CASE("hand-computed two-generation bound") {
  const Model b = test::b2l();
  auto tail = make_oracle_estimator(b);
  const EstimateRecord rec =
      strategy_lower_bound(b, 2, {DeviationTarget::Kind::Linear, 0.0}, bounded_schedule(2, 1, 1.0), *tail);
  CHECK(rec.estimate == doctest::Approx(std::log(1.0 / 16.0)).epsilon(1e-14));
  CHECK(rec.estimate <= std::log(1225.0 / 4096.0));
  CHECK(rec.tag == "oracle");
  CHECK(rec.method == EstimateMethod::StrategyBound);
  CHECK(rec.log_domain);
}

TEST_CASE("strategy bounds never exceed the exact probability") {
  const auto cases = test::strategy_matrix();
  CHECK(cases.size() >= 30);
  for (const auto& c : cases) {
    INFO(c.label);
    CHECK(c.bound <= c.truth + 1e-12 * std::max(1.0, std::abs(c.truth)));
  }
}

TEST_CASE("strategy bounds reject non-Boettcher laws and deep prefixes") {
  const Model s = test::sch();
  auto tail = make_oracle_estimator(s);
  CHECK(code_of([&] {
          strategy_lower_bound(s, 5, {DeviationTarget::Kind::Linear, 0.0}, bounded_schedule(2, 1, 1.0), *tail);
        }) == ErrorCode::RequiresBoettcher);
  const Model b = test::b2l();
  auto bt = make_oracle_estimator(b);
  CHECK(code_of([&] {
          strategy_lower_bound(b, 2, {DeviationTarget::Kind::Linear, 0.0}, bounded_schedule(2, 3, 1.0), *bt);
        }) == ErrorCode::OutOfRange);
  CHECK(code_of([&] { smallball_strategy_bound(s, 0.1, 0.1); }) == ErrorCode::RequiresBoettcher);
}

TEST_CASE("estimator tags") {
  CHECK(make_oracle_estimator(test::b2l())->tag() == "oracle");
  CHECK(make_oracle_estimator(test::weibull_model(2.0))->tag() == "oracle-discretized");
  CHECK(make_mc_estimator(test::b2l(), 100, 1)->tag() == "forward-mc");
}

TEST_CASE("Monte Carlo tail factor carries an error") {
  const Model b = test::b2l();
  auto mc = make_mc_estimator(b, 20000, 9);
  const EstimateRecord rec =
      strategy_lower_bound(b, 8, {DeviationTarget::Kind::Linear, 0.0}, bounded_schedule(2, 1, 1.0), *mc);
  CHECK(rec.tag == "forward-mc");
  CHECK(rec.std_error > 0.0);
  auto exact = make_oracle_estimator(b);
  const EstimateRecord ref =
      strategy_lower_bound(b, 8, {DeviationTarget::Kind::Linear, 0.0}, bounded_schedule(2, 1, 1.0), *exact);
  CHECK(std::abs(rec.estimate - ref.estimate) <= 4.0 * rec.std_error);
}

TEST_CASE("small-ball bounds") {
  const Model b = test::b2l();
  const EstimateRecord big = smallball_strategy_bound(b, 2.0, 0.1);
  CHECK(big.details.at("t") == 1.0);
  CHECK(big.estimate == doctest::Approx(std::log(0.5) + 2.0 * std::log(b.step.cdf(0.0))).epsilon(1e-14));

  const Model w = test::weibull_model(2.0);
  double prev = -std::numeric_limits<double>::infinity();
  for (double delta : {0.4, 0.2, 0.1, 0.05}) {
    const double v = smallball_strategy_bound(w, std::exp(-20.0), delta).estimate;
    CHECK(v >= prev);
    prev = v;
  }
  for (double eps : {1e-2, 1e-5}) CHECK(std::isfinite(smallball_strategy_bound(b, eps, 0.1).estimate));
}
