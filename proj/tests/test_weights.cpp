#include "vrjp/weights.hpp"

#include "vrjp/clocks.hpp"

#include <doctest.h>

#include <cmath>

using namespace vrjp;
using weights::Kind;
using weights::Regime;
using weights::WeightFunction;

namespace {

// Independent oracle: trapezoid quadrature of 1/w(u)^q over [a, b] after the
// substitution u = exp(x), which handles the huge ranges the tails need.
template <class W>
double trapezoid_inv_w(const W& w, double a, double b, int q, std::size_t intervals = 2'000'000) {
  const double xa = std::log(a);
  const double xb = std::log(b);
  const double h = (xb - xa) / static_cast<double>(intervals);
  auto f = [&](double x) {
    const double u = std::exp(x);
    return u / std::pow(w(u), q);  // du = u dx
  };
  double sum = 0.5 * (f(xa) + f(xb));
  for (std::size_t i = 1; i < intervals; ++i) sum += f(xa + h * static_cast<double>(i));
  return sum * h;
}

}  // namespace

TEST_CASE("evaluation matches the closed forms") {
  CHECK(WeightFunction::power(2.0)(1.0) == 1.0);
  CHECK(WeightFunction::power(2.0)(3.0) == 9.0);
  CHECK(WeightFunction::exp_shifted(0.5)(3.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(WeightFunction::linear()(7.25) == 7.25);
  // w(1) = 1 for every built-in kind.
  for (const auto& w : {WeightFunction::linear(), WeightFunction::power(3.7),
                        WeightFunction::exp_shifted(1.25)})
    CHECK(w(1.0) == 1.0);
}

TEST_CASE("evaluation is strictly increasing on the test grid") {
  for (const auto& w : {WeightFunction::linear(), WeightFunction::power(0.5),
                        WeightFunction::power(2.0), WeightFunction::exp_shifted(0.5)}) {
    for (double t = 1.0; t <= 100.0; t += 0.5) {
      const double eps = 1e-6 * t;
      CHECK(w(t + eps) > w(t));
    }
  }
}

TEST_CASE("domain and construction errors") {
  const auto w = WeightFunction::power(2.0);
  CHECK_THROWS_AS(w(0.5), std::domain_error);
  CHECK_THROWS_AS(w.tail_integral(0.0), std::domain_error);
  CHECK_THROWS_AS(WeightFunction::power(0.0), std::invalid_argument);
  CHECK_THROWS_AS(WeightFunction::power(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(WeightFunction::exp_shifted(-2.0), std::invalid_argument);
  CHECK_THROWS_AS(w.integral_inv_w(3.0, 2.0), std::domain_error);
  // Decreasing evaluators are rejected at construction.
  CHECK_THROWS_AS(WeightFunction::custom([](double t) { return 2.0 - t / 100.0; }, true),
                  std::invalid_argument);
}

TEST_CASE("tail integral closed forms") {
  CHECK(WeightFunction::power(2.0).tail_integral(2.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(WeightFunction::linear().tail_integral(1.0) == weights::kInf);
  CHECK(WeightFunction::power(1.0).tail_integral(5.0) == weights::kInf);
  CHECK(WeightFunction::power(0.5).tail_integral(1.0) == weights::kInf);
  CHECK(WeightFunction::exp_shifted(1.0).tail_integral(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  // Higher reciprocal powers: linear has a finite third-power tail.
  CHECK(WeightFunction::linear().tail_integral_pow(2.0, 3) ==
        doctest::Approx(1.0 / 8.0).epsilon(1e-14));
  CHECK(WeightFunction::power(2.0).tail_integral_pow(1.0, 3) ==
        doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("tail integral against the trapezoid oracle") {
  // Power a = 3 at t = 1.5: quadrature to 1e6 plus the analytic remainder.
  auto cubed = [](double u) { return u * u * u; };
  const double oracle = trapezoid_inv_w(cubed, 1.5, 1e6, 1) + 0.5e-12;
  const double closed = WeightFunction::power(3.0).tail_integral(1.5);
  CHECK(closed == doctest::Approx(std::pow(1.5, -2.0) / 2.0).epsilon(1e-14));
  CHECK(closed == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
  CHECK(std::abs(closed - oracle) < 1e-9 * closed);
}

TEST_CASE("custom quadrature path agrees with the closed forms") {
  const auto closed = WeightFunction::power(2.0);
  const auto custom = WeightFunction::custom([](double u) { return u * u; }, true);
  for (double t : {1.0, 1.5, 2.0, 5.0, 17.0, 120.0}) {
    CHECK(std::abs(custom.tail_integral(t) - closed.tail_integral(t)) <=
          1e-9 * closed.tail_integral(t));
  }
  const auto closed_e = WeightFunction::exp_shifted(1.0);
  const auto custom_e = WeightFunction::custom([](double u) { return std::exp(u - 1.0); }, true);
  for (double t : {1.0, 2.0, 6.0}) {
    CHECK(std::abs(custom_e.tail_integral(t) - closed_e.tail_integral(t)) <=
          1e-9 * closed_e.tail_integral(t));
  }
  // Declared divergent short-circuits to infinity.
  const auto diverging = WeightFunction::custom([](double u) { return u; }, false);
  CHECK(diverging.tail_integral(3.0) == weights::kInf);
}

TEST_CASE("tail certification fails for a misdeclared slow evaluator") {
  // Harmonic decay declared convergent: the dyadic bound never decays.
  const auto lying = WeightFunction::custom([](double u) { return u; }, true);
  CHECK_THROWS_AS(lying.tail_integral(1.0), weights::ToleranceError);
}

TEST_CASE("finite integrals are additive against a quadrature oracle") {
  const auto w = WeightFunction::power(2.0);
  auto sq = [](double u) { return u * u; };
  std::uint64_t state = 99;
  for (int rep = 0; rep < 10; ++rep) {
    const double t = 1.0 + 9.0 * clocks::uniform_from_bits(clocks::stream_at(state, 2 * rep));
    const double s = t + 10.0 * clocks::uniform_from_bits(clocks::stream_at(state, 2 * rep + 1));
    const double via_tails = w.tail_integral(t) - w.tail_integral(s);
    const double direct = w.integral_inv_w(t, s);
    const double oracle = trapezoid_inv_w(sq, t, s, 1, 200'000);
    CHECK(std::abs(via_tails - direct) <= 1e-12 * std::max(1.0, direct));
    CHECK(std::abs(direct - oracle) <= 1e-9 * std::max(1.0, direct));
  }
}

TEST_CASE("power weights make the scaled tail exactly constant") {
  for (double a : {1.5, 2.0, 3.0}) {
    const auto w = WeightFunction::power(a);
    const double rho = (a - 1.0) / a;
    double lo = weights::kInf, hi = -weights::kInf;
    for (double t = 1.0; t <= 100.0; t += 0.25) {
      const double v = std::pow(w(t), rho) * w.tail_integral(t);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK((hi - lo) / hi < 1e-12);
  }
}

TEST_CASE("regime classification") {
  const auto weak = weights::classify_regime(WeightFunction::linear());
  CHECK(weak.regime == Regime::Weak);
  CHECK(weak.tail_integral_at_1 == weights::kInf);
  CHECK_FALSE(weak.rho_condition.has_value());

  const auto strong = weights::classify_regime(WeightFunction::power(2.0));
  CHECK(strong.regime == Regime::Strong);
  CHECK(strong.tail_integral_at_1 == doctest::Approx(1.0).epsilon(1e-14));
  REQUIRE(strong.rho_condition.has_value());
  CHECK(strong.rho_condition->rho == doctest::Approx(0.5));
  CHECK(strong.rho_condition->verified);

  // Oracle for the exponential case: w(t)^1 * tail(t) == 1/a on the grid.
  const auto we = WeightFunction::exp_shifted(1.0);
  for (double t = 1.0; t <= 50.0; t += 0.5)
    CHECK(we(t) * we.tail_integral(t) == doctest::Approx(1.0).epsilon(1e-12));
  const auto strong_e = weights::classify_regime(we);
  CHECK(strong_e.regime == Regime::Strong);
  CHECK(strong_e.tail_integral_at_1 == doctest::Approx(1.0).epsilon(1e-14));
  REQUIRE(strong_e.rho_condition.has_value());
  CHECK(strong_e.rho_condition->rho == doctest::Approx(1.0));
  CHECK(strong_e.rho_condition->verified);

  // Custom search lands on a dyadic rho for the quadratic weight.
  const auto custom = weights::classify_regime(
      WeightFunction::custom([](double u) { return u * u; }, true));
  CHECK(custom.regime == Regime::Strong);
  REQUIRE(custom.rho_condition.has_value());
  CHECK(custom.rho_condition->verified);
  CHECK(custom.rho_condition->rho == doctest::Approx(0.5));

  const auto custom_weak = weights::classify_regime(
      WeightFunction::custom([](double u) { return u; }, false));
  CHECK(custom_weak.regime == Regime::Weak);
}
