#pragma once

// Reinforcement functions w on [1, inf): evaluation, reciprocal integrals
// (head and tail), and the weak/strong classification that drives the
// recurrence-vs-localization behaviour of the jump process.
//
// Built-in kinds have closed-form integrals; a user-supplied monotone
// evaluator falls back on certified adaptive quadrature.

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>

namespace vrjp::weights {

enum class Kind { Linear, Power, ExpShifted, CustomMonotone };
enum class Regime { Weak, Strong };

// Raised when a quadrature tail bound cannot be certified at the requested
// tolerance (custom evaluators only).
struct ToleranceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Absolute target for the truncated quadrature and its tail bound.
inline constexpr double kQuadTol = 1e-10;

class WeightFunction {
 public:
  static WeightFunction linear() { return WeightFunction(Kind::Linear, 0.0, nullptr); }

  static WeightFunction power(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("power exponent must be > 0");
    return WeightFunction(Kind::Power, a, nullptr);
  }

  // w(t) = exp(a * (t - 1)), normalised so w(1) = 1.
  static WeightFunction exp_shifted(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("exp_shifted rate must be > 0");
    return WeightFunction(Kind::ExpShifted, a, nullptr);
  }

  // Monotone evaluator on [1, inf); `tail_converges` declares whether
  // the reciprocal tail integral is finite. A coarse monotonicity sample is
  // checked at construction.
  static WeightFunction custom(std::function<double(double)> eval, bool tail_converges);

  Kind kind() const noexcept { return kind_; }
  double param() const noexcept { return a_; }
  bool custom_tail_converges() const;

  // w(t) for t >= 1; strictly increasing, w(1) = 1 for built-in kinds.
  double operator()(double t) const;

  // Integral of 1/w^q over [t, inf); +inf when divergent. q >= 1.
  double tail_integral(double t) const { return tail_integral_pow(t, 1); }
  double tail_integral_pow(double t, int q) const;

  // Integral of 1/w over [a, b], 1 <= a <= b.
  double integral_inv_w(double a, double b) const;

  // Same integral with orientation: from a to b, negative when b < a.
  double signed_integral_inv_w(double a, double b) const {
    return b >= a ? integral_inv_w(a, b) : -integral_inv_w(b, a);
  }

 private:
  struct Custom {
    std::function<double(double)> eval;
    bool tail_converges;
  };

  WeightFunction(Kind k, double a, std::shared_ptr<const Custom> c)
      : kind_(k), a_(a), custom_(std::move(c)) {}

  double eval_custom(double t) const;

  Kind kind_;
  double a_;
  std::shared_ptr<const Custom> custom_;
};

struct RhoCondition {
  double rho = 0.0;
  bool verified = false;
  // Largest relative increase of t -> w(t)^rho * tail(t) over the check grid
  // (the map should be non-increasing; small positive values are fp noise).
  double grid_max_violation = 0.0;
};

struct RegimeReport {
  Regime regime = Regime::Weak;
  double tail_integral_at_1 = kInf;
  std::optional<RhoCondition> rho_condition;
};

// Strong iff the reciprocal tail integral at 1 is finite. When strong, also
// attempts to exhibit a rho > 0 making w^rho * tail non-increasing.
RegimeReport classify_regime(const WeightFunction& w);

}  // namespace vrjp::weights
