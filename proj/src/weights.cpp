#include "vrjp/weights.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace vrjp::weights {
namespace {

double ipow(double x, int q) {
  double r = 1.0;
  for (int i = 0; i < q; ++i) r *= x;
  return r;
}

template <class F>
double adapt(const F& f, double a, double m, double b, double fa, double fm, double fb,
             double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adapt(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson with absolute tolerance.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adapt(f, a, m, b, fa, fm, fb, whole, tol, 48);
}

// Upper estimate of the remaining integral of 1/w^q over [T, inf) from dyadic
// blocks: width * sup(1/w^q) per block, extrapolated once the sampled block
// bounds decay geometrically. Returns +inf when no sustained decay shows up,
// i.e. the bound cannot be certified from samples.
template <class F>
double dyadic_tail_bound(const F& w, double T, int q) {
  double sum = 0.0;
  double left = T;
  double prev = kInf;
  int decaying = 0;
  for (int k = 0; k < 220; ++k) {
    const double wl = w(left);
    if (!(wl > 0.0)) return kInf;
    const double term = left / ipow(wl, q);
    if (!std::isfinite(sum += term)) return kInf;
    if (k > 0) {
      const double r = term / prev;
      if (r <= 0.75) {
        if (++decaying >= 4 && term * r / (1.0 - r) <= 1e-4 * sum + 1e-300)
          return sum + term * r / (1.0 - r);
      } else {
        decaying = 0;
      }
    }
    prev = term;
    left *= 2.0;
    if (!std::isfinite(left)) return kInf;
  }
  return kInf;
}

}  // namespace

WeightFunction WeightFunction::custom(std::function<double(double)> eval, bool tail_converges) {
  if (!eval) throw std::invalid_argument("custom weight needs an evaluator");
  auto c = std::make_shared<const Custom>(Custom{std::move(eval), tail_converges});
  // Coarse sanity sample: positive and non-decreasing on a small grid.
  double prev = 0.0;
  for (double t = 1.0; t <= 65.0; t *= 2.0) {
    const double v = c->eval(t);
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("custom weight must be positive and finite on [1, inf)");
    if (v < prev) throw std::invalid_argument("custom weight must be non-decreasing");
    prev = v;
  }
  return WeightFunction(Kind::CustomMonotone, 0.0, std::move(c));
}

bool WeightFunction::custom_tail_converges() const {
  return kind_ == Kind::CustomMonotone && custom_->tail_converges;
}

double WeightFunction::eval_custom(double t) const {
  double v;
  try {
    v = custom_->eval(t);
  } catch (const std::exception& e) {
    throw std::runtime_error("custom weight evaluator failed at t=" + std::to_string(t) + ": " +
                             e.what());
  }
  if (!(v > 0.0))
    throw std::runtime_error("custom weight evaluator returned a non-positive value at t=" +
                             std::to_string(t));
  return v;
}

double WeightFunction::operator()(double t) const {
  if (!(t >= 1.0)) throw std::domain_error("weight function evaluated below its domain [1, inf)");
  switch (kind_) {
    case Kind::Linear:
      return t;
    case Kind::Power:
      if (a_ == 1.0) return t;
      if (a_ == 2.0) return t * t;
      if (a_ == 3.0) return t * t * t;
      return std::pow(t, a_);
    case Kind::ExpShifted:
      return std::exp(a_ * (t - 1.0));
    case Kind::CustomMonotone:
      return eval_custom(t);
  }
  return 0.0;  // unreachable
}

double WeightFunction::tail_integral_pow(double t, int q) const {
  if (!(t >= 1.0)) throw std::domain_error("tail integral evaluated below the domain [1, inf)");
  if (q < 1) throw std::invalid_argument("tail integral exponent q must be >= 1");
  switch (kind_) {
    case Kind::Linear: {
      if (q == 1) return kInf;
      return 1.0 / (ipow(t, q - 1) * (q - 1));
    }
    case Kind::Power: {
      const double aq = a_ * q;
      if (aq <= 1.0) return kInf;
      return std::pow(t, 1.0 - aq) / (aq - 1.0);
    }
    case Kind::ExpShifted: {
      const double aq = a_ * q;
      return std::exp(-aq * (t - 1.0)) / aq;
    }
    case Kind::CustomMonotone: {
      if (q == 1 && !custom_->tail_converges) return kInf;
      auto inv = [this, q](double u) { return ipow(1.0 / eval_custom(u), q); };
      double cut = t;
      double bound = dyadic_tail_bound([this](double u) { return eval_custom(u); }, cut, q);
      while (bound > 0.5 * kQuadTol) {
        cut *= 2.0;
        if (!std::isfinite(cut))
          throw ToleranceError("tail bound for the custom weight cannot be certified");
        bound = dyadic_tail_bound([this](double u) { return eval_custom(u); }, cut, q);
      }
      if (!std::isfinite(bound))
        throw ToleranceError("tail bound for the custom weight cannot be certified");
      return adaptive_simpson(inv, t, cut, 0.5 * kQuadTol) + 0.5 * bound;
    }
  }
  return kInf;  // unreachable
}

double WeightFunction::integral_inv_w(double a, double b) const {
  if (!(a >= 1.0) || !(b >= a)) throw std::domain_error("integral bounds need 1 <= a <= b");
  if (a == b) return 0.0;
  switch (kind_) {
    case Kind::Linear:
      return std::log(b / a);
    case Kind::Power: {
      if (a_ == 1.0) return std::log(b / a);
      return (std::pow(b, 1.0 - a_) - std::pow(a, 1.0 - a_)) / (1.0 - a_);
    }
    case Kind::ExpShifted:
      return (std::exp(-a_ * (a - 1.0)) - std::exp(-a_ * (b - 1.0))) / a_;
    case Kind::CustomMonotone:
      return adaptive_simpson([this](double u) { return 1.0 / eval_custom(u); }, a, b, kQuadTol);
  }
  return 0.0;  // unreachable
}

RegimeReport classify_regime(const WeightFunction& w) {
  RegimeReport report;
  report.tail_integral_at_1 = w.tail_integral(1.0);
  report.regime = std::isfinite(report.tail_integral_at_1) ? Regime::Strong : Regime::Weak;
  if (report.regime == Regime::Weak) return report;

  auto violation_on_grid = [&](double rho) {
    // t -> w(t)^rho * tail(t) should be non-increasing; report the largest
    // relative increase between consecutive grid points.
    double worst = 0.0;
    double prev = kInf;
    double scale = 0.0;
    for (double t = 1.0; t <= 50.0; t += 0.5) {
      const double v = std::pow(w(t), rho) * w.tail_integral(t);
      scale = std::max(scale, std::abs(v));
      if (v > prev && scale > 0.0) worst = std::max(worst, (v - prev) / scale);
      prev = v;
    }
    return worst;
  };

  constexpr double kRhoTol = 1e-9;
  RhoCondition cond;
  switch (w.kind()) {
    case Kind::Power:
      cond.rho = (w.param() - 1.0) / w.param();
      cond.grid_max_violation = violation_on_grid(cond.rho);
      cond.verified = cond.grid_max_violation <= kRhoTol;
      break;
    case Kind::ExpShifted:
      cond.rho = 1.0;
      cond.grid_max_violation = violation_on_grid(cond.rho);
      cond.verified = cond.grid_max_violation <= kRhoTol;
      break;
    case Kind::CustomMonotone: {
      // Best-effort search over rho = 2^-k; inconclusive if none verifies.
      cond.verified = false;
      cond.grid_max_violation = kInf;
      for (int k = 0; k <= 20; ++k) {
        const double rho = std::ldexp(1.0, -k);
        const double worst = violation_on_grid(rho);
        if (worst <= kRhoTol) {
          cond.rho = rho;
          cond.grid_max_violation = worst;
          cond.verified = true;
          break;
        }
        if (worst < cond.grid_max_violation) {
          cond.rho = rho;
          cond.grid_max_violation = worst;
        }
      }
      break;
    }
    case Kind::Linear:
      break;  // weak, unreachable here
  }
  report.rho_condition = cond;
  return report;
}

}  // namespace vrjp::weights
