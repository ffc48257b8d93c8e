#ifndef QPOWER_NUMERIC_HPP
#define QPOWER_NUMERIC_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <utility>

#include "qpower/error.hpp"

namespace qpower {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Settings for the one-dimensional search of a Lagrange multiplier.
///
/// The searched function is a constraint residual r(x) = g(x) - cap that is
/// non-increasing in the multiplier x > 0. The search keeps a bracket
/// [lo, hi] with r(lo) > 0 >= r(hi) and works on log(x), so the bracket may
/// span many decades.
struct MultiplierSearch {
  double lo = 1e-8;
  double hi = 1e4;
  /// Geometric factor used when the initial bracket does not straddle the root.
  double expand = 10.0;
  double floor = 1e-14;
  double ceiling = 1e14;
  /// Stop once hi / lo - 1 falls below this.
  double rel_x_tol = 1e-7;
  /// Stop once -abs_f_tol <= r(hi) <= 0.
  double abs_f_tol = 0.0;
  int max_evaluations = 200;
};

struct MultiplierRoot {
  double x = 0.0;         ///< feasible end of the final bracket
  double residual = 0.0;  ///< r(x) <= 0
  int evaluations = 0;
  bool at_floor = false;  ///< r <= 0 already at the search floor
  bool exhausted = false; ///< evaluation budget ran out before tolerance
  std::size_t monotonicity_violations = 0;
};

/// Bracketed root search for a non-increasing residual.
///
/// Regula falsi on log(x) with the Illinois weighting and a forced bisection
/// whenever two consecutive steps fail to halve the bracket, so the bracket
/// width converges at least as fast as plain bisection. The returned point is
/// always an evaluated point with r(x) <= 0.
template <class Residual>
MultiplierRoot search_decreasing_root(Residual&& r, MultiplierSearch opts = {}) {
  MultiplierRoot out;
  auto eval = [&](double x) {
    ++out.evaluations;
    return static_cast<double>(r(x));
  };

  double lo = opts.lo;
  double hi = opts.hi;
  double f_lo = eval(lo);
  double f_hi = 0.0;
  bool have_hi = false;

  while (!(f_lo > 0.0)) {
    hi = lo;
    f_hi = f_lo;
    have_hi = true;
    if (lo <= opts.floor) {
      out.x = lo;
      out.residual = f_lo;
      out.at_floor = true;
      return out;
    }
    lo = std::max(lo / opts.expand, opts.floor);
    f_lo = eval(lo);
  }
  if (!have_hi) {
    if (hi <= lo) hi = lo * opts.expand;
    f_hi = eval(hi);
  }
  while (f_hi > 0.0) {
    if (hi >= opts.ceiling) {
      std::ostringstream msg;
      msg << "constraint residual stays positive up to multiplier " << hi
          << " (residual " << f_hi << ")";
      throw InfeasibleError(msg.str());
    }
    lo = hi;
    f_lo = f_hi;
    hi = std::min(hi * opts.expand, opts.ceiling);
    f_hi = eval(hi);
  }

  double x_hi = hi;
  double u_lo = std::log(lo);
  double u_hi = std::log(hi);
  double w_lo = f_lo;  // Illinois-weighted copies of the end values
  double w_hi = f_hi;
  int side = 0;
  int slow_steps = 0;
  double reference_width = u_hi - u_lo;

  while (true) {
    if (f_hi >= -opts.abs_f_tol) break;
    if (std::expm1(u_hi - u_lo) <= opts.rel_x_tol) break;
    if (out.evaluations >= opts.max_evaluations) {
      out.exhausted = true;
      break;
    }
    double u = 0.5 * (u_lo + u_hi);
    if (slow_steps < 2) {
      double secant = (u_lo * w_hi - u_hi * w_lo) / (w_hi - w_lo);
      double margin = 1e-3 * (u_hi - u_lo);
      if (std::isfinite(secant) && secant > u_lo + margin && secant < u_hi - margin) u = secant;
    }
    double x = std::exp(u);
    double f = eval(x);
    if (f > f_lo || f < f_hi) ++out.monotonicity_violations;
    if (f > 0.0) {
      u_lo = u;
      f_lo = w_lo = f;
      if (side == -1) w_hi *= 0.5;
      side = -1;
    } else {
      u_hi = u;
      x_hi = x;
      f_hi = w_hi = f;
      if (side == 1) w_lo *= 0.5;
      side = 1;
    }
    double width = u_hi - u_lo;
    if (width <= 0.5 * reference_width) {
      slow_steps = 0;
      reference_width = width;
    } else {
      // two slow secant steps in a row force one bisection step
      slow_steps = slow_steps >= 2 ? 0 : slow_steps + 1;
    }
  }
  out.x = x_hi;
  out.residual = f_hi;
  return out;
}

/// Arithmetic mean in a fixed left-to-right order.
inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace qpower

#endif  // QPOWER_NUMERIC_HPP
