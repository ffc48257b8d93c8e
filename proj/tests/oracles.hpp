// Reference computations for the tests, written independently of the
// library: plain bisection, adaptive Simpson and brute-force scans.
#ifndef QPOWER_TESTS_ORACLES_HPP
#define QPOWER_TESTS_ORACLES_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

/// Root of a function that changes sign on [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iterations = 200) {
  double flo = f(lo);
  for (int k = 0; k < iterations; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                           double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                      int depth = 40) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

/// Score of one sample at one level.
inline double score(double g0, double g1, double p, double lambda, double mu) {
  return std::log(1.0 + g1 * p) - lambda * p - mu * g0 * p;
}

/// Lowest index with the highest score.
inline std::size_t best_level(double g0, double g1, const std::vector<double>& levels, double lambda, double mu) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < levels.size(); ++j) {
    if (score(g0, g1, levels[j], lambda, mu) > score(g0, g1, levels[best], lambda, mu)) best = j;
  }
  return best;
}

/// Weighted centroid: root in p >= 0 of
/// sum_n w_n [g1_n/(1 + g1_n p) - (lambda + mu g0_n)], or 0 when negative at 0.
inline double centroid(const std::vector<double>& g0, const std::vector<double>& g1, const std::vector<double>& w,
                       double lambda, double mu) {
  auto f = [&](double p) {
    double s = 0.0;
    for (std::size_t n = 0; n < g1.size(); ++n) s += w[n] * (g1[n] / (1.0 + g1[n] * p) - (lambda + mu * g0[n]));
    return s;
  };
  if (f(0.0) <= 0.0) return 0.0;
  double hi = 1.0;
  while (f(hi) > 0.0) hi *= 2.0;
  return bisect(f, 0.0, hi, 300);
}

/// Empirical mean of g0 (1/(lambda + mu g0) - 1/g1)^+.
inline double interference(const std::vector<double>& g0, const std::vector<double>& g1, double lambda, double mu) {
  double s = 0.0;
  for (std::size_t n = 0; n < g1.size(); ++n) {
    const double p = 1.0 / (lambda + mu * g0[n]) - 1.0 / g1[n];
    if (p > 0.0) s += g0[n] * p;
  }
  return s / static_cast<double>(g1.size());
}

}  // namespace oracle

#endif  // QPOWER_TESTS_ORACLES_HPP
