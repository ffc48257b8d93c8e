#ifndef QPOWER_AQPA_HPP
#define QPOWER_AQPA_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "qpower/error.hpp"
#include "qpower/fading.hpp"
#include "qpower/lloyd.hpp"

namespace qpower {

struct QuadratureSpec {
  double rel_tol = 1e-9;
  /// g1 integrals stop at this many multiples of the g1 mean.
  double tail_multiple = 25.0;
  unsigned max_depth = 12;

  void validate() const {
    if (!(rel_tol > 0.0)) throw ConfigError("quadrature tolerance must be positive");
    if (!(tail_multiple > 0.0)) throw ConfigError("quadrature truncation must be positive");
  }
};

struct AqpaOptions {
  /// Stand-in for the vanishing second-lowest level.
  double eps_p = 1e-6;
  QuadratureSpec quad;
  /// Relative bracket width at which a level search stops.
  double level_rel_tol = 1e-12;
  /// Relative bracket width at which the shooting search on p_{L-2} stops.
  double shoot_rel_tol = 1e-10;
  int max_shoot = 200;
};

/// Exponential channel statistics of one band, the only case with closed
/// form inner integrals.
struct ExponentialBand {
  double mean_g0 = 1.0;
  double mean_g1 = 1.0;

  static ExponentialBand from(const BandModels& m) {
    if (m.g0.kind() != FadingModel::Kind::Exponential || m.g1.kind() != FadingModel::Kind::Exponential)
      throw UnsupportedOperation("AQPA needs exponential fading models on both channels");
    return {m.g0.mean(), m.g1.mean()};
  }
};

namespace detail {

inline void require_aqpa_multipliers(double lambda, double mu) {
  if (!(lambda >= 0.0) || !(mu >= 0.0)) throw ConfigError("multipliers must be non-negative");
  if (!(lambda + mu > 0.0)) throw UndefinedWaterLevel("AQPA needs lambda + mu > 0");
}

/// Integral of the non-negative function f over [a, b].
template <class F>
double integrate_positive(F&& f, double a, double b, const QuadratureSpec& q) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, q.max_depth, q.rel_tol);
}

/// Integrals of two non-negative functions over [a, b] in one adaptive pass;
/// f returns them as the real and imaginary parts of a complex number. The
/// relative tolerance refers to `scale`, the magnitude of the whole integral
/// this piece belongs to, so thin pieces are not refined to their own size.
template <class F>
std::complex<double> integrate_pair(F&& f, double a, double b, const QuadratureSpec& q, double scale) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  if (!(b > a)) return {0.0, 0.0};
  const std::complex<double> rough = GK::integrate(f, a, b, 0, q.rel_tol);
  const double size = std::abs(rough);
  if (size == 0.0) return rough;
  const double tol = q.rel_tol * std::max(1.0, scale / size);
  if (tol >= 0.1) return rough;
  return GK::integrate(f, a, b, q.max_depth, tol);
}

/// g0 below which level p_hi beats the adjacent lower level p_lo at this g1:
/// (1/mu)(log((1 + g1 p_hi)/(1 + g1 p_lo))/(p_hi - p_lo) - lambda).
inline double g0_threshold(double g1, double p_hi, double p_lo, double lambda, double mu) {
  return ((std::log1p(g1 * p_hi) - std::log1p(g1 * p_lo)) / (p_hi - p_lo) - lambda) / mu;
}

/// g1 at which p_hi and p_lo score equally for g0 = 0.
/// +inf when p_hi never beats p_lo at g0 = 0 (p_hi above the 1/lambda cap).
inline double axis_boundary(double p_hi, double p_lo, double lambda) {
  if (!std::isfinite(p_hi)) return std::numeric_limits<double>::infinity();
  const double d = p_hi - p_lo;
  const double e = std::exp(lambda * d);
  const double den = p_hi - p_lo * e;
  if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
  return std::expm1(lambda * d) / den;
}

}  // namespace detail

/// Optimality integral of the region of level p between its neighbours:
///   integral over R of [g1/(1 + g1 p) - (lambda + mu g0)] f0(g0) f1(g1),
/// where R is the set on which p beats both p_up (> p) and p_lo (< p).
/// p_up = +inf drops the upper neighbour, which leaves the whole tail.
inline double aqpa_region_residual(double p_up, double p, double p_lo, double lambda, double mu,
                                   const ExponentialBand& band, const QuadratureSpec& quad = {}) {
  detail::require_aqpa_multipliers(lambda, mu);
  if (!(p > p_lo) || !(p_lo >= 0.0) || !(p_up > p)) throw ConfigError("region residual needs p_up > p > p_lo >= 0");
  const double m0 = band.mean_g0;
  const double m1 = band.mean_g1;
  const double g_max = quad.tail_multiple * m1;
  const double c_lo = detail::axis_boundary(p, p_lo, lambda);
  const double c_up = detail::axis_boundary(p_up, p, lambda);
  if (!(c_lo < g_max)) return 0.0;
  auto f1 = [&](double g1) { return std::exp(-g1 / m1) / m1; };

  if (mu == 0.0) {
    const double hi = std::min(c_up, g_max);
    const double gain = detail::integrate_positive([&](double g1) { return g1 / (1.0 + g1 * p) * f1(g1); }, c_lo, hi, quad);
    const double cost = lambda * (std::exp(-c_lo / m1) - std::exp(-hi / m1));
    return gain - cost;
  }

  // Closed form over g0 in [a, b]: mass and first moment of the exponential.
  struct Slice {
    double mass, moment;
  };
  auto slice = [&](double g1) -> Slice {
    const double b = std::max(0.0, detail::g0_threshold(g1, p, p_lo, lambda, mu));
    double a = 0.0;
    if (std::isfinite(p_up)) a = std::max(0.0, detail::g0_threshold(g1, p_up, p, lambda, mu));
    if (!(b > a)) return {0.0, 0.0};
    const double ea = std::exp(-a / m0), eb = std::exp(-b / m0);
    return {ea - eb, (a + m0) * ea - (b + m0) * eb};
  };
  // real part: the g1/(1 + g1 p) term, imaginary part: the (lambda + mu g0) term
  auto parts = [&](double g1) {
    const Slice s = slice(g1);
    const double f = f1(g1);
    return std::complex<double>(g1 / (1.0 + g1 * p) * s.mass * f, (lambda * s.mass + mu * s.moment) * f);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  std::complex<double> total(0.0, 0.0);
  if (c_up > c_lo && c_up < g_max) {
    const double scale = std::abs(GK::integrate(parts, c_lo, c_up, 0)) + std::abs(GK::integrate(parts, c_up, g_max, 0));
    total = detail::integrate_pair(parts, c_lo, c_up, quad, scale) + detail::integrate_pair(parts, c_up, g_max, quad, scale);
  } else {
    total = detail::integrate_pair(parts, c_lo, g_max, quad, 0.0);
  }
  return total.real() - total.imag();
}

/// Residual of the seed equation obtained by letting p_{L-1} -> 0 with
/// p_L = 0: the region of the vanishing level between g1 = lambda and the
/// boundary towards p.
inline double aqpa_seed_residual(double p, double lambda, double mu, const ExponentialBand& band,
                                 const QuadratureSpec& quad = {}) {
  detail::require_aqpa_multipliers(lambda, mu);
  if (!(p > 0.0)) throw ConfigError("seed residual needs p > 0");
  const double m0 = band.mean_g0, m1 = band.mean_g1;
  const double g_max = quad.tail_multiple * m1;
  auto f1 = [&](double g1) { return std::exp(-g1 / m1) / m1; };
  if (mu == 0.0) {
    const double hi = std::min(std::expm1(lambda * p) / p, g_max);
    if (!(hi > lambda)) return 0.0;
    return detail::integrate_positive([&](double g1) { return (g1 - lambda) * f1(g1); }, lambda, hi, quad);
  }
  // g0 from (1/mu)(log(1 + g1 p)/p - lambda) up to (g1 - lambda)/mu
  auto inner = [&](double g1) {
    const double a = std::max(0.0, (std::log1p(g1 * p) / p - lambda) / mu);
    const double b = std::max(0.0, (g1 - lambda) / mu);
    if (!(b > a)) return 0.0;
    const double ea = std::exp(-a / m0), eb = std::exp(-b / m0);
    const double mass = ea - eb, moment = (a + m0) * ea - (b + m0) * eb;
    return ((g1 - lambda) * mass - mu * moment) * f1(g1);
  };
  if (!(g_max > lambda)) return 0.0;
  return detail::integrate_positive(inner, lambda, g_max, quad);
}

/// Root of the seed equation on [eps_p, p_max].
///
/// The integrand of the seed equation is non-negative on its domain, so a
/// sign change only appears through rounding; in exact arithmetic there is
/// no positive root and this reports RootNotFound.
inline double aqpa_seed_level(double lambda, double mu, const ExponentialBand& band, const AqpaOptions& opts = {},
                              double p_max = 1e4) {
  detail::require_aqpa_multipliers(lambda, mu);
  double lo = opts.eps_p;
  double f_lo = aqpa_seed_residual(lo, lambda, mu, band, opts.quad);
  // scan geometrically for a sign change
  for (double p = lo * 2.0; p <= p_max; p *= 2.0) {
    const double f = aqpa_seed_residual(p, lambda, mu, band, opts.quad);
    if ((f_lo > 0.0 && f < 0.0) || (f_lo < 0.0 && f > 0.0)) {
      std::uintmax_t it = 200;
      auto r = boost::math::tools::toms748_solve(
          [&](double x) { return aqpa_seed_residual(x, lambda, mu, band, opts.quad); }, lo, p, f_lo, f,
          boost::math::tools::eps_tolerance<double>(45), it);
      return 0.5 * (r.first + r.second);
    }
    lo = p;
    f_lo = f;
  }
  std::ostringstream msg;
  msg << "seed equation has no sign change on [" << opts.eps_p << ", " << p_max << "]";
  throw RootNotFound(msg.str());
}

/// Next level up: p_{j-1} > p_j such that the region of p_j, bounded by
/// p_{j-1} above and p_{j+1} below, satisfies its optimality condition.
///
/// The residual grows with p_{j-1}; its limit is the residual of the whole
/// tail above p_j. When that limit is not positive no level fits and the
/// codebook is exhausted (RootNotFound). `guess` seeds the bracket search.
inline double aqpa_recursive_step(double p_j, double p_next, double lambda, double mu, const ExponentialBand& band,
                                  const AqpaOptions& opts = {}, double guess = 0.0) {
  const double inf = std::numeric_limits<double>::infinity();
  const double tail = aqpa_region_residual(inf, p_j, p_next, lambda, mu, band, opts.quad);
  if (!(tail > 0.0)) {
    std::ostringstream msg;
    msg << "codebook exhausted above level " << p_j << " (tail residual " << tail << ")";
    throw RootNotFound(msg.str());
  }
  // search on u = log(p_{j-1} - p_j)
  auto residual = [&](double u) { return aqpa_region_residual(p_j + std::exp(u), p_j, p_next, lambda, mu, band, opts.quad); };
  const double u_min = std::log(std::max(p_j, 1e-300) * 1e-9);
  double u0 = guess > p_j ? std::log(guess - p_j) : std::log(std::max(p_j, 1e-3));
  double step = guess > p_j ? 0.25 : std::log(4.0);
  double f0 = residual(u0);
  double u_lo, u_hi, f_lo, f_hi;
  if (f0 > 0.0) {
    u_hi = u0;
    f_hi = f0;
    for (;;) {
      u_lo = std::max(u_hi - step, u_min);
      f_lo = residual(u_lo);
      if (f_lo <= 0.0) break;
      if (u_lo <= u_min) return p_j + std::exp(u_lo);
      u_hi = u_lo;
      f_hi = f_lo;
      step *= 2.0;
    }
  } else {
    u_lo = u0;
    f_lo = f0;
    for (int k = 0;; ++k) {
      if (k > 200) throw RootNotFound("could not bracket the next level");
      u_hi = u_lo + step;
      f_hi = residual(u_hi);
      if (f_hi > 0.0) break;
      u_lo = u_hi;
      f_lo = f_hi;
      step *= 2.0;
    }
  }
  if (f_lo == 0.0) return p_j + std::exp(u_lo);
  std::uintmax_t it = 100;
  auto tol = [&](double a, double b) { return std::abs(b - a) <= opts.level_rel_tol; };
  auto r = boost::math::tools::toms748_solve(residual, u_lo, u_hi, f_lo, f_hi, tol, it);
  return p_j + std::exp(0.5 * (r.first + r.second));
}

struct AqpaResult {
  PowerCodebook codebook;
  double closure_residual = 0.0;  ///< top-region residual at the returned seed
  int shooting_steps = 0;
};

/// Levels p_1 > ... > p_{L-2} above p_{L-1} = eps_p and p_L = 0, or nullopt
/// when the recursion is exhausted before reaching p_1. `guess` may hold
/// levels of a nearby codebook to seed the level searches.
inline std::optional<std::vector<double>> aqpa_levels_from_seed(double seed, std::size_t L, double lambda, double mu,
                                                                const ExponentialBand& band, const AqpaOptions& opts,
                                                                const std::vector<double>* guess = nullptr) {
  std::vector<double> levels(L, 0.0);
  levels[L - 2] = opts.eps_p;
  levels[L - 3] = seed;
  for (std::size_t j = L - 3; j >= 1; --j) {
    const double g = guess && guess->size() == L ? (*guess)[j - 1] : 0.0;
    try {
      levels[j - 1] = aqpa_recursive_step(levels[j], levels[j + 1], lambda, mu, band, opts, g);
    } catch (const RootNotFound&) {
      return std::nullopt;
    }
  }
  return levels;
}

/// Approximate codebook built from the channel statistics alone.
///
/// Starting from p_L = 0 and p_{L-1} = eps_p, each further level follows
/// from the optimality condition of the region below it. The free level
/// p_{L-2} is chosen so that the top region satisfies its own optimality
/// condition as well: too small a seed leaves the top residual positive,
/// too large a seed makes it negative or exhausts the recursion early.
/// `warm` may hold a codebook designed at nearby multipliers.
inline AqpaResult aqpa_codebook(double lambda, double mu, std::size_t L, const ExponentialBand& band,
                                const AqpaOptions& opts = {}, const PowerCodebook* warm = nullptr) {
  detail::require_aqpa_multipliers(lambda, mu);
  if (L < 4) throw ConfigError("AQPA needs L >= 4");
  opts.quad.validate();
  const double inf = std::numeric_limits<double>::infinity();
  AqpaResult out;
  std::vector<double> guess;
  if (warm && warm->size() == L && warm->strictly_descending() && warm->levels[L - 3] > opts.eps_p)
    guess = warm->levels;

  struct Probe {
    double seed;
    std::optional<double> closure;  ///< nullopt: recursion exhausted
    std::vector<double> levels;
  };
  auto probe = [&](double seed) {
    ++out.shooting_steps;
    Probe pr{seed, std::nullopt, {}};
    auto l = aqpa_levels_from_seed(seed, L, lambda, mu, band, opts, guess.empty() ? nullptr : &guess);
    if (l) {
      pr.closure = aqpa_region_residual(inf, (*l)[0], (*l)[1], lambda, mu, band, opts.quad);
      pr.levels = std::move(*l);
      guess = pr.levels;
    }
    return pr;
  };
  auto too_small = [](const Probe& p) { return p.closure && *p.closure > 0.0; };
  auto check_budget = [&] {
    if (out.shooting_steps > opts.max_shoot) throw RootNotFound("AQPA seed search: evaluation budget exhausted");
  };

  // Bracket the seed: lo too small, hi too large.
  Probe lo{0.0, std::nullopt, {}}, hi{0.0, std::nullopt, {}};
  const double s_min = opts.eps_p * 2.0;
  double s0 = guess.empty() ? std::max(s_min, 1e-2) : guess[L - 3];
  double factor = guess.empty() ? 4.0 : 1.05;
  Probe p0 = probe(s0);
  if (too_small(p0)) {
    lo = std::move(p0);
    for (;;) {
      check_budget();
      Probe p = probe(lo.seed * factor);
      if (!too_small(p)) {
        hi = std::move(p);
        break;
      }
      lo = std::move(p);
      factor *= factor;
      if (lo.seed > 1e12) throw RootNotFound("AQPA seed search: no upper bracket");
    }
  } else {
    hi = std::move(p0);
    for (;;) {
      check_budget();
      const double s = std::max(hi.seed / factor, s_min);
      Probe p = probe(s);
      if (too_small(p)) {
        lo = std::move(p);
        break;
      }
      if (s <= s_min) throw RootNotFound("AQPA seed search: top region already closed at the smallest seed");
      hi = std::move(p);
      factor *= factor;
    }
  }

  // Shrink until the upper end is a finished recursion, then refine with
  // toms748 on log(seed).
  while (!hi.closure && hi.seed / lo.seed - 1.0 > opts.shoot_rel_tol) {
    check_budget();
    Probe p = probe(std::sqrt(lo.seed * hi.seed));
    if (too_small(p)) lo = std::move(p);
    else hi = std::move(p);
  }
  if (hi.closure && hi.seed / lo.seed - 1.0 > opts.shoot_rel_tol) {
    std::vector<Probe> cache;
    auto f = [&](double u) {
      check_budget();
      Probe p = probe(std::exp(u));
      // exhausted recursions only occur above the closing seed
      const double v = p.closure ? *p.closure : *hi.closure;
      if (too_small(p) && p.seed > lo.seed) lo = p;
      cache.push_back(std::move(p));
      return v;
    };
    std::uintmax_t it = static_cast<std::uintmax_t>(std::max(1, opts.max_shoot - out.shooting_steps));
    auto tol = [&](double a, double b) { return std::abs(b - a) <= opts.shoot_rel_tol; };
    boost::math::tools::toms748_solve(f, std::log(lo.seed), std::log(hi.seed), *lo.closure, *hi.closure, tol, it);
  }
  out.codebook = PowerCodebook(std::move(lo.levels));
  out.closure_residual = *lo.closure;
  return out;
}

}  // namespace qpower

#endif  // QPOWER_AQPA_HPP
