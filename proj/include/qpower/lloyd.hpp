#ifndef QPOWER_LLOYD_HPP
#define QPOWER_LLOYD_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qpower/error.hpp"
#include "qpower/fading.hpp"
#include "qpower/full_csi.hpp"

namespace qpower {

/// Quantized power levels of one band, p_1 .. p_L.
struct PowerCodebook {
  std::vector<double> levels;

  PowerCodebook() = default;
  explicit PowerCodebook(std::vector<double> l) : levels(std::move(l)) {}

  std::size_t size() const { return levels.size(); }
  double operator[](std::size_t j) const { return levels[j]; }

  /// log2(L) when L is a power of two, otherwise -1.
  int bits() const {
    const std::size_t L = levels.size();
    if (L == 0 || (L & (L - 1)) != 0) return -1;
    int b = 0;
    while ((std::size_t{1} << b) < L) ++b;
    return b;
  }

  bool strictly_descending() const {
    for (std::size_t j = 1; j < levels.size(); ++j) {
      if (!(levels[j - 1] > levels[j])) return false;
    }
    return true;
  }

  void validate() const {
    if (levels.empty()) throw ConfigError("codebook needs at least one level");
    for (double p : levels) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("codebook levels must be finite and non-negative");
    }
  }

  bool operator==(const PowerCodebook&) const = default;
};

/// Region labels of the training samples (0-based) and the empirical
/// region probabilities.
struct Partition {
  std::vector<std::uint32_t> labels;
  std::vector<std::size_t> counts;
  std::vector<double> region_mass;

  std::size_t regions() const { return counts.size(); }

  static Partition from_labels(std::vector<std::uint32_t> labels, std::size_t L) {
    Partition p;
    p.counts.assign(L, 0);
    for (auto l : labels) {
      if (l >= L) throw DimensionMismatch("partition label out of range");
      ++p.counts[l];
    }
    p.region_mass.resize(L);
    const double n = static_cast<double>(labels.size());
    for (std::size_t j = 0; j < L; ++j) p.region_mass[j] = labels.empty() ? 0.0 : p.counts[j] / n;
    p.labels = std::move(labels);
    return p;
  }

  bool operator==(const Partition&) const = default;
};

struct GlaOptions {
  double tol = 1e-6;       ///< relative Lagrangian change that ends the iteration
  int max_iter = 500;
  double tol_root = 1e-10; ///< absolute residual of the normalized centroid equation
};

struct GlaReport {
  int iterations = 0;
  /// Lagrangian after the initial partition and after every iteration.
  std::vector<double> lagrangian_trace;
  bool converged = false;
  double lagrangian = 0.0;
  double capacity = 0.0;      ///< E[log(1 + g1 p)] on the training band
  double power = 0.0;         ///< E[p]
  double interference = 0.0;  ///< E[g0 p]
  std::size_t reseeds = 0;
  std::size_t empty_levels = 0;  ///< levels with no samples at exit
};

struct GlaResult {
  PowerCodebook codebook;
  Partition partition;
  GlaReport report;
};

/// Per-sample objective log(1 + g1 p) - (lambda + mu g0) p.
inline double sample_score(double g0, double g1, double p, double lambda, double mu) {
  return std::log1p(g1 * p) - (lambda + mu * g0) * p;
}

namespace detail {

/// Lowest index maximizing score over the levels.
inline std::uint32_t best_level_linear(double g1, double w, std::span<const double> levels) {
  std::uint32_t best = 0;
  double best_s = std::log1p(g1 * levels[0]) - w * levels[0];
  for (std::size_t j = 1; j < levels.size(); ++j) {
    const double s = std::log1p(g1 * levels[j]) - w * levels[j];
    if (s > best_s) {
      best_s = s;
      best = static_cast<std::uint32_t>(j);
    }
  }
  return best;
}

/// Same result as best_level_linear for strictly descending levels, found by
/// walking uphill from `j`: the score is concave in p, so it is unimodal
/// along the levels and the first local maximum reached is the lowest
/// global maximizer. `best_s` receives its score.
inline std::uint32_t best_level_walk(double g1, double w, std::span<const double> levels,
                                     std::size_t j, double& best_s) {
  auto score = [&](std::size_t k) { return std::log1p(g1 * levels[k]) - w * levels[k]; };
  const std::size_t L = levels.size();
  double s = score(j);
  if (j > 0) {
    double down = score(j - 1);
    if (down >= s) {
      do {
        --j;
        s = down;
        if (j == 0) break;
        down = score(j - 1);
      } while (down >= s);
      best_s = s;
      return static_cast<std::uint32_t>(j);
    }
  }
  while (j + 1 < L) {
    const double up = score(j + 1);
    if (!(up > s)) break;
    ++j;
    s = up;
  }
  best_s = s;
  return static_cast<std::uint32_t>(j);
}

/// Sample indices grouped by region, preserving sample order inside a region.
struct RegionIndex {
  std::vector<std::uint32_t> order;
  std::vector<std::size_t> start;  ///< size L + 1

  RegionIndex(const Partition& part) {
    const std::size_t L = part.regions();
    start.assign(L + 1, 0);
    for (std::size_t j = 0; j < L; ++j) start[j + 1] = start[j] + part.counts[j];
    order.resize(part.labels.size());
    std::vector<std::size_t> pos(start.begin(), start.end() - 1);
    for (std::size_t n = 0; n < part.labels.size(); ++n) order[pos[part.labels[n]]++] = static_cast<std::uint32_t>(n);
  }

  std::span<const std::uint32_t> region(std::size_t j) const {
    return {order.data() + start[j], start[j + 1] - start[j]};
  }
};

/// Root of the weighted centroid equation
///   sum_j w_j sum_{n in R_j} [ g1/(1 + g1 p) - (lambda + mu g0) ] = 0
/// clamped at zero. Region weights that are exactly zero are skipped, so a
/// unit weight vector reproduces the single-region computation bit for bit.
///
/// The left side is convex and decreasing in p; Newton's method started left
/// of the root increases monotonically towards it without overshooting.
/// `start` is an optional guess, typically the previous level.
inline double weighted_centroid(const BandView& band, const RegionIndex& index,
                                std::span<const double> weights, double lambda, double mu,
                                double tol_root, double start = 0.0, bool* degenerate = nullptr) {
  double W = 0.0, G0 = 0.0, G1 = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double r = weights[j];
    if (r == 0.0) continue;
    double s0 = 0.0, s1 = 0.0;
    for (auto n : index.region(j)) {
      s0 += band.g0[n];
      s1 += band.g1[n];
    }
    W += r * static_cast<double>(index.region(j).size());
    G0 += r * s0;
    G1 += r * s1;
  }
  if (degenerate) *degenerate = !(W > 0.0);
  if (!(W > 0.0)) throw EmptyRegion("centroid over regions with zero total weight");
  const double C = lambda * W + mu * G0;
  if (G1 <= C) return 0.0;

  auto sums = [&](double p, double& S, double& D) {
    S = 0.0;
    D = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      const double r = weights[j];
      if (r == 0.0) continue;
      double s = 0.0, d = 0.0;
      for (auto n : index.region(j)) {
        const double g1 = band.g1[n];
        const double t = g1 / (1.0 + g1 * p);
        s += t;
        d += t * t;
      }
      S += r * s;
      D += r * d;
    }
  };

  const double ftol = tol_root * W * 1e-2;
  double p = 0.0;
  if (start > 0.0 && std::isfinite(start)) {
    // A Newton step from the right of the root lands on its left.
    double S, D;
    sums(start, S, D);
    const double f = S - C;
    if (f >= 0.0) p = start;
    else if (D > 0.0) p = std::max(0.0, start + f / D);
  }
  for (int it = 0; it < 200; ++it) {
    double S, D;
    sums(p, S, D);
    const double f = S - C;
    if (f <= ftol) {
      if (f >= -ftol) return p;
      break;  // rounding pushed past the root; finish by bisection
    }
    if (!(D > 0.0)) break;
    const double step = f / D;
    const double next = p + step;
    if (!(next > p) || !std::isfinite(next)) return p;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * next) return next;
    p = next;
  }

  // Bisection fallback on [0, hi] with f(hi) < 0.
  double lo = 0.0;
  double hi = std::max(p, 1.0);
  for (int k = 0; k < 2000; ++k) {
    double s, d;
    sums(hi, s, d);
    if (s - C < 0.0) break;
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return lo;
  }
  for (int k = 0; k < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    double s, d;
    sums(mid, s, d);
    if (s - C > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Nearest-neighbour condition: each sample goes to the level with the
/// largest score, ties to the lowest index.
///
/// `hint` may hold labels from a previous pass over the same samples; they
/// only change where the search for a strictly descending codebook starts.
/// `mean_score` receives the Lagrangian of the returned partition.
inline Partition nnc_assign(const BandView& band, const PowerCodebook& codebook, double lambda,
                            double mu, const Partition* hint = nullptr, double* mean_score = nullptr) {
  if (codebook.size() == 0) throw ConfigError("codebook is empty");
  if (band.g0.size() != band.g1.size()) throw DimensionMismatch("g0 and g1 sample counts differ");
  const std::size_t N = band.size();
  const std::size_t L = codebook.size();
  std::span<const double> levels(codebook.levels);
  const bool walk = codebook.strictly_descending();
  const bool hinted = walk && hint && hint->labels.size() == N && hint->regions() == L;
  std::vector<std::uint32_t> labels(N);
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const double w = lambda + mu * band.g0[n];
    double s;
    if (walk) {
      labels[n] = detail::best_level_walk(band.g1[n], w, levels, hinted ? hint->labels[n] : (L - 1) / 2, s);
    } else {
      labels[n] = detail::best_level_linear(band.g1[n], w, levels);
      s = std::log1p(band.g1[n] * levels[labels[n]]) - w * levels[labels[n]];
    }
    total += s;
  }
  if (mean_score) *mean_score = total / static_cast<double>(N);
  return Partition::from_labels(std::move(labels), L);
}

/// Centroid condition on one region: max(p*, 0) with
/// E[g1/(1 + g1 p*) - (lambda + mu g0) | R] = 0.
inline double centroid_power(const BandView& region, double lambda, double mu, double tol_root = 1e-10) {
  if (region.size() == 0) throw EmptyRegion("centroid of an empty region");
  if (region.g0.size() != region.g1.size()) throw DimensionMismatch("g0 and g1 sample counts differ");
  Partition all = Partition::from_labels(std::vector<std::uint32_t>(region.size(), 0), 1);
  detail::RegionIndex index(all);
  const double one = 1.0;
  return detail::weighted_centroid(region, index, std::span<const double>(&one, 1), lambda, mu, tol_root);
}

/// Empirical mean of the assigned scores.
inline double lagrangian_value(const BandView& band, const Partition& partition,
                               const PowerCodebook& codebook, double lambda, double mu) {
  if (partition.labels.size() != band.size()) throw DimensionMismatch("partition and training set sizes differ");
  if (partition.regions() != codebook.size()) throw DimensionMismatch("partition and codebook sizes differ");
  double s = 0.0;
  for (std::size_t n = 0; n < band.size(); ++n)
    s += sample_score(band.g0[n], band.g1[n], codebook.levels[partition.labels[n]], lambda, mu);
  return s / static_cast<double>(band.size());
}

/// g0 at which the boundary between p_hi and p_lo runs off to infinity;
/// +inf when there is no asymptote (mu = 0 or p_lo = 0).
inline double boundary_asymptote(double p_hi, double p_lo, double lambda, double mu) {
  if (mu == 0.0 || p_lo == 0.0) return std::numeric_limits<double>::infinity();
  return (std::log(p_hi / p_lo) / (p_hi - p_lo) - lambda) / mu;
}

/// g1 on the boundary between the regions of adjacent levels p_hi > p_lo at
/// the given g0: the two levels score equally there.
inline double boundary_g1(double p_hi, double p_lo, double lambda, double mu, double g0) {
  if (!(p_hi > p_lo) || !(p_lo >= 0.0))
    throw ConfigError("boundary needs p_hi > p_lo >= 0");
  const double d = p_hi - p_lo;
  const double w = lambda + mu * g0;
  const double e = std::exp(w * d);
  const double den = p_hi - p_lo * e;
  if (!(den > 0.0)) {
    std::ostringstream msg;
    msg << "g0 = " << g0 << " is beyond the boundary asymptote at "
        << boundary_asymptote(p_hi, p_lo, lambda, mu);
    throw AsymptoteExceeded(msg.str());
  }
  return std::expm1(w * d) / den;
}

/// Labels obtained by comparing each g1 against the adjacent-level
/// boundaries instead of scoring every level.
inline std::vector<std::uint32_t> boundary_labels(const BandView& band, const PowerCodebook& codebook,
                                                  double lambda, double mu) {
  const std::size_t L = codebook.size();
  std::vector<std::uint32_t> labels(band.size(), static_cast<std::uint32_t>(L - 1));
  for (std::size_t n = 0; n < band.size(); ++n) {
    for (std::size_t j = 0; j + 1 < L; ++j) {
      const double hi = codebook.levels[j], lo = codebook.levels[j + 1];
      const double g0 = band.g0[n];
      if (g0 >= boundary_asymptote(hi, lo, lambda, mu)) continue;
      if (band.g1[n] >= boundary_g1(hi, lo, lambda, mu, g0)) {
        labels[n] = static_cast<std::uint32_t>(j);
        break;
      }
    }
  }
  return labels;
}

namespace detail {

inline void require_water_level(double lambda, double mu) {
  if (!(lambda >= 0.0) || !(mu >= 0.0)) throw ConfigError("multipliers must be non-negative");
  if (lambda == 0.0 && mu == 0.0) throw UndefinedWaterLevel("codebook design needs lambda + mu > 0");
}

}  // namespace detail

/// Default initial codebook: L-1 levels at evenly spaced upper quantiles of
/// the positive water-filling powers, plus a zero level. L = 1 uses the
/// median water-filling power.
inline PowerCodebook quantile_init(const BandView& band, std::size_t L, double lambda, double mu) {
  detail::require_water_level(lambda, mu);
  if (L == 0) throw ConfigError("L must be at least 1");
  std::vector<double> p;
  p.reserve(band.size());
  for (std::size_t n = 0; n < band.size(); ++n) {
    const double v = power_point(band.g0[n], band.g1[n], lambda, mu);
    if (L == 1 || v > 0.0) p.push_back(std::isfinite(v) ? v : 0.0);
  }
  std::sort(p.begin(), p.end(), std::greater<>());
  auto upper_quantile = [&](double q) {
    if (p.empty()) return 0.0;
    std::size_t k = static_cast<std::size_t>(q * static_cast<double>(p.size()));
    return p[std::min(k, p.size() - 1)];
  };
  if (L == 1) return PowerCodebook({upper_quantile(0.5)});
  std::vector<double> levels;
  for (std::size_t k = 1; k < L; ++k)
    levels.push_back(upper_quantile((2.0 * k - 1.0) / (2.0 * static_cast<double>(L - 1))));
  levels.push_back(0.0);
  return PowerCodebook(std::move(levels));
}

/// Random initial codebook: levels uniform in (0, p_max] with p_max the
/// largest water-filling power on the band, sorted descending.
inline PowerCodebook random_init(const BandView& band, std::size_t L, double lambda, double mu,
                                 std::uint64_t seed) {
  detail::require_water_level(lambda, mu);
  double p_max = 0.0;
  for (std::size_t n = 0; n < band.size(); ++n) {
    const double v = power_point(band.g0[n], band.g1[n], lambda, mu);
    if (std::isfinite(v)) p_max = std::max(p_max, v);
  }
  if (!(p_max > 0.0)) p_max = 1.0;
  const std::uint64_t key = rng::stream_key(seed, 0x1000, 0);
  std::vector<double> levels(L);
  for (std::size_t j = 0; j < L; ++j) levels[j] = p_max * (1.0 - rng::uniform(key, j));
  std::sort(levels.begin(), levels.end(), std::greater<>());
  return PowerCodebook(std::move(levels));
}

namespace detail {

inline void summarize(const BandView& band, const PowerCodebook& cb, const Partition& part,
                      GlaReport& rep) {
  double c = 0.0, pw = 0.0, in = 0.0;
  for (std::size_t n = 0; n < band.size(); ++n) {
    const double p = cb.levels[part.labels[n]];
    c += std::log1p(band.g1[n] * p);
    pw += p;
    in += band.g0[n] * p;
  }
  const double N = static_cast<double>(band.size());
  rep.capacity = c / N;
  rep.power = pw / N;
  rep.interference = in / N;
  rep.empty_levels = 0;
  for (auto k : part.counts) rep.empty_levels += (k == 0);
}

/// New level for an empty region: the centroid of the upper half (by
/// water-filling power) of the most populated region that still has spread.
/// Returns false when no region can be split.
inline bool split_level(const BandView& band, const Partition& part, const RegionIndex& index,
                        std::vector<bool>& used, double lambda, double mu, double tol_root,
                        double& level) {
  std::vector<std::size_t> order(part.regions());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return part.counts[a] > part.counts[b]; });
  for (std::size_t j : order) {
    if (used[j] || part.counts[j] < 2) continue;
    std::vector<double> ps;
    for (auto n : index.region(j)) ps.push_back(power_point(band.g0[n], band.g1[n], lambda, mu));
    std::vector<double> sorted = ps;
    const std::size_t mid = (sorted.size() - 1) / 2;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
    const double median = sorted[mid];
    std::vector<double> g0, g1;
    std::size_t k = 0;
    for (auto n : index.region(j)) {
      if (ps[k++] > median) {
        g0.push_back(band.g0[n]);
        g1.push_back(band.g1[n]);
      }
    }
    if (g1.empty()) continue;
    used[j] = true;
    level = centroid_power(BandView{g0, g1}, lambda, mu, tol_root);
    return true;
  }
  return false;
}

}  // namespace detail

namespace detail {

/// Centroid step for every level. Level k weighs region j by rho[k * L + j],
/// or by the indicator of j == k when `rho` is null. Levels whose weighted
/// region mass is zero are re-seeded by splitting a populated region; with
/// `sort_levels` the result is sorted descending.
inline std::size_t centroid_step(const BandView& band, const Partition& part, PowerCodebook& codebook,
                                 double lambda, double mu, double tol_root,
                                 const std::vector<double>* rho, bool sort_levels) {
  const std::size_t L = codebook.size();
  RegionIndex index(part);
  std::vector<double> weights(L, 0.0);
  std::vector<std::size_t> empty;
  for (std::size_t k = 0; k < L; ++k) {
    if (rho) std::copy_n(rho->begin() + static_cast<std::ptrdiff_t>(k * L), L, weights.begin());
    else weights[k] = 1.0;
    double mass = 0.0;
    for (std::size_t j = 0; j < L; ++j) mass += weights[j] * static_cast<double>(part.counts[j]);
    if (mass > 0.0)
      codebook.levels[k] = weighted_centroid(band, index, weights, lambda, mu, tol_root, codebook.levels[k]);
    else
      empty.push_back(k);
    if (!rho) weights[k] = 0.0;
  }
  std::size_t reseeded = 0;
  std::vector<bool> used(L, false);
  for (std::size_t k : empty) {
    double level;
    if (split_level(band, part, index, used, lambda, mu, tol_root, level)) {
      codebook.levels[k] = level;
      ++reseeded;
    }
  }
  if (sort_levels) std::stable_sort(codebook.levels.begin(), codebook.levels.end(), std::greater<>());
  return reseeded;
}

}  // namespace detail

/// One centroid step for all levels, followed by re-seeding of empty levels
/// and a descending sort. Returns the number of re-seeded levels.
inline std::size_t cc_update(const BandView& band, const Partition& part, PowerCodebook& codebook,
                             double lambda, double mu, double tol_root = 1e-10) {
  return detail::centroid_step(band, part, codebook, lambda, mu, tol_root, nullptr, true);
}

/// Generic alternating optimization shared by the noise-free and noisy
/// designs. `assign(codebook, hint, objective)` returns a partition and its
/// objective value; `update(partition, codebook)` runs one centroid step in
/// place and returns the number of re-seeded levels.
template <class Assign, class Update>
GlaResult lloyd_iterate(const BandView& band, PowerCodebook init, const GlaOptions& opts,
                        Assign&& assign, Update&& update) {
  GlaResult res;
  res.codebook = std::move(init);
  double value = 0.0;
  res.partition = assign(res.codebook, nullptr, value);
  res.report.lagrangian_trace.push_back(value);
  for (int it = 1; it <= opts.max_iter; ++it) {
    PowerCodebook next = res.codebook;
    res.report.reseeds += update(res.partition, next);
    double next_value = 0.0;
    Partition part = assign(next, &res.partition, next_value);
    res.report.lagrangian_trace.push_back(next_value);
    res.report.iterations = it;
    const bool same = part.labels == res.partition.labels;
    const double change = std::abs(next_value - value);
    res.codebook = std::move(next);
    res.partition = std::move(part);
    value = next_value;
    if (same || change <= opts.tol * std::abs(value)) {
      res.report.converged = true;
      break;
    }
  }
  res.report.lagrangian = value;
  detail::summarize(band, res.codebook, res.partition, res.report);
  return res;
}

/// Modified generalized Lloyd algorithm at fixed multipliers on one band.
inline GlaResult run_gla(const BandView& band, std::size_t L, double lambda, double mu,
                         const PowerCodebook& init, const GlaOptions& opts = {}) {
  if (L == 0) throw ConfigError("L must be at least 1");
  if (init.size() != L) throw DimensionMismatch("initial codebook size differs from L");
  if (band.size() == 0) throw ConfigError("empty training set");
  init.validate();
  return lloyd_iterate(
      band, init, opts,
      [&](const PowerCodebook& cb, const Partition* hint, double& value) {
        return nnc_assign(band, cb, lambda, mu, hint, &value);
      },
      [&](const Partition& part, PowerCodebook& cb) {
        return cc_update(band, part, cb, lambda, mu, opts.tol_root);
      });
}

inline GlaResult run_gla(const BandView& band, std::size_t L, double lambda, double mu,
                         const GlaOptions& opts = {}) {
  return run_gla(band, L, lambda, mu, quantile_init(band, L, lambda, mu), opts);
}

/// Structural checks on a designed codebook.
struct PropertyReport {
  bool strictly_descending = true;  ///< p_1 > ... > p_L
  bool upper_levels_positive = true;  ///< p_1 .. p_{L-1} > 0
  bool last_level_rule = true;  ///< lambda + mu >= 1 implies p_L = 0
  bool boundaries_above_waterline = true;  ///< boundary g1 > lambda + mu g0
  std::vector<std::string> violations;

  bool ok() const {
    return strictly_descending && upper_levels_positive && last_level_rule && boundaries_above_waterline;
  }
};

inline PropertyReport verify_codebook_properties(const PowerCodebook& cb, double lambda, double mu,
                                                 std::span<const double> g0_grid = {}) {
  PropertyReport r;
  const std::size_t L = cb.size();
  auto note = [&](bool& flag, const std::string& what) {
    if (flag) r.violations.push_back(what);
    flag = false;
  };
  for (std::size_t j = 1; j < L; ++j) {
    if (!(cb.levels[j - 1] > cb.levels[j])) {
      std::ostringstream m;
      m << "levels " << j << " and " << j + 1 << " are not strictly descending";
      note(r.strictly_descending, m.str());
    }
  }
  for (std::size_t j = 0; j + 1 < L; ++j) {
    if (!(cb.levels[j] > 0.0)) {
      std::ostringstream m;
      m << "level " << j + 1 << " is not positive";
      note(r.upper_levels_positive, m.str());
    }
  }
  if (L >= 1 && lambda + mu >= 1.0 && cb.levels[L - 1] != 0.0)
    note(r.last_level_rule, "lambda + mu >= 1 but the last level is not zero");

  std::vector<double> grid(g0_grid.begin(), g0_grid.end());
  if (grid.empty()) {
    for (int k = 0; k <= 100; ++k) grid.push_back(0.1 * k);
  }
  for (std::size_t j = 0; j + 1 < L; ++j) {
    const double hi = cb.levels[j], lo = cb.levels[j + 1];
    if (!(hi > lo) || !(lo >= 0.0)) continue;
    const double asym = boundary_asymptote(hi, lo, lambda, mu);
    for (double g0 : grid) {
      // with a zero water level every boundary meets the origin
      if (g0 >= asym || !(lambda + mu * g0 > 0.0)) continue;
      const double b = boundary_g1(hi, lo, lambda, mu, g0);
      if (!(b > lambda + mu * g0)) {
        std::ostringstream m;
        m << "boundary " << j + 1 << "/" << j + 2 << " at g0 = " << g0 << " is not above the water line";
        note(r.boundaries_above_waterline, m.str());
        break;
      }
    }
  }
  return r;
}

}  // namespace qpower

#endif  // QPOWER_LLOYD_HPP
