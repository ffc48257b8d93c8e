#ifndef QPOWER_EVAL_HPP
#define QPOWER_EVAL_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "qpower/dual_outer.hpp"
#include "qpower/error.hpp"
#include "qpower/fading.hpp"
#include "qpower/full_csi.hpp"
#include "qpower/lloyd.hpp"
#include "qpower/noisy_feedback.hpp"

namespace qpower {

/// Monte Carlo estimate in nats per channel use.
struct CapacityEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

struct ConstraintEstimate {
  double atp = 0.0;
  std::vector<double> aip;
};

// A power rule maps the channel state of one band to the transmitted power.
// visit(band, g0, g1, f) calls f(weight, power) once per possible power,
// with weights summing to one; deterministic rules call it once.

/// Full-CSI water filling at given multipliers.
struct FullCsiRule {
  DualVariables duals;

  std::size_t bands() const { return duals.mu.size(); }

  template <class F>
  void visit(std::size_t band, double g0, double g1, F&& f) const {
    f(1.0, power_point(g0, g1, duals.lambda, duals.mu[band]));
  }
};

/// Quantized allocation: the band manager picks the index by the
/// nearest-neighbour rule and the index arrives without errors.
struct QuantizedRule {
  std::vector<PowerCodebook> codebooks;
  double lambda = 0.0;
  std::vector<double> mu_prime;

  static QuantizedRule from(const QuantizedSolution& s) {
    QuantizedRule r;
    for (const auto& b : s.bands) r.codebooks.push_back(b.codebook);
    r.lambda = s.lambda;
    r.mu_prime = s.mu_prime;
    return r;
  }

  std::size_t bands() const { return codebooks.size(); }

  template <class F>
  void visit(std::size_t band, double g0, double g1, F&& f) const {
    const auto& cb = codebooks[band];
    const double w = lambda + mu_prime[band] * g0;
    std::size_t best = 0;
    double s_best = 0.0;
    for (std::size_t j = 0; j < cb.size(); ++j) {
      const double s = std::log1p(g1 * cb.levels[j]) - w * cb.levels[j];
      if (j == 0 || s > s_best) {
        s_best = s;
        best = j;
      }
    }
    f(1.0, cb.levels[best]);
  }
};

/// Quantized allocation over a noisy feedback channel. The received index
/// is marginalized with the transition probabilities instead of sampled.
struct NoisyRule {
  std::vector<PowerCodebook> codebooks;
  FeedbackChannel channel;
  double lambda = 0.0;
  std::vector<double> mu_prime;

  static NoisyRule from(const QuantizedSolution& s, const FeedbackChannel& ch) {
    NoisyRule r;
    for (const auto& b : s.bands) r.codebooks.push_back(b.codebook);
    r.channel = ch;
    r.lambda = s.lambda;
    r.mu_prime = s.mu_prime;
    return r;
  }

  std::size_t bands() const { return codebooks.size(); }

  template <class F>
  void visit(std::size_t band, double g0, double g1, F&& f) const {
    const auto& cb = codebooks[band];
    const std::size_t L = cb.size();
    const double w = lambda + mu_prime[band] * g0;
    std::size_t best = 0;
    double t_best = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      double t = 0.0;
      for (std::size_t k = 0; k < L; ++k) {
        const double r = channel.rho(k, j);
        if (r != 0.0) t += r * (std::log1p(g1 * cb.levels[k]) - w * cb.levels[k]);
      }
      if (j == 0 || t > t_best) {
        t_best = t;
        best = j;
      }
    }
    for (std::size_t k = 0; k < L; ++k) {
      const double r = channel.rho(k, best);
      if (r != 0.0) f(r, cb.levels[k]);
    }
  }
};

namespace detail {

template <class Rule>
void require_rule_fits(const TrainingSet& samples, const Rule& rule) {
  if (samples.size() == 0) throw ConfigError("empty evaluation set");
  if (rule.bands() != samples.bands()) throw DimensionMismatch("power rule and sample set have different band counts");
}

}  // namespace detail

/// C = (1/M) sum_i E[log(1 + g1_i p_i)]. The standard error treats the
/// per-sample band averages as independent draws.
template <class Rule>
CapacityEstimate estimate_capacity(const TrainingSet& samples, const Rule& rule) {
  detail::require_rule_fits(samples, rule);
  const std::size_t N = samples.size();
  const std::size_t M = samples.bands();
  std::vector<double> x(N, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    const BandView b = samples.band(i);
    for (std::size_t n = 0; n < N; ++n) {
      double c = 0.0;
      rule.visit(i, b.g0[n], b.g1[n], [&](double w, double p) { c += w * std::log1p(b.g1[n] * p); });
      x[n] += c;
    }
  }
  double mean = 0.0;
  for (double& v : x) {
    v /= static_cast<double>(M);
    mean += v;
  }
  mean /= static_cast<double>(N);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  CapacityEstimate e;
  e.value = mean;
  e.n = N;
  e.se = N > 1 ? std::sqrt(ss / static_cast<double>(N - 1) / static_cast<double>(N)) : 0.0;
  return e;
}

/// ATP = (1/M) sum_i E[p_i] and AIP_i = E[g0_i p_i].
template <class Rule>
ConstraintEstimate estimate_constraints(const TrainingSet& samples, const Rule& rule) {
  detail::require_rule_fits(samples, rule);
  const std::size_t N = samples.size();
  const std::size_t M = samples.bands();
  ConstraintEstimate e;
  e.aip.assign(M, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    const BandView b = samples.band(i);
    double pw = 0.0, in = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      double p = 0.0;
      rule.visit(i, b.g0[n], b.g1[n], [&](double w, double q) { p += w * q; });
      pw += p;
      in += b.g0[n] * p;
    }
    e.atp += pw / static_cast<double>(N);
    e.aip[i] = in / static_cast<double>(N);
  }
  e.atp /= static_cast<double>(M);
  return e;
}

/// 100 (reference - candidate) / reference.
inline double capacity_loss_pct(const CapacityEstimate& reference, const CapacityEstimate& candidate) {
  if (reference.value == 0.0) throw UndefinedPercentage("capacity loss is undefined for a zero reference");
  return 100.0 * (reference.value - candidate.value) / reference.value;
}

inline double capacity_loss_pct(double reference, double candidate) {
  return capacity_loss_pct(CapacityEstimate{reference, 0.0, 0}, CapacityEstimate{candidate, 0.0, 0});
}

}  // namespace qpower

#endif  // QPOWER_EVAL_HPP
