#ifndef QPOWER_NOISY_FEEDBACK_HPP
#define QPOWER_NOISY_FEEDBACK_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include "qpower/error.hpp"
#include "qpower/fading.hpp"
#include "qpower/lloyd.hpp"

namespace qpower {

/// B independent uses of a binary symmetric channel carrying the index.
/// rho(k, j) is the probability of receiving index k when j was sent.
class FeedbackChannel {
 public:
  FeedbackChannel() : FeedbackChannel(1, 0.0) {}

  FeedbackChannel(int bits, double q_f) : bits_(bits), q_f_(q_f) {
    if (bits < 1 || bits > 16) throw ConfigError("feedback bits B must be in [1, 16]");
    if (!(q_f >= 0.0 && q_f <= 0.5)) {
      std::ostringstream msg;
      msg << "crossover probability q_f must lie in [0, 0.5], got " << q_f;
      throw ConfigError(msg.str());
    }
    const std::size_t L = size();
    rho_.resize(L * L);
    for (std::size_t k = 0; k < L; ++k) {
      for (std::size_t j = 0; j < L; ++j) {
        const int d = std::popcount(static_cast<unsigned>(k ^ j));
        rho_[k * L + j] = std::pow(q_f, d) * std::pow(1.0 - q_f, bits - d);
      }
    }
  }

  int bits() const { return bits_; }
  double crossover() const { return q_f_; }
  std::size_t size() const { return std::size_t{1} << bits_; }
  bool noiseless() const { return q_f_ == 0.0; }

  double rho(std::size_t k, std::size_t j) const { return rho_[k * size() + j]; }
  /// Row-major L x L matrix.
  const std::vector<double>& matrix() const { return rho_; }

 private:
  int bits_;
  double q_f_;
  std::vector<double> rho_;
};

inline FeedbackChannel transition_matrix(int bits, double q_f) { return FeedbackChannel(bits, q_f); }

namespace detail {

inline void require_channel_size(const PowerCodebook& cb, const FeedbackChannel& ch) {
  if (cb.size() != ch.size()) throw DimensionMismatch("codebook size differs from the channel dimension");
}

}  // namespace detail

/// Assignment under index errors: sample goes to the index j maximizing
/// sum_k rho(k, j) score(p_k), ties to the lowest index.
inline Partition gla2_assign(const BandView& band, const PowerCodebook& codebook,
                             const FeedbackChannel& channel, double lambda, double mu,
                             double* mean_score = nullptr) {
  detail::require_channel_size(codebook, channel);
  const std::size_t N = band.size();
  const std::size_t L = codebook.size();
  std::vector<double> s(L);
  std::vector<std::uint32_t> labels(N);
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const double w = lambda + mu * band.g0[n];
    for (std::size_t k = 0; k < L; ++k) s[k] = std::log1p(band.g1[n] * codebook.levels[k]) - w * codebook.levels[k];
    std::uint32_t best = 0;
    double best_t = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      double t = 0.0;
      for (std::size_t k = 0; k < L; ++k) {
        const double r = channel.rho(k, j);
        if (r != 0.0) t += r * s[k];
      }
      if (j == 0 || t > best_t) {
        best_t = t;
        best = static_cast<std::uint32_t>(j);
      }
    }
    labels[n] = best;
    total += best_t;
  }
  if (mean_score) *mean_score = total / static_cast<double>(N);
  return Partition::from_labels(std::move(labels), L);
}

/// Objective of the noisy design: E[sum_k rho(k, label) score(p_k)].
inline double gla2_objective(const BandView& band, const Partition& partition, const PowerCodebook& codebook,
                             const FeedbackChannel& channel, double lambda, double mu) {
  detail::require_channel_size(codebook, channel);
  if (partition.labels.size() != band.size()) throw DimensionMismatch("partition and training set sizes differ");
  const std::size_t L = codebook.size();
  double total = 0.0;
  for (std::size_t n = 0; n < band.size(); ++n) {
    const double w = lambda + mu * band.g0[n];
    const std::size_t j = partition.labels[n];
    double t = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
      const double r = channel.rho(k, j);
      if (r != 0.0) t += r * (std::log1p(band.g1[n] * codebook.levels[k]) - w * codebook.levels[k]);
    }
    total += t;
  }
  return total / static_cast<double>(band.size());
}

/// Level k of the noisy design: root of
/// sum_j rho(k, j) sum_{n in R_j} [g1/(1 + g1 p) - (lambda + mu g0)] = 0, clamped at 0.
inline double gla2_centroid(const BandView& band, const Partition& partition, const FeedbackChannel& channel,
                            std::size_t k, double lambda, double mu, double tol_root = 1e-10) {
  if (partition.regions() != channel.size()) throw DimensionMismatch("partition and channel sizes differ");
  if (k >= channel.size()) throw DimensionMismatch("level index out of range");
  detail::RegionIndex index(partition);
  std::vector<double> weights(channel.matrix().begin() + static_cast<std::ptrdiff_t>(k * channel.size()),
                              channel.matrix().begin() + static_cast<std::ptrdiff_t>((k + 1) * channel.size()));
  return detail::weighted_centroid(band, index, weights, lambda, mu, tol_root);
}

namespace detail {

inline void summarize_noisy(const BandView& band, const PowerCodebook& cb, const Partition& part,
                            const FeedbackChannel& ch, GlaReport& rep) {
  const std::size_t L = cb.size();
  std::vector<double> log_terms(L);
  double c = 0.0, pw = 0.0, in = 0.0;
  for (std::size_t n = 0; n < band.size(); ++n) {
    const std::size_t j = part.labels[n];
    double cn = 0.0, pn = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
      const double r = ch.rho(k, j);
      if (r == 0.0) continue;
      cn += r * std::log1p(band.g1[n] * cb.levels[k]);
      pn += r * cb.levels[k];
    }
    c += cn;
    pw += pn;
    in += band.g0[n] * pn;
  }
  const double N = static_cast<double>(band.size());
  rep.capacity = c / N;
  rep.power = pw / N;
  rep.interference = in / N;
  rep.empty_levels = 0;
  for (auto k : part.counts) rep.empty_levels += (k == 0);
}

}  // namespace detail

/// Modified Lloyd algorithm for a noisy feedback channel, at fixed
/// multipliers. Levels keep their positions between iterations because
/// the position is the transmitted index; only a noiseless channel, where
/// the order carries no information, sorts them.
inline GlaResult run_gla2(const BandView& band, std::size_t L, const FeedbackChannel& channel, double lambda,
                          double mu, const PowerCodebook& init, const GlaOptions& opts = {}) {
  if (L != channel.size()) throw DimensionMismatch("L differs from the channel dimension");
  if (init.size() != L) throw DimensionMismatch("initial codebook size differs from L");
  if (band.size() == 0) throw ConfigError("empty training set");
  init.validate();
  const std::vector<double>& rho = channel.matrix();
  GlaResult res = lloyd_iterate(
      band, init, opts,
      [&](const PowerCodebook& cb, const Partition*, double& value) {
        return gla2_assign(band, cb, channel, lambda, mu, &value);
      },
      [&](const Partition& part, PowerCodebook& cb) {
        return detail::centroid_step(band, part, cb, lambda, mu, opts.tol_root, &rho, channel.noiseless());
      });
  detail::summarize_noisy(band, res.codebook, res.partition, channel, res.report);
  return res;
}

inline GlaResult run_gla2(const BandView& band, std::size_t L, const FeedbackChannel& channel, double lambda,
                          double mu, const GlaOptions& opts = {}) {
  return run_gla2(band, L, channel, lambda, mu, quantile_init(band, L, lambda, mu), opts);
}

/// Codebook reordered so that level m is sent as index perm[m].
inline PowerCodebook apply_index_assignment(const PowerCodebook& cb, std::span<const std::size_t> perm) {
  if (perm.size() != cb.size()) throw DimensionMismatch("permutation size differs from the codebook");
  PowerCodebook out(std::vector<double>(cb.size()));
  for (std::size_t m = 0; m < cb.size(); ++m) out.levels.at(perm[m]) = cb.levels[m];
  return out;
}

/// Exhaustive search over index assignments for a designed codebook.
///
/// Regions are fixed by the noisy assignment of the given codebook. For a
/// permutation pi (level m sent as index pi(m)) the objective is
///   sum_m sum_m' rho(pi(m'), pi(m)) A[m][m'],  A[m][m'] = sum_{n in R_m} score_n(p_m').
/// Permutations are visited in lexicographic order and only a strictly
/// better one replaces the incumbent, so ties resolve to the earliest.
inline std::vector<std::size_t> exhaustive_index_search(const PowerCodebook& codebook,
                                                        const FeedbackChannel& channel,
                                                        const BandView& band, double lambda, double mu,
                                                        double* best_objective = nullptr) {
  detail::require_channel_size(codebook, channel);
  if (channel.bits() > 3) throw UnsupportedOperation("exhaustive index search supports B <= 3 only");
  const std::size_t L = codebook.size();
  const Partition part = gla2_assign(band, codebook, channel, lambda, mu);
  std::vector<double> A(L * L, 0.0);
  for (std::size_t n = 0; n < band.size(); ++n) {
    const std::size_t m = part.labels[n];
    const double w = lambda + mu * band.g0[n];
    for (std::size_t q = 0; q < L; ++q)
      A[m * L + q] += std::log1p(band.g1[n] * codebook.levels[q]) - w * codebook.levels[q];
  }
  std::vector<std::size_t> perm(L);
  std::iota(perm.begin(), perm.end(), 0);
  auto objective = [&](const std::vector<std::size_t>& pi) {
    double t = 0.0;
    for (std::size_t m = 0; m < L; ++m)
      for (std::size_t q = 0; q < L; ++q) t += channel.rho(pi[q], pi[m]) * A[m * L + q];
    return t / static_cast<double>(band.size());
  };
  std::vector<std::size_t> best = perm;
  double best_value = objective(perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double v = objective(perm);
    if (v > best_value) {
      best_value = v;
      best = perm;
    }
  }
  if (best_objective) *best_objective = best_value;
  return best;
}

}  // namespace qpower

#endif  // QPOWER_NOISY_FEEDBACK_HPP
