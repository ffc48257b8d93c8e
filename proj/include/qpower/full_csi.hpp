#ifndef QPOWER_FULL_CSI_HPP
#define QPOWER_FULL_CSI_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qpower/error.hpp"
#include "qpower/fading.hpp"
#include "qpower/numeric.hpp"

namespace qpower {

/// Marks an interference cap that is not enforced.
inline constexpr double kUnconstrained = std::numeric_limits<double>::infinity();

/// Average transmit-power budget and per-band average interference caps, in
/// linear units. The power budget is averaged over the M bands.
struct ConstraintSet {
  double P_avg = 10.0;
  std::vector<double> Q_avg{kUnconstrained};

  std::size_t bands() const { return Q_avg.size(); }

  void validate() const {
    if (!(P_avg > 0.0) || std::isnan(P_avg)) throw ConfigError("P_avg must be positive");
    if (Q_avg.empty()) throw ConfigError("Q_avg needs one entry per band");
    for (double q : Q_avg) {
      if (!(q > 0.0)) throw ConfigError("every Q_avg entry must be positive");
    }
  }
};

struct DualVariables {
  double lambda = 0.0;
  std::vector<double> mu;
};

/// Which constraints are active on one band.
enum class ActiveCase { AipOnly, AtpOnly, Both };

inline const char* to_string(ActiveCase c) {
  switch (c) {
    case ActiveCase::AipOnly: return "AIP-only";
    case ActiveCase::AtpOnly: return "ATP-only";
    case ActiveCase::Both: return "both";
  }
  return "?";
}

/// Tolerances shared by the multiplier searches.
struct SolverTolerances {
  double tol_feas = 1e-4;  ///< relative constraint tolerance
  double tol_cs = 1e-3;    ///< complementary-slackness tolerance
};

struct FullCsiSolution {
  DualVariables duals;
  /// power[i][n]: power on band i for training sample n.
  std::vector<std::vector<double>> power;
  std::vector<ActiveCase> cases;
  double atp = 0.0;
  std::vector<double> aip;
  double capacity = 0.0;  ///< nats per channel use on the training set
  int evaluations = 0;

  std::size_t samples() const { return power.empty() ? 0 : power[0].size(); }
  double at(std::size_t n, std::size_t band) const { return power.at(band).at(n); }
};

/// Water-filling power for one band: (1/(lambda + mu g0) - 1/g1)^+.
inline double power_point(double g0, double g1, double lambda, double mu) {
  const double w = lambda + mu * g0;
  if (!(w > 0.0)) {
    if (lambda == 0.0 && mu == 0.0) throw UndefinedWaterLevel("water level undefined for lambda = mu = 0");
    // mu > 0 with g0 = 0 and lambda = 0: interference is free, power unbounded
    return g1 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  if (!(g1 > 0.0)) return 0.0;
  if (g1 <= w) return 0.0;
  return 1.0 / w - 1.0 / g1;
}

namespace detail {

struct BandMoments {
  double power = 0.0;
  double interference = 0.0;
};

inline BandMoments band_moments(const BandView& band, double lambda, double mu) {
  BandMoments m;
  const std::size_t n = band.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double p = power_point(band.g0[k], band.g1[k], lambda, mu);
    m.power += p;
    m.interference += band.g0[k] * p;
  }
  m.power /= static_cast<double>(n);
  m.interference /= static_cast<double>(n);
  return m;
}

inline MultiplierSearch hinted_search(double hint, const MultiplierSearch& base) {
  MultiplierSearch s = base;
  if (hint > 0.0 && std::isfinite(hint)) {
    s.lo = std::max(hint / 1.02, s.floor);
    s.hi = std::min(hint * 1.02, s.ceiling);
    s.expand = 4.0;
  }
  return s;
}

}  // namespace detail

/// Empirical E[g0 p] of the water-filling rule over one band.
inline double band_interference(const BandView& band, double lambda, double mu) {
  return detail::band_moments(band, lambda, mu).interference;
}

/// Empirical E[p] of the water-filling rule over one band.
inline double band_power(const BandView& band, double lambda, double mu) {
  return detail::band_moments(band, lambda, mu).power;
}

/// Interference multiplier mu > 0 with E[g0 p(lambda, mu)] = Q on the band.
///
/// Returns 0 when lambda > 0 and the cap already holds at mu = 0. The result
/// is the feasible end of the final bracket, so the achieved interference is
/// at most Q and within tol_feas * Q of it unless the sample set makes the
/// constraint function jump.
inline double solve_interference_multiplier(const BandView& band, double Q, double lambda,
                                            const SolverTolerances& tol = {},
                                            double hint = 0.0, int* evaluations = nullptr) {
  if (band.size() == 0) throw ConfigError("empty sample list");
  if (!(Q > 0.0)) throw ConfigError("interference cap must be positive");
  if (lambda > 0.0 && band_interference(band, lambda, 0.0) <= Q) return 0.0;
  MultiplierSearch opts = detail::hinted_search(hint, {});
  opts.abs_f_tol = tol.tol_feas * Q;
  MultiplierRoot root;
  try {
    root = search_decreasing_root(
        [&](double mu) { return band_interference(band, lambda, mu) - Q; }, opts);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(std::string("interference cap unreachable: ") + e.what());
  }
  if (evaluations) *evaluations += root.evaluations;
  return root.x;
}

/// Optimal power allocation with perfect channel knowledge.
///
/// First tries lambda = 0 with every interference constraint tight; if the
/// resulting average power fits the budget this is optimal. Otherwise the
/// power multiplier is searched on the ATP equality, and each band keeps
/// mu_i = 0 whenever its interference cap holds without it.
inline FullCsiSolution allocate_full_csi(const ConstraintSet& constraints, const TrainingSet& training,
                                         const SolverTolerances& tol = {}) {
  constraints.validate();
  const std::size_t M = training.bands();
  if (training.size() == 0) throw ConfigError("empty training set");
  if (constraints.bands() != M) throw DimensionMismatch("Q_avg length differs from the band count");

  FullCsiSolution sol;
  sol.duals.mu.assign(M, 0.0);
  std::vector<double> hint(M, 0.0);

  auto average_power = [&](double lambda, std::vector<double>& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < M; ++i) s += band_power(training.band(i), lambda, mu[i]);
    return s / static_cast<double>(M);
  };

  bool all_capped = true;
  for (double q : constraints.Q_avg) all_capped = all_capped && std::isfinite(q);

  bool done = false;
  if (all_capped) {
    std::vector<double> mu(M);
    for (std::size_t i = 0; i < M; ++i) {
      mu[i] = solve_interference_multiplier(training.band(i), constraints.Q_avg[i], 0.0, tol, 0.0,
                                            &sol.evaluations);
    }
    if (average_power(0.0, mu) <= constraints.P_avg) {
      sol.duals.lambda = 0.0;
      sol.duals.mu = mu;
      done = true;
    }
    hint = mu;
  }

  if (!done) {
    std::vector<double> mu(M, 0.0);
    auto solve_mu = [&](double lambda) {
      for (std::size_t i = 0; i < M; ++i) {
        const double q = constraints.Q_avg[i];
        if (!std::isfinite(q)) {
          mu[i] = 0.0;
          continue;
        }
        mu[i] = solve_interference_multiplier(training.band(i), q, lambda, tol, hint[i],
                                              &sol.evaluations);
        if (mu[i] > 0.0) hint[i] = mu[i];
      }
    };
    MultiplierSearch opts;
    opts.abs_f_tol = tol.tol_feas * constraints.P_avg;
    auto root = search_decreasing_root(
        [&](double lambda) {
          solve_mu(lambda);
          return average_power(lambda, mu) - constraints.P_avg;
        },
        opts);
    sol.evaluations += root.evaluations;
    sol.duals.lambda = root.x;
    solve_mu(root.x);
    sol.duals.mu = mu;
  }

  sol.power.assign(M, {});
  sol.aip.assign(M, 0.0);
  sol.cases.assign(M, ActiveCase::Both);
  double atp = 0.0;
  double cap = 0.0;
  const double n = static_cast<double>(training.size());
  for (std::size_t i = 0; i < M; ++i) {
    const BandView band = training.band(i);
    auto& p = sol.power[i];
    p.resize(band.size());
    double pw = 0.0, in = 0.0, c = 0.0;
    for (std::size_t k = 0; k < band.size(); ++k) {
      p[k] = power_point(band.g0[k], band.g1[k], sol.duals.lambda, sol.duals.mu[i]);
      pw += p[k];
      in += band.g0[k] * p[k];
      c += std::log1p(band.g1[k] * p[k]);
    }
    atp += pw / n;
    sol.aip[i] = in / n;
    cap += c / n;
    if (sol.duals.lambda == 0.0) sol.cases[i] = ActiveCase::AipOnly;
    else if (sol.duals.mu[i] == 0.0) sol.cases[i] = ActiveCase::AtpOnly;
  }
  sol.atp = atp / static_cast<double>(M);
  sol.capacity = cap / static_cast<double>(M);
  return sol;
}

}  // namespace qpower

#endif  // QPOWER_FULL_CSI_HPP
