#ifndef QPOWER_DUAL_OUTER_HPP
#define QPOWER_DUAL_OUTER_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "qpower/aqpa.hpp"
#include "qpower/error.hpp"
#include "qpower/fading.hpp"
#include "qpower/full_csi.hpp"
#include "qpower/lloyd.hpp"
#include "qpower/noisy_feedback.hpp"
#include "qpower/numeric.hpp"

namespace qpower {

/// Codebook of one band designed at fixed multipliers, with its training
/// statistics in report.{capacity, power, interference}.
struct BandDesign {
  PowerCodebook codebook;
  Partition partition;
  GlaReport report;
};

/// Noise-free design by the modified Lloyd algorithm. The first design of a
/// band starts from quantile_init (restart 0) or random_init (later
/// restarts); subsequent designs start from the previous codebook.
struct GlaDesigner {
  GlaOptions options{};
  int restart = 0;
  std::uint64_t seed = 1;

  BandDesign operator()(std::size_t band, const BandView& view, std::size_t L, double lambda, double mu,
                        const BandDesign* warm) const {
    PowerCodebook init = warm && warm->codebook.size() == L ? warm->codebook
                         : restart == 0 ? quantile_init(view, L, lambda, mu)
                                        : random_init(view, L, lambda, mu, seed + 7919ULL * restart + band);
    GlaResult r = run_gla(view, L, lambda, mu, init, options);
    return {std::move(r.codebook), std::move(r.partition), std::move(r.report)};
  }
};

/// Design under a noisy feedback channel (modified GLA-2); statistics are
/// averaged over the received index.
struct Gla2Designer {
  FeedbackChannel channel;
  GlaOptions options{};
  int restart = 0;
  std::uint64_t seed = 1;

  BandDesign operator()(std::size_t band, const BandView& view, std::size_t L, double lambda, double mu,
                        const BandDesign* warm) const {
    PowerCodebook init = warm && warm->codebook.size() == L ? warm->codebook
                         : restart == 0 ? quantile_init(view, L, lambda, mu)
                                        : random_init(view, L, lambda, mu, seed + 7919ULL * restart + band);
    GlaResult r = run_gla2(view, L, channel, lambda, mu, init, options);
    return {std::move(r.codebook), std::move(r.partition), std::move(r.report)};
  }
};

/// Codebook from the channel statistics (AQPA); the training samples are
/// only used to partition and to measure the design.
struct AqpaDesigner {
  std::vector<ExponentialBand> bands;
  AqpaOptions options{};

  BandDesign operator()(std::size_t band, const BandView& view, std::size_t L, double lambda, double mu,
                        const BandDesign* warm) const {
    const ExponentialBand& stats = bands.size() == 1 ? bands[0] : bands.at(band);
    AqpaResult a = aqpa_codebook(lambda, mu, L, stats, options, warm ? &warm->codebook : nullptr);
    BandDesign d;
    d.codebook = std::move(a.codebook);
    double value = 0.0;
    d.partition = nnc_assign(view, d.codebook, lambda, mu, nullptr, &value);
    d.report.lagrangian = value;
    d.report.lagrangian_trace = {value};
    d.report.iterations = a.shooting_steps;
    d.report.converged = true;
    detail::summarize(view, d.codebook, d.partition, d.report);
    return d;
  }
};

struct OuterOptions {
  SolverTolerances tol{};
  /// Limit on power-multiplier evaluations in step 2.
  int max_outer = 50;
  /// Limit on interference-multiplier evaluations per band and power multiplier.
  int max_inner = 60;
  double rel_x_tol = 1e-6;
  /// Optional starting points for the multiplier searches, e.g. the full-CSI
  /// multipliers.
  std::optional<double> lambda_hint;
  std::vector<double> mu_prime_hint;
};

/// Result of a quantized design over M bands.
struct QuantizedSolution {
  std::vector<BandDesign> bands;
  double lambda = 0.0;
  std::vector<double> mu_prime;  ///< per-band interference multipliers
  std::vector<double> mu;        ///< mu_prime / M
  double atp = 0.0;              ///< (1/M) sum of per-band average powers
  std::vector<double> aip;
  double capacity = 0.0;         ///< (1/M) sum of per-band E[log(1 + g1 p)], training set
  bool step1_exit = false;
  int outer_evaluations = 0;
  int band_designs = 0;
  long long lloyd_iterations = 0;
  std::size_t monotonicity_violations = 0;
  std::string status = "ok";

  std::size_t levels() const { return bands.empty() ? 0 : bands[0].codebook.size(); }
};

namespace detail {

template <class Designer>
class Algorithm1 {
 public:
  Algorithm1(const ConstraintSet& c, const TrainingSet& t, std::size_t L, Designer& d, const OuterOptions& o)
      : c_(c), t_(t), L_(L), design_(d), o_(o), M_(t.bands()), last_(M_), hint_(M_, 0.0) {
    for (std::size_t i = 0; i < M_ && i < o.mu_prime_hint.size(); ++i) hint_[i] = o.mu_prime_hint[i];
  }

  QuantizedSolution run() {
    QuantizedSolution sol;
    bool all_capped = true;
    for (double q : c_.Q_avg) all_capped = all_capped && std::isfinite(q);

    if (all_capped) {
      std::vector<BandDesign> designs(M_);
      std::vector<double> mu(M_);
      for (std::size_t i = 0; i < M_; ++i) mu[i] = solve_band(i, 0.0, designs[i], /*allow_zero=*/false);
      if (average_power(designs) <= c_.P_avg) {
        sol.step1_exit = true;
        return finish(std::move(sol), 0.0, std::move(mu), std::move(designs));
      }
    }

    std::vector<BandDesign> best(M_);
    std::vector<double> best_mu(M_, 0.0);
    std::vector<BandDesign> designs(M_);
    std::vector<double> mu(M_);
    MultiplierSearch opts = hinted_search(o_.lambda_hint.value_or(0.0), {});
    opts.abs_f_tol = o_.tol.tol_feas * c_.P_avg;
    opts.rel_x_tol = o_.rel_x_tol;
    opts.max_evaluations = o_.max_outer;
    MultiplierRoot root = search_decreasing_root(
        [&](double lambda) {
          for (std::size_t i = 0; i < M_; ++i) mu[i] = solve_band(i, lambda, designs[i], true);
          const double r = average_power(designs) - c_.P_avg;
          if (r <= 0.0) {
            best = designs;
            best_mu = mu;
          }
          return r;
        },
        opts);
    sol.outer_evaluations = root.evaluations;
    sol.monotonicity_violations += root.monotonicity_violations;
    if (root.exhausted) sol.status = "max_outer";
    return finish(std::move(sol), root.x, std::move(best_mu), std::move(best));
  }

 private:
  double average_power(const std::vector<BandDesign>& d) const {
    double s = 0.0;
    for (const auto& b : d) s += b.report.power;
    return s / static_cast<double>(M_);
  }

  /// `remember` makes the design the warm start of the band's next design.
  BandDesign design(std::size_t i, double lambda, double mu, bool remember = true) {
    BandDesign d = design_(i, t_.band(i), L_, lambda, mu, last_[i] ? &*last_[i] : nullptr);
    ++designs_;
    iterations_ += d.report.iterations;
    if (remember) last_[i] = d;
    return d;
  }

  /// Interference multiplier of band i at the given lambda; `out` receives
  /// the feasible design at the returned value.
  double solve_band(std::size_t i, double lambda, BandDesign& out, bool allow_zero) {
    const double Q = c_.Q_avg[i];
    if (allow_zero) {
      // a rejected trial at mu' = 0 is far from the solution, so it does not
      // replace the warm start
      BandDesign d = design(i, lambda, 0.0, false);
      if (!std::isfinite(Q) || d.report.interference <= Q) {
        last_[i] = d;
        out = std::move(d);
        return 0.0;
      }
    }
    MultiplierSearch opts = hinted_search(hint_[i], {});
    opts.abs_f_tol = o_.tol.tol_feas * Q;
    opts.rel_x_tol = o_.rel_x_tol;
    opts.max_evaluations = o_.max_inner;
    MultiplierRoot root;
    try {
      root = search_decreasing_root(
          [&](double mu) {
            BandDesign d = design(i, lambda, mu);
            const double r = d.report.interference - Q;
            if (r <= 0.0) out = std::move(d);
            return r;
          },
          opts);
    } catch (const InfeasibleError& e) {
      std::ostringstream msg;
      msg << "band " << i + 1 << ": " << e.what();
      throw InfeasibleError(msg.str());
    }
    violations_ += root.monotonicity_violations;
    hint_[i] = root.x;
    return root.x;
  }

  QuantizedSolution finish(QuantizedSolution sol, double lambda, std::vector<double> mu_prime,
                           std::vector<BandDesign> designs) {
    sol.lambda = lambda;
    sol.mu_prime = std::move(mu_prime);
    sol.mu.resize(M_);
    for (std::size_t i = 0; i < M_; ++i) sol.mu[i] = sol.mu_prime[i] / static_cast<double>(M_);
    sol.bands = std::move(designs);
    sol.aip.resize(M_);
    double atp = 0.0, cap = 0.0;
    for (std::size_t i = 0; i < M_; ++i) {
      atp += sol.bands[i].report.power;
      cap += sol.bands[i].report.capacity;
      sol.aip[i] = sol.bands[i].report.interference;
    }
    sol.atp = atp / static_cast<double>(M_);
    sol.capacity = cap / static_cast<double>(M_);
    sol.band_designs = designs_;
    sol.lloyd_iterations = iterations_;
    sol.monotonicity_violations += violations_;
    return sol;
  }

  const ConstraintSet& c_;
  const TrainingSet& t_;
  std::size_t L_;
  Designer& design_;
  const OuterOptions& o_;
  std::size_t M_;
  std::vector<std::optional<BandDesign>> last_;
  std::vector<double> hint_;
  int designs_ = 0;
  long long iterations_ = 0;
  std::size_t violations_ = 0;
};

}  // namespace detail

/// Wideband dual decomposition. Step 1 sets lambda = 0 and makes every
/// interference constraint tight; if the average power then fits the
/// budget the design is optimal. Otherwise step 2 searches lambda > 0 on the
/// power equality, and at each lambda every band keeps mu' = 0 when its
/// interference cap holds without it and solves its equality otherwise.
///
/// Every search returns the feasible end of its bracket, so the reported
/// design satisfies all constraints on the training set.
template <class Designer>
QuantizedSolution algorithm1_wideband(const ConstraintSet& constraints, const TrainingSet& training, std::size_t L,
                                      Designer&& designer, const OuterOptions& options = {}) {
  constraints.validate();
  if (constraints.bands() != training.bands()) throw DimensionMismatch("Q_avg length differs from the band count");
  if (L == 0) throw ConfigError("L must be at least 1");
  detail::Algorithm1<std::remove_reference_t<Designer>> alg(constraints, training, L, designer, options);
  return alg.run();
}

inline QuantizedSolution algorithm1_wideband(const ConstraintSet& constraints, const TrainingSet& training,
                                             std::size_t L, const OuterOptions& options = {}) {
  GlaDesigner d;
  return algorithm1_wideband(constraints, training, L, d, options);
}

/// Single-band design; the wideband procedure with M = 1.
template <class Designer>
QuantizedSolution solve_narrowband(const ConstraintSet& constraints, const TrainingSet& training, std::size_t L,
                                   Designer&& designer, const OuterOptions& options = {}) {
  if (training.bands() != 1) throw DimensionMismatch("narrowband design needs a single-band training set");
  return algorithm1_wideband(constraints, training, L, std::forward<Designer>(designer), options);
}

inline QuantizedSolution solve_narrowband(const ConstraintSet& constraints, const TrainingSet& training,
                                          std::size_t L, const OuterOptions& options = {}) {
  GlaDesigner d;
  return solve_narrowband(constraints, training, L, d, options);
}

/// Search hints taken from the full-CSI solution, whose multipliers enter
/// the water level directly and so already have the per-band mu' scale.
inline OuterOptions hints_from(const FullCsiSolution& full, OuterOptions base = {}) {
  base.lambda_hint = full.duals.lambda > 0.0 ? std::optional<double>(full.duals.lambda) : std::nullopt;
  base.mu_prime_hint = full.duals.mu;
  return base;
}

/// Runs `solve(restart)` for restart = 0 .. n-1 and keeps the solution with
/// the largest training capacity; ties keep the earlier restart.
template <class Solve>
QuantizedSolution best_of_restarts(int n, Solve&& solve) {
  if (n < 1) throw ConfigError("restarts must be at least 1");
  QuantizedSolution best = solve(0);
  for (int r = 1; r < n; ++r) {
    QuantizedSolution s = solve(r);
    if (s.capacity > best.capacity) best = std::move(s);
  }
  return best;
}

}  // namespace qpower

#endif  // QPOWER_DUAL_OUTER_HPP
