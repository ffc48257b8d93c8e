#ifndef QPOWER_FADING_HPP
#define QPOWER_FADING_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qpower/error.hpp"

namespace qpower {

/// Power-gain distribution of one channel (one role on one band).
class FadingModel {
 public:
  enum class Kind { Exponential, Deterministic };

  /// Default is Rayleigh fading with unit mean power gain.
  FadingModel() = default;

  static FadingModel exponential(double mean) {
    if (!(mean > 0.0) || !std::isfinite(mean)) {
      std::ostringstream msg;
      msg << "exponential fading mean must be positive and finite, got " << mean;
      throw ConfigError(msg.str());
    }
    FadingModel m;
    m.kind_ = Kind::Exponential;
    m.mean_ = mean;
    return m;
  }

  /// Sample n takes values[n % values.size()].
  static FadingModel deterministic(std::vector<double> values) {
    if (values.empty()) throw ConfigError("deterministic fading needs at least one value");
    for (double v : values) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ConfigError("deterministic fading values must be finite and non-negative");
    }
    FadingModel m;
    m.kind_ = Kind::Deterministic;
    m.values_ = std::move(values);
    return m;
  }

  Kind kind() const { return kind_; }
  bool has_density() const { return kind_ == Kind::Exponential; }

  double mean() const {
    if (kind_ == Kind::Exponential) return mean_;
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

  const std::vector<double>& values() const { return values_; }

  /// Maps a uniform variate in [0, 1) to a gain (inverse CDF) or picks the
  /// n-th deterministic value.
  double draw(double uniform, std::uint64_t n) const {
    if (kind_ == Kind::Exponential) return -mean_ * std::log1p(-uniform);
    return values_[n % values_.size()];
  }

 private:
  Kind kind_ = Kind::Exponential;
  double mean_ = 1.0;
  std::vector<double> values_;
};

/// Probability density of an exponential model at g >= 0.
inline double pdf_eval(const FadingModel& model, double g) {
  if (!model.has_density())
    throw UnsupportedOperation("density is undefined for a deterministic fading model");
  if (g < 0.0) return 0.0;
  return std::exp(-g / model.mean()) / model.mean();
}

/// Models of the two channels seen on one band.
struct BandModels {
  FadingModel g0;  ///< secondary transmitter to primary receiver
  FadingModel g1;  ///< secondary transmitter to secondary receiver
};

inline std::vector<BandModels> uniform_models(std::size_t bands, const BandModels& m = {}) {
  return std::vector<BandModels>(bands, m);
}

/// One realization of the vector channel across M bands.
struct ChannelSample {
  std::vector<double> g0;
  std::vector<double> g1;
};

/// Non-owning view of one band of a training set.
struct BandView {
  std::span<const double> g0;
  std::span<const double> g1;

  std::size_t size() const { return g1.size(); }
};

/// Counter-based generator used for all Monte Carlo draws.
///
/// Every (seed, band, role) triple gets its own stream key; the n-th variate
/// of a stream is splitmix64(key + (n + 1) * golden) mapped to 53 bits. Draws
/// therefore depend only on their coordinates, not on generation order, and
/// are identical on every platform with IEEE doubles.
namespace rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t band, std::uint64_t role) {
  return splitmix64(seed ^ splitmix64((2 * band + role + 1) * kGolden));
}

/// Uniform variate in [0, 1).
constexpr double uniform(std::uint64_t key, std::uint64_t n) {
  return static_cast<double>(splitmix64(key + (n + 1) * kGolden) >> 11) * 0x1.0p-53;
}

}  // namespace rng

/// N channel realizations over M bands, stored band-major for the solvers.
class TrainingSet {
 public:
  TrainingSet() = default;

  TrainingSet(std::vector<std::vector<double>> g0, std::vector<std::vector<double>> g1,
              std::uint64_t seed = 0)
      : g0_(std::move(g0)), g1_(std::move(g1)), seed_(seed) {
    if (g0_.size() != g1_.size() || g0_.empty())
      throw DimensionMismatch("training set needs the same positive number of g0 and g1 bands");
    for (std::size_t i = 0; i < g0_.size(); ++i) {
      if (g0_[i].size() != g1_[0].size() || g1_[i].size() != g1_[0].size())
        throw DimensionMismatch("all bands of a training set must hold the same sample count");
    }
    if (g1_[0].empty()) throw ConfigError("training set must hold at least one sample");
  }

  std::size_t bands() const { return g1_.size(); }
  std::size_t size() const { return g1_.empty() ? 0 : g1_[0].size(); }
  std::uint64_t seed() const { return seed_; }

  BandView band(std::size_t i) const { return {g0_.at(i), g1_.at(i)}; }

  ChannelSample sample(std::size_t n) const {
    ChannelSample s;
    for (std::size_t i = 0; i < bands(); ++i) {
      s.g0.push_back(g0_[i].at(n));
      s.g1.push_back(g1_[i].at(n));
    }
    return s;
  }

  bool operator==(const TrainingSet&) const = default;

 private:
  std::vector<std::vector<double>> g0_;
  std::vector<std::vector<double>> g1_;
  std::uint64_t seed_ = 0;
};

/// Draws N independent realizations of M bands.
///
/// `models` holds either one entry per band or a single entry shared by all
/// bands.
inline TrainingSet sample_training_set(std::span<const BandModels> models, std::size_t bands,
                                       std::size_t samples, std::uint64_t seed) {
  if (bands == 0) throw ConfigError("band count M must be at least 1");
  if (samples == 0) throw ConfigError("sample count N must be at least 1");
  if (models.size() != 1 && models.size() != bands)
    throw DimensionMismatch("need one fading model pair per band or a single shared pair");

  std::vector<std::vector<double>> g0(bands, std::vector<double>(samples));
  std::vector<std::vector<double>> g1(bands, std::vector<double>(samples));
  for (std::size_t i = 0; i < bands; ++i) {
    const BandModels& m = models.size() == 1 ? models[0] : models[i];
    const std::uint64_t k0 = rng::stream_key(seed, i, 0);
    const std::uint64_t k1 = rng::stream_key(seed, i, 1);
    for (std::size_t n = 0; n < samples; ++n) {
      g0[i][n] = m.g0.draw(rng::uniform(k0, n), n);
      g1[i][n] = m.g1.draw(rng::uniform(k1, n), n);
    }
  }
  return TrainingSet(std::move(g0), std::move(g1), seed);
}

inline TrainingSet sample_training_set(const BandModels& models, std::size_t bands,
                                       std::size_t samples, std::uint64_t seed) {
  return sample_training_set(std::span<const BandModels>(&models, 1), bands, samples, seed);
}

}  // namespace qpower

#endif  // QPOWER_FADING_HPP
