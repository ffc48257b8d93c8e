#ifndef QPOWER_EXPERIMENT_HPP
#define QPOWER_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qpower/aqpa.hpp"
#include "qpower/dual_outer.hpp"
#include "qpower/error.hpp"
#include "qpower/eval.hpp"
#include "qpower/fading.hpp"
#include "qpower/full_csi.hpp"
#include "qpower/lloyd.hpp"
#include "qpower/noisy_feedback.hpp"
#include "qpower/numeric.hpp"

namespace qpower {

using json = nlohmann::json;

enum class Method { FullCsi, Gla, Aqpa, Gla2 };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::FullCsi: return "fullcsi";
    case Method::Gla: return "gla";
    case Method::Aqpa: return "aqpa";
    case Method::Gla2: return "gla2";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "fullcsi") return Method::FullCsi;
  if (s == "gla") return Method::Gla;
  if (s == "aqpa") return Method::Aqpa;
  if (s == "gla2") return Method::Gla2;
  throw ConfigError("method: unknown value '" + s + "' (expected fullcsi, gla, aqpa or gla2)");
}

/// Validated experiment description. Powers are in dB here and linear
/// everywhere else.
struct ExperimentConfig {
  std::size_t M = 1;
  /// Codebook sizes to run; every entry is a power of two when given as B.
  std::vector<std::size_t> L{8};
  double P_avg_dB = 10.0;
  /// NaN marks an unconstrained band (null in JSON).
  std::vector<double> Q_avg_dB{std::numeric_limits<double>::quiet_NaN()};
  std::vector<BandModels> fading{BandModels{}};
  std::size_t N_train = 100000;
  std::size_t N_eval = 100000;
  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 2;
  double q_f = 0.0;
  std::vector<Method> methods{Method::Gla};
  int restarts = 1;
  SolverTolerances tol{};
  GlaOptions gla{};
  int max_outer = 50;
  AqpaOptions aqpa{};
  /// Sweep points in dB; empty means the single point P_avg_dB.
  std::vector<double> sweep_P_avg_dB;
  bool record_wall_time = false;
  /// The document this config was read from, echoed into result files.
  json source = json::object();

  ConstraintSet constraints(double P_dB) const {
    ConstraintSet c;
    c.P_avg = db_to_linear(P_dB);
    c.Q_avg.clear();
    for (double q : Q_avg_dB) c.Q_avg.push_back(std::isnan(q) ? kUnconstrained : db_to_linear(q));
    return c;
  }
  ConstraintSet constraints() const { return constraints(P_avg_dB); }

  std::vector<double> sweep_points() const {
    return sweep_P_avg_dB.empty() ? std::vector<double>{P_avg_dB} : sweep_P_avg_dB;
  }

  OuterOptions outer_options() const {
    OuterOptions o;
    o.tol = tol;
    o.max_outer = max_outer;
    return o;
  }

  TrainingSet training_set() const { return sample_training_set(fading, M, N_train, seed); }
  TrainingSet evaluation_set() const { return sample_training_set(fading, M, N_eval, eval_seed); }
};

namespace detail {

inline std::string field_error(const std::string& field, const std::string& what) { return field + ": " + what; }

inline double number_field(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field_error(field, "expected a number"));
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field_error(field, "must be finite"));
  return v;
}

inline std::uint64_t uint_field(const json& j, const std::string& field) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0))
    throw ConfigError(field_error(field, "expected a non-negative integer"));
  return j.get<std::uint64_t>();
}

inline FadingModel fading_model(const json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field_error(field, "expected an object"));
  const std::string type = j.value("type", std::string("exponential"));
  try {
    if (type == "exponential") return FadingModel::exponential(j.contains("mean") ? number_field(j["mean"], field + ".mean") : 1.0);
    if (type == "deterministic") {
      if (!j.contains("values") || !j["values"].is_array()) throw ConfigError(field_error(field + ".values", "expected an array"));
      std::vector<double> v;
      for (const auto& x : j["values"]) v.push_back(number_field(x, field + ".values"));
      return FadingModel::deterministic(std::move(v));
    }
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(field, 0) == 0) throw;
    throw ConfigError(field_error(field, what));
  }
  throw ConfigError(field_error(field + ".type", "unknown fading type '" + type + "'"));
}

inline BandModels band_models(const json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field_error(field, "expected an object with g0 and g1"));
  BandModels m;
  if (j.contains("g0")) m.g0 = fading_model(j["g0"], field + ".g0");
  if (j.contains("g1")) m.g1 = fading_model(j["g1"], field + ".g1");
  return m;
}

inline std::size_t levels_from_bits(const json& j) {
  const std::uint64_t b = uint_field(j, "B");
  if (b < 1 || b > 16) throw ConfigError(field_error("B", "must be in [1, 16]"));
  return std::size_t{1} << b;
}

inline bool power_of_two(std::size_t L) { return L != 0 && (L & (L - 1)) == 0; }

}  // namespace detail

/// Parses and validates a config document. Unknown keys are rejected so
/// that typos do not silently fall back to defaults.
inline ExperimentConfig parse_config(const json& doc) {
  using detail::field_error;
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  static const char* known[] = {"M", "B", "L", "P_avg_dB", "Q_avg_dB", "fading", "N_train", "N_eval", "N", "seed",
                                "eval_seed", "q_f", "method", "restarts", "tolerances", "sweep", "record_wall_time"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw ConfigError(field_error(key, "unknown field"));
  }

  ExperimentConfig c;
  c.source = doc;
  if (doc.contains("M")) {
    c.M = detail::uint_field(doc["M"], "M");
    if (c.M < 1) throw ConfigError(field_error("M", "must be at least 1"));
  }

  bool from_bits = false;
  if (doc.contains("B") && doc.contains("L")) throw ConfigError(field_error("B", "give either B or L, not both"));
  if (doc.contains("B")) {
    from_bits = true;
    c.L.clear();
    if (doc["B"].is_array()) {
      if (doc["B"].empty()) throw ConfigError(field_error("B", "empty list"));
      for (const auto& b : doc["B"]) c.L.push_back(detail::levels_from_bits(b));
    } else {
      c.L.push_back(detail::levels_from_bits(doc["B"]));
    }
  } else if (doc.contains("L")) {
    c.L.clear();
    auto one = [&](const json& j) {
      const std::uint64_t L = detail::uint_field(j, "L");
      if (L < 1) throw ConfigError(field_error("L", "must be at least 1"));
      c.L.push_back(static_cast<std::size_t>(L));
    };
    if (doc["L"].is_array()) {
      if (doc["L"].empty()) throw ConfigError(field_error("L", "empty list"));
      for (const auto& l : doc["L"]) one(l);
    } else {
      one(doc["L"]);
    }
  }

  if (doc.contains("P_avg_dB")) c.P_avg_dB = detail::number_field(doc["P_avg_dB"], "P_avg_dB");

  if (!doc.contains("Q_avg_dB")) {
    if (c.M != 1) throw ConfigError(field_error("Q_avg_dB", "required, one entry per band"));
  } else {
    const json& q = doc["Q_avg_dB"];
    if (!q.is_array()) throw ConfigError(field_error("Q_avg_dB", "expected an array"));
    if (q.size() != c.M) {
      std::ostringstream m;
      m << "expected " << c.M << " entries (one per band), got " << q.size();
      throw ConfigError(field_error("Q_avg_dB", m.str()));
    }
    c.Q_avg_dB.clear();
    for (const auto& x : q) {
      c.Q_avg_dB.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                       : detail::number_field(x, "Q_avg_dB"));
    }
  }

  if (doc.contains("fading")) {
    const json& f = doc["fading"];
    c.fading.clear();
    if (f.is_array()) {
      if (f.size() != c.M) throw ConfigError(field_error("fading", "list needs one entry per band"));
      for (std::size_t i = 0; i < f.size(); ++i) c.fading.push_back(detail::band_models(f[i], "fading[" + std::to_string(i) + "]"));
    } else {
      c.fading.push_back(detail::band_models(f, "fading"));
    }
  }

  if (doc.contains("N")) c.N_train = c.N_eval = detail::uint_field(doc["N"], "N");
  if (doc.contains("N_train")) c.N_train = detail::uint_field(doc["N_train"], "N_train");
  if (doc.contains("N_eval")) c.N_eval = detail::uint_field(doc["N_eval"], "N_eval");
  else if (!doc.contains("N")) c.N_eval = c.N_train;
  if (c.N_train < 1) throw ConfigError(field_error("N_train", "must be at least 1"));
  if (c.N_eval < 1) throw ConfigError(field_error("N_eval", "must be at least 1"));
  if (doc.contains("seed")) c.seed = detail::uint_field(doc["seed"], "seed");
  c.eval_seed = doc.contains("eval_seed") ? detail::uint_field(doc["eval_seed"], "eval_seed") : c.seed + 1;

  if (doc.contains("q_f")) {
    c.q_f = detail::number_field(doc["q_f"], "q_f");
    if (c.q_f < 0.0 || c.q_f > 0.5) throw ConfigError(field_error("q_f", "must lie in [0, 0.5]"));
  }

  if (doc.contains("method")) {
    c.methods.clear();
    auto one = [&](const json& j) {
      if (!j.is_string()) throw ConfigError(field_error("method", "expected a string"));
      c.methods.push_back(parse_method(j.get<std::string>()));
    };
    if (doc["method"].is_array()) {
      if (doc["method"].empty()) throw ConfigError(field_error("method", "empty list"));
      for (const auto& m : doc["method"]) one(m);
    } else {
      one(doc["method"]);
    }
  }

  if (doc.contains("restarts")) {
    const auto r = detail::uint_field(doc["restarts"], "restarts");
    if (r < 1 || r > 1000) throw ConfigError(field_error("restarts", "must be in [1, 1000]"));
    c.restarts = static_cast<int>(r);
  }

  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    if (!t.is_object()) throw ConfigError(field_error("tolerances", "expected an object"));
    for (const auto& [key, v] : t.items()) {
      const std::string f = "tolerances." + key;
      if (key == "max_iter" || key == "max_outer") {
        const auto n = detail::uint_field(v, f);
        if (n < 1) throw ConfigError(field_error(f, "must be at least 1"));
        (key == "max_iter" ? c.gla.max_iter : c.max_outer) = static_cast<int>(n);
        continue;
      }
      const double x = detail::number_field(v, f);
      if (!(x > 0.0)) throw ConfigError(field_error(f, "must be positive"));
      if (key == "tol_feas") c.tol.tol_feas = x;
      else if (key == "tol_cs") c.tol.tol_cs = x;
      else if (key == "gla_tol") c.gla.tol = x;
      else if (key == "tol_root") c.gla.tol_root = x;
      else if (key == "eps_p") c.aqpa.eps_p = x;
      else if (key == "quad_rel_tol") c.aqpa.quad.rel_tol = x;
      else throw ConfigError(field_error(f, "unknown tolerance"));
    }
  }

  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    const json* pts = s.is_object() && s.contains("P_avg_dB") ? &s["P_avg_dB"] : nullptr;
    if (!pts) throw ConfigError(field_error("sweep", "expected an object with P_avg_dB"));
    if (pts->is_array()) {
      for (const auto& x : *pts) c.sweep_P_avg_dB.push_back(detail::number_field(x, "sweep.P_avg_dB"));
    } else if (pts->is_object()) {
      for (const char* k : {"start", "stop", "step"}) {
        if (!pts->contains(k)) throw ConfigError(field_error(std::string("sweep.P_avg_dB.") + k, "required"));
      }
      const double a = detail::number_field((*pts)["start"], "sweep.P_avg_dB.start");
      const double b = detail::number_field((*pts)["stop"], "sweep.P_avg_dB.stop");
      const double h = detail::number_field((*pts)["step"], "sweep.P_avg_dB.step");
      if (!(h > 0.0) || b < a) throw ConfigError(field_error("sweep.P_avg_dB", "need step > 0 and stop >= start"));
      const auto n = static_cast<long>(std::floor((b - a) / h + 1e-9));
      if (n > 10000) throw ConfigError(field_error("sweep.P_avg_dB", "more than 10000 points"));
      for (long k = 0; k <= n; ++k) c.sweep_P_avg_dB.push_back(a + static_cast<double>(k) * h);
    } else {
      throw ConfigError(field_error("sweep.P_avg_dB", "expected a list or {start, stop, step}"));
    }
    if (c.sweep_P_avg_dB.empty()) throw ConfigError(field_error("sweep.P_avg_dB", "no points"));
  }

  if (doc.contains("record_wall_time")) {
    if (!doc["record_wall_time"].is_boolean()) throw ConfigError(field_error("record_wall_time", "expected true or false"));
    c.record_wall_time = doc["record_wall_time"].get<bool>();
  }

  const bool noisy = c.q_f > 0.0 || std::find(c.methods.begin(), c.methods.end(), Method::Gla2) != c.methods.end();
  for (std::size_t L : c.L) {
    if (noisy && !detail::power_of_two(L))
      throw ConfigError(field_error(from_bits ? "B" : "L", "L must be a power of two for noisy feedback index labels"));
    if (noisy && L > 65536) throw ConfigError(field_error("L", "too large for noisy feedback"));
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

/// One (P_avg, method, L) design evaluated on the held-out set.
struct PointResult {
  double P_avg_dB = 0.0;
  Method method = Method::Gla;
  std::size_t L = 0;
  double q_f = 0.0;
  CapacityEstimate capacity;        ///< evaluation set
  double train_capacity = 0.0;
  ConstraintEstimate constraints;   ///< evaluation set
  double lambda = 0.0;
  std::vector<double> mu;           ///< water-level multipliers (mu' for quantized methods)
  long long iterations = 0;
  double wall_ms = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
  std::vector<PowerCodebook> codebooks;
};

/// Designs one point of an experiment. Solver failures are reported in
/// `status`; configuration errors propagate.
inline PointResult run_point(const ExperimentConfig& cfg, double P_dB, Method method, std::size_t L,
                             const TrainingSet& train, const TrainingSet& eval) {
  PointResult r;
  r.P_avg_dB = P_dB;
  r.method = method;
  r.L = method == Method::FullCsi ? 0 : L;
  r.q_f = method == Method::Gla2 ? cfg.q_f : 0.0;
  if (method == Method::Aqpa && L < 4) {
    r.status = "unsupported: AQPA needs L >= 4";
    return r;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const ConstraintSet cons = cfg.constraints(P_dB);
  try {
    const FullCsiSolution full = allocate_full_csi(cons, train, cfg.tol);
    if (method == Method::FullCsi) {
      FullCsiRule rule{full.duals};
      r.capacity = estimate_capacity(eval, rule);
      r.constraints = estimate_constraints(eval, rule);
      r.train_capacity = full.capacity;
      r.lambda = full.duals.lambda;
      r.mu = full.duals.mu;
      r.iterations = full.evaluations;
    } else {
      const OuterOptions outer = hints_from(full, cfg.outer_options());
      QuantizedSolution s;
      if (method == Method::Gla) {
        s = best_of_restarts(cfg.restarts, [&](int k) {
          GlaDesigner d{cfg.gla, k, cfg.seed};
          return algorithm1_wideband(cons, train, L, d, outer);
        });
      } else if (method == Method::Gla2) {
        const FeedbackChannel ch(PowerCodebook(std::vector<double>(L)).bits(), cfg.q_f);
        s = best_of_restarts(cfg.restarts, [&](int k) {
          Gla2Designer d{ch, cfg.gla, k, cfg.seed};
          return algorithm1_wideband(cons, train, L, d, outer);
        });
      } else {
        AqpaDesigner d;
        for (std::size_t i = 0; i < cfg.M; ++i)
          d.bands.push_back(ExponentialBand::from(cfg.fading.size() == 1 ? cfg.fading[0] : cfg.fading[i]));
        d.options = cfg.aqpa;
        s = algorithm1_wideband(cons, train, L, d, outer);
      }
      for (const auto& b : s.bands) r.codebooks.push_back(b.codebook);
      if (method == Method::Gla2) {
        const NoisyRule rule = NoisyRule::from(s, FeedbackChannel(PowerCodebook(std::vector<double>(L)).bits(), cfg.q_f));
        r.capacity = estimate_capacity(eval, rule);
        r.constraints = estimate_constraints(eval, rule);
      } else {
        const QuantizedRule rule = QuantizedRule::from(s);
        r.capacity = estimate_capacity(eval, rule);
        r.constraints = estimate_constraints(eval, rule);
      }
      r.train_capacity = s.capacity;
      r.lambda = s.lambda;
      r.mu = s.mu_prime;
      r.iterations = s.lloyd_iterations;
      r.status = s.status;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const UnsupportedOperation&) {
    throw;
  } catch (const Error& e) {
    r.status = std::string("error: ") + e.what();
  }
  if (cfg.record_wall_time)
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline PointResult run_point(const ExperimentConfig& cfg, double P_dB, Method method, std::size_t L) {
  return run_point(cfg, P_dB, method, L, cfg.training_set(), cfg.evaluation_set());
}

/// Six significant digits, '.' decimal point, independent of the locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, r.ptr);
}

inline std::string csv_header(std::size_t M, bool bits_capacity = false) {
  std::string h = "P_avg_dB,method,B,q_f,";
  h += bits_capacity ? "capacity_bits,capacity_se," : "capacity_nats,capacity_se,";
  h += "ATP";
  for (std::size_t i = 1; i <= M; ++i) h += ",AIP_" + std::to_string(i);
  h += ",lambda";
  for (std::size_t i = 1; i <= M; ++i) h += ",mu_" + std::to_string(i);
  h += ",iterations,wall_ms,status";
  return h;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch == '\n' ? ' ' : ch;
  }
  return q + "\"";
}

inline std::string csv_row(const PointResult& r, std::size_t M, bool bits_capacity = false) {
  const double scale = bits_capacity ? 1.0 / std::log(2.0) : 1.0;
  const bool ok = !r.status.starts_with("error") && !r.status.starts_with("unsupported");
  auto num = [&](double v) { return ok ? format_number(v) : std::string("NA"); };
  std::string s = format_number(r.P_avg_dB) + "," + to_string(r.method) + ",";
  if (r.method == Method::FullCsi) s += "NA";
  else {
    const int b = PowerCodebook(std::vector<double>(r.L)).bits();
    s += b >= 0 ? std::to_string(b) : "NA";
  }
  s += "," + format_number(r.q_f) + "," + num(r.capacity.value * scale) + "," + num(r.capacity.se * scale) + ",";
  s += num(r.constraints.atp);
  for (std::size_t i = 0; i < M; ++i) s += "," + (i < r.constraints.aip.size() ? num(r.constraints.aip[i]) : "NA");
  s += "," + num(r.lambda);
  for (std::size_t i = 0; i < M; ++i) s += "," + (i < r.mu.size() ? num(r.mu[i]) : "NA");
  s += "," + std::to_string(r.iterations) + "," + format_number(r.wall_ms) + "," + csv_quote(r.status);
  return s;
}

/// Codebook file contents: levels in linear power units per band.
inline json codebook_json(const PointResult& r, const ExperimentConfig& cfg) {
  json j;
  j["format"] = "qpower-codebook";
  j["version"] = 1;
  j["method"] = to_string(r.method);
  j["units"] = "linear";
  j["L"] = r.L;
  j["q_f"] = r.q_f;
  j["P_avg_dB"] = r.P_avg_dB;
  j["lambda"] = r.lambda;
  j["mu_prime"] = r.mu;
  std::vector<double> mu;
  for (double m : r.mu) mu.push_back(m / static_cast<double>(cfg.M));
  j["mu"] = mu;
  json bands = json::array();
  for (const auto& cb : r.codebooks) bands.push_back({{"levels", cb.levels}});
  j["bands"] = bands;
  j["seed"] = cfg.seed;
  j["eval_seed"] = cfg.eval_seed;
  j["capacity_nats"] = r.capacity.value;
  j["train_capacity_nats"] = r.train_capacity;
  j["status"] = r.status;
  j["config"] = cfg.source;
  return j;
}

/// A codebook file read back.
struct CodebookFile {
  Method method = Method::Gla;
  std::vector<PowerCodebook> codebooks;
  double lambda = 0.0;
  std::vector<double> mu_prime;
  double q_f = 0.0;
  double P_avg_dB = 0.0;
  double capacity_nats = std::numeric_limits<double>::quiet_NaN();
  ExperimentConfig config;
};

inline CodebookFile parse_codebook(const json& j) {
  using detail::field_error;
  if (!j.is_object() || j.value("format", std::string()) != "qpower-codebook")
    throw ConfigError("codebook: not a qpower codebook document");
  CodebookFile f;
  try {
    f.method = parse_method(j.at("method").get<std::string>());
    f.lambda = j.at("lambda").get<double>();
    f.mu_prime = j.at("mu_prime").get<std::vector<double>>();
    f.q_f = j.value("q_f", 0.0);
    f.P_avg_dB = j.value("P_avg_dB", 0.0);
    if (j.contains("capacity_nats") && j["capacity_nats"].is_number()) f.capacity_nats = j["capacity_nats"].get<double>();
    for (const auto& b : j.at("bands")) f.codebooks.emplace_back(b.at("levels").get<std::vector<double>>());
    f.config = parse_config(j.value("config", json::object()));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("codebook: ") + e.what());
  }
  if (f.codebooks.empty()) throw ConfigError(field_error("bands", "no codebooks"));
  if (f.codebooks.size() != f.mu_prime.size()) throw ConfigError(field_error("mu_prime", "one entry per band required"));
  for (const auto& cb : f.codebooks) cb.validate();
  return f;
}

inline CodebookFile load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("codebook: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("codebook: not valid JSON: ") + e.what());
  }
  return parse_codebook(j);
}

/// Capacity of a codebook file on the evaluation set its config describes.
inline CapacityEstimate evaluate_codebook(const CodebookFile& f) {
  const TrainingSet eval = f.config.evaluation_set();
  if (f.method == Method::Gla2) {
    NoisyRule rule;
    rule.codebooks = f.codebooks;
    rule.channel = FeedbackChannel(f.codebooks[0].bits(), f.q_f);
    rule.lambda = f.lambda;
    rule.mu_prime = f.mu_prime;
    return estimate_capacity(eval, rule);
  }
  QuantizedRule rule{f.codebooks, f.lambda, f.mu_prime};
  return estimate_capacity(eval, rule);
}

/// A point on the boundary between regions j and j+1 (0-based pair index).
struct BoundaryPoint {
  std::size_t band = 0;
  std::size_t pair = 0;
  double g0 = 0.0;
  double g1 = 0.0;
};

/// Boundary curves g1(g0) of adjacent regions on [0, g0_max]; points past a
/// curve's vertical asymptote are left out.
inline std::vector<BoundaryPoint> boundary_polyline(const PowerCodebook& cb, double lambda, double mu,
                                                    double g0_max, std::size_t points, std::size_t band = 0) {
  if (!(g0_max > 0.0)) throw ConfigError("g0_max must be positive");
  if (points < 2) throw ConfigError("need at least two points per curve");
  std::vector<BoundaryPoint> out;
  for (std::size_t j = 0; j + 1 < cb.size(); ++j) {
    const double hi = cb.levels[j], lo = cb.levels[j + 1];
    if (!(hi > lo)) continue;
    for (std::size_t k = 0; k < points; ++k) {
      const double g0 = g0_max * static_cast<double>(k) / static_cast<double>(points - 1);
      try {
        out.push_back({band, j, g0, boundary_g1(hi, lo, lambda, mu, g0)});
      } catch (const AsymptoteExceeded&) {
        break;
      }
    }
  }
  return out;
}

struct SweepOutput {
  std::vector<PointResult> rows;
  std::string csv;
};

/// Runs every (P_avg, method, L) of the config. Rows are ordered by sweep
/// point, then method, then L, whatever the worker count. Full-CSI rows do
/// not depend on L and appear once per point.
inline SweepOutput run_sweep(const ExperimentConfig& cfg, unsigned workers = 1, bool bits_capacity = false) {
  struct Task {
    double P;
    Method m;
    std::size_t L;
  };
  std::vector<Task> tasks;
  for (double P : cfg.sweep_points()) {
    for (Method m : cfg.methods) {
      if (m == Method::FullCsi) tasks.push_back({P, m, 0});
      else
        for (std::size_t L : cfg.L) tasks.push_back({P, m, L});
    }
  }
  const TrainingSet train = cfg.training_set();
  const TrainingSet eval = cfg.evaluation_set();
  SweepOutput out;
  out.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t k; !failed && (k = next++) < tasks.size();) {
      try {
        out.rows[k] = run_point(cfg, tasks[k].P, tasks[k].m, tasks[k].L, train, eval);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  out.csv = csv_header(cfg.M, bits_capacity) + "\n";
  for (const auto& r : out.rows) out.csv += csv_row(r, cfg.M, bits_capacity) + "\n";
  return out;
}

inline std::string codebook_file_name(const PointResult& r) {
  std::string name = std::string("codebook_") + to_string(r.method) + "_L" + std::to_string(r.L) + "_P" +
                     format_number(r.P_avg_dB);
  if (r.method == Method::Gla2) name += "_q" + format_number(r.q_f);
  return name + ".json";
}

}  // namespace qpower

#endif  // QPOWER_EXPERIMENT_HPP
