// Command-line front end: designs, sweeps and codebook checks.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qpower/experiment.hpp"

namespace fs = std::filesystem;
using namespace qpower;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitSolver = 3;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  bool bits_capacity = false;
  std::string codebook;
  double g0_max = 10.0;
  std::size_t points = 101;
};

ExperimentConfig read_config(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  json doc;
  {
    std::ifstream in(o.config);
    if (!in) throw ConfigError("config: cannot open " + o.config);
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
  }
  if (o.seed && doc.is_object()) doc["seed"] = *o.seed;
  return parse_config(doc);
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << text;
}

/// Rows skipped as unsupported do not count as solver failures.
bool row_ok(const PointResult& r) { return r.status == "ok" || r.status.starts_with("unsupported"); }

int run_method(const Options& o, Method m) {
  ExperimentConfig cfg = read_config(o);
  cfg.methods = {m};
  cfg.sweep_P_avg_dB.clear();
  if (m == Method::Aqpa) {
    for (std::size_t L : cfg.L) {
      if (L < 4) throw ConfigError("B: AQPA needs at least 2 bits (L >= 4)");
    }
  }
  SweepOutput s = run_sweep(cfg, o.workers, o.bits_capacity);
  std::cout << s.csv;
  bool ok = true;
  for (const auto& r : s.rows) {
    ok = ok && row_ok(r);
    if (!o.out.empty() && !r.codebooks.empty())
      write_file(fs::path(o.out) / codebook_file_name(r), codebook_json(r, cfg).dump(2) + "\n");
  }
  if (!ok) std::cerr << "solver did not converge for every point; see the status column\n";
  return ok ? kExitOk : kExitSolver;
}

int run_sweep_command(const Options& o) {
  const ExperimentConfig cfg = read_config(o);
  SweepOutput s = run_sweep(cfg, o.workers, o.bits_capacity);
  bool ok = true;
  for (const auto& r : s.rows) ok = ok && row_ok(r);
  if (o.out.empty()) {
    std::cout << s.csv;
  } else {
    write_file(fs::path(o.out) / "sweep.csv", s.csv);
    for (const auto& r : s.rows) {
      if (!r.codebooks.empty())
        write_file(fs::path(o.out) / codebook_file_name(r), codebook_json(r, cfg).dump(2) + "\n");
    }
    std::cout << "wrote " << s.rows.size() << " rows to " << (fs::path(o.out) / "sweep.csv").string() << "\n";
  }
  return ok ? kExitOk : kExitSolver;
}

int run_boundaries(const Options& o) {
  if (o.codebook.empty()) throw ConfigError("--codebook is required");
  const CodebookFile f = load_codebook(o.codebook);
  std::string csv = "band,pair,g0,g1\n";
  for (std::size_t i = 0; i < f.codebooks.size(); ++i) {
    for (const auto& p : boundary_polyline(f.codebooks[i], f.lambda, f.mu_prime[i], o.g0_max, o.points, i)) {
      csv += std::to_string(p.band + 1) + "," + std::to_string(p.pair + 1) + "/" + std::to_string(p.pair + 2) + "," +
             format_number(p.g0) + "," + format_number(p.g1) + "\n";
    }
  }
  if (o.out.empty()) std::cout << csv;
  else write_file(fs::path(o.out) / "boundaries.csv", csv);
  return kExitOk;
}

int run_verify(const Options& o) {
  if (o.codebook.empty()) throw ConfigError("--codebook is required");
  const CodebookFile f = load_codebook(o.codebook);
  bool ok = true;
  for (std::size_t i = 0; i < f.codebooks.size(); ++i) {
    const PropertyReport r = verify_codebook_properties(f.codebooks[i], f.lambda, f.mu_prime[i]);
    std::cout << "band " << i + 1 << ": " << (r.ok() ? "ok" : "violations") << "\n";
    for (const auto& v : r.violations) std::cout << "  " << v << "\n";
    ok = ok && r.ok();
  }
  const CapacityEstimate c = evaluate_codebook(f);
  std::cout << "capacity_nats " << format_number(c.value) << " (se " << format_number(c.se) << ")";
  if (std::isfinite(f.capacity_nats)) {
    const double d = std::abs(c.value - f.capacity_nats);
    std::cout << ", recorded " << format_number(f.capacity_nats) << ", difference " << d;
    if (d > 1e-9) {
      std::cout << " exceeds 1e-9";
      ok = false;
    }
  }
  std::cout << "\n";
  return ok ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized power allocation for spectrum sharing with limited feedback"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--config", o.config, "experiment config (JSON)");
    c->add_option("--out", o.out, "output directory");
    c->add_option("--seed", o.seed, "override the training seed");
    c->add_option("--workers", o.workers, "parallel sweep points")->check(CLI::Range(1u, 256u));
    c->add_flag("--bits-capacity", o.bits_capacity, "report capacity in bits instead of nats");
  };

  auto* fullcsi = app.add_subcommand("fullcsi", "full-CSI allocation at the configured point");
  auto* gla = app.add_subcommand("gla", "noise-free codebook design by the modified Lloyd algorithm");
  auto* aqpa = app.add_subcommand("aqpa", "codebook from channel statistics (AQPA)");
  auto* gla2 = app.add_subcommand("gla2", "codebook design for a noisy feedback channel");
  auto* sweep = app.add_subcommand("sweep", "all configured methods and codebook sizes over the P_avg sweep");
  for (auto* c : {fullcsi, gla, aqpa, gla2, sweep}) add_common(c);

  auto* boundaries = app.add_subcommand("boundaries", "region boundary polylines of a codebook file");
  boundaries->add_option("--codebook", o.codebook, "codebook file")->required();
  boundaries->add_option("--out", o.out, "output directory");
  boundaries->add_option("--g0-max", o.g0_max, "right end of the g0 axis")->check(CLI::PositiveNumber);
  boundaries->add_option("--points", o.points, "points per boundary")->check(CLI::Range(2, 100000));

  auto* verify = app.add_subcommand("verify", "structural checks and capacity re-evaluation of a codebook file");
  verify->add_option("--codebook", o.codebook, "codebook file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (fullcsi->parsed()) return run_method(o, Method::FullCsi);
    if (gla->parsed()) return run_method(o, Method::Gla);
    if (aqpa->parsed()) return run_method(o, Method::Aqpa);
    if (gla2->parsed()) return run_method(o, Method::Gla2);
    if (sweep->parsed()) return run_sweep_command(o);
    if (boundaries->parsed()) return run_boundaries(o);
    if (verify->parsed()) return run_verify(o);
  } catch (const ConfigError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const DimensionMismatch& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const UnsupportedOperation& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const Error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitInvalid;
}
