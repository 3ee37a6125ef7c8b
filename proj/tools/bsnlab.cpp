#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bsnlab/harness.hpp"
#include "bsnlab/oracles.hpp"
#include "bsnlab/symbolcheck.hpp"

namespace fs = std::filesystem;
using namespace bsnlab;

namespace {

constexpr int kSolverFailure = 1;
constexpr int kBadInput = 2;

// Written next to the target and renamed, so readers never see partial files.
void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InvalidArgument("cannot write " + tmp.string());
    os << content;
    if (!os) throw InvalidArgument("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

SuiteConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
  try {
    return suite_config_from_json(j);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

// "a..b" or "n"
std::vector<int> parse_range(const std::string& s) {
  auto to_int = [&](const std::string& t) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(t, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("bad integer '" + t + "' in sweep");
    }
    if (used != t.size()) throw InvalidArgument("bad integer '" + t + "' in sweep");
    return v;
  };
  const auto dots = s.find("..");
  if (dots == std::string::npos) return {to_int(s)};
  const int lo = to_int(s.substr(0, dots)), hi = to_int(s.substr(dots + 2));
  if (lo > hi) throw InvalidArgument("empty range '" + s + "'");
  std::vector<int> out;
  for (int v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

// dims,degrees,samples with degrees either a range or "all"
symbol::SweepConfig parse_sweep(const std::string& spec, unsigned seed) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string t; std::getline(ss, t, ',');) parts.push_back(t);
  if (parts.size() != 3) throw InvalidArgument("sweep must be dims,degrees,samples (e.g. 2..4,all,100)");
  symbol::SweepConfig c;
  c.dims = parse_range(parts[0]);
  for (int n : c.dims) {
    if (n < 2 || n > 8) throw InvalidArgument("sweep dimensions must lie in 2..8");
  }
  if (parts[1] != "all") c.degrees = parse_range(parts[1]);
  const auto samples = parse_range(parts[2]);
  if (samples.size() != 1 || samples[0] < 1) throw InvalidArgument("sample count must be a positive integer");
  c.samples = samples[0];
  c.seed = seed;
  return c;
}

void print_spectrum(const Spectrum& s) {
  if (s.trivial) {
    std::cout << "trivial problem (admissible space is zero)\n";
    return;
  }
  std::cout << to_string(s.kind) << " on " << s.domain << ", p=" << s.degree << ", h=" << fmt(s.h)
            << ", kernel_dim=" << s.kernel_dim << "\n";
  std::cout << "index  eigenvalue            residual\n";
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    std::cout << std::setw(5) << i << "  " << std::setw(20) << std::left << fmt(s.eigenvalues[i]) << std::right << "  "
              << std::scientific << std::setprecision(2) << s.residuals[i] << std::defaultfloat << "\n";
  }
}

int cmd_solve(const SolveRequest& req, const std::string& out) {
  const Spectrum s = solve_single(req);
  print_spectrum(s);
  if (!out.empty()) write_atomic(out, to_json(s).dump(2) + "\n");
  return 0;
}

bool all_multi_level(const SuiteResult& r) {
  std::map<std::pair<std::string, int>, int> count;
  for (const auto& run : r.runs) ++count[{run.domain, run.p}];
  for (const auto& [k, c] : count) {
    if (c < 3) return false;
  }
  return !count.empty();
}

int cmd_suite(const std::string& config, const std::string& out) {
  const SuiteConfig cfg = load_config(config);
  const SuiteResult res = run_spectral_suite(cfg);
  const fs::path dir(out);
  write_atomic(dir / "suite.json", to_json(res).dump(2) + "\n");
  std::ostringstream csv;
  write_spectra_csv(csv, res);
  write_atomic(dir / "spectra.csv", csv.str());
  if (all_multi_level(res)) {
    const auto conv = convergence_report(res);
    write_atomic(dir / "convergence.json", to_json(conv).dump(2) + "\n");
    for (const auto& s : conv) {
      std::cout << s.domain << " p=" << s.p << " " << to_string(s.kind) << " #" << s.index
                << (s.self_reference ? " (self)" : " (oracle)") << " ref=" << fmt(s.reference) << " errors:";
      for (double e : s.errors) std::cout << " " << fmt(e);
      std::cout << (s.strictly_decreasing ? "" : "  NOT DECREASING") << "\n";
    }
  } else {
    std::cout << "convergence report skipped: needs 3 levels per (domain, p)\n";
  }
  for (const auto& r : res.runs) {
    std::cout << r.domain << " p=" << r.p << " n=" << r.n << " dofs=" << r.dofs << " harmonic_dim=" << r.harmonic_dim
              << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& config, const std::string& out) {
  const SuiteConfig cfg = load_config(config);
  const SuiteResult res = run_spectral_suite(cfg);
  const auto reports = verify_kuttler_sigillito(res);
  bool ok = true;
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) {
    j.push_back(to_json(r));
    if (!r.applicable) {
      std::cout << r.domain << " p=" << r.p << " n=" << r.n << ": not applicable\n";
      continue;
    }
    std::cout << r.domain << " p=" << r.p << " n=" << r.n << ": " << (r.pass ? "PASS" : "FAIL") << "\n";
    for (const auto& c : r.checks) {
      if (c.enforced && !c.pass) std::cout << "  failed: " << c.name << " (k=" << c.k << ", margin " << fmt(c.margin) << ")\n";
    }
    ok = ok && r.pass;
  }
  if (!out.empty()) {
    const fs::path dir(out);
    write_atomic(dir / "inequalities.json", j.dump(2) + "\n");
    std::ostringstream csv;
    write_inequalities_csv(csv, reports);
    write_atomic(dir / "inequalities.csv", csv.str());
    write_atomic(dir / "suite.json", to_json(res).dump(2) + "\n");
  }
  std::cout << (ok ? "all applicable checks pass" : "some checks fail") << "\n";
  return ok ? 0 : kSolverFailure;
}

int cmd_symbols(const std::string& sweep, unsigned seed, const std::string& out) {
  const auto cfg = parse_sweep(sweep, seed);
  const auto rep = symbol::symbol_sweep(cfg);
  double worst = 1e300;
  for (const auto& s : rep.samples) worst = std::min(worst, s.min_sv);
  std::cout << "samples: " << rep.samples.size() << "\n"
            << "all injective: " << (rep.all_injective ? "yes" : "no") << "\n"
            << "bsn3 symbol equals bsn1: " << (rep.bsn3_equals_bsn1 ? "yes" : "no") << "\n"
            << "dimensions consistent: " << (rep.dimensions_ok ? "yes" : "no") << "\n"
            << "smallest singular value: " << fmt(worst) << "\n";
  if (!out.empty()) write_atomic(out, symbol::to_json(rep).dump(2) + "\n");
  return rep.all_injective && rep.bsn3_equals_bsn1 && rep.dimensions_ok ? 0 : kSolverFailure;
}

int cmd_oracle(ProblemKind kind, const std::string& domain, int count, const std::string& out) {
  const DomainName d = DomainName::parse(domain);
  std::vector<oracle::OracleRow> rows;
  std::vector<double> sorted;
  switch (d.kind) {
    case DomainKind::Interval:
      rows = oracle::interval_rows(kind, d.a, d.b, count);
      for (const auto& r : rows) sorted.push_back(r.eigenvalue);
      break;
    case DomainKind::Disk:
      rows = oracle::disk_rows(kind, d.a);
      sorted = oracle::disk_scalar_spectrum(kind, count, d.a);
      break;
    case DomainKind::Annulus:
      rows = oracle::annulus_rows(kind, d.a, d.b);
      sorted = oracle::annulus_scalar_spectrum(kind, count, d.a, d.b);
      break;
    default:
      throw InvalidArgument("no oracle for " + domain + " (interval, disk and annulus only)");
  }
  if (static_cast<int>(sorted.size()) > count) sorted.resize(count);
  std::cout << to_string(kind) << " on " << d.to_string() << ":";
  for (double v : sorted) std::cout << " " << fmt(v);
  std::cout << "\n";
  if (!out.empty()) {
    std::ostringstream csv;
    oracle::write_csv(csv, rows);
    write_atomic(out, csv.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bsnlab: finite element spectra of biharmonic Steklov-Neumann problems on forms"};
  app.require_subcommand(1);

  SolveRequest req;
  std::string problem, scheme, solve_out;
  auto* solve = app.add_subcommand("solve", "solve one eigenvalue problem");
  solve->add_option("--domain", req.domain, "interval:a,b | square | disk[:r] | annulus:r_in,r_out")->required();
  solve->add_option("--p", req.p, "form degree")->default_val(0);
  solve->add_option("--problem", problem, "dirichlet neumann steklov bsd bsn1 bsn2 bsn3")->required();
  solve->add_option("--n", req.n, "mesh resolution")->default_val(8)->check(CLI::PositiveNumber);
  solve->add_option("--k", req.k, "positive eigenvalues wanted")->default_val(6)->check(CLI::PositiveNumber);
  solve->add_option("--scheme", scheme, "p1 p2 hermite3 (default hermite3 in 1D, p2 in 2D)");
  solve->add_option("--penalty", req.penalty, "interior penalty factor")->default_val(AssemblyOptions{}.penalty);
  solve->add_option("--out", solve_out, "spectrum JSON file");

  std::string suite_config, suite_out = "out";
  auto* suite = app.add_subcommand("suite", "run a spectral suite");
  suite->add_option("--config", suite_config, "suite configuration (JSON)")->required()->check(CLI::ExistingFile);
  suite->add_option("--out", suite_out, "output directory")->default_val("out");

  std::string verify_config, verify_out;
  auto* verify = app.add_subcommand("verify", "check the eigenvalue inequalities on a suite");
  verify->add_option("--config", verify_config, "suite configuration (JSON)")->required()->check(CLI::ExistingFile);
  verify->add_option("--out", verify_out, "output directory");

  std::string sweep = "2..4,all,100", symbols_out;
  unsigned seed = 42;
  auto* symbols = app.add_subcommand("symbols", "Shapiro-Lopatinskij sweep over random frames");
  symbols->add_option("--sweep", sweep, "dims,degrees,samples")->default_val("2..4,all,100");
  symbols->add_option("--seed", seed, "random seed")->default_val(42);
  symbols->add_option("--out", symbols_out, "report JSON file");

  std::string oracle_kind, oracle_domain, oracle_out;
  int oracle_count = 8;
  auto* orc = app.add_subcommand("oracle", "analytic reference eigenvalues");
  orc->add_option("--kind", oracle_kind, "problem kind")->required();
  orc->add_option("--domain", oracle_domain, "interval:a,b | disk[:r] | annulus:r_in,r_out")->required();
  orc->add_option("--count", oracle_count, "eigenvalues to print")->default_val(8)->check(CLI::PositiveNumber);
  orc->add_option("--out", oracle_out, "CSV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kBadInput;
  }

  try {
    if (*solve) {
      req.kind = parse_problem_kind(problem);
      if (!scheme.empty()) req.scheme = parse_scheme(scheme);
      return cmd_solve(req, solve_out);
    }
    if (*suite) return cmd_suite(suite_config, suite_out);
    if (*verify) return cmd_verify(verify_config, verify_out);
    if (*symbols) return cmd_symbols(sweep, seed, symbols_out);
    if (*orc) return cmd_oracle(parse_problem_kind(oracle_kind), oracle_domain, oracle_count, oracle_out);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
  return kBadInput;
}
