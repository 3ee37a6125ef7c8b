#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bsnlab/discretization.hpp"
#include "bsnlab/harmonic.hpp"
#include "bsnlab/mesh.hpp"
#include "bsnlab/oracles.hpp"
#include "bsnlab/pencils.hpp"

namespace bsnlab {

struct SuiteConfig {
  std::vector<std::string> domains{"interval:0,1", "square", "annulus:0.5,1"};
  std::vector<int> degrees{0, 1};
  std::vector<int> levels{2, 4};        // mesh resolution per level, coarse to fine
  std::map<std::string, std::vector<int>> domain_levels;  // overrides `levels`
  std::map<std::string, std::vector<int>> domain_degrees; // overrides `degrees`
  std::map<std::string, std::string> domain_scheme;       // default: hermite3 in 1D, p2 otherwise
  int k_max = 5;
  double penalty = AssemblyOptions{}.penalty;
  double tol_slack = 1e-8;     // relative slack on non-strict inequalities
  double strictness = 1e-4;    // relative margin required by strict inequalities
  bool quotients = false;      // also evaluate the harmonic-field quotients
  std::vector<ProblemKind> kinds = all_problem_kinds();
  unsigned seed = 42;          // for sampled diagnostics; the suite itself is deterministic
};

inline void validate(const SuiteConfig& c) {
  if (c.domains.empty()) throw InvalidArgument("suite needs at least one domain");
  if (c.degrees.empty()) throw InvalidArgument("suite needs at least one degree");
  if (c.k_max < 1) throw InvalidArgument("k_max must be at least 1");
  auto check_levels = [](const std::vector<int>& l) {
    if (l.empty()) throw InvalidArgument("suite needs at least one level");
    for (int n : l) {
      if (n < 1) throw InvalidArgument("mesh levels must be positive");
    }
  };
  check_levels(c.levels);
  auto known_domain = [&](const std::string& d) {
    if (std::find(c.domains.begin(), c.domains.end(), d) == c.domains.end())
      throw InvalidArgument("override for '" + d + "', which is not in domains");
  };
  for (const auto& [d, l] : c.domain_levels) {
    known_domain(d);
    check_levels(l);
  }
  for (const auto& [d, s] : c.domain_scheme) known_domain(d);
  for (const auto& [d, l] : c.domain_degrees) {
    known_domain(d);
    if (l.empty()) throw InvalidArgument("domain '" + d + "' needs at least one degree");
  }
  if (!(c.penalty > 0.0)) throw InvalidArgument("penalty must be positive");
}

struct ProblemRun {
  Spectrum spectrum;         // eigenvectors dropped
  double seconds = 0.0;
  std::vector<double> oracle;  // reference values aligned with spectrum.eigenvalues, when known
};

struct LevelRun {
  std::string domain;
  int p = 0;
  int n = 0;
  double h = 0.0;
  Scheme scheme = Scheme::P2;
  int dim = 1;
  int dofs = 0;
  int harmonic_dim = 0;
  double harmonic_residual = 0.0;  // largest energy residual of the basis
  std::map<ProblemKind, ProblemRun> problems;
  std::map<ProblemKind, double> quotients;

  [[nodiscard]] const Spectrum* spectrum(ProblemKind k) const {
    const auto it = problems.find(k);
    return it == problems.end() ? nullptr : &it->second.spectrum;
  }
};

struct SuiteResult {
  SuiteConfig config;
  std::vector<LevelRun> runs;  // grouped by domain, then p, then level
};

namespace detail {

inline Scheme suite_scheme(const SuiteConfig& c, const std::string& domain, int dim) {
  const auto it = c.domain_scheme.find(domain);
  if (it != c.domain_scheme.end()) return parse_scheme(it->second);
  return dim == 1 ? Scheme::Hermite3 : Scheme::P2;
}

inline const std::vector<int>& suite_degrees(const SuiteConfig& c, const std::string& domain) {
  const auto it = c.domain_degrees.find(domain);
  return it == c.domain_degrees.end() ? c.degrees : it->second;
}

inline const std::vector<int>& suite_levels(const SuiteConfig& c, const std::string& domain) {
  const auto it = c.domain_levels.find(domain);
  return it == c.domain_levels.end() ? c.levels : it->second;
}

// Reference values for scalar problems on intervals, disks and annuli.
inline std::vector<double> oracle_values(const DomainName& d, int p, ProblemKind k, int count) {
  if (p != 0) return {};
  try {
    if (d.kind == DomainKind::Interval) {
      auto v = oracle::interval_closed_form(k, d.a, d.b, count).eigenvalues;
      if (static_cast<int>(v.size()) > count) v.resize(count);
      return v;
    }
    if (d.kind == DomainKind::Disk) return oracle::disk_scalar_spectrum(k, count, d.a);
    if (d.kind == DomainKind::Annulus) return oracle::annulus_scalar_spectrum(k, count, d.a, d.b);
  } catch (const Error&) {
    return {};
  }
  return {};
}

}  // namespace detail

struct SolveRequest {
  std::string domain = "square";
  int p = 0;
  ProblemKind kind = ProblemKind::Dirichlet;
  int n = 8;
  int k = 6;                      // positive eigenvalues wanted
  std::optional<Scheme> scheme;   // default: hermite3 in 1D, p2 otherwise
  double penalty = AssemblyOptions{}.penalty;
};

// One problem on one mesh, with the cohomology kernel deflated for the
// boundary pencils as in the suite.
inline Spectrum solve_single(const SolveRequest& req) {
  if (req.n < 1) throw InvalidArgument("mesh resolution must be positive");
  if (req.k < 1) throw InvalidArgument("k must be at least 1");
  const DomainName dn = DomainName::parse(req.domain);
  const auto mesh = std::make_shared<const Mesh>(build_named_domain(dn, req.n));
  if (req.p < 0 || req.p > mesh->dim) throw InvalidArgument("form degree out of range for this domain");
  const Scheme scheme = req.scheme.value_or(mesh->dim == 1 ? Scheme::Hermite3 : Scheme::P2);
  const auto space = std::make_shared<const DofSpace>(build_space(mesh, req.p, scheme));
  AssemblyOptions ao;
  ao.penalty = req.penalty;
  const auto ops = std::make_shared<const OperatorSet>(assemble_operators(space, ao));
  ProblemSpec spec = assemble_pencil(ops, req.kind);
  spec.domain = req.domain;
  int hdim = 0;
  if (has_cohomology_kernel(req.kind)) {
    const HarmonicBasis hb = harmonic_basis(ops);
    hdim = hb.dim();
    if (is_boundary_pencil(req.kind)) spec.deflation = hb.basis;
  }
  SolveOptions so;
  so.count = req.k + hdim;
  return solve_problem(spec, so);
}

// Solves all requested kinds for every (domain, p, level). Cohomology
// kernels of the boundary pencils are deflated with the harmonic basis of
// the same mesh.
inline SuiteResult run_spectral_suite(const SuiteConfig& config) {
  validate(config);
  SuiteResult res;
  res.config = config;
  for (const auto& dname : config.domains) {
    const DomainName dn = DomainName::parse(dname);
    for (int p : detail::suite_degrees(config, dname)) {
      for (int n : detail::suite_levels(config, dname)) {
        const auto mesh = std::make_shared<const Mesh>(build_named_domain(dn, n));
        if (p < 0 || p > mesh->dim) continue;
        LevelRun run;
        run.domain = dname;
        run.p = p;
        run.n = n;
        run.dim = mesh->dim;
        run.h = mesh_size(*mesh);
        run.scheme = detail::suite_scheme(config, dname, mesh->dim);
        const std::string where = dname + ", p=" + std::to_string(p) + ", n=" + std::to_string(n);
        std::shared_ptr<const OperatorSet> ops;
        HarmonicBasis hb;
        try {
          const auto space = std::make_shared<const DofSpace>(build_space(mesh, p, run.scheme));
          AssemblyOptions ao;
          ao.penalty = config.penalty;
          ops = std::make_shared<const OperatorSet>(assemble_operators(space, ao));
          run.dofs = space->size();
          hb = harmonic_basis(ops);
        } catch (const Error& e) {
          throw NumericalError(where + ": " + e.what());
        }
        run.harmonic_dim = hb.dim();
        run.harmonic_residual = hb.dim() > 0 ? hb.energy_residuals.maxCoeff() : 0.0;
        for (ProblemKind k : config.kinds) {
          if (is_biharmonic(k) && !ops->has_biharmonic) continue;
          ProblemRun pr;
          const auto t0 = std::chrono::steady_clock::now();
          try {
            ProblemSpec spec = assemble_pencil(ops, k);
            spec.domain = dname;
            if (has_cohomology_kernel(k) && is_boundary_pencil(k)) spec.deflation = hb.basis;
            SolveOptions so;
            so.count = config.k_max + hb.dim() + 3;
            pr.spectrum = solve_problem(spec, so);
          } catch (const Error& e) {
            throw NumericalError(where + ", " + to_string(k) + ": " + e.what());
          }
          pr.spectrum.eigenvectors.resize(0, 0);
          pr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          pr.oracle = detail::oracle_values(dn, p, k, static_cast<int>(pr.spectrum.eigenvalues.size()));
          run.problems[k] = std::move(pr);
        }
        if (config.quotients && ops->has_biharmonic) {
          for (ProblemKind k : {ProblemKind::BSD, ProblemKind::BSN1, ProblemKind::BSN3}) {
            const Spectrum* s = run.spectrum(k);
            if (!s || s->trivial) continue;
            try {
              run.quotients[k] = harmonic_field_quotient(ops, k, &hb).value;
            } catch (const NumericalError&) {
              // empty admissible space: no quotient
            }
          }
        }
        res.runs.push_back(std::move(run));
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Inequalities
// ---------------------------------------------------------------------------

struct InequalityCheck {
  std::string name;
  int k = 1;
  double lhs = 0.0, rhs = 0.0;
  double margin = 0.0;  // (rhs - lhs) / max(|lhs|, |rhs|); +inf when rhs is infinite
  bool strict = false;
  bool enforced = true;
  bool pass = true;
};

struct InequalityReport {
  std::string domain;
  int p = 0;
  int n = 0;
  std::map<std::string, std::vector<double>> table;  // lambda, mu, sigma, q, ell, bold_l, l
  std::vector<InequalityCheck> checks;
  bool applicable = true;  // false when p = dim (BSN2, BSN3 trivial)
  bool pass = true;
};

namespace detail {

inline InequalityCheck compare(const std::string& name, int k, double lhs, double rhs, bool strict, bool enforced,
                               const SuiteConfig& c) {
  InequalityCheck ch;
  ch.name = name;
  ch.k = k;
  ch.lhs = lhs;
  ch.rhs = rhs;
  ch.strict = strict;
  ch.enforced = enforced;
  const double inf = std::numeric_limits<double>::infinity();
  if (std::isinf(rhs) && std::isinf(lhs)) {
    ch.margin = 0.0;
    ch.pass = !strict;
  } else if (std::isinf(rhs)) {
    ch.margin = inf;
    ch.pass = true;
  } else if (std::isinf(lhs)) {
    ch.margin = -inf;
    ch.pass = false;
  } else {
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    ch.margin = (rhs - lhs) / scale;
    ch.pass = strict ? ch.margin >= c.strictness : ch.margin >= -c.tol_slack;
  }
  return ch;
}

inline std::vector<double> positives(const Spectrum* s, int k_max) {
  std::vector<double> v;
  for (int k = 1; k <= k_max; ++k) v.push_back(s ? s->positive(k) : std::numeric_limits<double>::quiet_NaN());
  return v;
}

}  // namespace detail

inline InequalityReport verify_kuttler_sigillito(const LevelRun& run, const SuiteConfig& c) {
  InequalityReport rep;
  rep.domain = run.domain;
  rep.p = run.p;
  rep.n = run.n;
  const int K = c.k_max;
  const Spectrum *sl = run.spectrum(ProblemKind::Dirichlet), *sm = run.spectrum(ProblemKind::Neumann),
                 *ss = run.spectrum(ProblemKind::Steklov), *sq = run.spectrum(ProblemKind::BSD),
                 *s1 = run.spectrum(ProblemKind::BSN1), *s2 = run.spectrum(ProblemKind::BSN2),
                 *s3 = run.spectrum(ProblemKind::BSN3);
  if (!sl || !sm || !ss || !sq || !s1 || !s2 || !s3) throw InvalidArgument("missing spectra for " + run.domain);
  const auto lam = detail::positives(sl, K), mu = detail::positives(sm, K), sig = detail::positives(ss, K),
             q = detail::positives(sq, K), ell = detail::positives(s1, K), bl = detail::positives(s2, K),
             l = detail::positives(s3, K);
  rep.table = {{"lambda", lam}, {"mu", mu}, {"sigma", sig}, {"q", q}, {"ell", ell}, {"bold_l", bl}, {"l", l}};
  rep.applicable = run.p <= run.dim - 1;
  if (!rep.applicable) return rep;
  auto add = [&](const std::string& name, int k, double lhs, double rhs, bool strict, bool enforced = true) {
    rep.checks.push_back(detail::compare(name, k, lhs, rhs, strict, enforced, c));
  };
  for (int k = 1; k <= K; ++k) {
    add("ell_k <= l_k", k, ell[k - 1], l[k - 1], false);
    add("l_k <= bold_l_k", k, l[k - 1], bl[k - 1], false);
    add("mu_k sigma_1 <= l_k", k, mu[k - 1] * sig[0], l[k - 1], false);
    add("mu_1 sigma_k <= l_k", k, mu[0] * sig[k - 1], l[k - 1], false);
    // reported only
    add("mu_k sigma_1 <= ell_k", k, mu[k - 1] * sig[0], ell[k - 1], false, false);
    add("mu_1 sigma_k <= ell_k", k, mu[0] * sig[k - 1], ell[k - 1], false, false);
  }
  add("mu_1 sigma_1 < l_1", 1, mu[0] * sig[0], l[0], true);
  add("q_1 sigma_1^2 < l_1", 1, q[0] * sig[0] * sig[0], l[0], true);
  add("1/mu_1 < 1/lambda_1 + (q_1 l_1)^(-1/2)", 1, 1.0 / mu[0], 1.0 / lam[0] + 1.0 / std::sqrt(q[0] * l[0]), true);
  add("1/mu_1 < 1/lambda_1 + 1/(q_1 sigma_1)", 1, 1.0 / mu[0], 1.0 / lam[0] + 1.0 / (q[0] * sig[0]), true);
  add("q_1 sigma_1^2 < ell_1", 1, q[0] * sig[0] * sig[0], ell[0], true, false);
  add("1/mu_1 < 1/lambda_1 + (q_1 bold_l_1)^(-1/2)", 1, 1.0 / mu[0], 1.0 / lam[0] + 1.0 / std::sqrt(q[0] * bl[0]), true,
      false);
  for (const auto& ch : rep.checks) {
    if (ch.enforced && !ch.pass) rep.pass = false;
  }
  return rep;
}

inline std::vector<InequalityReport> verify_kuttler_sigillito(const SuiteResult& suite) {
  std::vector<InequalityReport> out;
  for (const auto& run : suite.runs) out.push_back(verify_kuttler_sigillito(run, suite.config));
  return out;
}

// ---------------------------------------------------------------------------
// Convergence
// ---------------------------------------------------------------------------

struct ConvergenceSeries {
  std::string domain;
  int p = 0;
  ProblemKind kind = ProblemKind::Dirichlet;
  int index = 1;                 // positive-eigenvalue index
  bool self_reference = false;   // compared against the finest level
  double reference = 0.0;
  std::vector<double> h, values, errors, rates;
  bool strictly_decreasing = true;
};

// Errors of the first `indices` positive eigenvalues across levels, against
// the oracle when one exists and against the finest level otherwise.
// rate = log2(e_i / e_{i+1}).
inline std::vector<ConvergenceSeries> convergence_report(const SuiteResult& suite, int indices = 1) {
  std::vector<ConvergenceSeries> out;
  std::map<std::pair<std::string, int>, std::vector<const LevelRun*>> groups;
  for (const auto& r : suite.runs) groups[{r.domain, r.p}].push_back(&r);
  for (const auto& [key, runs] : groups) {
    if (runs.size() < 3) throw InvalidArgument("convergence needs at least 3 levels for " + key.first);
    for (const auto& [kind, pr0] : runs.front()->problems) {
      for (int idx = 1; idx <= indices; ++idx) {
        ConvergenceSeries s;
        s.domain = key.first;
        s.p = key.second;
        s.kind = kind;
        s.index = idx;
        const ProblemRun& fine = runs.back()->problems.at(kind);
        if (fine.spectrum.trivial) continue;
        const int pos = fine.spectrum.kernel_dim + idx - 1;
        if (pos < static_cast<int>(fine.oracle.size())) {
          s.reference = fine.oracle[pos];
        } else {
          s.self_reference = true;
          s.reference = fine.spectrum.positive(idx);
        }
        if (!std::isfinite(s.reference)) continue;
        const std::size_t used = s.self_reference ? runs.size() - 1 : runs.size();
        for (std::size_t i = 0; i < used; ++i) {
          const auto& pr = runs[i]->problems.at(kind);
          const double v = pr.spectrum.positive(idx);
          s.h.push_back(runs[i]->h);
          s.values.push_back(v);
          s.errors.push_back(std::abs(v - s.reference));
        }
        for (std::size_t i = 0; i + 1 < s.errors.size(); ++i) {
          s.rates.push_back(std::log2(s.errors[i] / s.errors[i + 1]));
          if (!(s.errors[i + 1] < s.errors[i])) s.strictly_decreasing = false;
        }
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace detail {

// JSON cannot hold infinities; they are written as null.
inline nlohmann::json number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline nlohmann::json numbers(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

}  // namespace detail

inline nlohmann::json to_json(const SuiteResult& s) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : s.runs) {
    nlohmann::json j;
    j["domain"] = r.domain;
    j["p"] = r.p;
    j["n"] = r.n;
    j["h"] = r.h;
    j["scheme"] = to_string(r.scheme);
    j["dofs"] = r.dofs;
    j["harmonic_dim"] = r.harmonic_dim;
    j["harmonic_residual"] = r.harmonic_residual;
    nlohmann::json probs = nlohmann::json::object();
    for (const auto& [k, pr] : r.problems) {
      nlohmann::json pj = to_json(pr.spectrum);
      if (!pr.oracle.empty()) pj["oracle"] = detail::numbers(pr.oracle);
      probs[to_string(k)] = pj;
    }
    j["problems"] = probs;
    nlohmann::json qs = nlohmann::json::object();
    for (const auto& [k, v] : r.quotients) qs[to_string(k)] = v;
    j["quotients"] = qs;
    runs.push_back(j);
  }
  return {{"runs", runs}};
}

inline nlohmann::json to_json(const InequalityReport& r) {
  nlohmann::json j;
  j["domain"] = r.domain;
  j["p"] = r.p;
  j["n"] = r.n;
  j["applicable"] = r.applicable;
  j["pass"] = r.pass;
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [name, v] : r.table) t[name] = detail::numbers(v);
  j["table"] = t;
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : r.checks) {
    cs.push_back({{"name", c.name}, {"k", c.k}, {"lhs", detail::number(c.lhs)}, {"rhs", detail::number(c.rhs)},
                  {"margin", detail::number(c.margin)}, {"strict", c.strict}, {"enforced", c.enforced}, {"pass", c.pass}});
  }
  j["checks"] = cs;
  return j;
}

inline nlohmann::json to_json(const std::vector<ConvergenceSeries>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& s : v) {
    a.push_back({{"domain", s.domain}, {"p", s.p}, {"kind", to_string(s.kind)}, {"index", s.index},
                 {"self_reference", s.self_reference}, {"reference", s.reference}, {"h", s.h},
                 {"values", detail::numbers(s.values)}, {"errors", s.errors}, {"rates", s.rates},
                 {"strictly_decreasing", s.strictly_decreasing}});
  }
  return a;
}

// One row per eigenvalue: domain,p,n,h,kind,index,eigenvalue,residual,kernel_dim
inline void write_spectra_csv(std::ostream& os, const SuiteResult& s) {
  os << "domain,p,n,h,kind,index,eigenvalue,residual,kernel_dim\n";
  os.precision(17);
  for (const auto& r : s.runs) {
    for (const auto& [k, pr] : r.problems) {
      const auto& sp = pr.spectrum;
      for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i) {
        os << '"' << r.domain << "\"," << r.p << ',' << r.n << ',' << r.h << ',' << to_string(k) << ',' << i << ','
           << sp.eigenvalues[i] << ',' << sp.residuals[i] << ',' << sp.kernel_dim << '\n';
      }
    }
  }
}

// One row per check: domain,p,n,name,k,lhs,rhs,margin,strict,enforced,pass
inline void write_inequalities_csv(std::ostream& os, const std::vector<InequalityReport>& reps) {
  os << "domain,p,n,name,k,lhs,rhs,margin,strict,enforced,pass\n";
  os.precision(17);
  for (const auto& r : reps) {
    for (const auto& c : r.checks) {
      os << '"' << r.domain << "\"," << r.p << ',' << r.n << ",\"" << c.name << "\"," << c.k << ',' << c.lhs << ','
         << c.rhs << ',' << c.margin << ',' << c.strict << ',' << c.enforced << ',' << c.pass << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

// Reads a suite configuration; unknown keys and wrong types are rejected
// with the offending field named.
inline SuiteConfig suite_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
  static const std::vector<std::string> known{"domains", "degrees",   "levels",    "domain_levels",
                                              "domain_degrees", "domain_scheme", "k_max", "penalty",
                                              "tol_slack", "strictness", "quotients", "kinds", "seed"};
  for (const auto& [key, v] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw InvalidArgument("config: unknown field '" + key + "'");
  }
  SuiteConfig c;
  auto get = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    try {
      out = j.at(key).get<std::decay_t<decltype(out)>>();
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("config: field '") + key + "': " + e.what());
    }
  };
  get("domains", c.domains);
  get("degrees", c.degrees);
  get("levels", c.levels);
  get("domain_levels", c.domain_levels);
  get("domain_degrees", c.domain_degrees);
  get("domain_scheme", c.domain_scheme);
  get("k_max", c.k_max);
  get("penalty", c.penalty);
  get("tol_slack", c.tol_slack);
  get("strictness", c.strictness);
  get("quotients", c.quotients);
  get("seed", c.seed);
  if (j.contains("kinds")) {
    std::vector<std::string> names;
    get("kinds", names);
    c.kinds.clear();
    for (const auto& n : names) c.kinds.push_back(parse_problem_kind(n));
  }
  for (const auto& d : c.domains) {
    try {
      (void)DomainName::parse(d);
    } catch (const Error& e) {
      throw InvalidArgument("config: field 'domains': " + std::string(e.what()));
    }
  }
  validate(c);
  return c;
}

}  // namespace bsnlab
