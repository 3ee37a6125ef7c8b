#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bsnlab/error.hpp"
#include "bsnlab/exterior.hpp"

namespace bsnlab::symbol {

using ext::CMatrix;
using ext::Complex;

enum class Problem { BSN1, BSN2, BSN3, BiLap1, BiLap2, DeltaNeu };

inline const std::vector<Problem>& all_problems() {
  static const std::vector<Problem> v{Problem::BSN1, Problem::BSN2, Problem::BSN3,
                                      Problem::BiLap1, Problem::BiLap2, Problem::DeltaNeu};
  return v;
}

inline std::string to_string(Problem p) {
  switch (p) {
    case Problem::BSN1: return "bsn1";
    case Problem::BSN2: return "bsn2";
    case Problem::BSN3: return "bsn3";
    case Problem::BiLap1: return "bilap1";
    case Problem::BiLap2: return "bilap2";
    case Problem::DeltaNeu: return "deltaneu";
  }
  return "?";
}

inline Problem parse_problem(const std::string& s) {
  for (Problem p : all_problems()) {
    if (to_string(p) == s) return p;
  }
  throw InvalidArgument("unknown symbol problem '" + s + "'");
}

inline int operator_order(Problem p) { return p == Problem::DeltaNeu ? 2 : 4; }

// Tangential covector v (n-1 components in the boundary frame); the inward
// normal is the last frame vector.
struct CovectorFrame {
  int n = 2;
  int p = 0;
  Eigen::VectorXd v;  // size n - 1

  [[nodiscard]] double norm() const { return v.norm(); }
};

inline void validate(const CovectorFrame& f) {
  if (f.n < 2) throw InvalidArgument("ambient dimension must be at least 2");
  if (f.p < 0 || f.p > f.n) throw InvalidArgument("degree out of range");
  if (f.v.size() != f.n - 1) throw InvalidArgument("covector must have n - 1 tangential components");
  if (!(f.v.norm() > 0.0)) throw InvalidArgument("covector must be nonzero");
}

// Bounded solutions of the symbol ODE. Order 4: e^{-|v|t}(t alpha + beta),
// columns (alpha basis, beta basis). Order 2: e^{-|v|t} alpha.
struct OdeSpace {
  int order = 4;
  int form_dim = 0;  // C(n, p)
  [[nodiscard]] int dim() const { return order == 4 ? 2 * form_dim : form_dim; }
};

inline OdeSpace ode_space_basis(const CovectorFrame& f, int order) {
  validate(f);
  if (order != 2 && order != 4) throw InvalidArgument("operator order must be 2 or 4");
  return {order, static_cast<int>(ext::binomial(f.n, f.p))};
}

struct SymbolMatrix {
  Problem problem = Problem::BSN1;
  CovectorFrame frame;
  OdeSpace space;
  CMatrix phi;  // rows: boundary-operator targets, columns: M+ basis
};

namespace detail {

// Blocks acting on one coefficient form (alpha or beta).
struct Blocks {
  CMatrix nor;        // nu _|            : Lambda^p -> Lambda^{p-1}_tan
  CMatrix tan;        // iota^*           : Lambda^p -> Lambda^p_tan
  CMatrix v_wedge_n;  // v ^ (nu _| .)     : Lambda^p -> Lambda^p_tan
  CMatrix v_int_t;    // v _| iota^*      : Lambda^p -> Lambda^{p-1}_tan
};

inline Blocks blocks(const CovectorFrame& f) {
  const int n = f.n, p = f.p;
  Blocks b;
  b.nor = ext::normal_part(n, p).cast<double>().cast<Complex>();
  b.tan = ext::tangential_part(n, p).cast<double>().cast<Complex>();
  const int pm = std::max(p - 1, 0);
  const Eigen::MatrixXd wv = ext::wedge(f.v, pm);
  const Eigen::MatrixXd iv = ext::interior(f.v, p);
  if (p >= 1) {
    b.v_wedge_n = (wv * ext::normal_part(n, p).cast<double>()).cast<Complex>();
    b.v_int_t = (iv * ext::tangential_part(n, p).cast<double>()).cast<Complex>();
  } else {
    b.v_wedge_n = CMatrix::Zero(b.tan.rows(), b.tan.cols());
    b.v_int_t = CMatrix::Zero(0, b.tan.cols());
  }
  return b;
}

// Stack row blocks, each given as (block on alpha, block on beta).
inline CMatrix stack(const std::vector<std::pair<CMatrix, CMatrix>>& rows) {
  Eigen::Index r = 0;
  const Eigen::Index c = rows.front().first.cols();
  for (const auto& [a, b] : rows) r += a.rows();
  CMatrix out = CMatrix::Zero(r, 2 * c);
  Eigen::Index at = 0;
  for (const auto& [a, b] : rows) {
    out.block(at, 0, a.rows(), c) = a;
    out.block(at, c, b.rows(), c) = b;
    at += a.rows();
  }
  return out;
}

}  // namespace detail

// Shapiro-Lopatinskij map evaluated on the basis of M+.
inline SymbolMatrix symbol_phi(Problem problem, const CovectorFrame& f) {
  SymbolMatrix s;
  s.problem = problem;
  s.frame = f;
  s.space = ode_space_basis(f, operator_order(problem));
  const detail::Blocks b = detail::blocks(f);
  const double nv = f.norm();
  const Complex i(0.0, 1.0);
  const CMatrix zn = CMatrix::Zero(b.nor.rows(), b.nor.cols());
  const CMatrix zt = CMatrix::Zero(b.tan.rows(), b.tan.cols());
  // shared rows
  const std::pair<CMatrix, CMatrix> nor_beta{zn, b.nor};
  const std::pair<CMatrix, CMatrix> tan_mixed{b.tan, -nv * b.tan + i * b.v_wedge_n};
  const std::pair<CMatrix, CMatrix> deriv_tan{2.0 * nv * (i * b.v_wedge_n - nv * b.tan), zt};
  const std::pair<CMatrix, CMatrix> deriv_nor{2.0 * nv * b.nor, zn};
  const std::pair<CMatrix, CMatrix> codiff{-b.nor, nv * b.nor + i * b.v_int_t};
  const std::pair<CMatrix, CMatrix> tan_beta{zt, b.tan};
  switch (problem) {
    case Problem::BSN1:
    case Problem::BSN3:
      s.phi = detail::stack({nor_beta, tan_mixed, deriv_tan, deriv_nor});
      break;
    case Problem::BSN2:
      s.phi = detail::stack({nor_beta, tan_mixed, deriv_tan, codiff});
      break;
    case Problem::BiLap1:
      s.phi = detail::stack({nor_beta, tan_mixed, tan_beta, codiff});
      break;
    case Problem::BiLap2:
      s.phi = detail::stack({nor_beta, tan_mixed, tan_beta, deriv_nor});
      break;
    case Problem::DeltaNeu: {
      const Eigen::Index c = b.tan.cols();
      CMatrix phi(b.nor.rows() + b.tan.rows(), c);
      phi << b.nor, -nv * b.tan + i * b.v_wedge_n;
      s.phi = phi;
      break;
    }
  }
  return s;
}

struct IsomorphismCheck {
  bool injective = false;
  bool square = false;
  double min_singular_value = 0.0;
  double max_singular_value = 0.0;
};

inline IsomorphismCheck check_isomorphism(const CMatrix& phi, double tol = 1e-10) {
  IsomorphismCheck c;
  c.square = phi.rows() == phi.cols();
  if (phi.cols() == 0) {
    c.injective = true;
    return c;
  }
  if (phi.rows() < phi.cols()) return c;
  Eigen::JacobiSVD<CMatrix> svd(phi);
  const auto& s = svd.singularValues();
  c.max_singular_value = s[0];
  c.min_singular_value = s[s.size() - 1];
  c.injective = c.min_singular_value > tol * c.max_singular_value;
  return c;
}

inline IsomorphismCheck check_isomorphism(const SymbolMatrix& s, double tol = 1e-10) {
  return check_isomorphism(s.phi, tol);
}

// ---------------------------------------------------------------------------
// Sweep over random frames
// ---------------------------------------------------------------------------

struct SweepConfig {
  std::vector<int> dims{2, 3, 4};
  std::vector<int> degrees;   // empty: all p in 0..n
  int samples = 100;
  double vmin = 0.1, vmax = 10.0;
  unsigned seed = 42;
  double tol = 1e-10;
  std::vector<Problem> problems = all_problems();
};

struct SweepSample {
  Problem problem;
  int n, p;
  double v_norm, min_sv;
  bool injective;
};

struct SweepReport {
  std::vector<SweepSample> samples;
  bool all_injective = true;
  bool bsn3_equals_bsn1 = true;
  bool dimensions_ok = true;  // dim M+ = 2 C(n,p) (C(n,p) for order 2) and Phi square
};

// Random tangential direction; |v| log-uniform on [vmin, vmax].
inline CovectorFrame random_frame(int n, int p, double vmin, double vmax, std::mt19937& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(std::log(vmin), std::log(vmax));
  CovectorFrame f;
  f.n = n;
  f.p = p;
  f.v.resize(n - 1);
  do {
    for (int k = 0; k < n - 1; ++k) f.v[k] = g(rng);
  } while (f.v.norm() < 1e-8);
  f.v *= std::exp(u(rng)) / f.v.norm();
  return f;
}

inline SweepReport symbol_sweep(const SweepConfig& cfg) {
  if (cfg.samples < 1) throw InvalidArgument("samples must be positive");
  if (!(cfg.vmin > 0.0 && cfg.vmin <= cfg.vmax)) throw InvalidArgument("need 0 < vmin <= vmax");
  SweepReport rep;
  std::mt19937 rng(cfg.seed);
  for (int n : cfg.dims) {
    std::vector<int> ps = cfg.degrees;
    if (ps.empty()) {
      for (int p = 0; p <= n; ++p) ps.push_back(p);
    }
    for (int p : ps) {
      if (p < 0 || p > n) continue;
      for (int t = 0; t < cfg.samples; ++t) {
        const CovectorFrame f = random_frame(n, p, cfg.vmin, cfg.vmax, rng);
        for (Problem pr : cfg.problems) {
          const SymbolMatrix s = symbol_phi(pr, f);
          const long long expect = (operator_order(pr) == 4 ? 2 : 1) * ext::binomial(n, p);
          if (s.space.dim() != expect || s.phi.cols() != expect || s.phi.rows() != expect) rep.dimensions_ok = false;
          const auto c = check_isomorphism(s, cfg.tol);
          rep.samples.push_back({pr, n, p, f.norm(), c.min_singular_value, c.injective});
          rep.all_injective = rep.all_injective && c.injective;
        }
        // entrywise identity of the two maps
        const CMatrix a = symbol_phi(Problem::BSN1, f).phi, b = symbol_phi(Problem::BSN3, f).phi;
        if (a.rows() != b.rows() || a.cols() != b.cols() || (a - b).cwiseAbs().maxCoeff() != 0.0) rep.bsn3_equals_bsn1 = false;
      }
    }
  }
  return rep;
}

inline nlohmann::json to_json(const SweepReport& r) {
  nlohmann::json j;
  j["all_injective"] = r.all_injective;
  j["bsn3_equals_bsn1"] = r.bsn3_equals_bsn1;
  j["dimensions_ok"] = r.dimensions_ok;
  nlohmann::json s = nlohmann::json::array();
  for (const auto& x : r.samples) {
    s.push_back({{"problem", to_string(x.problem)}, {"n", x.n}, {"p", x.p}, {"v_norm", x.v_norm},
                 {"min_sv", x.min_sv}, {"injective", x.injective}});
  }
  j["samples"] = s;
  return j;
}

}  // namespace bsnlab::symbol
