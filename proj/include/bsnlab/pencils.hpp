#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <nlohmann/json.hpp>

#include "bsnlab/discretization.hpp"
#include "bsnlab/eigensolve.hpp"
#include "bsnlab/error.hpp"

namespace bsnlab {

enum class ProblemKind { Dirichlet, Neumann, Steklov, BSD, BSN1, BSN2, BSN3 };

inline const std::vector<ProblemKind>& all_problem_kinds() {
  static const std::vector<ProblemKind> kinds = {ProblemKind::Dirichlet, ProblemKind::Neumann, ProblemKind::Steklov,
                                                 ProblemKind::BSD,       ProblemKind::BSN1,    ProblemKind::BSN2,
                                                 ProblemKind::BSN3};
  return kinds;
}

inline std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Dirichlet:
      return "dirichlet";
    case ProblemKind::Neumann:
      return "neumann";
    case ProblemKind::Steklov:
      return "steklov";
    case ProblemKind::BSD:
      return "bsd";
    case ProblemKind::BSN1:
      return "bsn1";
    case ProblemKind::BSN2:
      return "bsn2";
    case ProblemKind::BSN3:
      return "bsn3";
  }
  return "unknown";
}

inline ProblemKind parse_problem_kind(const std::string& s) {
  for (ProblemKind k : all_problem_kinds()) {
    if (to_string(k) == s) return k;
  }
  throw InvalidArgument("unknown problem '" + s + "'");
}

inline bool is_biharmonic(ProblemKind k) {
  return k == ProblemKind::BSD || k == ProblemKind::BSN1 || k == ProblemKind::BSN2 || k == ProblemKind::BSN3;
}

// Kinds whose kernel is the absolute cohomology space.
inline bool has_cohomology_kernel(ProblemKind k) {
  return k != ProblemKind::Dirichlet && k != ProblemKind::BSD;
}

// Kinds whose B form lives on the boundary only.
inline bool is_boundary_pencil(ProblemKind k) {
  return k != ProblemKind::Dirichlet && k != ProblemKind::Neumann;
}

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Dirichlet;
  int degree = 0;
  SparseMatrix A;
  SparseMatrix B;
  SparseMatrix C;           // essential conditions C x = 0
  MatrixXd deflation;       // cohomology basis, columns in full coordinates (may be empty)
  SparseMatrix orthogonality; // inner product used to split off the deflation basis
  std::shared_ptr<const OperatorSet> ops;
  std::string domain;
  double h = 0.0;

  [[nodiscard]] int size() const { return static_cast<int>(A.rows()); }
};

namespace detail {

inline SparseMatrix stack_rows(const std::vector<const SparseMatrix*>& blocks, int cols) {
  Triplets t;
  int offset = 0;
  for (const SparseMatrix* b : blocks) {
    for (int k = 0; k < b->outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(*b, k); it; ++it) t.emplace_back(offset + it.row(), it.col(), it.value());
    }
    offset += static_cast<int>(b->rows());
  }
  SparseMatrix out(offset, cols);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

inline SparseMatrix symmetrize(const SparseMatrix& a) {
  SparseMatrix s = 0.5 * (a + SparseMatrix(a.transpose()));
  s.prune(0.0);
  return s;
}

}  // namespace detail

// The (A, B, C) triple of each problem.
inline ProblemSpec assemble_pencil(std::shared_ptr<const OperatorSet> ops, ProblemKind kind) {
  if (!ops) throw InvalidArgument("null operator set");
  const OperatorSet& o = *ops;
  const int n = o.size();
  if (is_biharmonic(kind) && !o.has_biharmonic) {
    throw InvalidArgument("biharmonic problems need a second-order scheme (p2 or hermite3)");
  }
  ProblemSpec s;
  s.kind = kind;
  s.degree = o.space->degree;
  s.ops = ops;
  s.h = mesh_size(*o.space->mesh);
  const auto& cs = o.constraints;
  switch (kind) {
    case ProblemKind::Dirichlet:
      s.A = o.hodge;
      s.B = o.mass;
      s.C = cs.full_trace;
      break;
    case ProblemKind::Neumann:
      s.A = o.hodge;
      s.B = o.mass;
      s.C = cs.normal;
      break;
    case ProblemKind::Steklov:
      s.A = o.hodge;
      s.B = o.boundary_form(Trace::Tangential);
      s.C = cs.normal;
      break;
    case ProblemKind::BSD:
      s.A = o.biharmonic;
      s.B = o.boundary_form(Trace::NormalDifferential) + o.boundary_form(Trace::TangentialCodiff);
      s.C = cs.vertex_trace;
      break;
    case ProblemKind::BSN1:
      s.A = o.biharmonic;
      s.B = o.boundary_form(Trace::Tangential) + o.boundary_form(Trace::TangentialCodiff);
      s.C = detail::stack_rows({&cs.normal, &cs.normal_differential}, n);
      break;
    case ProblemKind::BSN2:
      s.A = o.biharmonic;
      s.B = o.boundary_form(Trace::Tangential);
      s.C = detail::stack_rows({&cs.normal, &cs.normal_differential, &cs.tangential_codiff}, n);
      break;
    case ProblemKind::BSN3:
      s.A = o.biharmonic;
      s.B = o.boundary_form(Trace::Tangential);
      s.C = detail::stack_rows({&cs.normal, &cs.normal_differential}, n);
      break;
  }
  s.A = detail::symmetrize(s.A);
  s.B = detail::symmetrize(s.B);
  s.C.prune(0.0);
  // the admissible spaces are taken L2(dM)-orthogonal to the cohomology
  s.orthogonality = is_boundary_pencil(kind)
                        ? detail::symmetrize(o.boundary_form(Trace::Tangential) + o.boundary_form(Trace::Normal))
                        : o.mass;
  return s;
}

// ---------------------------------------------------------------------------
// Constraint elimination
// ---------------------------------------------------------------------------

// Basis N of ker C restricted to a set of dofs. Dofs outside the support of
// C map to identity columns; the support block is a dense orthonormal null
// basis of C restricted to it.
struct ConstraintBasis {
  std::vector<int> dofs;        // the dofs spanned (global indices)
  std::vector<int> free;        // dofs untouched by C (positions into `dofs`)
  std::vector<int> support;     // dofs touched by C (positions into `dofs`)
  MatrixXd local;               // |support| x r null basis
  int rank = 0;
  double smallest_kept = 0.0;   // relative singular values around the cutoff
  double largest_dropped = 0.0;

  [[nodiscard]] int columns() const { return static_cast<int>(free.size() + local.cols()); }

  [[nodiscard]] MatrixXd dense() const {
    MatrixXd n = MatrixXd::Zero(static_cast<Eigen::Index>(dofs.size()), columns());
    for (std::size_t i = 0; i < free.size(); ++i) n(free[i], static_cast<Eigen::Index>(i)) = 1.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      n.block(support[i], static_cast<Eigen::Index>(free.size()), 1, local.cols()) = local.row(static_cast<Eigen::Index>(i));
    }
    return n;
  }

  [[nodiscard]] SparseMatrix sparse() const {
    Triplets t;
    for (std::size_t i = 0; i < free.size(); ++i) t.emplace_back(free[i], static_cast<int>(i), 1.0);
    for (std::size_t i = 0; i < support.size(); ++i) {
      for (Eigen::Index j = 0; j < local.cols(); ++j) {
        if (local(static_cast<Eigen::Index>(i), j) != 0.0)
          t.emplace_back(support[i], static_cast<int>(free.size() + j), local(static_cast<Eigen::Index>(i), j));
      }
    }
    SparseMatrix n(static_cast<Eigen::Index>(dofs.size()), columns());
    n.setFromTriplets(t.begin(), t.end());
    return n;
  }
};

struct ReductionOptions {
  double rank_tol = 1e-10;     // relative singular value cutoff
  double ambiguity = 100.0;    // no singular value may sit within this factor of the cutoff
};

inline ConstraintBasis constraint_basis(const SparseMatrix& c, const std::vector<int>& dofs, const ReductionOptions& opt = {}) {
  ConstraintBasis out;
  out.dofs = dofs;
  std::vector<int> position(c.cols(), -1);
  for (std::size_t i = 0; i < dofs.size(); ++i) position[dofs[i]] = static_cast<int>(i);
  std::vector<char> touched(dofs.size(), 0);
  for (int k = 0; k < c.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(c, k); it; ++it) {
      if (it.value() == 0.0) continue;
      if (position[it.col()] < 0) throw InvalidArgument("constraint touches a dof outside the reduction set");
      touched[position[it.col()]] = 1;
    }
  }
  std::vector<int> local_index(dofs.size(), -1);
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    if (touched[i]) {
      local_index[i] = static_cast<int>(out.support.size());
      out.support.push_back(static_cast<int>(i));
    } else {
      out.free.push_back(static_cast<int>(i));
    }
  }
  const int ns = static_cast<int>(out.support.size());
  if (ns == 0) {
    out.local = MatrixXd(0, 0);
    return out;
  }
  MatrixXd cs = MatrixXd::Zero(c.rows(), ns);
  for (int k = 0; k < c.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(c, k); it; ++it) cs(it.row(), local_index[position[it.col()]]) += it.value();
  }
  // rows of different physical scale are normalized before the rank decision
  std::vector<Eigen::Index> rows;
  for (Eigen::Index r = 0; r < cs.rows(); ++r) {
    const double nr = cs.row(r).norm();
    if (nr > 0.0) {
      cs.row(r) /= nr;
      rows.push_back(r);
    }
  }
  MatrixXd cn(static_cast<Eigen::Index>(rows.size()), ns);
  for (std::size_t i = 0; i < rows.size(); ++i) cn.row(static_cast<Eigen::Index>(i)) = cs.row(rows[i]);
  // null space of cn from the eigenvectors of cn^T cn would square the
  // condition number; use a full SVD instead
  Eigen::BDCSVD<MatrixXd> svd(cn, Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  int rank = 0;
  while (rank < sv.size() && sv[rank] > opt.rank_tol * smax) ++rank;
  out.rank = rank;
  out.smallest_kept = rank > 0 ? sv[rank - 1] / smax : 0.0;
  out.largest_dropped = rank < sv.size() ? sv[rank] / std::max(smax, 1e-300) : 0.0;
  if ((rank > 0 && out.smallest_kept < opt.rank_tol * opt.ambiguity) ||
      (rank < sv.size() && out.largest_dropped > opt.rank_tol / opt.ambiguity)) {
    throw NumericalError("ambiguous constraint rank: singular values straddle the cutoff");
  }
  out.local = svd.matrixV().rightCols(ns - rank);
  return out;
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

struct Spectrum {
  ProblemKind kind = ProblemKind::Dirichlet;
  int degree = 0;
  std::string domain;
  double h = 0.0;
  bool trivial = false;
  VectorXd eigenvalues;      // kernel entries reported as exact zeros
  VectorXd raw_eigenvalues;  // as computed
  MatrixXd eigenvectors;     // full coefficient vectors
  VectorXd residuals;
  int kernel_dim = 0;
  int finite_count = 0;
  int reduced_dim = 0;

  // k-th positive eigenvalue, k >= 1; +inf when the finite spectrum is exhausted.
  [[nodiscard]] double positive(int k) const {
    const int i = kernel_dim + k - 1;
    if (k < 1 || i >= eigenvalues.size()) return std::numeric_limits<double>::infinity();
    return eigenvalues[i];
  }
  [[nodiscard]] int positive_count() const { return static_cast<int>(eigenvalues.size()) - kernel_dim; }
};

struct SolveOptions {
  int count = 12;                  // eigenvalues to return (kernel included); < 0 for all
  double kernel_tol = 1e-8;        // relative to the largest computed eigenvalue
  double kernel_gap = 10.0;
  double chi_tol = 1e-10;
  double null_tol = 1e-9;          // numerical null space of the condensed A
  int sparse_threshold = 600;      // interior pencils above this size use the sparse solver
  ReductionOptions reduction;
};

namespace detail {

inline std::vector<int> column_support(const SparseMatrix& a, std::vector<char>& mark) {
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      if (it.value() != 0.0) mark[it.col()] = 1;
    }
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < mark.size(); ++i) {
    if (mark[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

inline MatrixXd dense_block(const SparseMatrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> rpos(a.rows(), -1), cpos(a.cols(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) rpos[rows[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < cols.size(); ++i) cpos[cols[i]] = static_cast<int>(i);
  MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      if (rpos[it.row()] >= 0 && cpos[it.col()] >= 0) out(rpos[it.row()], cpos[it.col()]) += it.value();
    }
  }
  return out;
}

inline SparseMatrix sparse_block(const SparseMatrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> rpos(a.rows(), -1), cpos(a.cols(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) rpos[rows[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < cols.size(); ++i) cpos[cols[i]] = static_cast<int>(i);
  Triplets t;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      if (rpos[it.row()] >= 0 && cpos[it.col()] >= 0) t.emplace_back(rpos[it.row()], cpos[it.col()], it.value());
    }
  }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

inline void finish_spectrum(Spectrum& sp, const Eigenpairs& e, const SolveOptions& opt) {
  sp.raw_eigenvalues = e.values;
  sp.residuals = e.residuals;
  sp.finite_count = e.finite_count;
  sp.kernel_dim = std::max(e.deflated, count_kernel(e.values, opt.kernel_tol, opt.kernel_gap));
  sp.eigenvalues = e.values;
  for (int i = 0; i < sp.kernel_dim; ++i) sp.eigenvalues[i] = 0.0;
}

}  // namespace detail

// Reduced dense pencil (N^T A N, N^T B N) over ker C; exposed for the
// brute-force oracle and for tests.
struct ReducedPencil {
  MatrixXd A;
  MatrixXd B;
  MatrixXd N;                 // full coordinates = N * reduced coordinates
  std::vector<int> dofs;      // rows of N map to these global dofs
  bool condensed = false;     // interior dofs eliminated by static condensation
  MatrixXd interior_map;      // when condensed: x_R = interior_map * x_S
  std::vector<int> interior;
};

inline bool is_trivial(const ProblemSpec& spec) {
  for (int k = 0; k < spec.B.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(spec.B, k); it; ++it) {
      if (it.value() != 0.0) return false;
    }
  }
  return true;
}

// Eliminates the constraints. Boundary pencils also condense the dofs that
// neither B nor C sees, so the dense problem lives near the boundary.
inline ReducedPencil reduce_constraints(const ProblemSpec& spec, const ReductionOptions& opt = {}) {
  const int n = spec.size();
  ReducedPencil r;
  if (!is_boundary_pencil(spec.kind)) {
    r.dofs.resize(n);
    for (int i = 0; i < n; ++i) r.dofs[i] = i;
    const auto basis = constraint_basis(spec.C, r.dofs, opt);
    r.N = basis.dense();
    const SparseMatrix ns = r.N.sparseView();
    r.A = MatrixXd(SparseMatrix(ns.transpose() * spec.A * ns));
    r.B = MatrixXd(SparseMatrix(ns.transpose() * spec.B * ns));
    r.A = 0.5 * (r.A + r.A.transpose()).eval();
    r.B = 0.5 * (r.B + r.B.transpose()).eval();
    return r;
  }
  std::vector<char> mark(n, 0);
  detail::column_support(spec.B, mark);
  if (spec.deflation.cols() > 0) detail::column_support(spec.orthogonality, mark);
  const std::vector<int> s = detail::column_support(spec.C, mark);
  std::vector<int> rest;
  for (int i = 0; i < n; ++i) {
    if (!mark[i]) rest.push_back(i);
  }
  r.dofs = s;
  r.interior = rest;
  r.condensed = true;
  const MatrixXd ass = detail::dense_block(spec.A, s, s);
  MatrixXd schur = ass;
  if (!rest.empty()) {
    const SparseMatrix arr = detail::sparse_block(spec.A, rest, rest);
    const SparseMatrix ars = detail::sparse_block(spec.A, rest, s);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(arr);
    if (ldlt.info() != Eigen::Success) throw NumericalError("interior block factorization failed");
    const MatrixXd x = ldlt.solve(MatrixXd(ars));
    if (ldlt.info() != Eigen::Success) throw NumericalError("interior block solve failed");
    schur -= MatrixXd(ars.transpose()) * x;
    r.interior_map = -x;
  }
  const auto basis = constraint_basis(spec.C, s, opt);
  r.N = basis.dense();
  const MatrixXd bss = detail::dense_block(spec.B, s, s);
  r.A = r.N.transpose() * schur * r.N;
  r.B = r.N.transpose() * bss * r.N;
  r.A = 0.5 * (r.A + r.A.transpose()).eval();
  r.B = 0.5 * (r.B + r.B.transpose()).eval();
  return r;
}

// Maps reduced coordinates back to full coefficient vectors.
inline MatrixXd expand(const ReducedPencil& r, const MatrixXd& y, int n) {
  const MatrixXd xs = r.N * y;
  MatrixXd x = MatrixXd::Zero(n, y.cols());
  for (std::size_t i = 0; i < r.dofs.size(); ++i) x.row(r.dofs[i]) = xs.row(static_cast<Eigen::Index>(i));
  if (r.condensed && !r.interior.empty()) {
    const MatrixXd xr = r.interior_map * xs;
    for (std::size_t i = 0; i < r.interior.size(); ++i) x.row(r.interior[i]) = xr.row(static_cast<Eigen::Index>(i));
  }
  return x;
}

inline Spectrum solve_problem(const ProblemSpec& spec, const SolveOptions& opt = {}) {
  Spectrum sp;
  sp.kind = spec.kind;
  sp.degree = spec.degree;
  sp.domain = spec.domain;
  sp.h = spec.h;
  if (is_trivial(spec)) {
    sp.trivial = true;
    return sp;
  }
  // large interior pencils: sparse shift-and-invert for the lowest part
  if (!is_boundary_pencil(spec.kind) && opt.count > 0 && spec.size() > opt.sparse_threshold) {
    std::vector<int> all(spec.size());
    for (int i = 0; i < spec.size(); ++i) all[i] = i;
    const SparseMatrix ns = constraint_basis(spec.C, all, opt.reduction).sparse();
    const SparseMatrix a = detail::symmetrize(SparseMatrix(ns.transpose() * spec.A * ns));
    const SparseMatrix b = detail::symmetrize(SparseMatrix(ns.transpose() * spec.B * ns));
    sp.reduced_dim = static_cast<int>(a.rows());
    if (sp.reduced_dim == 0) {
      sp.trivial = true;
      return sp;
    }
    const Eigenpairs e = solve_definite_sparse(a, b, std::min(opt.count, sp.reduced_dim));
    detail::finish_spectrum(sp, e, opt);
    sp.eigenvectors = ns * e.vectors;
    return sp;
  }
  const ReducedPencil r = reduce_constraints(spec, opt.reduction);
  sp.reduced_dim = static_cast<int>(r.A.rows());
  if (sp.reduced_dim == 0) {
    sp.trivial = true;
    return sp;
  }
  const int d = static_cast<int>(spec.deflation.cols());
  if (!is_boundary_pencil(spec.kind)) {
    const Eigenpairs e = solve_definite(r.A, r.B, opt.count);
    detail::finish_spectrum(sp, e, opt);
    sp.eigenvectors = expand(r, e.vectors, spec.size());
    return sp;
  }
  if (d == 0) {
    const MatrixXd z = null_space(r.A, opt.null_tol);
    const Eigenpairs e = solve_semidefinite(r.A, r.B, z, opt.count, opt.chi_tol, 1e2 * opt.null_tol);
    if (e.values.size() == 0) {
      sp.trivial = true;
      return sp;
    }
    detail::finish_spectrum(sp, e, opt);
    sp.eigenvectors = expand(r, e.vectors, spec.size());
    return sp;
  }
  // Deflate the given cohomology basis: solve on {x : h^T G x = 0}.
  if (spec.deflation.rows() != spec.size()) throw InvalidArgument("deflation basis has the wrong row count");
  MatrixXd hs(static_cast<Eigen::Index>(r.dofs.size()), d);
  for (std::size_t i = 0; i < r.dofs.size(); ++i) hs.row(static_cast<Eigen::Index>(i)) = spec.deflation.row(r.dofs[i]);
  const MatrixXd gss = detail::dense_block(spec.orthogonality, r.dofs, r.dofs);
  const MatrixXd f = r.N.transpose() * (gss * hs);
  const Eigenpairs fin = solve_reciprocal(r.A, r.B, f, opt.count < 0 ? -1 : std::max(opt.count - d, 0), opt.chi_tol);
  const int m = static_cast<int>(fin.values.size());
  sp.eigenvalues = VectorXd::Zero(d + m);
  sp.raw_eigenvalues.resize(d + m);
  sp.residuals.resize(d + m);
  sp.eigenvectors.resize(spec.size(), d + m);
  for (int i = 0; i < d; ++i) {
    const VectorXd hv = spec.deflation.col(i);
    sp.raw_eigenvalues[i] = hv.dot(spec.A * hv) / std::max(hv.dot(spec.B * hv), 1e-300);
    sp.residuals[i] = 0.0;
    sp.eigenvectors.col(i) = hv;
  }
  sp.eigenvalues.tail(m) = fin.values;
  sp.raw_eigenvalues.tail(m) = fin.values;
  sp.residuals.tail(m) = fin.residuals;
  sp.eigenvectors.rightCols(m) = expand(r, fin.vectors, spec.size());
  sp.kernel_dim = d;
  sp.finite_count = d + fin.finite_count;
  return sp;
}

inline nlohmann::json to_json(const Spectrum& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind);
  j["p"] = s.degree;
  j["domain"] = s.domain;
  j["h"] = s.h;
  j["trivial"] = s.trivial;
  j["eigenvalues"] = std::vector<double>(s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size());
  j["raw_eigenvalues"] = std::vector<double>(s.raw_eigenvalues.data(), s.raw_eigenvalues.data() + s.raw_eigenvalues.size());
  j["residuals"] = std::vector<double>(s.residuals.data(), s.residuals.data() + s.residuals.size());
  j["kernel_dim"] = s.kernel_dim;
  j["finite_count"] = s.finite_count;
  j["reduced_dim"] = s.reduced_dim;
  return j;
}

}  // namespace bsnlab
