#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <nlohmann/json.hpp>

#include "bsnlab/discretization.hpp"
#include "bsnlab/eigensolve.hpp"
#include "bsnlab/pencils.hpp"

namespace bsnlab {

// Discrete absolute cohomology: near-kernel of the Neumann pencil.
struct HarmonicBasis {
  int degree = 0;
  MatrixXd basis;               // M-orthonormal columns
  VectorXd eigenvalues;         // Neumann eigenvalues of the basis vectors
  VectorXd energy_residuals;    // ||K v|| / ||M v||
  VectorXd normal_residuals;    // ||T_nor v|| (boundary L2)
  double first_nonzero = 0.0;   // first Neumann eigenvalue outside the kernel

  [[nodiscard]] int dim() const { return static_cast<int>(basis.cols()); }
};

struct HarmonicOptions {
  double tol_kernel = 1e-8;  // relative to the largest computed Neumann eigenvalue
  double gap = 10.0;         // kernel and spectrum must be separated by more than this
  double loose = 1e-2;       // a gap-separated cluster must stay below loose * next
  int probe = 12;            // Neumann eigenvalues inspected
};

// Kernel of the absolute Neumann pencil (K_hodge, M) with nu _| w = 0. Kernel
// vectors are those below tol_kernel * (largest eigenvalue), or a leading
// cluster separated from the rest by a wide gap. A jump between 10x and the
// `loose` ratio among the leading eigenvalues is ambiguous and rejected.
inline HarmonicBasis harmonic_basis(std::shared_ptr<const OperatorSet> ops, const HarmonicOptions& opt = {}) {
  SolveOptions so;
  so.count = opt.probe;
  so.kernel_tol = opt.tol_kernel;
  so.kernel_gap = opt.gap;
  const ProblemSpec spec = assemble_pencil(ops, ProblemKind::Neumann);
  const Spectrum sp = solve_problem(spec, so);
  const VectorXd& v = sp.raw_eigenvalues;
  const int k = count_kernel(v, opt.tol_kernel, 1.0 / opt.loose, opt.loose);
  for (int i = 0; i + 1 < std::min<int>(static_cast<int>(v.size()), k + 2); ++i) {
    const double here = std::max(v[i], 1e-300);
    const double ratio = v[i + 1] / here;
    if (here > opt.tol_kernel * v.maxCoeff() && ratio > opt.gap && ratio < 1.0 / opt.loose) {
      throw NumericalError("ambiguous cohomology kernel: eigenvalue ratio " + std::to_string(ratio));
    }
  }
  HarmonicBasis hb;
  hb.degree = ops->space->degree;
  hb.basis = sp.eigenvectors.leftCols(k);
  hb.eigenvalues = v.head(k);
  hb.first_nonzero = k < v.size() ? v[k] : std::numeric_limits<double>::infinity();
  hb.energy_residuals.resize(k);
  hb.normal_residuals.resize(k);
  const TraceOperator& tn = ops->trace(Trace::Normal);
  for (int i = 0; i < k; ++i) {
    const VectorXd b = hb.basis.col(i);
    hb.energy_residuals[i] = (ops->hodge * b).norm() / (ops->mass * b).norm();
    const VectorXd t = tn.matrix * b;
    hb.normal_residuals[i] = std::sqrt(t.dot(tn.weights.asDiagonal() * t));
  }
  return hb;
}

inline nlohmann::json to_json(const HarmonicBasis& hb) {
  nlohmann::json j;
  j["p"] = hb.degree;
  j["dim"] = hb.dim();
  j["first_nonzero"] = hb.first_nonzero;
  nlohmann::json cols = nlohmann::json::array();
  for (int i = 0; i < hb.dim(); ++i) {
    nlohmann::json c;
    c["eigenvalue"] = hb.eigenvalues[i];
    c["energy_residual"] = hb.energy_residuals[i];
    c["normal_residual"] = hb.normal_residuals[i];
    c["coefficients"] = std::vector<double>(hb.basis.col(i).data(), hb.basis.col(i).data() + hb.basis.rows());
    cols.push_back(c);
  }
  j["basis"] = cols;
  return j;
}

// ---------------------------------------------------------------------------
// Discretely harmonic forms parameterized by boundary values
// ---------------------------------------------------------------------------

// Columns span {x : (K x)_I = 0} restricted to boundary values in the range
// of `boundary_basis` (rows indexed like `boundary`).
struct HarmonicParameterization {
  std::vector<int> boundary;  // global dofs holding boundary values
  std::vector<int> interior;
  MatrixXd extension;         // full coefficient vectors, one column per parameter
};

namespace detail {

inline std::vector<int> boundary_global_dofs(const DofSpace& s) {
  std::vector<int> out;
  for (int comp = 0; comp < s.components; ++comp) {
    for (int d : s.boundary_value_dofs) out.push_back(s.global(comp, d));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<int> complement(const std::vector<int>& set, int n) {
  std::vector<char> mark(n, 0);
  for (int i : set) mark[i] = 1;
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (!mark[i]) out.push_back(i);
  }
  return out;
}

}  // namespace detail

inline HarmonicParameterization harmonic_parameterization(const OperatorSet& ops, const MatrixXd& boundary_basis) {
  const DofSpace& s = *ops.space;
  const int n = s.size();
  HarmonicParameterization hp;
  hp.boundary = detail::boundary_global_dofs(s);
  hp.interior = detail::complement(hp.boundary, n);
  const int nb = static_cast<int>(hp.boundary.size());
  if (boundary_basis.rows() != nb) throw InvalidArgument("boundary basis has the wrong row count");
  const int m = static_cast<int>(boundary_basis.cols());
  hp.extension = MatrixXd::Zero(n, m);
  for (int i = 0; i < nb; ++i) hp.extension.row(hp.boundary[i]) = boundary_basis.row(i);
  if (!hp.interior.empty() && m > 0) {
    const SparseMatrix kii = detail::sparse_block(ops.hodge, hp.interior, hp.interior);
    const SparseMatrix kib = detail::sparse_block(ops.hodge, hp.interior, hp.boundary);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(kii);
    if (ldlt.info() != Eigen::Success) throw NumericalError("interior stiffness block is singular");
    const MatrixXd xi = ldlt.solve(MatrixXd(-(kib * boundary_basis)));
    for (std::size_t i = 0; i < hp.interior.size(); ++i) hp.extension.row(hp.interior[i]) = xi.row(static_cast<Eigen::Index>(i));
  }
  return hp;
}

// Boundary values (one entry per global boundary dof, ordered as in
// harmonic_parameterization) spanning the kernel of the nu _| w rows.
inline MatrixXd tangential_boundary_basis(const OperatorSet& ops, const ReductionOptions& opt = {}) {
  const DofSpace& s = *ops.space;
  const auto boundary = detail::boundary_global_dofs(s);
  return constraint_basis(ops.constraints.normal, boundary, opt).dense();
}

// Harmonic extension w^ with iota^* w^ = data and nu _| w^ = 0: boundary
// nodes get data * nodal tangent (corners and nodes with several normals
// are projected onto the admissible set), interior rows of K vanish.
inline VectorXd tangential_harmonic_extension(const OperatorSet& ops, const std::function<double(const Point&)>& data) {
  const DofSpace& s = *ops.space;
  const Mesh& m = *s.mesh;
  const auto boundary = detail::boundary_global_dofs(s);
  std::vector<int> pos(s.size(), -1);
  for (std::size_t i = 0; i < boundary.size(); ++i) pos[boundary[i]] = static_cast<int>(i);
  VectorXd target = VectorXd::Zero(static_cast<Eigen::Index>(boundary.size()));
  if (m.dim == 1 || s.degree == 0) {
    if (s.degree == 0) {
      for (int d : s.boundary_value_dofs) target[pos[s.global(0, d)]] = data(s.nodes[d]);
    }
  } else if (s.degree == 1) {
    for (std::size_t fi = 0; fi < m.boundary.size(); ++fi) {
      for (int d : s.facet_value_dofs[fi]) {
        const Point tau = m.boundary[fi].tangent;
        const double t = data(s.nodes[d]);
        // vertices get the mean of their facet tangents
        target[pos[s.global(0, d)]] += 0.5 * t * tau.x() * (d < m.num_vertices() ? 1.0 : 2.0);
        target[pos[s.global(1, d)]] += 0.5 * t * tau.y() * (d < m.num_vertices() ? 1.0 : 2.0);
      }
    }
  }
  // project onto the nu _| w = 0 set, then extend
  const MatrixXd nb = tangential_boundary_basis(ops);
  const VectorXd coeffs = nb.transpose() * target;
  const auto hp = harmonic_parameterization(ops, nb * coeffs);
  return hp.extension.col(0);
}

// ||nu _| dw||^2_dM for the columns of a harmonic parameterization, from the
// weak boundary flux. For (K w)_I = 0 Green's formula turns the boundary rows
// of K w into the functional theta -> <nu _| dw, iota^* theta> - <iota^* delta w, nu _| theta>
// on dM (up to sign). Its Riesz representative in the boundary L2 form has
// tangential part nu _| dw. One-sided gradients of discrete harmonic
// extensions are far less accurate than this.
inline MatrixXd weak_flux_form(const OperatorSet& o, const HarmonicParameterization& hp) {
  const auto& bd = hp.boundary;
  const SparseMatrix tan = o.boundary_form(Trace::Tangential);
  const MatrixXd g = detail::dense_block(tan + o.boundary_form(Trace::Normal), bd, bd);
  const MatrixXd gt = detail::dense_block(tan, bd, bd);
  const MatrixXd ke = o.hodge * hp.extension;
  MatrixXd r(static_cast<Eigen::Index>(bd.size()), ke.cols());
  for (std::size_t i = 0; i < bd.size(); ++i) r.row(static_cast<Eigen::Index>(i)) = ke.row(bd[i]);
  Eigen::LDLT<MatrixXd> ldlt(0.5 * (g + g.transpose()));
  if (ldlt.info() != Eigen::Success) throw NumericalError("boundary mass is singular");
  const MatrixXd f = ldlt.solve(r);
  return f.transpose() * gt * f;
}

// First positive eigenvalue from the harmonic-field characterizations:
//   BSD:  min ||w||^2_dM / ||w||^2_M over harmonic w
//   BSN1: min (||nu _| w||^2_dM + ||nu _| dw||^2_dM) / ||w||^2_M, w harmonic, w perp_M H_A
//   BSN3: min ||nu _| dw||^2_dM / ||w||^2_M, w harmonic, nu _| w = 0, w perp_dM H_A
struct QuotientResult {
  double value = 0.0;
  int parameters = 0;
  VectorXd form;                 // minimizer, full coefficients
  std::vector<double> leading;   // first few quotient eigenvalues (informational)
};

inline QuotientResult harmonic_field_quotient(std::shared_ptr<const OperatorSet> ops, ProblemKind kind,
                                              const HarmonicBasis* cohomology = nullptr) {
  if (kind != ProblemKind::BSD && kind != ProblemKind::BSN1 && kind != ProblemKind::BSN3) {
    throw InvalidArgument("harmonic-field quotients exist for bsd, bsn1 and bsn3 only");
  }
  const OperatorSet& o = *ops;
  const DofSpace& s = *o.space;
  const auto boundary = detail::boundary_global_dofs(s);
  MatrixXd bb;
  SparseMatrix num, orth;
  if (kind == ProblemKind::BSD) {
    bb = MatrixXd::Identity(static_cast<Eigen::Index>(boundary.size()), static_cast<Eigen::Index>(boundary.size()));
    num = o.boundary_form(Trace::Tangential) + o.boundary_form(Trace::Normal);
  } else if (kind == ProblemKind::BSN1) {
    bb = MatrixXd::Identity(static_cast<Eigen::Index>(boundary.size()), static_cast<Eigen::Index>(boundary.size()));
    num = o.boundary_form(Trace::Normal);
    orth = o.mass;
  } else {
    bb = tangential_boundary_basis(o);
    num = SparseMatrix(s.size(), s.size());
    orth = o.boundary_form(Trace::Tangential) + o.boundary_form(Trace::Normal);
  }
  const auto hp = harmonic_parameterization(o, bb);
  const MatrixXd& e = hp.extension;
  QuotientResult out;
  out.parameters = static_cast<int>(e.cols());
  if (out.parameters == 0) throw NumericalError("empty admissible space");
  MatrixXd a = e.transpose() * (num * e);
  if (kind != ProblemKind::BSD) a += weak_flux_form(o, hp);
  MatrixXd b = e.transpose() * (o.mass * e);
  a = 0.5 * (a + a.transpose()).eval();
  b = 0.5 * (b + b.transpose()).eval();
  MatrixXd v = MatrixXd::Identity(out.parameters, out.parameters);
  if (kind != ProblemKind::BSD) {
    HarmonicBasis local;
    if (!cohomology) local = harmonic_basis(ops);
    const HarmonicBasis& hb = cohomology ? *cohomology : local;
    if (hb.dim() > 0) {
      const MatrixXd f = e.transpose() * (orth * hb.basis);
      if (hb.dim() >= out.parameters) throw NumericalError("empty admissible space");
      Eigen::ColPivHouseholderQR<MatrixXd> qr(f);
      v = (qr.householderQ() * MatrixXd::Identity(out.parameters, out.parameters)).rightCols(out.parameters - hb.dim());
    }
  }
  const Eigenpairs ep = solve_definite(v.transpose() * a * v, v.transpose() * b * v);
  out.value = ep.values[0];
  out.form = e * (v * ep.vectors.col(0));
  for (int i = 0; i < std::min<int>(6, static_cast<int>(ep.values.size())); ++i) out.leading.push_back(ep.values[i]);
  return out;
}

}  // namespace bsnlab
