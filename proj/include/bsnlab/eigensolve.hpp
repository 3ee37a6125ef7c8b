#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <lapacke.h>

#include "bsnlab/error.hpp"

namespace bsnlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Eigenpairs {
  VectorXd values;     // ascending
  MatrixXd vectors;    // columns match values
  VectorXd residuals;  // backward errors, see pencil_residual
  int finite_count = 0;
  int deflated = 0;    // leading zero eigenvalues coming from the deflation basis
};

inline double relative_asymmetry(const MatrixXd& a) {
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

// Backward error ||Av - tBv|| / ((||A|| + |t| ||B||) ||v||), Frobenius norms.
inline double pencil_residual(const MatrixXd& a, const MatrixXd& b, const VectorXd& v, double theta) {
  const double denom = (a.norm() + std::abs(theta) * b.norm()) * v.norm();
  if (denom == 0.0) return 0.0;
  return (a * v - theta * (b * v)).norm() / denom;
}

namespace detail {

inline void check_square_symmetric(const MatrixXd& a, const char* name) {
  if (a.rows() != a.cols()) throw InvalidArgument(std::string(name) + " is not square");
  if (relative_asymmetry(a) > 1e-10) throw InvalidArgument(std::string(name) + " is not symmetric");
}

inline Eigenpairs truncate(Eigenpairs e, int k) {
  if (k < 0 || k >= e.values.size()) return e;
  e.values.conservativeResize(k);
  e.vectors.conservativeResize(Eigen::NoChange, k);
  e.residuals.conservativeResize(k);
  e.finite_count = std::min(e.finite_count, k);
  e.deflated = std::min(e.deflated, k);
  return e;
}

inline void fill_residuals(const MatrixXd& a, const MatrixXd& b, Eigenpairs& e) {
  e.residuals.resize(e.values.size());
  const double an = a.norm(), bn = b.norm();
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    const VectorXd v = e.vectors.col(i);
    const double t = e.values[i];
    e.residuals[i] = (a * v - t * (b * v)).norm() / std::max((an + std::abs(t) * bn) * v.norm(), 1e-300);
  }
}

}  // namespace detail

// Symmetric eigendecomposition (divide and conquer), ascending.
inline std::pair<VectorXd, MatrixXd> symmetric_eigen(const MatrixXd& a) {
  detail::check_square_symmetric(a, "matrix");
  const int n = static_cast<int>(a.rows());
  if (n == 0) return {VectorXd(0), MatrixXd(0, 0)};
  MatrixXd v = 0.5 * (a + a.transpose());
  VectorXd w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, v.data(), n, w.data());
  if (info != 0) throw NumericalError("dsyevd failed with info " + std::to_string(info));
  return {w, v};
}

// A v = t B v with B positive definite. Eigenvectors are B-orthonormal.
inline Eigenpairs solve_definite(const MatrixXd& a, const MatrixXd& b, int k = -1) {
  detail::check_square_symmetric(a, "A");
  detail::check_square_symmetric(b, "B");
  if (a.rows() != b.rows()) throw InvalidArgument("A and B differ in size");
  const int n = static_cast<int>(a.rows());
  Eigenpairs e;
  if (n == 0) return e;
  MatrixXd aw = 0.5 * (a + a.transpose());
  MatrixXd bw = 0.5 * (b + b.transpose());
  VectorXd w(n);
  const lapack_int info = LAPACKE_dsygvd(LAPACK_COL_MAJOR, 1, 'V', 'L', n, aw.data(), n, bw.data(), n, w.data());
  if (info > n) throw NumericalError("B is not positive definite");
  if (info != 0) throw NumericalError("dsygvd failed with info " + std::to_string(info));
  e.values = w;
  e.vectors = aw;
  e.finite_count = n;
  detail::fill_residuals(a, b, e);
  return detail::truncate(std::move(e), k);
}

// Lowest k eigenpairs of the sparse pencil (A, B), A semidefinite and B
// positive definite, by shift-and-invert block subspace iteration with
// Rayleigh-Ritz. The shift makes A + shift B definite.
inline Eigenpairs solve_definite_sparse(const Eigen::SparseMatrix<double>& a, const Eigen::SparseMatrix<double>& b, int k,
                                        double shift = 1.0, double tol = 1e-13, int max_iter = 500) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || b.rows() != n || b.cols() != n) throw InvalidArgument("A and B differ in size");
  if (k <= 0 || k >= n / 2) return solve_definite(MatrixXd(a), MatrixXd(b), k);
  const Eigen::SparseMatrix<double> s = a + shift * b;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(s);
  if (ldlt.info() != Eigen::Success) throw NumericalError("shifted pencil factorization failed");
  const int m = std::min(n, 2 * k + 10);
  std::mt19937 rng(42);
  std::normal_distribution<double> g;
  MatrixXd x(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = g(rng);
  VectorXd prev = VectorXd::Constant(k, std::numeric_limits<double>::infinity());
  Eigenpairs e;
  for (int it = 0; it < max_iter; ++it) {
    x = ldlt.solve(MatrixXd(b * x));
    if (ldlt.info() != Eigen::Success) throw NumericalError("shifted pencil solve failed");
    // Rayleigh-Ritz on span(x)
    const MatrixXd ax = a * x, bx = b * x;
    MatrixXd ar = x.transpose() * ax, br = x.transpose() * bx;
    ar = 0.5 * (ar + ar.transpose()).eval();
    br = 0.5 * (br + br.transpose()).eval();
    const Eigenpairs r = solve_definite(ar, br);
    x = x * r.vectors;
    const VectorXd now = r.values.head(k);
    const double scale = std::max(now.cwiseAbs().maxCoeff(), 1.0);
    if ((now - prev).cwiseAbs().maxCoeff() <= tol * scale) {
      e.values = now;
      e.vectors = x.leftCols(k);
      e.finite_count = k;
      e.residuals.resize(k);
      const double an = a.norm(), bn = b.norm();
      for (int i = 0; i < k; ++i) {
        const VectorXd v = e.vectors.col(i);
        e.residuals[i] = (a * v - now[i] * (b * v)).norm() / std::max((an + std::abs(now[i]) * bn) * v.norm(), 1e-300);
      }
      return e;
    }
    prev = now;
  }
  throw NumericalError("subspace iteration did not converge");
}

// Orthonormal basis of the eigenvectors of symmetric A whose eigenvalues are
// at most rel_tol times the largest magnitude.
inline MatrixXd null_space(const MatrixXd& a, double rel_tol = 1e-12) {
  if (a.rows() == 0) return MatrixXd(0, 0);
  const auto [w, v] = symmetric_eigen(a);
  const double scale = std::max(std::abs(w[0]), std::abs(w[w.size() - 1]));
  int count = 0;
  while (count < w.size() && w[count] <= rel_tol * scale) ++count;
  return v.leftCols(count);
}

// Finite spectrum of A v = t B v on the subspace {v : F^T v = 0}, with A
// positive definite there and B possibly rank deficient. Computed from the
// reciprocal pencil B v = chi A v; directions with chi < chi_tol * chi_max
// carry an infinite eigenvalue and are dropped. Residuals are measured on
// the subspace.
inline Eigenpairs solve_reciprocal(const MatrixXd& a, const MatrixXd& b, const MatrixXd& f, int k = -1,
                                   double chi_tol = 1e-10) {
  detail::check_square_symmetric(a, "A");
  detail::check_square_symmetric(b, "B");
  const int n = static_cast<int>(a.rows());
  if (b.rows() != n) throw InvalidArgument("A and B differ in size");
  const int d = static_cast<int>(f.cols());
  if (d > 0 && f.rows() != n) throw InvalidArgument("orthogonality functionals have the wrong row count");
  Eigenpairs e;
  if (n == 0) return e;
  MatrixXd v = MatrixXd::Identity(n, n);
  if (d > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(f);
    qr.setThreshold(1e-12);
    if (qr.rank() < d) throw NumericalError("deflation functionals are linearly dependent");
    v = (qr.householderQ() * MatrixXd::Identity(n, n)).rightCols(n - d);
  }
  const MatrixXd av = v.transpose() * a * v;
  const MatrixXd bv = v.transpose() * b * v;
  Eigen::LLT<MatrixXd> llt(0.5 * (av + av.transpose()));
  if (llt.info() != Eigen::Success) throw NumericalError("A is not positive definite on the deflated complement");
  const MatrixXd l = llt.matrixL();
  MatrixXd c = l.triangularView<Eigen::Lower>().solve(bv);
  c = l.triangularView<Eigen::Lower>().solve(c.transpose()).transpose();
  const auto [chi, y] = symmetric_eigen(0.5 * (c + c.transpose()));
  const double chi_max = chi.size() > 0 ? chi.maxCoeff() : 0.0;
  std::vector<int> keep;
  for (int i = static_cast<int>(chi.size()) - 1; i >= 0; --i) {
    if (chi_max > 0.0 && chi[i] > chi_tol * chi_max) keep.push_back(i);
  }
  const int m = static_cast<int>(keep.size());
  const MatrixXd w = l.transpose().triangularView<Eigen::Upper>().solve(y);
  e.values.resize(m);
  e.vectors.resize(n, m);
  e.residuals.resize(m);
  const double an = av.norm(), bn = bv.norm();
  for (int j = 0; j < m; ++j) {
    const double theta = 1.0 / chi[keep[j]];
    const VectorXd wj = w.col(keep[j]);
    e.values[j] = theta;
    e.vectors.col(j) = v * wj;
    e.residuals[j] = (av * wj - theta * (bv * wj)).norm() / ((an + theta * bn) * wj.norm());
  }
  e.finite_count = m;
  return detail::truncate(std::move(e), k);
}

// A v = t B v with A positive semidefinite, ker A spanned by `deflation`,
// and B possibly rank deficient. The finite nonzero eigenvalues are found
// on the B-orthogonal complement of ker A; the deflation directions come
// first with eigenvalue 0.
inline Eigenpairs solve_semidefinite(const MatrixXd& a, const MatrixXd& b, const MatrixXd& deflation, int k = -1,
                                     double chi_tol = 1e-10, double null_tol = 1e-8) {
  const int n = static_cast<int>(a.rows());
  const int d = static_cast<int>(deflation.cols());
  MatrixXd z(n, d);
  if (d > 0) {
    if (deflation.rows() != n) throw InvalidArgument("deflation basis has the wrong row count");
    Eigen::HouseholderQR<MatrixXd> qr(deflation);
    z = (qr.householderQ() * MatrixXd::Identity(n, n)).leftCols(d);
    const double anorm = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    if ((a * z).cwiseAbs().maxCoeff() > null_tol * anorm) throw NumericalError("deflation basis is not A-null");
  }
  Eigenpairs fin = solve_reciprocal(a, b, b * z, -1, chi_tol);
  Eigenpairs e;
  const int m = static_cast<int>(fin.values.size());
  e.values.resize(d + m);
  e.vectors.resize(n, d + m);
  e.residuals.resize(d + m);
  for (int i = 0; i < d; ++i) {
    e.values[i] = 0.0;
    e.vectors.col(i) = z.col(i);
    e.residuals[i] = (a * z.col(i)).norm() / std::max(a.norm(), 1e-300);
  }
  e.values.tail(m) = fin.values;
  e.vectors.rightCols(m) = fin.vectors;
  e.residuals.tail(m) = fin.residuals;
  e.finite_count = d + m;
  e.deflated = d;
  return detail::truncate(std::move(e), k);
}

// Number of leading eigenvalues that belong to the kernel: those below
// rel_tol times the largest one, plus any leading cluster separated from
// the rest by more than `gap` that stays below `loose` times the next value.
inline int count_kernel(const VectorXd& values, double rel_tol = 1e-8, double gap = 10.0, double loose = 1e-2,
                        int max_kernel = 8) {
  const int n = static_cast<int>(values.size());
  if (n == 0) return 0;
  const double top = std::max(std::abs(values.maxCoeff()), 1e-300);
  int strict = 0;
  while (strict < n && values[strict] <= rel_tol * top) ++strict;
  int best = strict;
  for (int i = strict; i < std::min(n - 1, max_kernel); ++i) {
    const double here = std::max(values[i], 0.0), next = values[i + 1];
    if (here <= loose * next && next > gap * here) best = i + 1;
  }
  return best;
}

}  // namespace bsnlab
