#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bsnlab/eigensolve.hpp"
#include "bsnlab/error.hpp"
#include "bsnlab/mesh.hpp"
#include "bsnlab/pencils.hpp"

namespace bsnlab::oracle {

// Exact spectrum of a scalar problem on (a, b).
struct IntervalClosedForm {
  ProblemKind kind = ProblemKind::Dirichlet;
  double a = 0.0, b = 1.0;
  std::vector<double> eigenvalues;  // ascending, with multiplicity
};

namespace detail {

// Real roots of c0 + c1 x + c2 x^2, ascending. A vanishing leading
// coefficient (relative to the others) drops the degree.
inline std::vector<double> poly_roots(double c0, double c1, double c2) {
  const double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2), 1e-300});
  std::vector<double> out;
  if (std::abs(c2) <= 1e-13 * scale) {
    if (std::abs(c1) <= 1e-13 * scale) return out;
    out.push_back(-c0 / c1);
    return out;
  }
  const double disc = c1 * c1 - 4.0 * c2 * c0;
  if (disc < -1e-12 * c1 * c1) throw NumericalError("complex eigenvalues in a symmetric boundary problem");
  const double sq = std::sqrt(std::max(disc, 0.0));
  // stable pair
  const double q = -0.5 * (c1 + (c1 >= 0 ? sq : -sq));
  if (q == 0.0) {
    out = {0.0, 0.0};
  } else {
    out = {q / c2, c0 / q};
  }
  std::sort(out.begin(), out.end());
  return out;
}

// det(D0 + x D1) is a polynomial of degree <= 2 when D1 has rank <= 2;
// recover it from three samples and solve.
template <int N>
std::vector<double> determinant_roots(const Eigen::Matrix<double, N, N>& d0, const Eigen::Matrix<double, N, N>& d1) {
  const double f0 = d0.determinant();
  const double fp = (d0 + d1).determinant();
  const double fm = (d0 - d1).determinant();
  const double c2 = 0.5 * (fp + fm) - f0;
  const double c1 = 0.5 * (fp - fm);
  return poly_roots(f0, c1, c2);
}

// Derivatives of t^k at x: value, first, second, third.
inline std::array<double, 4> monomial(int k, double x) {
  std::array<double, 4> d{};
  for (int j = 0; j < 4 && j <= k; ++j) {
    double c = 1.0;
    for (int i = 0; i < j; ++i) c *= (k - i);
    d[j] = c * std::pow(x, k - j);
  }
  return d;
}

}  // namespace detail

// Steklov, BSD and BSN by the boundary determinant over the exact solution
// space ({1, t} for second order, {1, t, t^2, t^3} for u'''' = 0); Dirichlet
// and Neumann by (k pi / L)^2. ν is inward: n = +1 at a, -1 at b.
inline IntervalClosedForm interval_closed_form(ProblemKind kind, double a, double b, int count = 8) {
  if (!(a < b)) throw InvalidArgument("interval needs a < b");
  IntervalClosedForm out;
  out.kind = kind;
  out.a = a;
  out.b = b;
  const double len = b - a;
  const double pi = std::numbers::pi;
  // work in t = x - a so the monomials stay well scaled
  const std::array<std::pair<double, double>, 2> ends{{{0.0, 1.0}, {len, -1.0}}};
  switch (kind) {
    case ProblemKind::Dirichlet:
      for (int k = 1; k <= count; ++k) out.eigenvalues.push_back(std::pow(k * pi / len, 2));
      break;
    case ProblemKind::Neumann:
      for (int k = 0; k < count; ++k) out.eigenvalues.push_back(std::pow(k * pi / len, 2));
      break;
    case ProblemKind::Steklov: {
      // -n u' = sigma u
      Eigen::Matrix2d d0, d1;
      for (int r = 0; r < 2; ++r) {
        const auto [x, n] = ends[r];
        for (int k = 0; k < 2; ++k) {
          const auto m = detail::monomial(k, x);
          d0(r, k) = -n * m[1];
          d1(r, k) = -m[0];
        }
      }
      out.eigenvalues = detail::determinant_roots<2>(d0, d1);
      break;
    }
    case ProblemKind::BSD: {
      // u = 0 and -u'' = q n u'
      Eigen::Matrix4d d0, d1;
      for (int e = 0; e < 2; ++e) {
        const auto [x, n] = ends[e];
        for (int k = 0; k < 4; ++k) {
          const auto m = detail::monomial(k, x);
          d0(2 * e, k) = m[0];
          d1(2 * e, k) = 0.0;
          d0(2 * e + 1, k) = -m[2];
          d1(2 * e + 1, k) = -n * m[1];
        }
      }
      out.eigenvalues = detail::determinant_roots<4>(d0, d1);
      break;
    }
    case ProblemKind::BSN1:
    case ProblemKind::BSN2:
    case ProblemKind::BSN3: {
      // n u' = 0 and -n u''' + l u = 0
      Eigen::Matrix4d d0, d1;
      for (int e = 0; e < 2; ++e) {
        const auto [x, n] = ends[e];
        for (int k = 0; k < 4; ++k) {
          const auto m = detail::monomial(k, x);
          d0(2 * e, k) = n * m[1];
          d1(2 * e, k) = 0.0;
          d0(2 * e + 1, k) = -n * m[3];
          d1(2 * e + 1, k) = m[0];
        }
      }
      out.eigenvalues = detail::determinant_roots<4>(d0, d1);
      break;
    }
  }
  for (double& v : out.eigenvalues) {
    if (std::abs(v) < 1e-12 * std::max(1.0, std::abs(out.eigenvalues.back()))) v = 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unit-disk style separation of variables
// ---------------------------------------------------------------------------

struct DiskModeSpectrum {
  ProblemKind kind = ProblemKind::Dirichlet;
  int mode = 0;
  double radius = 1.0;
  std::vector<double> eigenvalues;  // radial index order
};

// J_m(x) and J_m'(x) by the power series, summed past the peak term until
// the terms are negligible. Accurate for the moderate x used here.
inline std::pair<double, double> bessel_j(int m, double x) {
  long double term = 1.0L;
  for (int i = 1; i <= m; ++i) term *= static_cast<long double>(x) / (2.0L * i);
  long double sum = 0.0L, dsum = 0.0L, peak = 0.0L;
  const long double q = -static_cast<long double>(x) * x / 4.0L;
  for (int k = 0; k < 400; ++k) {
    sum += term;
    if (x != 0.0) dsum += term * (2 * k + m) / static_cast<long double>(x);
    peak = std::max(peak, std::abs(term));
    if (k > x && std::abs(term) < 1e-19L * std::max(peak, 1.0L)) break;
    term *= q / ((k + 1.0L) * (k + 1.0L + m));
  }
  if (x == 0.0) dsum = (m == 1) ? 0.5L : 0.0L;
  return {static_cast<double>(sum), static_cast<double>(dsum)};
}

namespace detail {

// First `count` positive roots of f on (0, xmax], brackets from a uniform scan
// and refined by bisection to 1e-12.
template <class F>
std::vector<double> scan_roots(F f, int count, double xmax = 25.0, double step = 0.05) {
  std::vector<double> roots;
  double x0 = 1e-6, f0 = f(x0);
  for (double x1 = x0 + step; x1 <= xmax && static_cast<int>(roots.size()) < count; x1 += step) {
    const double f1 = f(x1);
    if (f0 == 0.0 || f0 * f1 < 0.0) {
      double lo = x0, hi = x1, flo = f0;
      if (!(flo * f(hi) <= 0.0)) throw NumericalError("bracket not certified");
      for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi), fm = f(mid);
        if (flo * fm <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  if (static_cast<int>(roots.size()) < count) throw NumericalError("bracket not found in scan range");
  return roots;
}

}  // namespace detail

// Mode-m eigenvalues of the scalar problem on the disk of the given radius.
// Biharmonic kinds use the 2x2 determinant on span{r^m, r^{m+2}}; Laplacian
// of r^k e^{i m t} is -(k^2 - m^2) r^{k-2} (positive convention), d_nu = -d_r.
inline DiskModeSpectrum disk_scalar_eigs(ProblemKind kind, int m, int count = 3, double radius = 1.0) {
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  if (m < 0) throw InvalidArgument("mode must be non-negative");
  DiskModeSpectrum out;
  out.kind = kind;
  out.mode = m;
  out.radius = radius;
  const double r = radius;
  switch (kind) {
    case ProblemKind::Dirichlet: {
      for (double j : detail::scan_roots([m](double x) { return bessel_j(m, x).first; }, count))
        out.eigenvalues.push_back(j * j / (r * r));
      break;
    }
    case ProblemKind::Neumann: {
      if (m == 0) out.eigenvalues.push_back(0.0);
      const int need = count - static_cast<int>(out.eigenvalues.size());
      if (need > 0) {
        for (double j : detail::scan_roots([m](double x) { return bessel_j(m, x).second; }, need))
          out.eigenvalues.push_back(j * j / (r * r));
      }
      break;
    }
    case ProblemKind::Steklov:
      out.eigenvalues.push_back(m / r);
      break;
    case ProblemKind::BSD:
    case ProblemKind::BSN1:
    case ProblemKind::BSN2:
    case ProblemKind::BSN3: {
      Eigen::Matrix2d d0, d1;
      const bool bsd = kind == ProblemKind::BSD;
      for (int c = 0; c < 2; ++c) {
        const int k = m + 2 * c;
        const double val = std::pow(r, k);
        const double dnu = -k * std::pow(r, k - 1);                         // d_nu r^k
        const double lap = -(k * k - m * m) * (k >= 2 ? std::pow(r, k - 2) : 0.0);
        const double dnu_lap = (k * k - m * m) * (k - 2) * (k >= 3 ? std::pow(r, k - 3) : 0.0);
        if (bsd) {
          // u = 0, Delta u - q d_nu u = 0
          d0(0, c) = val;
          d1(0, c) = 0.0;
          d0(1, c) = lap;
          d1(1, c) = -dnu;
        } else {
          // d_nu u = 0, d_nu Delta u + l u = 0
          d0(0, c) = dnu;
          d1(0, c) = 0.0;
          d0(1, c) = dnu_lap;
          d1(1, c) = val;
        }
      }
      out.eigenvalues = detail::determinant_roots<2>(d0, d1);
      for (double& v : out.eigenvalues) {
        if (std::abs(v) < 1e-12) v = 0.0;
      }
      break;
    }
  }
  return out;
}

namespace detail {

// Radial factor r^k (log r)^j with j in {0, 1}: value and first three derivatives.
inline std::array<double, 4> radial(double k, int j, double r) {
  const double lr = std::log(r);
  auto pw = [&](double e) { return std::pow(r, e); };
  if (j == 0) {
    return {pw(k), k * pw(k - 1), k * (k - 1) * pw(k - 2), k * (k - 1) * (k - 2) * pw(k - 3)};
  }
  // d/dr [r^k log r] = r^{k-1}(k log r + 1), and so on
  const double a1 = k, b1 = 1.0;
  const double a2 = k * (k - 1), b2 = 2 * k - 1;
  const double a3 = k * (k - 1) * (k - 2), b3 = 3 * k * k - 6 * k + 2;
  return {pw(k) * lr, pw(k - 1) * (a1 * lr + b1), pw(k - 2) * (a2 * lr + b2), pw(k - 3) * (a3 * lr + b3)};
}

// Radial functions f with Delta^2 (f e^{i m t}) = 0 (four) or Delta (f e^{i m t}) = 0 (two).
inline std::vector<std::pair<double, int>> radial_basis(int m, bool biharmonic) {
  const double md = m;
  if (!biharmonic) return m == 0 ? std::vector<std::pair<double, int>>{{0, 0}, {0, 1}}
                                 : std::vector<std::pair<double, int>>{{md, 0}, {-md, 0}};
  if (m == 0) return {{0, 0}, {0, 1}, {2, 0}, {2, 1}};
  if (m == 1) return {{1, 0}, {-1, 0}, {3, 0}, {1, 1}};
  return {{md, 0}, {-md, 0}, {md + 2, 0}, {2 - md, 0}};
}

}  // namespace detail

// Mode-m eigenvalues on the annulus r_in < r < r_out for Steklov, BSD and
// BSN, from the boundary determinant over the radial solution space. On the
// outer circle d_nu = -d_r, on the inner one d_nu = +d_r.
inline DiskModeSpectrum annulus_scalar_eigs(ProblemKind kind, int m, double r_in, double r_out) {
  if (!(r_in > 0.0 && r_in < r_out)) throw InvalidArgument("annulus needs 0 < r_in < r_out");
  if (m < 0) throw InvalidArgument("mode must be non-negative");
  if (kind == ProblemKind::Dirichlet || kind == ProblemKind::Neumann) {
    throw InvalidArgument("annulus oracle covers steklov, bsd and bsn");
  }
  DiskModeSpectrum out;
  out.kind = kind;
  out.mode = m;
  out.radius = r_out;
  const bool bih = kind != ProblemKind::Steklov;
  const auto basis = detail::radial_basis(m, bih);
  const double m2 = static_cast<double>(m) * m;
  const std::array<std::pair<double, double>, 2> ends{{{r_in, 1.0}, {r_out, -1.0}}};
  if (!bih) {
    Eigen::Matrix2d d0, d1;
    for (int e = 0; e < 2; ++e) {
      const auto [r, nr] = ends[e];
      for (int c = 0; c < 2; ++c) {
        const auto f = detail::radial(basis[c].first, basis[c].second, r);
        d0(e, c) = -nr * f[1];  // -d_nu u = sigma u
        d1(e, c) = -f[0];
      }
    }
    out.eigenvalues = detail::determinant_roots<2>(d0, d1);
  } else {
    Eigen::Matrix4d d0, d1;
    for (int e = 0; e < 2; ++e) {
      const auto [r, nr] = ends[e];
      for (int c = 0; c < 4; ++c) {
        const auto f = detail::radial(basis[c].first, basis[c].second, r);
        const double lap = -(f[2] + f[1] / r - m2 * f[0] / (r * r));  // positive Laplacian
        const double dlap = -(f[3] + f[2] / r - f[1] / (r * r) - m2 * f[1] / (r * r) + 2 * m2 * f[0] / (r * r * r));
        if (kind == ProblemKind::BSD) {
          d0(2 * e, c) = f[0];
          d1(2 * e, c) = 0.0;
          d0(2 * e + 1, c) = lap;  // Delta u - q d_nu u = 0
          d1(2 * e + 1, c) = -nr * f[1];
        } else {
          d0(2 * e, c) = nr * f[1];  // d_nu u = 0
          d1(2 * e, c) = 0.0;
          d0(2 * e + 1, c) = nr * dlap;  // d_nu Delta u + l u = 0
          d1(2 * e + 1, c) = f[0];
        }
      }
    }
    out.eigenvalues = detail::determinant_roots<4>(d0, d1);
  }
  for (double& v : out.eigenvalues) {
    if (std::abs(v) < 1e-10) v = 0.0;
  }
  return out;
}

inline std::vector<double> annulus_scalar_spectrum(ProblemKind kind, int count, double r_in, double r_out,
                                                   int max_mode = 12) {
  std::vector<double> all;
  for (int m = 0; m <= max_mode; ++m) {
    for (double v : annulus_scalar_eigs(kind, m, r_in, r_out).eigenvalues) {
      all.push_back(v);
      if (m > 0) all.push_back(v);
    }
  }
  std::sort(all.begin(), all.end());
  if (static_cast<int>(all.size()) > count) all.resize(count);
  return all;
}

// Sorted spectrum over modes 0..max_mode, modes m > 0 counted twice.
inline std::vector<double> disk_scalar_spectrum(ProblemKind kind, int count, double radius = 1.0, int max_mode = 12) {
  std::vector<double> all;
  for (int m = 0; m <= max_mode; ++m) {
    const auto s = disk_scalar_eigs(kind, m, std::max(count, 1), radius);
    for (double v : s.eigenvalues) {
      all.push_back(v);
      if (m > 0) all.push_back(v);
    }
  }
  std::sort(all.begin(), all.end());
  if (static_cast<int>(all.size()) > count) all.resize(count);
  return all;
}

// ---------------------------------------------------------------------------
// Brute-force Rayleigh quotients
// ---------------------------------------------------------------------------

struct QuotientSandwich {
  double lower = 0.0;   // first positive eigenvalue from a dense solve of the reduced pencil
  double upper = 0.0;   // smallest sampled Rayleigh quotient
  int samples = 0;      // quotients actually evaluated (B-null samples skipped)
  double min_sample = 0.0;
};

// Samples random admissible vectors and the coordinate directions of the
// reduced pencil, restricted to the complement of the kernel (B-orthogonal
// to ker A, or to the deflation functionals when the problem carries them).
inline QuotientSandwich bruteforce_quotient_min(const ProblemSpec& spec, int trials, unsigned seed = 42) {
  if (is_trivial(spec)) throw InvalidArgument("trivial problem has no eigenvalues");
  const ReducedPencil r = reduce_constraints(spec);
  const int n = static_cast<int>(r.A.rows());
  MatrixXd f(n, 0);
  if (spec.deflation.cols() > 0) {
    MatrixXd hs(static_cast<Eigen::Index>(r.dofs.size()), spec.deflation.cols());
    for (std::size_t i = 0; i < r.dofs.size(); ++i) hs.row(static_cast<Eigen::Index>(i)) = spec.deflation.row(r.dofs[i]);
    f = r.N.transpose() * (bsnlab::detail::dense_block(spec.orthogonality, r.dofs, r.dofs) * hs);
  } else if (is_boundary_pencil(spec.kind)) {
    const MatrixXd z = null_space(r.A, 1e-9);
    f = r.B * z;
  }
  MatrixXd v = MatrixXd::Identity(n, n);
  if (f.cols() > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(f);
    v = (qr.householderQ() * MatrixXd::Identity(n, n)).rightCols(n - qr.rank());
  }
  const MatrixXd a = v.transpose() * r.A * v, b = v.transpose() * r.B * v;
  QuotientSandwich out;
  out.upper = std::numeric_limits<double>::infinity();
  const double bscale = std::max(b.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  auto sample = [&](const VectorXd& y) {
    const double den = y.dot(b * y);
    if (den <= 1e-12 * bscale * y.squaredNorm()) return;
    out.upper = std::min(out.upper, y.dot(a * y) / den);
    ++out.samples;
  };
  for (int i = 0; i < a.rows(); ++i) sample(VectorXd::Unit(a.rows(), i));
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  for (int t = 0; t < trials; ++t) {
    VectorXd y(a.rows());
    for (int i = 0; i < y.size(); ++i) y[i] = g(rng);
    sample(y);
  }
  out.min_sample = out.upper;
  const Eigenpairs e = solve_reciprocal(a, b, MatrixXd(a.rows(), 0));
  out.lower = e.values.size() > 0 ? e.values[0] : std::numeric_limits<double>::infinity();
  return out;
}

// ---------------------------------------------------------------------------
// CSV tables {kind, domain, mode, index, eigenvalue}
// ---------------------------------------------------------------------------

struct OracleRow {
  std::string kind, domain;
  int mode = 0, index = 0;
  double eigenvalue = 0.0;
};

inline std::vector<OracleRow> interval_rows(ProblemKind kind, double a, double b, int count = 8) {
  const auto cf = interval_closed_form(kind, a, b, count);
  std::vector<OracleRow> rows;
  const std::string dom = DomainName::interval(a, b).to_string();
  for (std::size_t i = 0; i < cf.eigenvalues.size(); ++i)
    rows.push_back({to_string(kind), dom, 0, static_cast<int>(i), cf.eigenvalues[i]});
  return rows;
}

inline std::vector<OracleRow> disk_rows(ProblemKind kind, double radius, int max_mode = 4, int count = 3) {
  std::vector<OracleRow> rows;
  const std::string dom = DomainName::unit_disk(radius).to_string();
  for (int m = 0; m <= max_mode; ++m) {
    const auto s = disk_scalar_eigs(kind, m, count, radius);
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
      rows.push_back({to_string(kind), dom, m, static_cast<int>(i), s.eigenvalues[i]});
  }
  return rows;
}

inline std::vector<OracleRow> annulus_rows(ProblemKind kind, double r_in, double r_out, int max_mode = 4) {
  std::vector<OracleRow> rows;
  const std::string dom = DomainName::annulus(r_in, r_out).to_string();
  for (int m = 0; m <= max_mode; ++m) {
    const auto s = annulus_scalar_eigs(kind, m, r_in, r_out);
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
      rows.push_back({to_string(kind), dom, m, static_cast<int>(i), s.eigenvalues[i]});
  }
  return rows;
}

inline void write_csv(std::ostream& os, const std::vector<OracleRow>& rows) {
  os << "kind,domain,mode,index,eigenvalue\n";
  os.precision(17);
  for (const auto& r : rows) os << r.kind << ",\"" << r.domain << "\"," << r.mode << ',' << r.index << ',' << r.eigenvalue << '\n';
}

}  // namespace bsnlab::oracle
