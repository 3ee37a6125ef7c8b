#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bsnlab/error.hpp"

namespace bsnlab::ext {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

// Basis of Lambda^p(R^n): sorted index subsets of {0, ..., n-1} stored as
// bitmasks, in increasing mask order.
class Basis {
 public:
  Basis(int n, int p) : n_(n), p_(p) {
    if (n < 0 || n > 20) throw InvalidArgument("dimension out of range");
    if (p >= 0 && p <= n) {
      for (std::uint32_t m = 0; m < (1u << n); ++m) {
        if (std::popcount(m) == p) masks_.push_back(m);
      }
    }
    index_.assign(std::size_t{1} << n, -1);
    for (std::size_t i = 0; i < masks_.size(); ++i) index_[masks_[i]] = static_cast<int>(i);
  }
  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int p() const { return p_; }
  [[nodiscard]] int size() const { return static_cast<int>(masks_.size()); }
  [[nodiscard]] std::uint32_t mask(int i) const { return masks_[i]; }
  [[nodiscard]] int index(std::uint32_t m) const { return index_[m]; }

 private:
  int n_, p_;
  std::vector<std::uint32_t> masks_;
  std::vector<int> index_;
};

// (-1)^(number of elements of mask below j)
inline int sign_before(std::uint32_t mask, int j) {
  return (std::popcount(mask & ((1u << j) - 1u)) % 2) ? -1 : 1;
}

// Matrix of w -> e_j ^ w from Lambda^p(R^n) to Lambda^{p+1}(R^n).
inline Eigen::MatrixXi wedge_basis(int n, int p, int j) {
  const Basis from(n, p), to(n, p + 1);
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(to.size(), from.size());
  for (int c = 0; c < from.size(); ++c) {
    const std::uint32_t m = from.mask(c);
    if (m & (1u << j)) continue;
    out(to.index(m | (1u << j)), c) = sign_before(m, j);
  }
  return out;
}

// Matrix of w -> e_j _| w from Lambda^p(R^n) to Lambda^{p-1}(R^n).
inline Eigen::MatrixXi interior_basis(int n, int p, int j) {
  const Basis from(n, p), to(n, p - 1);
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(to.size(), from.size());
  for (int c = 0; c < from.size(); ++c) {
    const std::uint32_t m = from.mask(c);
    if (!(m & (1u << j))) continue;
    out(to.index(m & ~(1u << j)), c) = sign_before(m, j);
  }
  return out;
}

// v ^ . and v _| . for a covector with real components.
inline Eigen::MatrixXd wedge(const Eigen::VectorXd& v, int p) {
  const int n = static_cast<int>(v.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Basis(n, p + 1).size(), Basis(n, p).size());
  for (int j = 0; j < n; ++j) {
    if (v[j] != 0.0) out += v[j] * wedge_basis(n, p, j).cast<double>();
  }
  return out;
}

inline Eigen::MatrixXd interior(const Eigen::VectorXd& v, int p) {
  const int n = static_cast<int>(v.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Basis(n, p - 1).size(), Basis(n, p).size());
  for (int j = 0; j < n; ++j) {
    if (v[j] != 0.0) out += v[j] * interior_basis(n, p, j).cast<double>();
  }
  return out;
}

// Boundary frame: R^n = R^{n-1} (tangential, indices 0..n-2) + R nu (index n-1).
// iota^*: Lambda^p(R^n) -> Lambda^p(R^{n-1}) keeps the subsets without nu.
inline Eigen::MatrixXi tangential_part(int n, int p) {
  const Basis from(n, p), to(n - 1, p);
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(to.size(), from.size());
  for (int c = 0; c < from.size(); ++c) {
    const std::uint32_t m = from.mask(c);
    if (m & (1u << (n - 1))) continue;
    out(to.index(m), c) = 1;
  }
  return out;
}

// nu _| : Lambda^p(R^n) -> Lambda^{p-1}(R^{n-1}); nu is the last frame vector.
inline Eigen::MatrixXi normal_part(int n, int p) {
  const Basis from(n, p), to(n - 1, p - 1);
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(to.size(), from.size());
  const int j = n - 1;
  for (int c = 0; c < from.size(); ++c) {
    const std::uint32_t m = from.mask(c);
    if (!(m & (1u << j))) continue;
    out(to.index(m & ~(1u << j)), c) = sign_before(m, j);
  }
  return out;
}

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace bsnlab::ext
