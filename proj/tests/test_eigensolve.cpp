#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "bsnlab/eigensolve.hpp"

using namespace bsnlab;

namespace {

// 1D Dirichlet Laplacian on (0, 1) with P1 elements: exact discrete
// eigenvalues are known in closed form.
std::pair<Eigen::SparseMatrix<double>, Eigen::SparseMatrix<double>> p1_laplacian(int n) {
  const double h = 1.0 / n;
  const int m = n - 1;
  std::vector<Eigen::Triplet<double>> ka, ma;
  for (int i = 0; i < m; ++i) {
    ka.emplace_back(i, i, 2.0 / h);
    ma.emplace_back(i, i, 4.0 * h / 6.0);
    if (i + 1 < m) {
      ka.emplace_back(i, i + 1, -1.0 / h);
      ka.emplace_back(i + 1, i, -1.0 / h);
      ma.emplace_back(i, i + 1, h / 6.0);
      ma.emplace_back(i + 1, i, h / 6.0);
    }
  }
  Eigen::SparseMatrix<double> k(m, m), mm(m, m);
  k.setFromTriplets(ka.begin(), ka.end());
  mm.setFromTriplets(ma.begin(), ma.end());
  return {k, mm};
}

double p1_eigenvalue(int j, int n) {
  const double h = 1.0 / n, c = std::cos(j * std::numbers::pi * h);
  return 6.0 / (h * h) * (1.0 - c) / (2.0 + c);
}

}  // namespace

TEST(Eigensolve, DefinitePencilMatchesClosedForm) {
  const auto [k, m] = p1_laplacian(20);
  const Eigenpairs e = solve_definite(MatrixXd(k), MatrixXd(m), 5);
  ASSERT_EQ(e.values.size(), 5);
  for (int j = 0; j < 5; ++j) {
    EXPECT_NEAR(e.values[j], p1_eigenvalue(j + 1, 20), 1e-9 * e.values[j]);
    EXPECT_LT(e.residuals[j], 1e-12);
  }
  // B-orthonormal eigenvectors
  const MatrixXd g = e.vectors.transpose() * MatrixXd(m) * e.vectors;
  EXPECT_LT((g - MatrixXd::Identity(5, 5)).norm(), 1e-10);
}

TEST(Eigensolve, SparseSubspaceIterationMatchesDense) {
  const auto [k, m] = p1_laplacian(400);
  const Eigenpairs s = solve_definite_sparse(k, m, 6);
  ASSERT_EQ(s.values.size(), 6);
  for (int j = 0; j < 6; ++j) {
    EXPECT_NEAR(s.values[j], p1_eigenvalue(j + 1, 400), 1e-9 * s.values[j]);
    EXPECT_LT(s.residuals[j], 1e-10);
  }
}

TEST(Eigensolve, ReciprocalPencilDropsInfiniteEigenvalues) {
  // A = diag(1, 2, 3, 4), B = diag(1, 0, 2, 0): finite eigenvalues 1 and 1.5
  MatrixXd a = Eigen::Vector4d(1, 2, 3, 4).asDiagonal();
  MatrixXd b = Eigen::Vector4d(1, 0, 2, 0).asDiagonal();
  const Eigenpairs e = solve_reciprocal(a, b, MatrixXd(4, 0));
  ASSERT_EQ(e.values.size(), 2);
  EXPECT_NEAR(e.values[0], 1.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.5, 1e-14);
  EXPECT_EQ(e.finite_count, 2);
}

TEST(Eigensolve, ReciprocalPencilHonoursOrthogonalityFunctionals) {
  MatrixXd a = Eigen::Vector3d(1, 2, 3).asDiagonal();
  MatrixXd b = MatrixXd::Identity(3, 3);
  MatrixXd f = MatrixXd::Zero(3, 1);
  f(0, 0) = 1.0;  // exclude the first coordinate
  const Eigenpairs e = solve_reciprocal(a, b, f);
  ASSERT_EQ(e.values.size(), 2);
  EXPECT_NEAR(e.values[0], 2.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), 0.0, 1e-14);
  EXPECT_THROW(solve_reciprocal(a, b, MatrixXd::Zero(3, 1)), NumericalError);
}

TEST(Eigensolve, SemidefinitePencilReportsKernelFirst) {
  // A = L (graph Laplacian of a path) has the constants as kernel
  MatrixXd a(3, 3);
  a << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  const MatrixXd b = MatrixXd::Identity(3, 3);
  const MatrixXd z = MatrixXd::Ones(3, 1);
  const Eigenpairs e = solve_semidefinite(a, b, z);
  ASSERT_EQ(e.values.size(), 3);
  EXPECT_EQ(e.deflated, 1);
  EXPECT_EQ(e.values[0], 0.0);
  EXPECT_NEAR(e.values[1], 1.0, 1e-13);
  EXPECT_NEAR(e.values[2], 3.0, 1e-13);
  EXPECT_THROW(solve_semidefinite(a, b, MatrixXd(VectorXd::Unit(3, 0))), NumericalError);
}

TEST(Eigensolve, RejectsAsymmetricInput) {
  MatrixXd a(2, 2);
  a << 1, 2, 0, 1;
  EXPECT_THROW(solve_definite(a, MatrixXd::Identity(2, 2)), InvalidArgument);
  EXPECT_THROW(solve_definite(MatrixXd::Identity(2, 2), -MatrixXd::Identity(2, 2)), NumericalError);
}

TEST(Eigensolve, KernelCountUsesToleranceAndGap) {
  EXPECT_EQ(count_kernel(Eigen::Vector4d(1e-14, 2, 3, 4)), 1);
  EXPECT_EQ(count_kernel(Eigen::Vector4d(1e-5, 2, 3, 4)), 1);   // gap-separated near-kernel
  EXPECT_EQ(count_kernel(Eigen::Vector4d(0.5, 2, 3, 4)), 0);    // no gap
  EXPECT_EQ(count_kernel(Eigen::Vector4d(0, 1e-15, 3, 4)), 2);
}

TEST(Eigensolve, NullSpaceOfSymmetricMatrix) {
  MatrixXd a(3, 3);
  a << 1, -1, 0, -1, 1, 0, 0, 0, 2;
  const MatrixXd z = null_space(a);
  ASSERT_EQ(z.cols(), 1);
  EXPECT_NEAR(std::abs(z(0, 0)), std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(std::abs(z(2, 0)), 0.0, 1e-14);
}
