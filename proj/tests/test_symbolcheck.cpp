#include <chrono>
#include <random>

#include <gtest/gtest.h>

#include "bsnlab/symbolcheck.hpp"

using namespace bsnlab;
using namespace bsnlab::symbol;

TEST(Exterior, CartanIdentity) {
  // v _| (v ^ w) + v ^ (v _| w) = |v|^2 w
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int n = 1; n <= 4; ++n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng);
    for (int p = 0; p <= n; ++p) {
      const Eigen::Index dim = ext::binomial(n, p);
      Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(dim, dim);
      if (p < n) lhs += ext::interior(v, p + 1) * ext::wedge(v, p);
      if (p > 0) lhs += ext::wedge(v, p - 1) * ext::interior(v, p);
      EXPECT_LT((lhs - v.squaredNorm() * Eigen::MatrixXd::Identity(dim, dim)).norm(), 1e-12) << n << " " << p;
    }
  }
}

TEST(Symbol, PhiIsSquareAndInjective) {
  std::mt19937 rng(42);
  for (int n = 2; n <= 4; ++n) {
    for (int p = 0; p <= n; ++p) {
      const CovectorFrame f = random_frame(n, p, 0.1, 10.0, rng);
      for (Problem pr : all_problems()) {
        const SymbolMatrix s = symbol_phi(pr, f);
        const auto c = check_isomorphism(s);
        EXPECT_TRUE(c.square) << to_string(pr) << " n=" << n << " p=" << p;
        EXPECT_TRUE(c.injective) << to_string(pr) << " n=" << n << " p=" << p;
        EXPECT_EQ(s.phi.cols(), s.space.dim());
      }
    }
  }
}

TEST(Symbol, BsnThreeEqualsBsnOne) {
  std::mt19937 rng(1);
  for (int n = 2; n <= 4; ++n) {
    for (int p = 0; p <= n; ++p) {
      const CovectorFrame f = random_frame(n, p, 0.5, 2.0, rng);
      const CMatrix a = symbol_phi(Problem::BSN1, f).phi, b = symbol_phi(Problem::BSN3, f).phi;
      ASSERT_EQ(a.rows(), b.rows());
      EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(Symbol, SingularMatrixIsNotInjective) {
  CMatrix m = CMatrix::Identity(4, 4);
  m(3, 3) = 0.0;
  const auto c = check_isomorphism(m);
  EXPECT_TRUE(c.square);
  EXPECT_FALSE(c.injective);
  EXPECT_FALSE(check_isomorphism(CMatrix::Identity(4, 3)).square);
}

TEST(Symbol, InvalidFramesThrow) {
  CovectorFrame f;
  f.n = 3;
  f.p = 1;
  f.v = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(symbol_phi(Problem::BSN1, f), InvalidArgument);
  f.v = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(symbol_phi(Problem::BSN1, f), InvalidArgument);
  f.v = Eigen::VectorXd::Ones(2);
  f.p = 4;
  EXPECT_THROW(symbol_phi(Problem::BSN1, f), InvalidArgument);
  EXPECT_THROW(parse_problem("bsn7"), InvalidArgument);
}

TEST(Symbol, SweepIsFastAndClean) {
  SweepConfig cfg;
  const auto t0 = std::chrono::steady_clock::now();
  const SweepReport r = symbol_sweep(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_TRUE(r.all_injective);
  EXPECT_TRUE(r.bsn3_equals_bsn1);
  EXPECT_TRUE(r.dimensions_ok);
  EXPECT_EQ(r.samples.size(), 12u * 100u * all_problems().size());
  EXPECT_LT(secs, 10.0);
  cfg.samples = 0;
  EXPECT_THROW(symbol_sweep(cfg), InvalidArgument);
}
