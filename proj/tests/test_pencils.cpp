#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bsnlab/harmonic.hpp"
#include "bsnlab/pencils.hpp"

using namespace bsnlab;

namespace {

std::shared_ptr<const OperatorSet> operators(const std::string& domain, int n, int p) {
  const DomainName d = DomainName::parse(domain);
  const auto mesh = std::make_shared<const Mesh>(build_named_domain(d, n));
  const auto space =
      std::make_shared<const DofSpace>(build_space(mesh, p, d.dim() == 1 ? Scheme::Hermite3 : Scheme::P2));
  return std::make_shared<const OperatorSet>(assemble_operators(space));
}

Spectrum solve(const std::shared_ptr<const OperatorSet>& o, ProblemKind k, int count = 8) {
  ProblemSpec spec = assemble_pencil(o, k);
  if (has_cohomology_kernel(k) && is_boundary_pencil(k)) spec.deflation = harmonic_basis(o).basis;
  SolveOptions so;
  so.count = count;
  return solve_problem(spec, so);
}

bool same(const SparseMatrix& a, const SparseMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && SparseMatrix(a - b).norm() == 0.0;
}

}  // namespace

TEST(Pencils, KindNamesRoundTrip) {
  for (ProblemKind k : all_problem_kinds()) EXPECT_EQ(parse_problem_kind(to_string(k)), k);
  EXPECT_THROW(parse_problem_kind("bsn4"), InvalidArgument);
}

TEST(Pencils, IntervalSpectraAreExact) {
  const auto o = operators("interval:0,1", 4, 0);
  for (ProblemKind k : {ProblemKind::BSN1, ProblemKind::BSN2, ProblemKind::BSN3}) {
    const Spectrum s = solve(o, k);
    ASSERT_EQ(s.eigenvalues.size(), 2) << to_string(k);
    EXPECT_EQ(s.kernel_dim, 1);
    EXPECT_NEAR(s.eigenvalues[1], 24.0, 1e-8);
  }
  const Spectrum st = solve(o, ProblemKind::Steklov);
  ASSERT_EQ(st.eigenvalues.size(), 2);
  EXPECT_NEAR(st.eigenvalues[0], 0.0, 1e-12);
  EXPECT_NEAR(st.eigenvalues[1], 2.0, 1e-10);
  const Spectrum bsd = solve(operators("interval:-1,1", 4, 0), ProblemKind::BSD);
  ASSERT_EQ(bsd.eigenvalues.size(), 2);
  EXPECT_NEAR(bsd.eigenvalues[0], 1.0, 1e-8);
  EXPECT_NEAR(bsd.eigenvalues[1], 3.0, 1e-8);
}

TEST(Pencils, IntervalDirichletConvergesToPiSquared) {
  double prev = 1.0;
  for (int n : {2, 4, 8}) {
    const double err = std::abs(solve(operators("interval:0,1", n, 0), ProblemKind::Dirichlet).eigenvalues[0] -
                                std::numbers::pi * std::numbers::pi);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(Pencils, ScalarBsnPencilsCoincide) {
  for (const char* d : {"interval:0,1", "square", "disk", "annulus:0.5,1"}) {
    const auto o = operators(d, 2, 0);
    const auto p1 = assemble_pencil(o, ProblemKind::BSN1), p2 = assemble_pencil(o, ProblemKind::BSN2),
               p3 = assemble_pencil(o, ProblemKind::BSN3);
    EXPECT_TRUE(same(p1.A, p2.A) && same(p1.A, p3.A)) << d;
    EXPECT_TRUE(same(p1.B, p2.B) && same(p1.B, p3.B)) << d;
    EXPECT_TRUE(same(p1.C, p2.C) && same(p1.C, p3.C)) << d;
  }
}

TEST(Pencils, TopDegreeReduction) {
  const auto o2 = operators("square", 3, 2);
  EXPECT_TRUE(solve(o2, ProblemKind::BSN2).trivial);
  EXPECT_TRUE(solve(o2, ProblemKind::BSN3).trivial);
  const Spectrum top = solve(o2, ProblemKind::BSN1);
  const Spectrum scalar = solve(operators("square", 3, 0), ProblemKind::BSD);
  ASSERT_FALSE(top.trivial);
  ASSERT_GE(top.eigenvalues.size(), 5);
  ASSERT_GE(scalar.eigenvalues.size(), 5);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(top.eigenvalues[i], scalar.eigenvalues[i], 1e-10 * scalar.eigenvalues[i]);
}

TEST(Pencils, KernelDimensionsMatchCohomology) {
  struct Case {
    const char* domain;
    int p, expected;
  };
  for (const Case& c : {Case{"square", 0, 1}, Case{"disk", 0, 1}, Case{"annulus:0.5,1", 0, 1}, Case{"square", 1, 0},
                        Case{"disk", 1, 0}, Case{"annulus:0.5,1", 1, 1}}) {
    const auto o = operators(c.domain, 2, c.p);
    EXPECT_EQ(harmonic_basis(o).dim(), c.expected) << c.domain << " p=" << c.p;
    for (ProblemKind k : {ProblemKind::Neumann, ProblemKind::Steklov, ProblemKind::BSN1, ProblemKind::BSN3}) {
      EXPECT_EQ(solve(o, k).kernel_dim, c.expected) << c.domain << " p=" << c.p << " " << to_string(k);
    }
    EXPECT_EQ(solve(o, ProblemKind::Dirichlet).kernel_dim, 0);
    EXPECT_EQ(solve(o, ProblemKind::BSD).kernel_dim, 0);
  }
}

TEST(Pencils, ConstraintBasisSpansTheNullSpace) {
  const auto o = operators("annulus:0.5,1", 2, 1);
  const SparseMatrix c = assemble_pencil(o, ProblemKind::BSN2).C;
  std::vector<int> all(o->size());
  for (int i = 0; i < o->size(); ++i) all[i] = i;
  const ConstraintBasis cb = constraint_basis(c, all);
  const MatrixXd n = cb.dense();
  EXPECT_LT((MatrixXd(c) * n).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((n.transpose() * n - MatrixXd::Identity(n.cols(), n.cols())).norm(), 1e-10);
  EXPECT_EQ(cb.columns() + cb.rank, o->size());
}

TEST(Pencils, SparseAndDenseInteriorSolversAgree) {
  const auto o = operators("disk", 6, 0);
  ProblemSpec spec = assemble_pencil(o, ProblemKind::Neumann);
  SolveOptions sparse, dense;
  sparse.count = dense.count = 6;
  sparse.sparse_threshold = 0;
  dense.sparse_threshold = 1 << 30;
  const Spectrum a = solve_problem(spec, sparse), b = solve_problem(spec, dense);
  ASSERT_EQ(a.eigenvalues.size(), b.eigenvalues.size());
  EXPECT_EQ(a.kernel_dim, 1);
  for (Eigen::Index i = 0; i < a.eigenvalues.size(); ++i) EXPECT_NEAR(a.eigenvalues[i], b.eigenvalues[i], 1e-9);
}

TEST(Pencils, ResidualsAreSmall) {
  const auto o = operators("square", 3, 1);
  for (ProblemKind k : all_problem_kinds()) {
    const Spectrum s = solve(o, k);
    for (Eigen::Index i = s.kernel_dim; i < s.residuals.size(); ++i) EXPECT_LT(s.residuals[i], 1e-8) << to_string(k);
  }
}

TEST(Pencils, BiharmonicKindsNeedSecondOrderSpaces) {
  const auto mesh = std::make_shared<const Mesh>(build_named_domain(DomainName::unit_square(), 2));
  const auto space = std::make_shared<const DofSpace>(build_space(mesh, 0, Scheme::P1));
  const auto o = std::make_shared<const OperatorSet>(assemble_operators(space));
  EXPECT_THROW(assemble_pencil(o, ProblemKind::BSD), InvalidArgument);
  EXPECT_NO_THROW(assemble_pencil(o, ProblemKind::Steklov));
}

TEST(Pencils, PositiveIndexingSkipsKernel) {
  const Spectrum s = solve(operators("interval:0,1", 4, 0), ProblemKind::Steklov);
  EXPECT_NEAR(s.positive(1), 2.0, 1e-10);
  EXPECT_TRUE(std::isinf(s.positive(2)));
}
