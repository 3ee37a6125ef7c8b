#include <cmath>

#include <gtest/gtest.h>

#include "bsnlab/harmonic.hpp"

using namespace bsnlab;

namespace {

std::shared_ptr<const OperatorSet> operators(const std::string& domain, int n, int p) {
  const DomainName d = DomainName::parse(domain);
  const auto mesh = std::make_shared<const Mesh>(build_named_domain(d, n));
  const auto space =
      std::make_shared<const DofSpace>(build_space(mesh, p, d.dim() == 1 ? Scheme::Hermite3 : Scheme::P2));
  return std::make_shared<const OperatorSet>(assemble_operators(space));
}

}  // namespace

TEST(Harmonic, DimensionsOfAbsoluteCohomology) {
  EXPECT_EQ(harmonic_basis(operators("interval:0,1", 4, 0)).dim(), 1);
  EXPECT_EQ(harmonic_basis(operators("interval:0,1", 4, 1)).dim(), 0);
  EXPECT_EQ(harmonic_basis(operators("square", 3, 0)).dim(), 1);
  EXPECT_EQ(harmonic_basis(operators("square", 3, 1)).dim(), 0);
  EXPECT_EQ(harmonic_basis(operators("square", 3, 2)).dim(), 0);
  EXPECT_EQ(harmonic_basis(operators("disk", 3, 1)).dim(), 0);
  EXPECT_EQ(harmonic_basis(operators("annulus:0.5,1", 3, 1)).dim(), 1);
  EXPECT_EQ(harmonic_basis(operators("annulus:0.5,1", 3, 2)).dim(), 0);
}

TEST(Harmonic, ScalarKernelIsConstant) {
  const auto o = operators("disk", 3, 0);
  const HarmonicBasis hb = harmonic_basis(o);
  ASSERT_EQ(hb.dim(), 1);
  const VectorXd v = hb.basis.col(0) / hb.basis(0, 0);
  EXPECT_LT((v - VectorXd::Ones(v.size())).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(hb.energy_residuals[0], 1e-8);
}

TEST(Harmonic, AnnulusOneFormApproachesAngularForm) {
  // d theta = (-y dx + x dy) / r^2 spans H^1 of the annulus
  double prev = 1.0;
  for (int n : {2, 4}) {
    const auto o = operators("annulus:0.5,1", n, 1);
    const HarmonicBasis hb = harmonic_basis(o);
    ASSERT_EQ(hb.dim(), 1);
    const VectorXd dtheta = interpolate(*o->space, [](const Point& q) {
      return Eigen::Vector2d(-q.y() / q.squaredNorm(), q.x() / q.squaredNorm());
    });
    const VectorXd h = hb.basis.col(0);
    // M-angle between the computed basis vector and d theta
    const double c = std::abs(h.dot(o->mass * dtheta)) /
                     std::sqrt(h.dot(o->mass * h) * dtheta.dot(o->mass * dtheta));
    const double angle = std::sqrt(std::max(0.0, 1.0 - c * c));
    EXPECT_LT(angle, prev);
    EXPECT_LT(angle, 0.05);
    prev = angle;
    // the kernel is well separated from the first nonzero Neumann eigenvalue
    EXPECT_LT(hb.eigenvalues[0], 1e-2 * hb.first_nonzero);
  }
}

TEST(Harmonic, QuotientsApproachThePencilOnTheDisk) {
  // disk p = 0: q_1 = 2 and l_1 = 4 from separation of variables
  for (auto [kind, exact] : {std::pair{ProblemKind::BSD, 2.0}, std::pair{ProblemKind::BSN1, 4.0},
                             std::pair{ProblemKind::BSN3, 4.0}}) {
    double prev = 1.0;
    for (int n : {4, 8}) {
      const double q = harmonic_field_quotient(operators("disk", n, 0), kind).value;
      const double err = std::abs(q - exact) / exact;
      EXPECT_LT(err, prev) << to_string(kind);
      prev = err;
    }
    EXPECT_LT(prev, 0.01) << to_string(kind);
  }
}

TEST(Harmonic, QuotientMinimizerIsDiscretelyHarmonic) {
  const auto o = operators("square", 3, 1);
  const QuotientResult r = harmonic_field_quotient(o, ProblemKind::BSN3);
  const auto boundary = detail::boundary_global_dofs(*o->space);
  const auto interior = detail::complement(boundary, o->size());
  const VectorXd kr = o->hodge * r.form;
  double worst = 0.0;
  for (int i : interior) worst = std::max(worst, std::abs(kr[i]));
  EXPECT_LT(worst, 1e-9 * std::max(1.0, kr.cwiseAbs().maxCoeff()));
  EXPECT_GT(r.value, 0.0);
}

TEST(Harmonic, QuotientRejectsOtherKinds) {
  const auto o = operators("square", 2, 0);
  EXPECT_THROW(harmonic_field_quotient(o, ProblemKind::Steklov), InvalidArgument);
  EXPECT_THROW(harmonic_field_quotient(o, ProblemKind::BSN2), InvalidArgument);
}

TEST(Harmonic, TangentialExtensionIsHarmonicInside) {
  const auto o = operators("disk", 3, 0);
  const VectorXd u = tangential_harmonic_extension(*o, [](const Point& q) { return q.x(); });
  // x is harmonic, so the extension reproduces its P2 interpolant up to discretization error
  const VectorXd x = interpolate(*o->space, [](const Point& q) { return Eigen::VectorXd::Constant(1, q.x()); });
  EXPECT_LT((u - x).cwiseAbs().maxCoeff(), 1e-10);
}
