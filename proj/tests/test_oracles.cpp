#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "bsnlab/harmonic.hpp"
#include "bsnlab/oracles.hpp"

using namespace bsnlab;

TEST(Oracles, IntervalClosedForms) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const auto d = oracle::interval_closed_form(ProblemKind::Dirichlet, 0, 1, 3);
  ASSERT_EQ(d.eigenvalues.size(), 3u);
  EXPECT_NEAR(d.eigenvalues[0], pi2, 1e-12);
  EXPECT_NEAR(d.eigenvalues[2], 9 * pi2, 1e-10);
  const auto n = oracle::interval_closed_form(ProblemKind::Neumann, 0, 1, 2);
  EXPECT_EQ(n.eigenvalues[0], 0.0);
  const auto s = oracle::interval_closed_form(ProblemKind::Steklov, 0, 1);
  ASSERT_EQ(s.eigenvalues.size(), 2u);
  EXPECT_NEAR(s.eigenvalues[0], 0.0, 1e-12);
  EXPECT_NEAR(s.eigenvalues[1], 2.0, 1e-12);
  for (ProblemKind k : {ProblemKind::BSN1, ProblemKind::BSN2, ProblemKind::BSN3}) {
    const auto b = oracle::interval_closed_form(k, 0, 1);
    ASSERT_EQ(b.eigenvalues.size(), 2u);
    EXPECT_NEAR(b.eigenvalues[0], 0.0, 1e-12);
    EXPECT_NEAR(b.eigenvalues[1], 24.0, 1e-10);
  }
  const auto bsd = oracle::interval_closed_form(ProblemKind::BSD, -1, 1);
  ASSERT_EQ(bsd.eigenvalues.size(), 2u);
  EXPECT_NEAR(bsd.eigenvalues[0], 1.0, 1e-12);
  EXPECT_NEAR(bsd.eigenvalues[1], 3.0, 1e-12);
}

TEST(Oracles, IntervalScalingAndTranslation) {
  // value traces against second derivatives give L^-3, derivative traces L^-1
  for (auto [k, power] : {std::pair{ProblemKind::BSN1, 3.0}, std::pair{ProblemKind::BSD, 1.0},
                          std::pair{ProblemKind::Steklov, 1.0}, std::pair{ProblemKind::Dirichlet, 2.0}}) {
    const auto a = oracle::interval_closed_form(k, 0, 1, 3);
    const auto b = oracle::interval_closed_form(k, 3, 5, 3);
    ASSERT_EQ(a.eigenvalues.size(), b.eigenvalues.size());
    for (std::size_t i = 0; i < a.eigenvalues.size(); ++i)
      EXPECT_NEAR(b.eigenvalues[i], a.eigenvalues[i] / std::pow(2.0, power), 1e-9 * std::max(1.0, a.eigenvalues[i]));
  }
  EXPECT_THROW(oracle::interval_closed_form(ProblemKind::BSD, 1, 0), InvalidArgument);
}

TEST(Oracles, DiskModeFormulas) {
  for (int m = 0; m <= 4; ++m) {
    EXPECT_NEAR(oracle::disk_scalar_eigs(ProblemKind::Steklov, m).eigenvalues[0], m, 1e-10);
    EXPECT_NEAR(oracle::disk_scalar_eigs(ProblemKind::BSD, m).eigenvalues[0], 2.0 * (m + 1), 1e-10);
    EXPECT_NEAR(oracle::disk_scalar_eigs(ProblemKind::BSN1, m).eigenvalues[0], 2.0 * m * m * (m + 1), 1e-9);
  }
  EXPECT_NEAR(oracle::disk_scalar_eigs(ProblemKind::Dirichlet, 0).eigenvalues[0], 5.783185962946784, 1e-10);
  EXPECT_NEAR(oracle::disk_scalar_eigs(ProblemKind::Neumann, 1).eigenvalues[0], 3.389957716267, 1e-9);
  // radius R: Dirichlet scales like R^-2
  EXPECT_NEAR(oracle::disk_scalar_eigs(ProblemKind::Dirichlet, 0, 1, 2.0).eigenvalues[0], 5.783185962946784 / 4,
              1e-10);
}

TEST(Oracles, BesselSeriesAgreesWithStandardLibrary) {
  for (int m = 0; m <= 3; ++m) {
    for (double x : {0.3, 2.0, 7.5}) {
      EXPECT_NEAR(oracle::bessel_j(m, x).first, std::cyl_bessel_j(static_cast<double>(m), x), 1e-12);
    }
  }
}

TEST(Oracles, AnnulusSteklovModeOne) {
  const auto s = oracle::annulus_scalar_eigs(ProblemKind::Steklov, 1, 0.5, 1.0);
  ASSERT_GE(s.eigenvalues.size(), 1u);
  EXPECT_NEAR(s.eigenvalues[0], (5.0 - std::sqrt(17.0)) / 2.0, 1e-10);
  EXPECT_THROW(oracle::annulus_scalar_eigs(ProblemKind::Dirichlet, 0, 0.5, 1.0), InvalidArgument);
  const auto sp = oracle::annulus_scalar_spectrum(ProblemKind::BSN1, 4, 0.5, 1.0);
  ASSERT_EQ(sp.size(), 4u);
  EXPECT_EQ(sp[0], 0.0);
  EXPECT_NEAR(sp[1], 0.836301, 1e-5);
  EXPECT_NEAR(sp[2], 0.836301, 1e-5);
}

TEST(Oracles, SandwichBracketsTheFirstEigenvalue) {
  const DomainName d = DomainName::unit_square();
  const auto mesh = std::make_shared<const Mesh>(build_named_domain(d, 2));
  const auto space = std::make_shared<const DofSpace>(build_space(mesh, 1, Scheme::P2));
  const auto ops = std::make_shared<const OperatorSet>(assemble_operators(space));
  for (ProblemKind k : {ProblemKind::BSD, ProblemKind::BSN1, ProblemKind::Steklov}) {
    const ProblemSpec spec = assemble_pencil(ops, k);
    const auto s = oracle::bruteforce_quotient_min(spec, 200);
    SolveOptions so;
    so.count = 3;
    const Spectrum sp = solve_problem(spec, so);
    EXPECT_GT(s.samples, 0);
    EXPECT_LE(s.lower, s.upper * (1 + 1e-12)) << to_string(k);
    EXPECT_NEAR(s.lower, sp.positive(1), 1e-8 * sp.positive(1)) << to_string(k);
  }
}

TEST(Oracles, CsvHeaderAndRows) {
  std::ostringstream os;
  oracle::write_csv(os, oracle::interval_rows(ProblemKind::BSN1, 0, 1));
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "kind,domain,mode,index,eigenvalue");
  EXPECT_NE(s.find("bsn1"), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}
