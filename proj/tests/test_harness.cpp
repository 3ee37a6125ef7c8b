#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "bsnlab/harness.hpp"

using namespace bsnlab;

namespace {

SuiteConfig interval_config() {
  SuiteConfig c;
  c.domains = {"interval:0,1"};
  c.degrees = {0};
  c.levels = {4, 8};
  c.k_max = 1;
  return c;
}

const InequalityCheck* find(const InequalityReport& r, const std::string& name, int k = 1) {
  for (const auto& c : r.checks) {
    if (c.name == name && c.k == k) return &c;
  }
  return nullptr;
}

}  // namespace

TEST(Harness, IntervalSuiteSatisfiesTheInequalities) {
  const SuiteResult s = run_spectral_suite(interval_config());
  ASSERT_EQ(s.runs.size(), 2u);
  const auto reps = verify_kuttler_sigillito(s);
  ASSERT_EQ(reps.size(), 2u);
  for (const auto& r : reps) {
    EXPECT_TRUE(r.applicable);
    EXPECT_TRUE(r.pass);
    // q_1 = 2 and sigma_1 = 2 on (0, 1)
    const InequalityCheck* c = find(r, "q_1 sigma_1^2 < l_1");
    ASSERT_NE(c, nullptr);
    EXPECT_NEAR(c->lhs, 8.0, 1e-7);
    EXPECT_NEAR(c->rhs, 24.0, 1e-7);
    EXPECT_NE(find(r, "1/mu_1 < 1/lambda_1 + (q_1 l_1)^(-1/2)"), nullptr);
  }
  // oracle values attached for scalar problems on the interval
  const auto& pr = s.runs.back().problems.at(ProblemKind::BSN3);
  ASSERT_GE(pr.oracle.size(), 2u);
  EXPECT_NEAR(pr.oracle[1], 24.0, 1e-10);
}

TEST(Harness, TopDegreeIsNotApplicable) {
  SuiteConfig c;
  c.domains = {"square"};
  c.degrees = {2};
  c.levels = {2};
  c.k_max = 2;
  const SuiteResult s = run_spectral_suite(c);
  ASSERT_EQ(s.runs.size(), 1u);
  EXPECT_TRUE(s.runs[0].spectrum(ProblemKind::BSN2)->trivial);
  EXPECT_TRUE(s.runs[0].spectrum(ProblemKind::BSN3)->trivial);
  const auto reps = verify_kuttler_sigillito(s);
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_FALSE(reps[0].applicable);
  EXPECT_TRUE(reps[0].checks.empty());
}

TEST(Harness, ConfigValidation) {
  SuiteConfig c = interval_config();
  c.domain_levels["square"] = {2};
  EXPECT_THROW(run_spectral_suite(c), InvalidArgument);
  c = interval_config();
  c.levels = {0};
  EXPECT_THROW(run_spectral_suite(c), InvalidArgument);
  c = interval_config();
  c.domain_degrees["interval:0,1"] = {};
  EXPECT_THROW(run_spectral_suite(c), InvalidArgument);
  c = interval_config();
  c.penalty = 0.0;
  EXPECT_THROW(run_spectral_suite(c), InvalidArgument);

  EXPECT_THROW(suite_config_from_json(nlohmann::json{{"domain", {"square"}}}), InvalidArgument);
  EXPECT_THROW(suite_config_from_json(nlohmann::json{{"kinds", {"bsn9"}}}), InvalidArgument);
  EXPECT_THROW(suite_config_from_json(nlohmann::json{{"k_max", "five"}}), InvalidArgument);
  const SuiteConfig ok = suite_config_from_json(
      nlohmann::json{{"domains", {"square"}}, {"domain_degrees", {{"square", {1}}}}, {"seed", 7}, {"kinds", {"bsd"}}});
  EXPECT_EQ(ok.seed, 7u);
  EXPECT_EQ(ok.kinds, std::vector<ProblemKind>{ProblemKind::BSD});
  EXPECT_EQ(ok.domain_degrees.at("square"), std::vector<int>{1});
}

TEST(Harness, JsonIsDeterministic) {
  const std::string a = to_json(run_spectral_suite(interval_config())).dump();
  const std::string b = to_json(run_spectral_suite(interval_config())).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.find("seconds"), std::string::npos);
}

TEST(Harness, ConvergenceNeedsThreeLevels) {
  EXPECT_THROW(convergence_report(run_spectral_suite(interval_config())), InvalidArgument);
  SuiteConfig c = interval_config();
  c.levels = {2, 4, 8};
  c.kinds = {ProblemKind::Dirichlet, ProblemKind::Steklov};
  const auto series = convergence_report(run_spectral_suite(c));
  ASSERT_FALSE(series.empty());
  for (const auto& s : series) {
    if (s.kind == ProblemKind::Dirichlet) {
      EXPECT_FALSE(s.self_reference);
      EXPECT_TRUE(s.strictly_decreasing);
    }
  }
}

TEST(Harness, StrictComparisonNeedsMargin) {
  SuiteConfig c;
  c.strictness = 1e-4;
  c.tol_slack = 1e-8;
  EXPECT_FALSE(detail::compare("x", 1, 1.0, 1.0, true, true, c).pass);
  EXPECT_TRUE(detail::compare("x", 1, 1.0, 1.0, false, true, c).pass);
  EXPECT_TRUE(detail::compare("x", 1, 1.0, 1.0 - 1e-10, false, true, c).pass);
  EXPECT_FALSE(detail::compare("x", 1, 1.0, 1.00001, true, true, c).pass);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(detail::compare("x", 1, 1.0, inf, true, true, c).pass);
  EXPECT_FALSE(detail::compare("x", 1, inf, 1.0, false, true, c).pass);
}

TEST(Harness, CsvHeaders) {
  const SuiteResult s = run_spectral_suite(interval_config());
  std::ostringstream a, b;
  write_spectra_csv(a, s);
  write_inequalities_csv(b, verify_kuttler_sigillito(s));
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "domain,p,n,h,kind,index,eigenvalue,residual,kernel_dim");
  EXPECT_EQ(b.str().substr(0, b.str().find('\n')), "domain,p,n,name,k,lhs,rhs,margin,strict,enforced,pass");
}

TEST(Harness, SolveSingleMatchesSuite) {
  SolveRequest r;
  r.domain = "interval:0,1";
  r.kind = ProblemKind::BSN3;
  r.n = 4;
  r.k = 1;
  const Spectrum s = solve_single(r);
  EXPECT_NEAR(s.positive(1), 24.0, 1e-8);
  r.p = 2;
  EXPECT_THROW(solve_single(r), InvalidArgument);
  r.p = 0;
  r.k = 0;
  EXPECT_THROW(solve_single(r), InvalidArgument);
}
