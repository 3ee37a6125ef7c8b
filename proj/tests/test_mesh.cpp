#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "bsnlab/mesh.hpp"
#include "bsnlab/pencils.hpp"

using namespace bsnlab;

namespace {

Point facet_mid(const Mesh& m, const BoundaryFacet& f) {
  Point mid = Point::Zero();
  for (int v : f.vertices) mid += m.vertices[v];
  return mid / static_cast<double>(f.vertices.size());
}

}  // namespace

TEST(Mesh, IntervalCounts) {
  const Mesh m = build_named_domain(DomainName::interval(0, 1), 4);
  EXPECT_EQ(m.num_cells(), 4);
  EXPECT_EQ(m.num_vertices(), 5);
  ASSERT_EQ(m.boundary.size(), 2u);
  for (const auto& f : m.boundary) {
    const double x = m.vertices[f.vertices[0]].x();
    EXPECT_DOUBLE_EQ(f.normal.x(), x == 0.0 ? 1.0 : -1.0);
  }
  EXPECT_EQ(euler_characteristic(m), 1);
}

TEST(Mesh, SquareCountsAndNormals) {
  const Mesh m = build_named_domain(DomainName::unit_square(), 2);
  EXPECT_EQ(m.num_cells(), 8);
  EXPECT_EQ(euler_characteristic(m), 1);
  EXPECT_NEAR(boundary_measure(m), 4.0, 1e-12);
  for (const auto& f : m.boundary) {
    const Point mid = facet_mid(m, f);
    if (std::abs(mid.y()) < 1e-14) {
      EXPECT_NEAR(f.normal.x(), 0.0, 1e-14);
      EXPECT_NEAR(f.normal.y(), 1.0, 1e-14);
    }
    // right-handed (tangent, normal)
    EXPECT_NEAR(f.tangent.x() * f.normal.y() - f.tangent.y() * f.normal.x(), 1.0, 1e-14);
  }
}

TEST(Mesh, EulerCharacteristicOfNamedDomains) {
  for (int n : {1, 2, 3, 5}) {
    EXPECT_EQ(euler_characteristic(build_named_domain(DomainName::unit_disk(), n)), 1) << n;
    EXPECT_EQ(euler_characteristic(build_named_domain(DomainName::annulus(0.5, 1.0), n)), 0) << n;
    EXPECT_EQ(euler_characteristic(build_named_domain(DomainName::unit_square(), n)), 1) << n;
  }
}

TEST(Mesh, CurvedBoundaryVerticesOnCircle) {
  const Mesh m = build_named_domain(DomainName::annulus(0.5, 1.0), 3);
  for (const auto& f : m.boundary) {
    ASSERT_GE(f.curve, 0);
    for (int v : f.vertices) EXPECT_NEAR(m.vertices[v].norm(), m.curves[f.curve].radius, 1e-14);
  }
}

TEST(Mesh, DiskNormalsAreInwardRadialWithAngularErrorOrderH) {
  // chord normals are exactly radial at the chord midpoint; at the endpoints
  // the angle to the radial direction is half the chord angle
  double prev = 1.0;
  for (int n : {2, 4, 8}) {
    const Mesh m = build_named_domain(DomainName::unit_disk(), n);
    double worst = 0.0;
    for (const auto& f : m.boundary) {
      EXPECT_LT((f.normal + facet_mid(m, f).normalized()).norm(), 1e-12);
      for (int v : f.vertices) worst = std::max(worst, (f.normal + m.vertices[v].normalized()).norm());
    }
    EXPECT_LT(worst, prev);
    EXPECT_LT(worst, mesh_size(m));
    prev = worst;
  }
}

TEST(Mesh, RefineCountsAndInvariants) {
  const Mesh i4 = build_named_domain(DomainName::interval(0, 1), 4);
  EXPECT_EQ(refine(i4).num_cells(), 8);
  const Mesh s2 = build_named_domain(DomainName::unit_square(), 2);
  EXPECT_EQ(refine(s2).num_cells(), 32);
  const Mesh a = refine(build_named_domain(DomainName::annulus(0.5, 1.0), 2));
  EXPECT_EQ(euler_characteristic(a), 0);
  for (const auto& f : a.boundary) {
    for (int v : f.vertices) EXPECT_NEAR(a.vertices[v].norm(), a.curves[f.curve].radius, 1e-14);
  }
}

TEST(Mesh, DiskBoundaryLengthConvergesQuadratically) {
  Mesh m = build_named_domain(DomainName::unit_disk(), 2);
  std::vector<double> err;
  for (int i = 0; i < 4; ++i) {
    err.push_back(2.0 * std::numbers::pi - boundary_measure(m));
    m = refine(m);
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    EXPECT_GT(err[i], 0.0);
    EXPECT_NEAR(err[i] / err[i + 1], 4.0, 0.3);
  }
}

TEST(Mesh, InvalidParametersAreRejected) {
  EXPECT_THROW(build_named_domain(DomainName::interval(1, 1), 4), InvalidArgument);
  EXPECT_THROW(build_named_domain(DomainName::interval(2, 1), 4), InvalidArgument);
  EXPECT_THROW(build_named_domain(DomainName::annulus(1.0, 0.5), 4), InvalidArgument);
  EXPECT_THROW(build_named_domain(DomainName::annulus(0.0, 0.5), 4), InvalidArgument);
  EXPECT_THROW(build_named_domain(DomainName::unit_square(), 0), InvalidArgument);
  EXPECT_THROW(DomainName::parse("ellipse"), InvalidArgument);
  EXPECT_THROW(DomainName::parse("interval:0"), InvalidArgument);
  EXPECT_THROW(DomainName::parse("interval:0,x"), InvalidArgument);
}

TEST(Mesh, ParseRoundTrip) {
  for (const char* s : {"interval:-1,1", "square", "disk", "disk:2", "annulus:0.5,1"}) {
    const DomainName d = DomainName::parse(s);
    const DomainName e = DomainName::parse(d.to_string());
    EXPECT_EQ(d.kind, e.kind);
    EXPECT_EQ(d.a, e.a);
    EXPECT_EQ(d.b, e.b);
  }
}

TEST(Mesh, JsonRoundTripAndValidation) {
  const Mesh m = build_named_domain(DomainName::annulus(0.5, 1.0), 2);
  const nlohmann::json j = to_json(m);
  const Mesh r = mesh_from_json(j);
  EXPECT_EQ(r.num_vertices(), m.num_vertices());
  EXPECT_EQ(r.num_cells(), m.num_cells());
  EXPECT_EQ(r.boundary.size(), m.boundary.size());

  nlohmann::json bad = j;
  bad["boundary_facets"][0]["normal"][0] = -bad["boundary_facets"][0]["normal"][0].get<double>();
  bad["boundary_facets"][0]["normal"][1] = -bad["boundary_facets"][0]["normal"][1].get<double>();
  EXPECT_THROW(mesh_from_json(bad), InvariantViolation);

  nlohmann::json flipped = j;
  auto c = flipped["cells"][0];
  flipped["cells"][0] = nlohmann::json{c[0], c[2], c[1]};
  EXPECT_THROW(mesh_from_json(flipped), InvariantViolation);

  nlohmann::json missing = j;
  missing["boundary_facets"].erase(0);
  EXPECT_THROW(mesh_from_json(missing), InvariantViolation);
}

TEST(Mesh, BoundaryGeometryMatchesFacets) {
  const Mesh m = build_named_domain(DomainName::unit_square(), 3);
  const auto g = boundary_geometry(m);
  ASSERT_EQ(g.size(), m.boundary.size());
  double total = 0.0;
  for (const auto& f : g) {
    EXPECT_NEAR(f.normal.norm(), 1.0, 1e-14);
    EXPECT_NEAR(f.tangent.dot(f.normal), 0.0, 1e-14);
    total += f.measure;
  }
  EXPECT_NEAR(total, 4.0, 4e-12);
}

TEST(Mesh, VertexPermutationLeavesSpectraUnchanged) {
  const auto base = std::make_shared<const Mesh>(build_named_domain(DomainName::unit_disk(), 3));
  std::vector<int> perm(base->vertices.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937 rng(42);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto shuffled = std::make_shared<const Mesh>(permute_vertices(*base, perm));
  for (ProblemKind k : {ProblemKind::Dirichlet, ProblemKind::Steklov, ProblemKind::BSD}) {
    std::vector<VectorXd> spectra;
    for (const auto& mesh : {base, shuffled}) {
      const auto space = std::make_shared<const DofSpace>(build_space(mesh, 0, Scheme::P2));
      const auto ops = std::make_shared<const OperatorSet>(assemble_operators(space));
      SolveOptions so;
      so.count = 6;
      spectra.push_back(solve_problem(assemble_pencil(ops, k), so).eigenvalues);
    }
    ASSERT_EQ(spectra[0].size(), spectra[1].size());
    for (Eigen::Index i = 0; i < spectra[0].size(); ++i) {
      EXPECT_NEAR(spectra[0][i], spectra[1][i], 1e-8 * std::max(1.0, spectra[0][i])) << to_string(k);
    }
  }
}
