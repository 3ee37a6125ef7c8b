#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bsnlab/error.hpp"
#include "bsnlab/mesh.hpp"
#include "bsnlab/quadrature.hpp"

namespace bsnlab {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

enum class Scheme { P1, P2, Hermite3 };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::P1:
      return "p1";
    case Scheme::P2:
      return "p2";
    case Scheme::Hermite3:
      return "hermite3";
  }
  return "unknown";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "p1") return Scheme::P1;
  if (s == "p2") return Scheme::P2;
  if (s == "hermite3") return Scheme::Hermite3;
  throw InvalidArgument("unknown scheme '" + s + "' (expected p1, p2 or hermite3)");
}

inline int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Boundary traces of a p-form. On flat domains of dimension <= 2 every trace
// has at most one scalar component.
enum class Trace {
  Tangential,         // iota^* w
  Normal,             // nu _| w
  NormalDifferential, // nu _| dw
  TangentialCodiff,   // iota^* delta w
  NormalLaplacian,    // nu _| Delta w (diagnostic only)
};

inline std::string to_string(Trace t) {
  switch (t) {
    case Trace::Tangential:
      return "tangential";
    case Trace::Normal:
      return "normal";
    case Trace::NormalDifferential:
      return "normal_d";
    case Trace::TangentialCodiff:
      return "tangential_delta";
    case Trace::NormalLaplacian:
      return "normal_laplacian";
  }
  return "unknown";
}

// Degree-p form discretization: `components` copies of a scalar Lagrange or
// Hermite space, ordered component-major.
struct DofSpace {
  std::shared_ptr<const Mesh> mesh;
  int degree = 0;
  Scheme scheme = Scheme::P1;
  int components = 1;
  int scalar_dofs = 0;
  std::vector<std::vector<int>> cell_dofs;
  std::vector<Point> nodes;                       // position of each scalar dof (Hermite: its vertex)
  std::vector<int> boundary_value_dofs;           // scalar dofs whose value is a boundary trace value
  std::vector<int> boundary_derivative_dofs;      // Hermite3 slope dofs at boundary vertices
  std::vector<std::vector<int>> facet_value_dofs; // per boundary facet, scalar value dofs on it
  std::vector<char> chord_node;                   // value dof sits on the chord of a curved facet, off the true boundary
  EdgeTopology topology;                          // 2D only

  [[nodiscard]] int dim() const { return mesh->dim; }
  [[nodiscard]] int size() const { return components * scalar_dofs; }
  [[nodiscard]] int global(int component, int scalar) const { return component * scalar_dofs + scalar; }
};

inline DofSpace build_space(std::shared_ptr<const Mesh> mesh, int p, Scheme scheme) {
  if (!mesh) throw InvalidArgument("null mesh");
  const int dim = mesh->dim;
  if (p < 0 || p > dim) throw InvalidArgument("form degree must satisfy 0 <= p <= dim");
  if (scheme == Scheme::Hermite3 && dim != 1) throw InvalidArgument("hermite3 is only available on 1D meshes");
  DofSpace s;
  s.mesh = mesh;
  s.degree = p;
  s.scheme = scheme;
  s.components = binomial(dim, p);
  const Mesh& m = *mesh;
  const int nv = m.num_vertices();
  if (dim == 2) s.topology = edge_topology(m);

  switch (scheme) {
    case Scheme::P1:
      s.scalar_dofs = nv;
      s.nodes = m.vertices;
      for (const Cell& c : m.cells) s.cell_dofs.push_back(std::vector<int>(c.begin(), c.begin() + dim + 1));
      break;
    case Scheme::P2:
      s.nodes = m.vertices;
      if (dim == 1) {
        s.scalar_dofs = nv + m.num_cells();
        for (int ci = 0; ci < m.num_cells(); ++ci) {
          const Cell& c = m.cells[ci];
          s.nodes.push_back(0.5 * (m.vertices[c[0]] + m.vertices[c[1]]));
          s.cell_dofs.push_back({c[0], c[1], nv + ci});
        }
      } else {
        s.scalar_dofs = nv + static_cast<int>(s.topology.edges.size());
        for (const auto& e : s.topology.edges) s.nodes.push_back(0.5 * (m.vertices[e[0]] + m.vertices[e[1]]));
        for (int ci = 0; ci < m.num_cells(); ++ci) {
          const Cell& c = m.cells[ci];
          const auto& ce = s.topology.cell_edges[ci];
          s.cell_dofs.push_back({c[0], c[1], c[2], nv + ce[0], nv + ce[1], nv + ce[2]});
        }
      }
      break;
    case Scheme::Hermite3:
      s.scalar_dofs = 2 * nv;
      for (int v = 0; v < nv; ++v) {
        s.nodes.push_back(m.vertices[v]);
        s.nodes.push_back(m.vertices[v]);
      }
      for (const Cell& c : m.cells) s.cell_dofs.push_back({2 * c[0], 2 * c[0] + 1, 2 * c[1], 2 * c[1] + 1});
      break;
  }

  std::vector<char> on_boundary(s.scalar_dofs, 0);
  for (const auto& f : m.boundary) {
    std::vector<int> dofs;
    if (scheme == Scheme::Hermite3) {
      dofs.push_back(2 * f.vertices[0]);
      s.boundary_derivative_dofs.push_back(2 * f.vertices[0] + 1);
    } else {
      dofs = f.vertices;
      if (scheme == Scheme::P2 && dim == 2) {
        const int a = f.vertices[0], b = f.vertices[1];
        const auto& ce = s.topology.cell_edges[f.cell];
        const Cell& c = m.cells[f.cell];
        for (int k = 0; k < 3; ++k) {
          const int u = c[k], w = c[(k + 1) % 3];
          if ((u == a && w == b) || (u == b && w == a)) dofs.push_back(nv + ce[k]);
        }
      }
    }
    for (int d : dofs) on_boundary[d] = 1;
    s.facet_value_dofs.push_back(dofs);
  }
  s.chord_node.assign(s.scalar_dofs, 0);
  if (scheme == Scheme::P2 && dim == 2) {
    for (std::size_t fi = 0; fi < m.boundary.size(); ++fi) {
      if (m.boundary[fi].curve < 0) continue;
      for (int d : s.facet_value_dofs[fi]) {
        if (d >= nv) s.chord_node[d] = 1;
      }
    }
  }
  for (int d = 0; d < s.scalar_dofs; ++d) {
    if (on_boundary[d]) s.boundary_value_dofs.push_back(d);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Local basis evaluation
// ---------------------------------------------------------------------------

// Scalar basis functions of one cell evaluated at one point: values,
// gradients and Laplacians (u'' in 1D).
struct LocalBasis {
  std::vector<int> dofs;
  std::vector<double> value;
  std::vector<Point> grad;
  std::vector<double> lap;
};

namespace detail {

struct TriangleMap {
  std::array<Point, 3> grad_lambda;
  double area = 0.0;
};

inline TriangleMap triangle_map(const Mesh& m, const Cell& c) {
  const Point x0 = m.vertices[c[0]], x1 = m.vertices[c[1]], x2 = m.vertices[c[2]];
  Eigen::Matrix2d J;
  J.col(0) = x1 - x0;
  J.col(1) = x2 - x0;
  const Eigen::Matrix2d Jinv = J.inverse();
  TriangleMap t;
  t.grad_lambda[1] = Jinv.row(0).transpose();
  t.grad_lambda[2] = Jinv.row(1).transpose();
  t.grad_lambda[0] = -(t.grad_lambda[1] + t.grad_lambda[2]);
  t.area = 0.5 * std::abs(J.determinant());
  return t;
}

inline std::array<double, 3> barycentric(const Mesh& m, const Cell& c, const Point& x) {
  const Point x0 = m.vertices[c[0]];
  Eigen::Matrix2d J;
  J.col(0) = m.vertices[c[1]] - x0;
  J.col(1) = m.vertices[c[2]] - x0;
  const Eigen::Vector2d l = J.inverse() * (x - x0);
  return {1.0 - l.x() - l.y(), l.x(), l.y()};
}

}  // namespace detail

// Evaluates the local basis of `cell` at physical point x (which must lie in
// the closed cell; one-sided values are taken from this cell).
inline LocalBasis eval_basis(const DofSpace& s, int cell, const Point& x) {
  const Mesh& m = *s.mesh;
  const Cell& c = m.cells[cell];
  LocalBasis b;
  b.dofs = s.cell_dofs[cell];
  const int n = static_cast<int>(b.dofs.size());
  b.value.assign(n, 0.0);
  b.grad.assign(n, Point::Zero());
  b.lap.assign(n, 0.0);
  if (m.dim == 1) {
    const double x0 = m.vertices[c[0]].x(), x1 = m.vertices[c[1]].x();
    const double h = x1 - x0;
    const double t = (x.x() - x0) / h;
    auto set = [&](int i, double v, double dt, double dtt) {
      b.value[i] = v;
      b.grad[i] = Point(dt / h, 0.0);
      b.lap[i] = dtt / (h * h);
    };
    switch (s.scheme) {
      case Scheme::P1:
        set(0, 1.0 - t, -1.0, 0.0);
        set(1, t, 1.0, 0.0);
        break;
      case Scheme::P2:
        set(0, (1.0 - t) * (1.0 - 2.0 * t), 4.0 * t - 3.0, 4.0);
        set(1, t * (2.0 * t - 1.0), 4.0 * t - 1.0, 4.0);
        set(2, 4.0 * t * (1.0 - t), 4.0 - 8.0 * t, -8.0);
        break;
      case Scheme::Hermite3: {
        const double t2 = t * t, t3 = t2 * t;
        set(0, 1.0 - 3.0 * t2 + 2.0 * t3, -6.0 * t + 6.0 * t2, -6.0 + 12.0 * t);
        set(1, h * (t - 2.0 * t2 + t3), h * (1.0 - 4.0 * t + 3.0 * t2), h * (-4.0 + 6.0 * t));
        set(2, 3.0 * t2 - 2.0 * t3, 6.0 * t - 6.0 * t2, 6.0 - 12.0 * t);
        set(3, h * (-t2 + t3), h * (-2.0 * t + 3.0 * t2), h * (-2.0 + 6.0 * t));
        break;
      }
    }
    return b;
  }
  const auto tm = detail::triangle_map(m, c);
  const auto l = detail::barycentric(m, c, x);
  const auto& g = tm.grad_lambda;
  if (s.scheme == Scheme::P1) {
    for (int i = 0; i < 3; ++i) {
      b.value[i] = l[i];
      b.grad[i] = g[i];
    }
    return b;
  }
  for (int i = 0; i < 3; ++i) {
    b.value[i] = l[i] * (2.0 * l[i] - 1.0);
    b.grad[i] = (4.0 * l[i] - 1.0) * g[i];
    b.lap[i] = 4.0 * g[i].squaredNorm();
  }
  for (int k = 0; k < 3; ++k) {
    const int i = k, j = (k + 1) % 3;
    b.value[3 + k] = 4.0 * l[i] * l[j];
    b.grad[3 + k] = 4.0 * (l[i] * g[j] + l[j] * g[i]);
    b.lap[3 + k] = 8.0 * g[i].dot(g[j]);
  }
  return b;
}

// Quadrature points of a cell in physical coordinates with absolute weights.
inline std::vector<std::pair<Point, double>> cell_quadrature(const Mesh& m, int cell) {
  std::vector<std::pair<Point, double>> q;
  const Cell& c = m.cells[cell];
  if (m.dim == 1) {
    const auto r = quad::gauss_legendre(4);
    const Point x0 = m.vertices[c[0]], x1 = m.vertices[c[1]];
    const double h = x1.x() - x0.x();
    for (std::size_t i = 0; i < r.points.size(); ++i) q.emplace_back(x0 + r.points[i] * (x1 - x0), r.weights[i] * h);
    return q;
  }
  const auto r = quad::triangle_degree5();
  const double area = detail::triangle_map(m, c).area;
  for (std::size_t i = 0; i < r.bary.size(); ++i) {
    Point x = Point::Zero();
    for (int k = 0; k < 3; ++k) x += r.bary[i][k] * m.vertices[c[k]];
    q.emplace_back(x, r.weights[i] * area);
  }
  return q;
}

// Quadrature on a boundary facet: a single unit-weight point in 1D.
inline std::vector<std::pair<Point, double>> facet_quadrature(const Mesh& m, const BoundaryFacet& f) {
  if (m.dim == 1) return {{m.vertices[f.vertices[0]], 1.0}};
  const auto r = quad::gauss_legendre(3);
  const Point a = m.vertices[f.vertices[0]], b = m.vertices[f.vertices[1]];
  std::vector<std::pair<Point, double>> q;
  for (std::size_t i = 0; i < r.points.size(); ++i) q.emplace_back(a + r.points[i] * (b - a), r.weights[i] * f.measure);
  return q;
}

// ---------------------------------------------------------------------------
// Trace row coefficients
// ---------------------------------------------------------------------------

// Linear functional on one point's local data: per component, coefficients
// multiplying the value, the gradient and the Laplacian.
struct PointFunctional {
  std::vector<double> value;
  std::vector<Point> grad;
  std::vector<double> lap;
  bool zero = true;
};

// Coefficients of the trace `t` of a p-form at a boundary point with inward
// normal nu and tangent tau. Flat metric: w = f (p=0), f dx + g dy (p=1),
// h dx^dy (p=2); Delta is the positive Hodge Laplacian.
inline PointFunctional trace_functional(int dim, int p, Trace t, const Point& nu, const Point& tau) {
  const int nc = binomial(dim, p);
  PointFunctional r;
  r.value.assign(nc, 0.0);
  r.grad.assign(nc, Point::Zero());
  r.lap.assign(nc, 0.0);
  auto mark = [&r]() { r.zero = false; };
  if (dim == 1) {
    const double n = nu.x();
    switch (t) {
      case Trace::Tangential:
        if (p == 0) r.value[0] = 1.0, mark();
        break;
      case Trace::Normal:
        if (p == 1) r.value[0] = n, mark();
        break;
      case Trace::NormalDifferential:
        if (p == 0) r.grad[0] = Point(n, 0.0), mark();
        break;
      case Trace::TangentialCodiff:
        if (p == 1) r.grad[0] = Point(-1.0, 0.0), mark();
        break;
      case Trace::NormalLaplacian:
        if (p == 1) r.lap[0] = -n, mark();
        break;
    }
    return r;
  }
  switch (t) {
    case Trace::Tangential:
      if (p == 0) r.value[0] = 1.0, mark();
      if (p == 1) r.value[0] = tau.x(), r.value[1] = tau.y(), mark();
      break;
    case Trace::Normal:
      if (p == 1) r.value[0] = nu.x(), r.value[1] = nu.y(), mark();
      // nu _| (h dx^dy) = -h tau^flat for a right-handed (tau, nu)
      if (p == 2) r.value[0] = -1.0, mark();
      break;
    case Trace::NormalDifferential:
      if (p == 0) r.grad[0] = nu, mark();
      // nu _| (curl dx^dy) = -curl tau^flat, curl = g_x - f_y
      if (p == 1) r.grad[0] = Point(0.0, 1.0), r.grad[1] = Point(-1.0, 0.0), mark();
      break;
    case Trace::TangentialCodiff:
      // delta(f dx + g dy) = -(f_x + g_y)
      if (p == 1) r.grad[0] = Point(-1.0, 0.0), r.grad[1] = Point(0.0, -1.0), mark();
      // delta(h dx^dy) = h_y dx - h_x dy, tangential part = d_nu h
      if (p == 2) r.grad[0] = nu, mark();
      break;
    case Trace::NormalLaplacian:
      if (p == 1) r.lap[0] = -nu.x(), r.lap[1] = -nu.y(), mark();
      if (p == 2) r.lap[0] = 1.0, mark();
      break;
  }
  return r;
}

inline bool trace_vanishes(int dim, int p, Trace t) {
  return trace_functional(dim, p, t, Point(1.0, 0.0), Point(0.0, -1.0)).zero;
}

namespace detail {

inline void add_functional_row(const DofSpace& s, const LocalBasis& b, const PointFunctional& f, int row, double scale,
                               Triplets& out) {
  for (int comp = 0; comp < s.components; ++comp) {
    for (std::size_t i = 0; i < b.dofs.size(); ++i) {
      const double v = f.value[comp] * b.value[i] + f.grad[comp].dot(b.grad[i]) + f.lap[comp] * b.lap[i];
      if (v != 0.0) out.emplace_back(row, s.global(comp, b.dofs[i]), scale * v);
    }
  }
}

}  // namespace detail

// Trace sampled at boundary quadrature points: row (facet, point) holds the
// trace value; `weights` are the matching quadrature weights, so the
// boundary L2 form is T^T diag(weights) T.
struct TraceOperator {
  Trace kind = Trace::Tangential;
  SparseMatrix matrix;
  Eigen::VectorXd weights;
  std::vector<int> row_facet;
  std::vector<Point> row_point;

  [[nodiscard]] SparseMatrix boundary_form() const {
    return SparseMatrix(matrix.transpose() * weights.asDiagonal() * matrix);
  }
};

inline TraceOperator assemble_trace(const DofSpace& s, Trace t) {
  const Mesh& m = *s.mesh;
  TraceOperator op;
  op.kind = t;
  Triplets trip;
  std::vector<double> w;
  int row = 0;
  for (int fi = 0; fi < static_cast<int>(m.boundary.size()); ++fi) {
    const auto& f = m.boundary[fi];
    const auto fun = trace_functional(m.dim, s.degree, t, f.normal, f.tangent);
    for (const auto& [x, wt] : facet_quadrature(m, f)) {
      if (!fun.zero) detail::add_functional_row(s, eval_basis(s, f.cell, x), fun, row, 1.0, trip);
      w.push_back(wt);
      op.row_facet.push_back(fi);
      op.row_point.push_back(x);
      ++row;
    }
  }
  op.matrix.resize(row, s.size());
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return op;
}

// ---------------------------------------------------------------------------
// Operator assembly
// ---------------------------------------------------------------------------

struct AssemblyOptions {
  double penalty = 2.5;          // C0 interior penalty factor
  double corner_angle_deg = 30.0; // normals differing more than this are treated as a corner
};

// Essential constraint rows, one matrix per boundary condition.
struct ConstraintSet {
  SparseMatrix full_trace;          // all components vanish at every boundary node
  SparseMatrix vertex_trace;        // same, skipping nodes on chords of curved facets
  SparseMatrix normal;              // nu _| w = 0 at boundary nodes
  SparseMatrix normal_differential; // nu _| dw = 0, facet means (point values in 1D)
  SparseMatrix tangential_codiff;   // iota^* delta w = 0, facet means (point values in 1D)
};

struct OperatorSet {
  std::shared_ptr<const DofSpace> space;
  double penalty = 2.5;
  SparseMatrix mass;
  SparseMatrix hodge;       // (dw, dw') + (delta w, delta w')
  SparseMatrix biharmonic;  // approximates (Delta w, Delta w'); empty for P1
  bool has_biharmonic = false;
  std::map<Trace, TraceOperator> traces;
  ConstraintSet constraints;

  [[nodiscard]] const TraceOperator& trace(Trace t) const { return traces.at(t); }
  [[nodiscard]] SparseMatrix boundary_form(Trace t) const { return trace(t).boundary_form(); }
  [[nodiscard]] int size() const { return space->size(); }
};

namespace detail {

inline void assemble_cell_forms(const DofSpace& s, Triplets& mass, Triplets& hodge, Triplets& bih) {
  const Mesh& m = *s.mesh;
  const int dim = m.dim, p = s.degree;
  for (int ci = 0; ci < m.num_cells(); ++ci) {
    for (const auto& [x, w] : cell_quadrature(m, ci)) {
      const LocalBasis b = eval_basis(s, ci, x);
      const int n = static_cast<int>(b.dofs.size());
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double mij = w * b.value[i] * b.value[j];
          const double gij = w * b.grad[i].dot(b.grad[j]);
          const double lij = w * b.lap[i] * b.lap[j];
          for (int comp = 0; comp < s.components; ++comp) {
            const int gi = s.global(comp, b.dofs[i]), gj = s.global(comp, b.dofs[j]);
            mass.emplace_back(gi, gj, mij);
            if (s.scheme != Scheme::P1) bih.emplace_back(gi, gj, lij);
          }
          if (dim == 1 || p == 0 || p == dim) {
            // one component; |dw|^2 + |delta w|^2 = |grad|^2
            hodge.emplace_back(s.global(0, b.dofs[i]), s.global(0, b.dofs[j]), gij);
          } else {
            // p = 1 in 2D: curl = g_x - f_y, div = f_x + g_y
            const Point gi = b.grad[i], gj = b.grad[j];
            const int fi = s.global(0, b.dofs[i]), fj = s.global(0, b.dofs[j]);
            const int hi = s.global(1, b.dofs[i]), hj = s.global(1, b.dofs[j]);
            // f-f: f_y f_y + f_x f_x
            hodge.emplace_back(fi, fj, w * (gi.y() * gj.y() + gi.x() * gj.x()));
            // g-g
            hodge.emplace_back(hi, hj, w * (gi.x() * gj.x() + gi.y() * gj.y()));
            // f-g: curl part (-f_y)(g_x) + div part (f_x)(g_y)
            hodge.emplace_back(fi, hj, w * (-gi.y() * gj.x() + gi.x() * gj.y()));
            hodge.emplace_back(hi, fj, w * (-gj.y() * gi.x() + gj.x() * gi.y()));
          }
        }
      }
    }
  }
}

// C0 interior penalty terms for (Delta u, Delta v) on interior facets.
inline void assemble_interior_penalty(const DofSpace& s, double penalty, Triplets& bih) {
  if (s.scheme != Scheme::P2) return;
  const Mesh& m = *s.mesh;
  const double degree_sq = 4.0;
  struct Side {
    LocalBasis basis;
    double sign;
  };
  auto add_face = [&](const std::vector<std::pair<Point, double>>& quad, int c1, int c2, const Point& n, double h) {
    const double sigma = penalty * degree_sq / h;
    for (const auto& [x, w] : quad) {
      const Side sides[2] = {{eval_basis(s, c1, x), 1.0}, {eval_basis(s, c2, x), -1.0}};
      // jump of the normal derivative (n from c1 to c2) and average Laplacian
      std::vector<int> dofs;
      std::vector<double> jump, avg;
      for (const auto& sd : sides) {
        for (std::size_t i = 0; i < sd.basis.dofs.size(); ++i) {
          dofs.push_back(sd.basis.dofs[i]);
          jump.push_back(sd.sign * sd.basis.grad[i].dot(n));
          avg.push_back(0.5 * sd.basis.lap[i]);
        }
      }
      for (std::size_t i = 0; i < dofs.size(); ++i) {
        for (std::size_t j = 0; j < dofs.size(); ++j) {
          const double v = w * (-avg[i] * jump[j] - avg[j] * jump[i] + sigma * jump[i] * jump[j]);
          if (v == 0.0) continue;
          for (int comp = 0; comp < s.components; ++comp) bih.emplace_back(s.global(comp, dofs[i]), s.global(comp, dofs[j]), v);
        }
      }
    }
  };
  if (m.dim == 1) {
    std::vector<int> left(m.num_vertices(), -1), right(m.num_vertices(), -1);
    for (int ci = 0; ci < m.num_cells(); ++ci) {
      right[m.cells[ci][0]] = ci;
      left[m.cells[ci][1]] = ci;
    }
    for (int v = 0; v < m.num_vertices(); ++v) {
      if (left[v] < 0 || right[v] < 0) continue;
      const double h = 0.5 * (m.vertices[m.cells[left[v]][1]].x() - m.vertices[m.cells[left[v]][0]].x() +
                              m.vertices[m.cells[right[v]][1]].x() - m.vertices[m.cells[right[v]][0]].x());
      add_face({{m.vertices[v], 1.0}}, left[v], right[v], Point(1.0, 0.0), h);
    }
    return;
  }
  const auto r = quad::gauss_legendre(3);
  for (std::size_t e = 0; e < s.topology.edges.size(); ++e) {
    const auto& owners = s.topology.edge_cells[e];
    if (owners.size() != 2) continue;
    const Point a = m.vertices[s.topology.edges[e][0]], b = m.vertices[s.topology.edges[e][1]];
    const double len = (b - a).norm();
    Point n((b - a).y() / len, -(b - a).x() / len);
    if ((detail::cell_centroid(m, m.cells[owners[1]]) - a).dot(n) < 0.0) n = -n;
    std::vector<std::pair<Point, double>> quad;
    for (std::size_t i = 0; i < r.points.size(); ++i) quad.emplace_back(a + r.points[i] * (b - a), r.weights[i] * len);
    add_face(quad, owners[0], owners[1], n, len);
  }
}

// Nodal normals used by the essential condition nu _| w = 0. At a vertex
// joining two boundary facets the averaged normal is used, unless the facets
// meet at a corner, where each facet normal gives its own row.
inline std::vector<std::pair<int, Point>> nodal_normals(const DofSpace& s, double corner_angle_deg) {
  const Mesh& m = *s.mesh;
  std::map<int, std::vector<Point>> normals;
  for (std::size_t fi = 0; fi < m.boundary.size(); ++fi) {
    for (int d : s.facet_value_dofs[fi]) normals[d].push_back(m.boundary[fi].normal);
  }
  const double cos_limit = std::cos(corner_angle_deg * std::numbers::pi / 180.0);
  std::vector<std::pair<int, Point>> out;
  for (const auto& [dof, ns] : normals) {
    bool corner = false;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      for (std::size_t j = i + 1; j < ns.size(); ++j) corner = corner || ns[i].dot(ns[j]) < cos_limit;
    }
    if (corner) {
      for (const auto& n : ns) out.emplace_back(dof, n);
    } else {
      Point avg = Point::Zero();
      for (const auto& n : ns) avg += n;
      out.emplace_back(dof, avg.normalized());
    }
  }
  return out;
}

inline SparseMatrix make_sparse(int rows, int cols, const Triplets& t) {
  SparseMatrix a(rows, cols);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

inline ConstraintSet assemble_constraints(const DofSpace& s, const AssemblyOptions& opt) {
  const Mesh& m = *s.mesh;
  const int dim = m.dim, p = s.degree;
  ConstraintSet cs;
  for (bool skip : {false, true}) {
    Triplets t;
    int row = 0;
    for (int comp = 0; comp < s.components; ++comp) {
      for (int d : s.boundary_value_dofs) {
        if (skip && s.chord_node[d]) continue;
        t.emplace_back(row++, s.global(comp, d), 1.0);
      }
    }
    (skip ? cs.vertex_trace : cs.full_trace) = make_sparse(row, s.size(), t);
  }
  {
    Triplets t;
    int row = 0;
    if (!trace_vanishes(dim, p, Trace::Normal)) {
      for (const auto& [dof, n] : nodal_normals(s, opt.corner_angle_deg)) {
        const auto fun = trace_functional(dim, p, Trace::Normal, n, Point(n.y(), -n.x()));
        for (int comp = 0; comp < s.components; ++comp) {
          if (fun.value[comp] != 0.0) t.emplace_back(row, s.global(comp, dof), fun.value[comp]);
        }
        ++row;
      }
    }
    cs.normal = make_sparse(row, s.size(), t);
  }
  auto derivative_rows = [&](Trace kind) {
    Triplets t;
    int row = 0;
    if (!trace_vanishes(dim, p, kind)) {
      for (const auto& f : m.boundary) {
        const auto fun = trace_functional(dim, p, kind, f.normal, f.tangent);
        for (const auto& [x, w] : facet_quadrature(m, f)) {
          add_functional_row(s, eval_basis(s, f.cell, x), fun, row, w / f.measure, t);
        }
        ++row;
      }
    }
    return make_sparse(row, s.size(), t);
  };
  cs.normal_differential = derivative_rows(Trace::NormalDifferential);
  cs.tangential_codiff = derivative_rows(Trace::TangentialCodiff);
  return cs;
}

}  // namespace detail

inline OperatorSet assemble_operators(std::shared_ptr<const DofSpace> space, const AssemblyOptions& opt = {}) {
  if (!space) throw InvalidArgument("null space");
  if (!(opt.penalty > 0.0)) throw InvalidArgument("penalty must be positive");
  const DofSpace& s = *space;
  OperatorSet ops;
  ops.space = space;
  ops.penalty = opt.penalty;
  Triplets mass, hodge, bih;
  detail::assemble_cell_forms(s, mass, hodge, bih);
  detail::assemble_interior_penalty(s, opt.penalty, bih);
  const int n = s.size();
  ops.mass = detail::make_sparse(n, n, mass);
  ops.hodge = detail::make_sparse(n, n, hodge);
  ops.has_biharmonic = s.scheme != Scheme::P1;
  ops.biharmonic = ops.has_biharmonic ? detail::make_sparse(n, n, bih) : SparseMatrix(n, n);
  for (Trace t : {Trace::Tangential, Trace::Normal, Trace::NormalDifferential, Trace::TangentialCodiff,
                  Trace::NormalLaplacian}) {
    ops.traces.emplace(t, assemble_trace(s, t));
  }
  ops.constraints = detail::assemble_constraints(s, opt);
  return ops;
}

// Boundary trace of a coefficient vector, sampled at the trace points.
inline Eigen::VectorXd trace_apply(const OperatorSet& ops, Trace t, const Eigen::VectorXd& coeffs) {
  const DofSpace& s = *ops.space;
  if (coeffs.size() != s.size()) throw InvalidArgument("coefficient vector size does not match the space");
  if (t == Trace::NormalLaplacian && (s.degree == 0 || s.scheme == Scheme::P1)) {
    throw InvalidArgument("nu _| Delta w is only defined for p >= 1 with a second-order scheme");
  }
  return ops.trace(t).matrix * coeffs;
}

// Nodal interpolation of a form given by its components. For Hermite3 the
// slope dofs use `derivative` when given, else central differences.
using FormField = std::function<Eigen::VectorXd(const Point&)>;

inline Eigen::VectorXd interpolate(const DofSpace& s, const FormField& field, const FormField& derivative = nullptr) {
  Eigen::VectorXd x(s.size());
  for (int d = 0; d < s.scalar_dofs; ++d) {
    const Point& node = s.nodes[d];
    Eigen::VectorXd val;
    if (s.scheme == Scheme::Hermite3 && d % 2 == 1) {
      if (derivative) {
        val = derivative(node);
      } else {
        const double h = 1e-5;
        val = (field(node + Point(h, 0.0)) - field(node - Point(h, 0.0))) / (2.0 * h);
      }
    } else {
      val = field(node);
    }
    if (val.size() != s.components) throw InvalidArgument("field component count does not match the form degree");
    for (int comp = 0; comp < s.components; ++comp) x[s.global(comp, d)] = val[comp];
  }
  return x;
}

// MatrixMarket coordinate export for debugging.
inline void write_matrix_market(const SparseMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << " " << a.cols() << " " << a.nonZeros() << "\n";
  out.precision(17);
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
  }
}

}  // namespace bsnlab
