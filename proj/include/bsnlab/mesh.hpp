#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bsnlab/error.hpp"

namespace bsnlab {

using Point = Eigen::Vector2d;

// Triangle vertex triple. Interval cells use the first two entries and
// store -1 in the last one.
using Cell = std::array<int, 3>;

struct Circle {
  Point center{0.0, 0.0};
  double radius = 1.0;
};

// A boundary facet: a vertex in 1D, an edge in 2D. The normal points into
// the owning cell. In 2D (tangent, normal) is right-handed, i.e. the normal
// is the tangent rotated by +90 degrees.
struct BoundaryFacet {
  std::vector<int> vertices;
  int cell = -1;
  Point normal{0.0, 0.0};
  Point tangent{0.0, 0.0};
  double measure = 0.0;
  int curve = -1;  // index into Mesh::curves, -1 for straight pieces
};

struct Mesh {
  int dim = 2;
  std::vector<Point> vertices;
  std::vector<Cell> cells;
  std::vector<BoundaryFacet> boundary;
  std::vector<Circle> curves;

  [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices.size()); }
  [[nodiscard]] int num_cells() const { return static_cast<int>(cells.size()); }
  [[nodiscard]] int vertices_per_cell() const { return dim + 1; }
};

enum class DomainKind { Interval, UnitSquare, Disk, Annulus };

// Named desk-scale test domain. `a`, `b` hold (a, b) for intervals,
// (radius, unused) for disks and (r_in, r_out) for annuli.
struct DomainName {
  DomainKind kind = DomainKind::UnitSquare;
  double a = 0.0;
  double b = 1.0;

  static DomainName interval(double lo, double hi) { return {DomainKind::Interval, lo, hi}; }
  static DomainName unit_square() { return {DomainKind::UnitSquare, 0.0, 1.0}; }
  static DomainName unit_disk(double radius = 1.0) { return {DomainKind::Disk, radius, 0.0}; }
  static DomainName annulus(double r_in, double r_out) { return {DomainKind::Annulus, r_in, r_out}; }

  [[nodiscard]] int dim() const { return kind == DomainKind::Interval ? 1 : 2; }

  void validate() const {
    switch (kind) {
      case DomainKind::Interval:
        if (!(a < b)) throw InvalidArgument("interval requires a < b");
        break;
      case DomainKind::UnitSquare:
        break;
      case DomainKind::Disk:
        if (!(a > 0.0)) throw InvalidArgument("disk requires a positive radius");
        break;
      case DomainKind::Annulus:
        if (!(a > 0.0 && a < b)) throw InvalidArgument("annulus requires 0 < r_in < r_out");
        break;
    }
  }

  [[nodiscard]] std::string to_string() const {
    auto num = [](double v) {
      std::string s = nlohmann::json(v).dump();
      return s;
    };
    switch (kind) {
      case DomainKind::Interval:
        return "interval:" + num(a) + "," + num(b);
      case DomainKind::UnitSquare:
        return "square";
      case DomainKind::Disk:
        return "disk:" + num(a);
      case DomainKind::Annulus:
        return "annulus:" + num(a) + "," + num(b);
    }
    return "unknown";
  }

  // Accepts "interval:a,b", "square", "disk", "disk:r", "annulus:r_in,r_out".
  static DomainName parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
      std::string rest = text.substr(colon + 1);
      std::size_t pos = 0;
      while (pos <= rest.size()) {
        const auto comma = rest.find(',', pos);
        const std::string tok = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
          std::size_t used = 0;
          args.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw InvalidArgument("bad number '" + tok + "' in domain '" + text + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
    DomainName d;
    if (head == "interval") {
      if (args.size() != 2) throw InvalidArgument("interval expects two bounds: interval:a,b");
      d = interval(args[0], args[1]);
    } else if (head == "square" || head == "unit_square") {
      if (!args.empty()) throw InvalidArgument("square takes no parameters");
      d = unit_square();
    } else if (head == "disk" || head == "unit_disk") {
      if (args.size() > 1) throw InvalidArgument("disk expects at most a radius: disk:r");
      d = unit_disk(args.empty() ? 1.0 : args[0]);
    } else if (head == "annulus") {
      if (args.size() != 2) throw InvalidArgument("annulus expects two radii: annulus:r_in,r_out");
      d = annulus(args[0], args[1]);
    } else {
      throw InvalidArgument("unknown domain '" + text + "'");
    }
    d.validate();
    return d;
  }
};

namespace detail {

inline double signed_volume(const Mesh& m, const Cell& c) {
  if (m.dim == 1) return m.vertices[c[1]].x() - m.vertices[c[0]].x();
  const Point e1 = m.vertices[c[1]] - m.vertices[c[0]];
  const Point e2 = m.vertices[c[2]] - m.vertices[c[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

inline Point cell_centroid(const Mesh& m, const Cell& c) {
  Point s = Point::Zero();
  for (int i = 0; i <= m.dim; ++i) s += m.vertices[c[i]];
  return s / static_cast<double>(m.dim + 1);
}

inline void orient_cells(Mesh& m) {
  for (auto& c : m.cells) {
    if (signed_volume(m, c) < 0.0) std::swap(c[0], c[1]);
  }
}

// Tags boundary facets whose vertices all lie on one of the stored circles.
inline void assign_curves(Mesh& m) {
  for (auto& f : m.boundary) {
    f.curve = -1;
    if (m.dim != 2) continue;
    for (int k = 0; k < static_cast<int>(m.curves.size()); ++k) {
      const Circle& c = m.curves[k];
      bool on = true;
      for (int v : f.vertices) {
        const double r = (m.vertices[v] - c.center).norm();
        if (std::abs(r - c.radius) > 1e-9 * c.radius) on = false;
      }
      if (on) {
        f.curve = k;
        break;
      }
    }
  }
}

}  // namespace detail

// Recomputes boundary facets (with normals, tangents and measures) from the
// cell list. Throws if a facet is shared by more than two cells.
inline void rebuild_boundary(Mesh& m) {
  m.boundary.clear();
  if (m.dim == 1) {
    std::vector<int> count(m.vertices.size(), 0), owner(m.vertices.size(), -1);
    for (int ci = 0; ci < m.num_cells(); ++ci) {
      for (int k = 0; k < 2; ++k) {
        ++count[m.cells[ci][k]];
        owner[m.cells[ci][k]] = ci;
      }
    }
    for (int v = 0; v < m.num_vertices(); ++v) {
      if (count[v] > 2) throw InvariantViolation("interval vertex shared by more than two cells");
      if (count[v] != 1) continue;
      const Cell& c = m.cells[owner[v]];
      const int other = c[0] == v ? c[1] : c[0];
      BoundaryFacet f;
      f.vertices = {v};
      f.cell = owner[v];
      f.normal = Point(m.vertices[other].x() > m.vertices[v].x() ? 1.0 : -1.0, 0.0);
      f.tangent = Point::Zero();
      f.measure = 1.0;
      m.boundary.push_back(f);
    }
    return;
  }
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edge_cells;  // key -> (cell, local edge)
  for (int ci = 0; ci < m.num_cells(); ++ci) {
    for (int k = 0; k < 3; ++k) {
      const int a = m.cells[ci][k];
      const int b = m.cells[ci][(k + 1) % 3];
      edge_cells[{std::min(a, b), std::max(a, b)}].push_back({ci, k});
    }
  }
  for (const auto& [key, owners] : edge_cells) {
    if (owners.size() > 2) throw InvariantViolation("edge shared by more than two cells");
    if (owners.size() != 1) continue;
    const auto [ci, k] = owners.front();
    const int a = m.cells[ci][k];
    const int b = m.cells[ci][(k + 1) % 3];
    BoundaryFacet f;
    f.vertices = {a, b};
    f.cell = ci;
    const Point d = m.vertices[b] - m.vertices[a];
    f.measure = d.norm();
    if (f.measure <= 0.0) throw InvariantViolation("degenerate boundary facet");
    f.tangent = d / f.measure;
    f.normal = Point(-f.tangent.y(), f.tangent.x());
    m.boundary.push_back(f);
  }
  detail::assign_curves(m);
}

// Unique undirected edges of a 2D mesh plus, per cell, the edge index of the
// local edges (0,1), (1,2), (2,0).
struct EdgeTopology {
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> cell_edges;
  std::vector<std::vector<int>> edge_cells;
};

inline EdgeTopology edge_topology(const Mesh& m) {
  EdgeTopology t;
  std::map<std::pair<int, int>, int> index;
  t.cell_edges.resize(m.cells.size());
  for (int ci = 0; ci < m.num_cells(); ++ci) {
    for (int k = 0; k < 3; ++k) {
      const int a = m.cells[ci][k];
      const int b = m.cells[ci][(k + 1) % 3];
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, static_cast<int>(t.edges.size())).first;
        t.edges.push_back({key.first, key.second});
        t.edge_cells.emplace_back();
      }
      t.cell_edges[ci][k] = it->second;
      t.edge_cells[it->second].push_back(ci);
    }
  }
  return t;
}

// Checks every structural invariant; throws InvariantViolation on failure.
inline void validate(const Mesh& m) {
  if (m.dim != 1 && m.dim != 2) throw InvariantViolation("mesh dimension must be 1 or 2");
  if (m.cells.empty()) throw InvariantViolation("mesh has no cells");
  for (const Cell& c : m.cells) {
    for (int i = 0; i <= m.dim; ++i) {
      if (c[i] < 0 || c[i] >= m.num_vertices()) throw InvariantViolation("cell references a missing vertex");
    }
    if (!(detail::signed_volume(m, c) > 0.0)) throw InvariantViolation("cell with non-positive signed volume");
  }
  Mesh ref = m;
  rebuild_boundary(ref);
  if (ref.boundary.size() != m.boundary.size()) throw InvariantViolation("boundary facet list does not match the cells");
  auto facet_key = [](const BoundaryFacet& f) {
    std::vector<int> v = f.vertices;
    std::sort(v.begin(), v.end());
    return v;
  };
  std::map<std::vector<int>, const BoundaryFacet*> expected;
  for (const auto& f : ref.boundary) expected[facet_key(f)] = &f;
  for (const auto& f : m.boundary) {
    auto it = expected.find(facet_key(f));
    if (it == expected.end()) throw InvariantViolation("facet is not on the boundary of the cell complex");
    const BoundaryFacet& e = *it->second;
    if (f.cell != e.cell) throw InvariantViolation("boundary facet owned by the wrong cell");
    if (std::abs(f.normal.norm() - 1.0) > 1e-12) throw InvariantViolation("boundary normal is not unit length");
    if (!(f.measure > 0.0)) throw InvariantViolation("degenerate boundary facet");
    Point mid = Point::Zero();
    for (int v : f.vertices) mid += m.vertices[v];
    mid /= static_cast<double>(f.vertices.size());
    const Point into = detail::cell_centroid(m, m.cells[f.cell]) - mid;
    if (!(into.dot(f.normal) > 0.0)) throw InvariantViolation("boundary normal does not point into its cell");
    if (m.dim == 2) {
      if (std::abs(f.tangent.norm() - 1.0) > 1e-12) throw InvariantViolation("boundary tangent is not unit length");
      const double cross = f.tangent.x() * f.normal.y() - f.tangent.y() * f.normal.x();
      if (std::abs(cross - 1.0) > 1e-12) throw InvariantViolation("(tangent, normal) is not right-handed");
    }
  }
}

inline int euler_characteristic(const Mesh& m) {
  if (m.dim == 1) return m.num_vertices() - m.num_cells();
  const auto topo = edge_topology(m);
  return m.num_vertices() - static_cast<int>(topo.edges.size()) + m.num_cells();
}

inline double boundary_measure(const Mesh& m) {
  double s = 0.0;
  for (const auto& f : m.boundary) s += f.measure;
  return s;
}

inline double mesh_size(const Mesh& m) {
  double h = 0.0;
  for (const Cell& c : m.cells) {
    for (int i = 0; i <= m.dim; ++i) {
      for (int j = i + 1; j <= m.dim; ++j) h = std::max(h, (m.vertices[c[i]] - m.vertices[c[j]]).norm());
    }
  }
  return h;
}

namespace detail {

inline Mesh interval_mesh(double a, double b, int n) {
  Mesh m;
  m.dim = 1;
  for (int i = 0; i <= n; ++i) m.vertices.emplace_back(a + (b - a) * i / n, 0.0);
  for (int i = 0; i < n; ++i) m.cells.push_back({i, i + 1, -1});
  return m;
}

inline Mesh square_mesh(int n) {
  Mesh m;
  m.dim = 2;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) m.vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      m.cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return m;
}

// Concentric rings: ring k carries 6k vertices at radius R k / n.
inline Mesh disk_mesh(double radius, int n) {
  Mesh m;
  m.dim = 2;
  m.vertices.emplace_back(0.0, 0.0);
  std::vector<int> ring_start{0};
  for (int k = 1; k <= n; ++k) {
    ring_start.push_back(m.num_vertices());
    const int count = 6 * k;
    const double r = radius * k / n;
    for (int j = 0; j < count; ++j) {
      const double t = 2.0 * std::numbers::pi * j / count;
      m.vertices.emplace_back(r * std::cos(t), r * std::sin(t));
    }
  }
  for (int k = 1; k <= n; ++k) {
    auto outer = [&](int s, int i) { return ring_start[k] + (s * k + i) % (6 * k); };
    auto inner = [&](int s, int i) { return k == 1 ? 0 : ring_start[k - 1] + (s * (k - 1) + i) % (6 * (k - 1)); };
    for (int s = 0; s < 6; ++s) {
      for (int i = 0; i < k; ++i) m.cells.push_back({outer(s, i), outer(s, i + 1), inner(s, i)});
      for (int i = 0; i + 1 < k; ++i) m.cells.push_back({inner(s, i), outer(s, i + 1), inner(s, i + 1)});
    }
  }
  m.curves.push_back({Point(0.0, 0.0), radius});
  return m;
}

inline Mesh annulus_mesh(double r_in, double r_out, int n) {
  Mesh m;
  m.dim = 2;
  const double dr = (r_out - r_in) / n;
  const int sectors = std::max(8, static_cast<int>(std::lround(std::numbers::pi * (r_in + r_out) / dr)));
  for (int i = 0; i <= n; ++i) {
    const double r = r_in + dr * i;
    for (int j = 0; j < sectors; ++j) {
      const double t = 2.0 * std::numbers::pi * j / sectors;
      m.vertices.emplace_back(r * std::cos(t), r * std::sin(t));
    }
  }
  auto id = [sectors](int i, int j) { return i * sectors + (j % sectors); };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < sectors; ++j) {
      m.cells.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1)});
      m.cells.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j)});
    }
  }
  m.curves.push_back({Point(0.0, 0.0), r_in});
  m.curves.push_back({Point(0.0, 0.0), r_out});
  return m;
}

}  // namespace detail

inline Mesh build_named_domain(const DomainName& name, int n) {
  name.validate();
  if (n < 1) throw InvalidArgument("mesh resolution must be at least 1");
  Mesh m;
  switch (name.kind) {
    case DomainKind::Interval:
      m = detail::interval_mesh(name.a, name.b, n);
      break;
    case DomainKind::UnitSquare:
      m = detail::square_mesh(n);
      break;
    case DomainKind::Disk:
      m = detail::disk_mesh(name.a, n);
      break;
    case DomainKind::Annulus:
      m = detail::annulus_mesh(name.a, name.b, n);
      break;
  }
  detail::orient_cells(m);
  rebuild_boundary(m);
  validate(m);
  return m;
}

struct FacetGeometry {
  Point normal;
  Point tangent;
  double measure = 0.0;
  Point midpoint;
};

inline std::vector<FacetGeometry> boundary_geometry(const Mesh& m) {
  std::vector<FacetGeometry> out;
  out.reserve(m.boundary.size());
  for (const auto& f : m.boundary) {
    if (!(f.measure > 0.0)) throw InvariantViolation("degenerate boundary facet");
    Point mid = Point::Zero();
    for (int v : f.vertices) mid += m.vertices[v];
    mid /= static_cast<double>(f.vertices.size());
    out.push_back({f.normal, f.tangent, f.measure, mid});
  }
  return out;
}

// Uniform refinement: bisects interval cells, splits triangles in four.
// Midpoints of curved boundary facets are projected onto their circle.
inline Mesh refine(const Mesh& m) {
  Mesh r;
  r.dim = m.dim;
  r.vertices = m.vertices;
  r.curves = m.curves;
  if (m.dim == 1) {
    for (const Cell& c : m.cells) {
      const int mid = r.num_vertices();
      r.vertices.push_back(0.5 * (m.vertices[c[0]] + m.vertices[c[1]]));
      r.cells.push_back({c[0], mid, -1});
      r.cells.push_back({mid, c[1], -1});
    }
  } else {
    const auto topo = edge_topology(m);
    std::map<std::pair<int, int>, int> curve_of_edge;
    for (const auto& f : m.boundary) {
      if (f.curve >= 0) {
        curve_of_edge[{std::min(f.vertices[0], f.vertices[1]), std::max(f.vertices[0], f.vertices[1])}] = f.curve;
      }
    }
    std::vector<int> mid(topo.edges.size());
    for (std::size_t e = 0; e < topo.edges.size(); ++e) {
      const auto [a, b] = topo.edges[e];
      Point p = 0.5 * (m.vertices[a] + m.vertices[b]);
      auto it = curve_of_edge.find({a, b});
      if (it != curve_of_edge.end()) {
        const Circle& c = m.curves[it->second];
        p = c.center + c.radius * (p - c.center).normalized();
      }
      mid[e] = r.num_vertices();
      r.vertices.push_back(p);
    }
    for (int ci = 0; ci < m.num_cells(); ++ci) {
      const Cell& c = m.cells[ci];
      const auto& ce = topo.cell_edges[ci];
      const int m01 = mid[ce[0]], m12 = mid[ce[1]], m20 = mid[ce[2]];
      r.cells.push_back({c[0], m01, m20});
      r.cells.push_back({m01, c[1], m12});
      r.cells.push_back({m20, m12, c[2]});
      r.cells.push_back({m01, m12, m20});
    }
  }
  detail::orient_cells(r);
  rebuild_boundary(r);
  validate(r);
  return r;
}

// Relabels vertices: new index of old vertex v is perm[v].
inline Mesh permute_vertices(const Mesh& m, const std::vector<int>& perm) {
  if (perm.size() != m.vertices.size()) throw InvalidArgument("permutation size mismatch");
  Mesh r;
  r.dim = m.dim;
  r.curves = m.curves;
  r.vertices.resize(m.vertices.size());
  for (int v = 0; v < m.num_vertices(); ++v) r.vertices[perm[v]] = m.vertices[v];
  for (const Cell& c : m.cells) {
    Cell nc = c;
    for (int i = 0; i <= m.dim; ++i) nc[i] = perm[c[i]];
    r.cells.push_back(nc);
  }
  rebuild_boundary(r);
  validate(r);
  return r;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Mesh& m) {
  using nlohmann::json;
  json j;
  j["dim"] = m.dim;
  json verts = json::array();
  for (const auto& v : m.vertices) verts.push_back(m.dim == 1 ? json{v.x()} : json{v.x(), v.y()});
  j["vertices"] = verts;
  json cells = json::array();
  for (const auto& c : m.cells) cells.push_back(m.dim == 1 ? json{c[0], c[1]} : json{c[0], c[1], c[2]});
  j["cells"] = cells;
  json facets = json::array();
  for (const auto& f : m.boundary) {
    json jf;
    jf["vertices"] = f.vertices;
    jf["cell"] = f.cell;
    jf["normal"] = m.dim == 1 ? json{f.normal.x()} : json{f.normal.x(), f.normal.y()};
    if (m.dim == 2) jf["tangent"] = json{f.tangent.x(), f.tangent.y()};
    jf["measure"] = f.measure;
    if (f.curve >= 0) jf["curve"] = f.curve;
    facets.push_back(jf);
  }
  j["boundary_facets"] = facets;
  if (!m.curves.empty()) {
    json curves = json::array();
    for (const auto& c : m.curves) curves.push_back({{"center", {c.center.x(), c.center.y()}}, {"radius", c.radius}});
    j["curves"] = curves;
  }
  return j;
}

inline Mesh mesh_from_json(const nlohmann::json& j) {
  Mesh m;
  try {
    m.dim = j.at("dim").get<int>();
    if (m.dim != 1 && m.dim != 2) throw InvariantViolation("mesh dimension must be 1 or 2");
    for (const auto& v : j.at("vertices")) {
      if (static_cast<int>(v.size()) != m.dim) throw InvariantViolation("vertex coordinate count does not match dim");
      m.vertices.emplace_back(v[0].get<double>(), m.dim == 2 ? v[1].get<double>() : 0.0);
    }
    for (const auto& c : j.at("cells")) {
      if (static_cast<int>(c.size()) != m.dim + 1) throw InvariantViolation("cell vertex count does not match dim");
      m.cells.push_back({c[0].get<int>(), c[1].get<int>(), m.dim == 2 ? c[2].get<int>() : -1});
    }
    if (j.contains("curves")) {
      for (const auto& c : j.at("curves")) {
        m.curves.push_back({Point(c.at("center")[0].get<double>(), c.at("center")[1].get<double>()),
                            c.at("radius").get<double>()});
      }
    }
    for (const auto& jf : j.at("boundary_facets")) {
      BoundaryFacet f;
      f.vertices = jf.at("vertices").get<std::vector<int>>();
      f.cell = jf.at("cell").get<int>();
      const auto& n = jf.at("normal");
      f.normal = Point(n[0].get<double>(), m.dim == 2 ? n[1].get<double>() : 0.0);
      if (m.dim == 2) f.tangent = Point(jf.at("tangent")[0].get<double>(), jf.at("tangent")[1].get<double>());
      f.measure = jf.at("measure").get<double>();
      f.curve = jf.value("curve", -1);
      m.boundary.push_back(f);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvariantViolation(std::string("malformed mesh document: ") + e.what());
  }
  validate(m);
  return m;
}

}  // namespace bsnlab
