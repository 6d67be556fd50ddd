#include "consflux/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "consflux/q1.hpp"

namespace consflux {

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

namespace {

bool operator==(const FaceIncidence& a, const FaceIncidence& b) {
  return a.face == b.face && a.local_edge == b.local_edge && a.s_begin == b.s_begin &&
         a.s_end == b.s_end;
}

bool same_elements(const std::vector<Element>& a, const std::vector<Element>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id || a[i].vertices != b[i].vertices) return false;
    if (a[i].faces.size() != b[i].faces.size()) return false;
    for (std::size_t k = 0; k < a[i].faces.size(); ++k)
      if (!(a[i].faces[k] == b[i].faces[k])) return false;
  }
  return true;
}

bool same_faces(const std::vector<Face>& a, const std::vector<Face>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& f = a[i];
    const auto& g = b[i];
    if (f.id != g.id || f.endpoints != g.endpoints || f.owner != g.owner ||
        f.neighbor != g.neighbor || !(f.normal == g.normal) || f.measure != g.measure ||
        f.marker != g.marker)
      return false;
  }
  return true;
}

bool same_constraints(const std::vector<HangingConstraint>& a,
                      const std::vector<HangingConstraint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].node != b[i].node || a[i].parents != b[i].parents || a[i].weights != b[i].weights)
      return false;
  return true;
}

std::size_t ix(int i) { return static_cast<std::size_t>(i); }

// Signed corner cross products; all positive for a strictly convex ccw quad.
bool convex_ccw(const std::array<Point, 4>& v) {
  for (std::size_t k = 0; k < 4; ++k) {
    const Vec2 e0 = v[(k + 1) % 4] - v[k];
    const Vec2 e1 = v[(k + 3) % 4] - v[k];
    if (cross(e0, e1) <= 0.0) return false;
  }
  return true;
}

bool cell_jacobians_positive(const std::array<Point, 4>& v) {
  if (!convex_ccw(v)) return false;
  const q1::CellGeometry geo(v);
  for (const auto& qp : q1::cell_gauss(2))
    if (geo.jacobian(qp.ref).det() <= 0.0) return false;
  return true;
}

}  // namespace

Mesh Mesh::from_connectivity(std::vector<Point> nodes, std::vector<std::array<int, 4>> elements,
                             std::vector<HangingConstraint> constraints,
                             const BoundaryMarkers& markers) {
  Mesh mesh;
  const int n_nodes = static_cast<int>(nodes.size());
  for (const auto& p : nodes)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw std::invalid_argument("mesh: non-finite node coordinate");

  std::map<EdgeKey, int> hanging_on;
  mesh.hanging_.assign(nodes.size(), false);
  for (const auto& c : constraints) {
    if (c.node < 0 || c.node >= n_nodes || c.parents[0] < 0 || c.parents[0] >= n_nodes ||
        c.parents[1] < 0 || c.parents[1] >= n_nodes)
      throw std::invalid_argument("mesh: constraint references a missing node");
    if (std::abs(c.weights[0] + c.weights[1] - 1.0) > 1e-14)
      throw std::invalid_argument("mesh: constraint weights must sum to one");
    const Point mid = 0.5 * (nodes[ix(c.parents[0])] + nodes[ix(c.parents[1])]);
    const double len = norm(nodes[ix(c.parents[0])] - nodes[ix(c.parents[1])]);
    if (norm(nodes[ix(c.node)] - mid) > 1e-10 * len)
      throw std::invalid_argument("mesh: hanging node " + std::to_string(c.node) +
                                  " is not at its parent edge midpoint");
    hanging_on[edge_key(c.parents[0], c.parents[1])] = c.node;
    mesh.hanging_[ix(c.node)] = true;
  }
  for (const auto& c : constraints) {
    if (hanging_on.count(edge_key(c.parents[0], c.node)) ||
        hanging_on.count(edge_key(c.node, c.parents[1])))
      throw std::invalid_argument("mesh: not 1-irregular at hanging node " +
                                  std::to_string(c.node));
  }

  std::map<EdgeKey, int> face_of;
  std::set<EdgeKey> element_edges;
  mesh.elements_.resize(elements.size());
  for (std::size_t e = 0; e < elements.size(); ++e) {
    Element& el = mesh.elements_[e];
    el.id = static_cast<int>(e);
    el.vertices = elements[e];
    for (int v : el.vertices)
      if (v < 0 || v >= n_nodes) throw std::invalid_argument("mesh: element references a missing node");
    for (int k = 0; k < 4; ++k) {
      const int a = el.vertices[ix(k)];
      const int b = el.vertices[ix((k + 1) % 4)];
      element_edges.insert(edge_key(a, b));
      struct Sub {
        int from, to;
        double s0, s1;
      };
      std::vector<Sub> subs;
      if (auto it = hanging_on.find(edge_key(a, b)); it != hanging_on.end())
        subs = {{a, it->second, 0.0, 0.5}, {it->second, b, 0.5, 1.0}};
      else
        subs = {{a, b, 0.0, 1.0}};
      for (const auto& s : subs) {
        const EdgeKey key = edge_key(s.from, s.to);
        auto it = face_of.find(key);
        if (it == face_of.end()) {
          Face f;
          f.id = static_cast<int>(mesh.faces_.size());
          f.endpoints = {s.from, s.to};
          f.owner = el.id;
          face_of.emplace(key, f.id);
          mesh.faces_.push_back(f);
          el.faces.push_back({f.id, k, s.s0, s.s1});
        } else {
          Face& f = mesh.faces_[ix(it->second)];
          if (f.neighbor >= 0 || f.owner == el.id)
            throw std::invalid_argument("mesh: face shared by more than two elements");
          if (f.endpoints[0] != s.to)
            throw std::invalid_argument("mesh: elements are not consistently oriented");
          f.neighbor = el.id;
          el.faces.push_back({f.id, k, s.s1, s.s0});
        }
      }
    }
  }
  for (const auto& c : constraints) {
    if (!element_edges.count(edge_key(c.parents[0], c.node)) ||
        !element_edges.count(edge_key(c.node, c.parents[1])))
      throw std::invalid_argument("mesh: not 1-irregular at hanging node " +
                                  std::to_string(c.node));
  }

  for (auto& f : mesh.faces_) {
    const Point p0 = nodes[ix(f.endpoints[0])];
    const Point p1 = nodes[ix(f.endpoints[1])];
    const Vec2 d = p1 - p0;
    f.measure = norm(d);
    if (!(f.measure > 0.0)) throw std::invalid_argument("mesh: degenerate face");
    f.normal = {d.y / f.measure, -d.x / f.measure};
    if (f.neighbor >= 0) {
      f.marker = FaceMarker::Interior;
    } else {
      auto it = markers.find(edge_key(f.endpoints[0], f.endpoints[1]));
      if (it == markers.end() || it->second == FaceMarker::Interior)
        throw std::invalid_argument("mesh: boundary face " + std::to_string(f.id) +
                                    " has no Dirichlet/Neumann marker");
      f.marker = it->second;
    }
  }

  mesh.areas_.resize(elements.size());
  const auto quad = q1::cell_gauss(2);
  for (std::size_t e = 0; e < elements.size(); ++e) {
    std::array<Point, 4> v;
    for (std::size_t k = 0; k < 4; ++k) v[k] = nodes[ix(elements[e][k])];
    if (!cell_jacobians_positive(v))
      throw std::invalid_argument("mesh: element " + std::to_string(e) +
                                  " is inverted or not convex");
    const q1::CellGeometry geo(v);
    double area = 0.0;
    for (const auto& qp : quad) area += qp.weight * geo.jacobian(qp.ref).det();
    mesh.areas_[e] = area;
  }

  mesh.nodes_ = std::move(nodes);
  mesh.constraints_ = std::move(constraints);
  return mesh;
}

Point Mesh::centroid(int element) const {
  // Area-weighted centroid of the bilinear cell.
  const q1::CellGeometry geo(*this, element);
  Point c;
  double area = 0.0;
  for (const auto& qp : q1::cell_gauss(2)) {
    const double w = qp.weight * geo.jacobian(qp.ref).det();
    c = c + w * geo.map(qp.ref);
    area += w;
  }
  return (1.0 / area) * c;
}

Point Mesh::face_midpoint(int face) const {
  const auto& f = faces_[ix(face)];
  return 0.5 * (node(f.endpoints[0]) + node(f.endpoints[1]));
}

double Mesh::total_area() const {
  double a = 0.0;
  for (double x : areas_) a += x;
  return a;
}

double Mesh::max_diameter() const {
  double h = 0.0;
  for (const auto& el : elements_) {
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j)
        h = std::max(h, norm(node(el.vertices[i]) - node(el.vertices[j])));
  }
  return h;
}

double Mesh::orientation(int element, int face) const {
  return faces_[ix(face)].owner == element ? 1.0 : -1.0;
}

bool Mesh::has_dirichlet_boundary() const {
  return std::any_of(faces_.begin(), faces_.end(),
                     [](const Face& f) { return f.marker == FaceMarker::Dirichlet; });
}

BoundaryMarkers Mesh::boundary_markers() const {
  BoundaryMarkers m;
  for (const auto& f : faces_)
    if (f.is_boundary()) m[edge_key(f.endpoints[0], f.endpoints[1])] = f.marker;
  return m;
}

std::vector<std::array<int, 4>> Mesh::connectivity() const {
  std::vector<std::array<int, 4>> c;
  c.reserve(elements_.size());
  for (const auto& e : elements_) c.push_back(e.vertices);
  return c;
}

bool operator==(const Mesh& a, const Mesh& b) {
  return a.nodes_ == b.nodes_ && same_elements(a.elements_, b.elements_) &&
         same_faces(a.faces_, b.faces_) && same_constraints(a.constraints_, b.constraints_);
}

Mesh build_tensor(const std::vector<double>& xs, const std::vector<double>& ys,
                  SideMarkers markers) {
  if (xs.size() < 2 || ys.size() < 2)
    throw std::invalid_argument("build_tensor: need at least one cell per direction");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("build_tensor: x lines not increasing");
  for (std::size_t j = 1; j < ys.size(); ++j)
    if (!(ys[j] > ys[j - 1])) throw std::invalid_argument("build_tensor: y lines not increasing");

  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };

  std::vector<Point> nodes;
  nodes.reserve(xs.size() * ys.size());
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) nodes.push_back({xs[ix(i)], ys[ix(j)]});

  std::vector<std::array<int, 4>> elems;
  elems.reserve(static_cast<std::size_t>(nx * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      elems.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});

  BoundaryMarkers bm;
  for (int i = 0; i < nx; ++i) {
    bm[edge_key(id(i, 0), id(i + 1, 0))] = markers.bottom;
    bm[edge_key(id(i, ny), id(i + 1, ny))] = markers.top;
  }
  for (int j = 0; j < ny; ++j) {
    bm[edge_key(id(0, j), id(0, j + 1))] = markers.left;
    bm[edge_key(id(nx, j), id(nx, j + 1))] = markers.right;
  }
  return Mesh::from_connectivity(std::move(nodes), std::move(elems), {}, bm);
}

Mesh build_cartesian(int nx, int ny, Rectangle bounds, SideMarkers markers) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_cartesian: cell counts must be >= 1");
  if (!(bounds.x1 > bounds.x0) || !(bounds.y1 > bounds.y0))
    throw std::invalid_argument("build_cartesian: degenerate or inverted bounds");
  std::vector<double> xs(ix(nx + 1)), ys(ix(ny + 1));
  for (int i = 0; i <= nx; ++i)
    xs[ix(i)] = i == nx ? bounds.x1 : bounds.x0 + (bounds.x1 - bounds.x0) * i / nx;
  for (int j = 0; j <= ny; ++j)
    ys[ix(j)] = j == ny ? bounds.y1 : bounds.y0 + (bounds.y1 - bounds.y0) * j / ny;
  return build_tensor(xs, ys, markers);
}

namespace {

Mesh refine_flagged(const Mesh& mesh, const std::vector<bool>& flagged) {
  std::vector<Point> nodes = mesh.nodes();
  BoundaryMarkers markers = mesh.boundary_markers();
  std::map<EdgeKey, int> midpoint;
  for (const auto& c : mesh.constraints()) midpoint[edge_key(c.parents[0], c.parents[1])] = c.node;

  auto mid = [&](int a, int b) {
    const EdgeKey key = edge_key(a, b);
    if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
    const int m = static_cast<int>(nodes.size());
    nodes.push_back(0.5 * (nodes[ix(a)] + nodes[ix(b)]));
    midpoint.emplace(key, m);
    if (auto it = markers.find(key); it != markers.end()) {
      const FaceMarker marker = it->second;
      markers[edge_key(a, m)] = marker;
      markers[edge_key(m, b)] = marker;
    }
    return m;
  };

  std::vector<std::array<int, 4>> elems;
  elems.reserve(mesh.num_elements() * 4);
  for (const auto& el : mesh.elements()) {
    if (!flagged[ix(el.id)]) {
      elems.push_back(el.vertices);
      continue;
    }
    const auto& v = el.vertices;
    std::array<int, 4> m{};
    for (std::size_t k = 0; k < 4; ++k) m[k] = mid(v[k], v[(k + 1) % 4]);
    const int c = static_cast<int>(nodes.size());
    nodes.push_back(0.25 * (nodes[ix(v[0])] + nodes[ix(v[1])] + nodes[ix(v[2])] + nodes[ix(v[3])]));
    elems.push_back({v[0], m[0], c, m[3]});
    elems.push_back({m[0], v[1], m[1], c});
    elems.push_back({c, m[1], v[2], m[2]});
    elems.push_back({m[3], c, m[2], v[3]});
  }

  std::set<EdgeKey> edges;
  for (const auto& e : elems)
    for (std::size_t k = 0; k < 4; ++k) edges.insert(edge_key(e[k], e[(k + 1) % 4]));

  std::vector<HangingConstraint> constraints;
  for (const auto& [key, m] : midpoint) {
    if (!edges.count(key)) continue;
    if (!edges.count(edge_key(key.first, m)) || !edges.count(edge_key(m, key.second)))
      throw std::invalid_argument("refine_cells: refinement would violate 1-irregularity at node " +
                                  std::to_string(m));
    constraints.push_back({m, {key.first, key.second}, {0.5, 0.5}});
  }
  std::sort(constraints.begin(), constraints.end(),
            [](const auto& a, const auto& b) { return a.node < b.node; });
  return Mesh::from_connectivity(std::move(nodes), std::move(elems), std::move(constraints),
                                 markers);
}

}  // namespace

Mesh refine_global(const Mesh& mesh) {
  return refine_flagged(mesh, std::vector<bool>(mesh.num_elements(), true));
}

Mesh refine_cells(const Mesh& mesh, const std::set<int>& cells) {
  if (cells.empty()) return mesh;
  std::vector<bool> flagged(mesh.num_elements(), false);
  for (int c : cells) {
    if (c < 0 || ix(c) >= mesh.num_elements())
      throw std::invalid_argument("refine_cells: element index out of range");
    flagged[ix(c)] = true;
  }
  return refine_flagged(mesh, flagged);
}

Mesh with_nodes(const Mesh& mesh, std::vector<Point> nodes) {
  if (nodes.size() != mesh.num_nodes())
    throw std::invalid_argument("with_nodes: node count mismatch");
  return Mesh::from_connectivity(std::move(nodes), mesh.connectivity(), mesh.constraints(),
                                 mesh.boundary_markers());
}

bool all_jacobians_positive(const Mesh& mesh) {
  for (const auto& el : mesh.elements()) {
    std::array<Point, 4> v;
    for (std::size_t k = 0; k < 4; ++k) v[k] = mesh.node(el.vertices[k]);
    if (!cell_jacobians_positive(v)) return false;
  }
  return true;
}

Mesh distort(const Mesh& mesh, double magnitude, std::uint64_t seed) {
  if (!(magnitude >= 0.0) || magnitude >= 0.5)
    throw std::invalid_argument("distort: magnitude must lie in [0, 0.5)");

  const std::size_t n = mesh.num_nodes();
  std::vector<double> shortest(n, std::numeric_limits<double>::infinity());
  std::vector<std::vector<Vec2>> tangents(n);
  for (const auto& f : mesh.faces()) {
    for (int v : f.endpoints) shortest[ix(v)] = std::min(shortest[ix(v)], f.measure);
    if (f.is_boundary()) {
      const Vec2 t = (1.0 / f.measure) * (mesh.node(f.endpoints[1]) - mesh.node(f.endpoints[0]));
      for (int v : f.endpoints) tangents[ix(v)].push_back(t);
    }
  }

  // Offsets for unit magnitude; drawn once so halving keeps the pattern.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> offset(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = unit(rng);
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    if (mesh.is_hanging(static_cast<int>(i))) continue;
    const auto& ts = tangents[i];
    if (ts.empty()) {
      offset[i] = (r * shortest[i]) * Vec2{std::cos(angle), std::sin(angle)};
    } else {
      bool corner = false;
      for (const auto& t : ts)
        if (std::abs(cross(t, ts.front())) > 1e-12) corner = true;
      if (!corner) offset[i] = ((2.0 * r - 1.0) * shortest[i]) * ts.front();
    }
  }

  double mag = magnitude;
  for (int attempt = 0; attempt <= 5; ++attempt, mag *= 0.5) {
    std::vector<Point> nodes = mesh.nodes();
    for (std::size_t i = 0; i < n; ++i) nodes[i] = nodes[i] + mag * offset[i];
    // Chained constraints settle after at most #constraints sweeps.
    for (std::size_t sweep = 0; sweep <= mesh.constraints().size(); ++sweep) {
      bool changed = false;
      for (const auto& c : mesh.constraints()) {
        const Point p = c.weights[0] * nodes[ix(c.parents[0])] + c.weights[1] * nodes[ix(c.parents[1])];
        if (!(p == nodes[ix(c.node)])) {
          nodes[ix(c.node)] = p;
          changed = true;
        }
      }
      if (!changed) break;
    }
    bool ok = true;
    for (const auto& el : mesh.elements()) {
      std::array<Point, 4> v;
      for (std::size_t k = 0; k < 4; ++k) v[k] = nodes[ix(el.vertices[k])];
      if (!cell_jacobians_positive(v)) {
        ok = false;
        break;
      }
    }
    if (ok) return with_nodes(mesh, std::move(nodes));
  }
  throw std::runtime_error("distort: could not keep all cells convex after 5 halvings");
}

}  // namespace consflux
