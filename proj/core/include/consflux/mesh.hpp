#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace consflux {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

/// Vectors share the point representation; the distinction is by role only.
using Vec2 = Point;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

enum class FaceMarker : int { Interior = 0, Dirichlet = 1, Neumann = 2 };

/// One incidence of a face on the boundary of an element. The face occupies
/// the parameter range [s_begin, s_end] of the element's local edge, measured
/// from the face's first endpoint to its second.
struct FaceIncidence {
  int face = -1;
  int local_edge = 0;
  double s_begin = 0.0;
  double s_end = 1.0;
};

struct Element {
  int id = 0;
  std::array<int, 4> vertices{};        // counter-clockwise
  std::vector<FaceIncidence> faces;     // >= 4, more with hanging sub-faces
};

struct Face {
  int id = 0;
  std::array<int, 2> endpoints{};       // counter-clockwise w.r.t. owner
  int owner = -1;
  int neighbor = -1;                    // -1 on the boundary
  Vec2 normal;                          // unit, exterior to owner
  double measure = 0.0;
  FaceMarker marker = FaceMarker::Interior;

  bool is_boundary() const { return neighbor < 0; }
};

struct HangingConstraint {
  int node = -1;
  std::array<int, 2> parents{};
  std::array<double, 2> weights{0.5, 0.5};
};

struct Rectangle {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

/// Boundary condition type per side of an axis-aligned rectangle.
struct SideMarkers {
  FaceMarker left = FaceMarker::Dirichlet;
  FaceMarker right = FaceMarker::Dirichlet;
  FaceMarker bottom = FaceMarker::Neumann;
  FaceMarker top = FaceMarker::Neumann;
};

using EdgeKey = std::pair<int, int>;
inline EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

/// Boundary markers keyed by the (sorted) node pair of each boundary face.
using BoundaryMarkers = std::map<EdgeKey, FaceMarker>;

/// Immutable 2D quadrilateral mesh with oriented faces and 1-irregular
/// hanging nodes. Every interior face is owned by the adjacent element with
/// the lower index and its normal points out of the owner; boundary normals
/// point out of the domain.
class Mesh {
 public:
  Mesh() = default;

  /// Builds faces and element-face incidences from raw connectivity.
  /// Throws std::invalid_argument on unmarked boundary faces, faces shared by
  /// more than two elements, 2-irregular constraints or non-convex cells.
  static Mesh from_connectivity(std::vector<Point> nodes,
                                std::vector<std::array<int, 4>> elements,
                                std::vector<HangingConstraint> constraints,
                                const BoundaryMarkers& markers);

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<HangingConstraint>& constraints() const { return constraints_; }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return elements_.size(); }
  std::size_t num_faces() const { return faces_.size(); }

  const Point& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const Element& element(int i) const { return elements_[static_cast<std::size_t>(i)]; }
  const Face& face(int i) const { return faces_[static_cast<std::size_t>(i)]; }

  double area(int element) const { return areas_[static_cast<std::size_t>(element)]; }
  Point centroid(int element) const;
  Point face_midpoint(int face) const;
  double total_area() const;
  /// Largest element diameter (longest diagonal or edge).
  double max_diameter() const;

  /// +1 when the face normal points out of `element`, -1 otherwise.
  double orientation(int element, int face) const;

  bool is_hanging(int node) const { return hanging_[static_cast<std::size_t>(node)]; }
  bool has_dirichlet_boundary() const;

  BoundaryMarkers boundary_markers() const;
  std::vector<std::array<int, 4>> connectivity() const;

  friend bool operator==(const Mesh& a, const Mesh& b);

 private:
  std::vector<Point> nodes_;
  std::vector<Element> elements_;
  std::vector<Face> faces_;
  std::vector<HangingConstraint> constraints_;
  std::vector<double> areas_;
  std::vector<bool> hanging_;
};

Mesh build_cartesian(int nx, int ny, Rectangle bounds = {}, SideMarkers markers = {});

/// Tensor-product mesh from explicit, strictly increasing coordinate lines.
Mesh build_tensor(const std::vector<double>& xs, const std::vector<double>& ys,
                  SideMarkers markers = {});

/// Splits every element into four through its edge midpoints.
Mesh refine_global(const Mesh& mesh);

/// Splits the listed elements into four. Throws std::invalid_argument when the
/// result would not be 1-irregular.
Mesh refine_cells(const Mesh& mesh, const std::set<int>& cells);

/// Randomly perturbs node positions by at most `magnitude` times the shortest
/// incident edge. Corners stay fixed, boundary nodes slide along their side,
/// hanging nodes follow their parents. Halves the magnitude up to five times
/// if a cell turns non-convex.
Mesh distort(const Mesh& mesh, double magnitude, std::uint64_t seed);

/// Moves nodes to new coordinates keeping the topology.
Mesh with_nodes(const Mesh& mesh, std::vector<Point> nodes);

/// True if all four corner Jacobians and the 2x2 Gauss-point Jacobians of
/// every element are strictly positive.
bool all_jacobians_positive(const Mesh& mesh);

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

Mesh load_mesh(const std::filesystem::path& path);
Mesh read_mesh(std::istream& in);
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);
void write_mesh(const Mesh& mesh, std::ostream& out);

}  // namespace consflux
