#include <fstream>
#include <iomanip>
#include <sstream>

#include "consflux/mesh.hpp"

namespace consflux {

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-blank, non-comment line as a string stream.
  std::istringstream next(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '#') continue;
      return std::istringstream(line);
    }
    throw ParseError(line_no_, std::string("unexpected end of file, expected ") + what);
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

template <typename... T>
void read_fields(LineReader& r, std::istringstream& ss, const char* what, T&... out) {
  if (!((ss >> out) && ...)) throw ParseError(r.line(), std::string("malformed ") + what);
  std::string rest;
  if (ss >> rest) throw ParseError(r.line(), std::string("trailing data in ") + what);
}

std::size_t read_section(LineReader& r, const std::string& keyword) {
  auto ss = r.next(keyword.c_str());
  std::string word;
  long long n = -1;
  if (!(ss >> word >> n) || word != keyword || n < 0)
    throw ParseError(r.line(), "expected '" + keyword + " <count>'");
  return static_cast<std::size_t>(n);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  LineReader r(in);
  {
    auto ss = r.next("header");
    std::string magic, version;
    if (!(ss >> magic >> version) || magic != "MESH2D" || version != "v1")
      throw ParseError(r.line(), "expected header 'MESH2D v1'");
  }

  std::vector<Point> nodes(read_section(r, "NODES"));
  for (auto& p : nodes) {
    auto ss = r.next("node");
    read_fields(r, ss, "node line", p.x, p.y);
  }

  std::vector<std::array<int, 4>> elems(read_section(r, "ELEMS"));
  for (auto& e : elems) {
    auto ss = r.next("element");
    read_fields(r, ss, "element line", e[0], e[1], e[2], e[3]);
  }

  struct FaceLine {
    int n0, n1, owner, neighbor, marker, line;
  };
  std::vector<FaceLine> face_lines(read_section(r, "FACES"));
  BoundaryMarkers markers;
  for (auto& f : face_lines) {
    auto ss = r.next("face");
    read_fields(r, ss, "face line", f.n0, f.n1, f.owner, f.neighbor, f.marker);
    f.line = r.line();
    if (f.marker < 0 || f.marker > 2)
      throw ParseError(r.line(), "face marker must be 0, 1 or 2, got " + std::to_string(f.marker));
    if ((f.neighbor < 0) != (f.marker != 0))
      throw ParseError(r.line(), "face marker inconsistent with neighbor");
    if (f.neighbor < 0) markers[edge_key(f.n0, f.n1)] = static_cast<FaceMarker>(f.marker);
  }

  std::vector<HangingConstraint> constraints(read_section(r, "CONSTRAINTS"));
  for (auto& c : constraints) {
    auto ss = r.next("constraint");
    read_fields(r, ss, "constraint line", c.node, c.parents[0], c.parents[1]);
  }

  Mesh mesh = Mesh::from_connectivity(std::move(nodes), std::move(elems), std::move(constraints),
                                      markers);

  if (face_lines.size() != mesh.num_faces())
    throw std::invalid_argument("mesh: face list does not match the connectivity (" +
                                std::to_string(face_lines.size()) + " listed, " +
                                std::to_string(mesh.num_faces()) + " derived)");
  for (std::size_t i = 0; i < face_lines.size(); ++i) {
    const auto& fl = face_lines[i];
    const auto& f = mesh.face(static_cast<int>(i));
    if (edge_key(fl.n0, fl.n1) != edge_key(f.endpoints[0], f.endpoints[1]) ||
        fl.owner != f.owner || fl.neighbor != f.neighbor ||
        fl.marker != static_cast<int>(f.marker))
      throw ParseError(fl.line, "face does not match the connectivity");
  }
  return mesh;
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file " + path.string());
  return read_mesh(in);
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << std::setprecision(17);
  out << "MESH2D v1\n";
  out << "NODES " << mesh.num_nodes() << '\n';
  for (const auto& p : mesh.nodes()) out << p.x << ' ' << p.y << '\n';
  out << "ELEMS " << mesh.num_elements() << '\n';
  for (const auto& e : mesh.elements())
    out << e.vertices[0] << ' ' << e.vertices[1] << ' ' << e.vertices[2] << ' ' << e.vertices[3]
        << '\n';
  out << "FACES " << mesh.num_faces() << '\n';
  for (const auto& f : mesh.faces())
    out << f.endpoints[0] << ' ' << f.endpoints[1] << ' ' << f.owner << ' ' << f.neighbor << ' '
        << static_cast<int>(f.marker) << '\n';
  out << "CONSTRAINTS " << mesh.constraints().size() << '\n';
  for (const auto& c : mesh.constraints())
    out << c.node << ' ' << c.parents[0] << ' ' << c.parents[1] << '\n';
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file " + path.string());
  write_mesh(mesh, out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace consflux
