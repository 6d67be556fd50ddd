#include "consflux/output.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace consflux {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

void put(std::ostream& out, double v) {
  if (std::isnan(v))
    out << "nan";
  else
    out << v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double to_number(const std::string& cell, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "not a number: '" + cell + "'");
  }
  if (used != cell.size()) throw ParseError(line, "not a number: '" + cell + "'");
  return v;
}

bool next_line(std::istream& in, std::string& line, int& number) {
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

}  // namespace

void write_csv(const Table& table, std::ostream& out) {
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw std::invalid_argument("write_csv: row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      put(out, row[i]);
    }
    out << '\n';
  }
  out.precision(old);
}

void write_csv(const Table& table, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_csv(table, out);
}

Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  int n = 0;
  if (!next_line(in, line, n)) throw ParseError(n, "missing header");
  t.columns = split(line);
  while (next_line(in, line, n)) {
    const auto cells = split(line);
    if (cells.size() != t.columns.size())
      throw ParseError(n, "expected " + std::to_string(t.columns.size()) + " columns, got " +
                              std::to_string(cells.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(to_number(c, n));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table read_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_csv(in);
}

Table to_table(const ConvergenceTable& table) {
  Table t;
  t.columns.push_back("h");
  std::vector<std::vector<double>> rates;
  for (const auto& name : table.names) {
    t.columns.push_back(name);
    t.columns.push_back("rate_" + name);
    rates.push_back(table.rates(name));
  }
  for (std::size_t k = 0; k < table.h.size(); ++k) {
    std::vector<double> row{table.h[k]};
    for (std::size_t c = 0; c < table.names.size(); ++c) {
      row.push_back(table.errors[c][k]);
      row.push_back(k == 0 ? std::numeric_limits<double>::quiet_NaN() : rates[c][k - 1]);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

ConvergenceTable from_table(const Table& t) {
  if (t.columns.empty() || t.columns[0] != "h" || t.columns.size() % 2 == 0)
    throw std::invalid_argument("from_table: expected h followed by error/rate column pairs");
  ConvergenceTable out;
  for (std::size_t c = 1; c < t.columns.size(); c += 2) {
    out.names.push_back(t.columns[c]);
    out.errors.emplace_back();
  }
  for (const auto& row : t.rows) {
    out.h.push_back(row[0]);
    for (std::size_t c = 0; c < out.names.size(); ++c) out.errors[c].push_back(row[1 + 2 * c]);
  }
  return out;
}

void write_vtk(const Mesh& mesh, const std::vector<NamedCellField>& fields, std::ostream& out) {
  for (const auto& [name, f] : fields) {
    if (f.size() != mesh.num_elements())
      throw std::invalid_argument("write_vtk: field '" + name + "' has the wrong size");
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("write_vtk: field names must be non-empty without blanks");
  }
  const auto old = out.precision(17);
  out << "# vtk DataFile Version 3.0\nconsflux\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const auto& p : mesh.nodes()) out << p.x << ' ' << p.y << " 0\n";
  const std::size_t ne = mesh.num_elements();
  out << "CELLS " << ne << ' ' << 5 * ne << '\n';
  for (const auto& el : mesh.elements())
    out << "4 " << el.vertices[0] << ' ' << el.vertices[1] << ' ' << el.vertices[2] << ' '
        << el.vertices[3] << '\n';
  out << "CELL_TYPES " << ne << '\n';
  for (std::size_t e = 0; e < ne; ++e) out << "9\n";
  if (!fields.empty()) {
    out << "CELL_DATA " << ne << '\n';
    for (const auto& [name, f] : fields) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f) {
        put(out, v);
        out << '\n';
      }
    }
  }
  out.precision(old);
}

void write_vtk(const Mesh& mesh, const std::vector<NamedCellField>& fields,
               const std::filesystem::path& path) {
  auto out = open_out(path);
  write_vtk(mesh, fields, out);
}

void write_flux_csv(const Mesh& mesh, const FaceField& field, std::ostream& out) {
  if (field.size() != mesh.num_faces())
    throw std::invalid_argument("write_flux_csv: field has the wrong number of faces");
  Table t;
  t.columns = {"face_id", "x_mid", "y_mid", "nx", "ny", "measure", "mean", "g0", "g1"};
  for (const auto& f : mesh.faces()) {
    const Point m = mesh.face_midpoint(f.id);
    t.rows.push_back({static_cast<double>(f.id), m.x, m.y, f.normal.x, f.normal.y, f.measure,
                      field.mean(f.id), field[f.id][0], field[f.id][1]});
  }
  write_csv(t, out);
}

void write_flux_csv(const Mesh& mesh, const FaceField& field, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_flux_csv(mesh, field, out);
}

FaceField read_flux_csv(const Mesh& mesh, std::istream& in) {
  const Table t = read_csv(in);
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (t.columns[i] == name) return i;
    throw ParseError(1, "flux csv lacks column '" + name + "'");
  };
  const std::size_t id = col("face_id"), g0 = col("g0"), g1 = col("g1");
  FaceField out(mesh.num_faces());
  std::vector<bool> seen(mesh.num_faces(), false);
  int line = 1;
  for (const auto& row : t.rows) {
    ++line;
    const double v = row[id];
    if (v != std::floor(v) || v < 0 || v >= static_cast<double>(mesh.num_faces()))
      throw ParseError(line, "bad face id");
    const auto f = static_cast<std::size_t>(v);
    if (seen[f]) throw ParseError(line, "face listed twice");
    seen[f] = true;
    out.gauss[f] = {row[g0], row[g1]};
  }
  if (t.rows.size() != mesh.num_faces())
    throw ParseError(line, "flux csv has " + std::to_string(t.rows.size()) + " faces, mesh has " +
                               std::to_string(mesh.num_faces()));
  return out;
}

FaceField read_flux_csv(const Mesh& mesh, const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_flux_csv(mesh, in);
}

void write_cell_csv(const CellField& field, const std::string& name, std::ostream& out) {
  Table t;
  t.columns = {"element_id", name};
  for (std::size_t e = 0; e < field.size(); ++e) t.rows.push_back({static_cast<double>(e), field[e]});
  write_csv(t, out);
}

CellField read_cell_csv(std::size_t num_elements, std::istream& in) {
  const Table t = read_csv(in);
  if (t.columns.size() != 2 || t.columns[0] != "element_id")
    throw ParseError(1, "expected columns element_id,<value>");
  CellField out(num_elements, 0.0);
  std::vector<bool> seen(num_elements, false);
  int line = 1;
  for (const auto& row : t.rows) {
    ++line;
    if (row[0] != std::floor(row[0]) || row[0] < 0 || row[0] >= static_cast<double>(num_elements))
      throw ParseError(line, "bad element id");
    const auto e = static_cast<std::size_t>(row[0]);
    if (seen[e]) throw ParseError(line, "element listed twice");
    seen[e] = true;
    out[e] = row[1];
  }
  if (t.rows.size() != num_elements)
    throw ParseError(line, "cell csv has " + std::to_string(t.rows.size()) + " rows, mesh has " +
                               std::to_string(num_elements) + " elements");
  return out;
}

CellField read_cell_csv(std::size_t num_elements, const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_cell_csv(num_elements, in);
}

}  // namespace consflux
