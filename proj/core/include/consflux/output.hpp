#pragma once

// ASCII emitters: legacy VTK cell data, numeric CSV tables and the face flux
// dump. Numbers carry 17 significant digits.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "consflux/fields.hpp"
#include "consflux/harness.hpp"
#include "consflux/mesh.hpp"

namespace consflux {

/// Numeric table with a header row. NaN is written as "nan".
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_csv(const Table& table, std::ostream& out);
void write_csv(const Table& table, const std::filesystem::path& path);
/// Throws ParseError on ragged rows or non-numeric cells.
Table read_csv(std::istream& in);
Table read_csv(const std::filesystem::path& path);

/// Columns h, then each error followed by its rate (NaN on the first level).
Table to_table(const ConvergenceTable& table);
ConvergenceTable from_table(const Table& table);

using NamedCellField = std::pair<std::string, CellField>;

/// DATASET UNSTRUCTURED_GRID with VTK_QUAD cells and CELL_DATA scalars.
/// Hanging nodes are plain points.
void write_vtk(const Mesh& mesh, const std::vector<NamedCellField>& fields, std::ostream& out);
void write_vtk(const Mesh& mesh, const std::vector<NamedCellField>& fields,
               const std::filesystem::path& path);

/// face_id,x_mid,y_mid,nx,ny,measure,mean,g0,g1
void write_flux_csv(const Mesh& mesh, const FaceField& field, std::ostream& out);
void write_flux_csv(const Mesh& mesh, const FaceField& field, const std::filesystem::path& path);
/// Reads g0/g1 back. Throws ParseError unless every face appears exactly once.
FaceField read_flux_csv(const Mesh& mesh, std::istream& in);
FaceField read_flux_csv(const Mesh& mesh, const std::filesystem::path& path);

/// element_id,value
void write_cell_csv(const CellField& field, const std::string& name, std::ostream& out);
CellField read_cell_csv(std::size_t num_elements, std::istream& in);
CellField read_cell_csv(std::size_t num_elements, const std::filesystem::path& path);

}  // namespace consflux
