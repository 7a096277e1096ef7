#pragma once

// CSV ingestion and export of per-cell tables.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fdr/grid.hpp"

namespace fdr {

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

// Header `x1,...,xd,y`. Throws Io when the file cannot be read or a row is
// malformed, NonFiniteInput on NaN or infinite values.
PointCloud read_cloud_csv(const std::filesystem::path& path);
PointCloud parse_cloud_csv(std::istream& in, const std::string& source = "input");
void write_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud);

struct Column {
  std::string name;
  std::vector<double> values;
};

// One row per listed cell: cell-center coordinates x1..xd followed by the
// columns. Boolean columns are written as 0/1 doubles by the caller.
void write_cell_table(std::ostream& out, const GridSpec& grid, const std::vector<Column>& columns,
                      const std::vector<std::size_t>& cells);
void write_cell_table(const std::filesystem::path& path, const GridSpec& grid,
                      const std::vector<Column>& columns);
void write_cell_table(const std::filesystem::path& path, const GridSpec& grid,
                      const std::vector<Column>& columns, const std::vector<std::size_t>& cells);

std::vector<double> as_doubles(const std::vector<bool>& mask);
std::vector<std::size_t> selected_cells(const std::vector<bool>& mask);

// Writes text atomically enough for our purposes; throws Io on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Hex SHA-256 digest.
std::string sha256_hex(const std::string& data);

}  // namespace fdr
