#include "fdr/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fdr/error.hpp"

namespace fdr {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec == std::errc() && res.ptr == t.data() + t.size()) return v;
  // from_chars rejects "nan"/"inf" spellings on some inputs; catch them here.
  if (t == "nan" || t == "NaN" || t == "NAN" || t == "inf" || t == "-inf" || t == "Inf" ||
      t == "-Inf") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorCode::Io, where + ": cannot parse '" + t + "' as a number");
}

}  // namespace

PointCloud parse_cloud_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, source + ": missing header");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_fields(line);
  if (header.size() < 2) throw Error(ErrorCode::Io, source + ": header needs x1..xd,y");
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (trim(header[j]) != "x" + std::to_string(j + 1)) {
      throw Error(ErrorCode::Io, source + ": expected column x" + std::to_string(j + 1));
    }
  }
  if (trim(header[dim]) != "y") throw Error(ErrorCode::Io, source + ": last column must be y");

  std::vector<double> x;
  std::vector<double> y;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (fields.size() != dim + 1) throw Error(ErrorCode::Io, where + ": wrong number of fields");
    for (std::size_t j = 0; j <= dim; ++j) {
      const double v = parse_number(fields[j], where);
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, where + ": non-finite value");
      (j < dim ? x : y).push_back(v);
    }
  }
  if (y.empty()) throw Error(ErrorCode::EmptyCloud, source + ": no data rows");
  return PointCloud(dim, std::move(x), std::move(y));
}

PointCloud read_cloud_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return parse_cloud_csv(in, path.string());
}

void write_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ostringstream out;
  for (std::size_t j = 0; j < cloud.dim(); ++j) out << 'x' << j + 1 << ',';
  out << "y\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (double v : cloud.point(i)) out << format_double(v) << ',';
    out << format_double(cloud.response(i)) << '\n';
  }
  write_text(path, out.str());
}

void write_cell_table(std::ostream& out, const GridSpec& grid, const std::vector<Column>& columns,
                      const std::vector<std::size_t>& cells) {
  for (const auto& col : columns) {
    if (col.values.size() != grid.spatial_cells()) {
      throw Error(ErrorCode::ShapeMismatch, "column " + col.name + " does not match the grid");
    }
  }
  for (std::size_t j = 0; j < grid.dim; ++j) out << 'x' << j + 1 << (j + 1 < grid.dim || !columns.empty() ? "," : "");
  for (std::size_t k = 0; k < columns.size(); ++k) out << columns[k].name << (k + 1 < columns.size() ? "," : "");
  out << '\n';
  for (std::size_t c : cells) {
    const auto center = grid.cell_center(c);
    for (std::size_t j = 0; j < grid.dim; ++j) {
      out << format_double(center[j]) << (j + 1 < grid.dim || !columns.empty() ? "," : "");
    }
    for (std::size_t k = 0; k < columns.size(); ++k) {
      out << format_double(columns[k].values[c]) << (k + 1 < columns.size() ? "," : "");
    }
    out << '\n';
  }
}

void write_cell_table(const std::filesystem::path& path, const GridSpec& grid,
                      const std::vector<Column>& columns, const std::vector<std::size_t>& cells) {
  std::ostringstream out;
  write_cell_table(out, grid, columns, cells);
  write_text(path, out.str());
}

void write_cell_table(const std::filesystem::path& path, const GridSpec& grid,
                      const std::vector<Column>& columns) {
  std::vector<std::size_t> all(grid.spatial_cells());
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
  write_cell_table(path, grid, columns, all);
}

std::vector<double> as_doubles(const std::vector<bool>& mask) {
  std::vector<double> out(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0 : 0.0;
  return out;
}

std::vector<std::size_t> selected_cells(const std::vector<bool>& mask) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(i);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "hashing failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

}  // namespace fdr
