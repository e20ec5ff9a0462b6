#pragma once

// Field files, diagnostics CSV and whole-file atomic writes.
//
// Field file layout (text, one header pair then data rows):
//
//   SCHO-FIELD v1
//   kind=<cc|face-x|face-y> nx=<cells> ny=<cells> Lx=<len> Ly=<len> t=<time> step=<n>
//   <row 0>
//   <row 1>
//   ...
//
// Rows run along y (row j holds all entries with that j index), entries are
// space separated in 17-significant-digit scientific notation. A cc field has
// ny rows of nx entries, face-x has ny rows of nx+1, face-y has ny+1 rows of
// nx. Vector fields are two files, <path>.fx and <path>.fy.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scho/grid.hpp"

namespace scho {

inline constexpr const char* kFieldMagic = "SCHO-FIELD";
inline constexpr const char* kFieldVersion = "v1";

enum class FieldKind { Cell, FaceX, FaceY };

inline const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::Cell: return "cc";
    case FieldKind::FaceX: return "face-x";
    case FieldKind::FaceY: return "face-y";
  }
  return "?";
}

struct FieldMeta {
  FieldKind kind = FieldKind::Cell;
  double time = 0.0;
  int step = 0;
};

/// printf("%.16e"): 17 significant digits, enough for an exact roundtrip.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

/// Shortest-form "%.17g", used in headers and CSV files.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

namespace detail {

inline void header(std::ostringstream& os, FieldKind kind, const GridSpec& g, const FieldMeta& meta) {
  os << kFieldMagic << ' ' << kFieldVersion << '\n'
     << "kind=" << to_string(kind) << " nx=" << g.nx << " ny=" << g.ny << " Lx=" << format_g17(g.Lx)
     << " Ly=" << format_g17(g.Ly) << " t=" << format_g17(meta.time) << " step=" << meta.step << '\n';
}

inline std::string serialize(std::span<const double> vals, int cols, int rows, FieldKind kind,
                             const GridSpec& g, const FieldMeta& meta) {
  std::ostringstream os;
  header(os, kind, g, meta);
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      if (i) os << ' ';
      os << format_real(vals[static_cast<std::size_t>(j) * cols + i]);
    }
    os << '\n';
  }
  return os.str();
}

struct RawField {
  FieldKind kind = FieldKind::Cell;
  GridSpec grid;
  FieldMeta meta;
  std::vector<double> values;
};

inline double parse_real(const std::string& tok, const std::string& what) {
  const char* s = tok.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0' || errno == ERANGE) throw IoError(what + ": cannot parse '" + tok + "'");
  return v;
}

inline RawField read_raw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open field file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  {
    std::istringstream ls(line);
    std::string magic, version;
    ls >> magic >> version;
    if (magic != kFieldMagic) throw IoError(path.string() + ": not a field file");
    if (version != kFieldVersion) {
      throw IoError(path.string() + ": unsupported field file version '" + version + "' (expected " +
                    kFieldVersion + ")");
    }
  }
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing header line");
  RawField raw;
  int nx = -1, ny = -1;
  double Lx = 0, Ly = 0;
  bool have_kind = false, have_t = false, have_step = false;
  {
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw IoError(path.string() + ": malformed header token '" + tok + "'");
      const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
      const std::string where = path.string() + ": header " + k;
      if (k == "kind") {
        if (v == "cc") raw.kind = FieldKind::Cell;
        else if (v == "face-x") raw.kind = FieldKind::FaceX;
        else if (v == "face-y") raw.kind = FieldKind::FaceY;
        else throw IoError(where + ": unknown kind '" + v + "'");
        have_kind = true;
      } else if (k == "nx") {
        nx = static_cast<int>(parse_real(v, where));
      } else if (k == "ny") {
        ny = static_cast<int>(parse_real(v, where));
      } else if (k == "Lx") {
        Lx = parse_real(v, where);
      } else if (k == "Ly") {
        Ly = parse_real(v, where);
      } else if (k == "t") {
        raw.meta.time = parse_real(v, where);
        have_t = true;
      } else if (k == "step") {
        raw.meta.step = static_cast<int>(parse_real(v, where));
        have_step = true;
      } else {
        throw IoError(where + ": unknown header key");
      }
    }
  }
  if (!have_kind || nx < 0 || ny < 0 || !have_t || !have_step) {
    throw IoError(path.string() + ": incomplete header");
  }
  try {
    raw.grid = make_grid(nx, ny, Lx, Ly);
  } catch (const ConfigError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  raw.meta.kind = raw.kind;
  const int cols = raw.kind == FieldKind::FaceX ? nx + 1 : nx;
  const int rows = raw.kind == FieldKind::FaceY ? ny + 1 : ny;
  raw.values.reserve(static_cast<std::size_t>(cols) * rows);
  for (int r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) {
      throw IoError(path.string() + ": malformed row " + std::to_string(r) + " (file truncated)");
    }
    std::istringstream ls(line);
    std::string tok;
    int c = 0;
    while (ls >> tok) {
      if (c == cols) break;
      raw.values.push_back(parse_real(tok, path.string() + ": malformed row " + std::to_string(r)));
      ++c;
    }
    if (c != cols || (ls >> tok)) {
      throw IoError(path.string() + ": malformed row " + std::to_string(r) + " (expected " +
                    std::to_string(cols) + " entries)");
    }
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      throw IoError(path.string() + ": trailing data after " + std::to_string(rows) + " rows");
    }
  }
  return raw;
}

inline void check_expected(const RawField& raw, const GridSpec* expected, const std::filesystem::path& path) {
  if (expected && !(raw.grid == *expected)) {
    throw IoError(path.string() + ": dimension mismatch, file is " + std::to_string(raw.grid.nx) + "x" +
                  std::to_string(raw.grid.ny) + ", expected " + std::to_string(expected->nx) + "x" +
                  std::to_string(expected->ny));
  }
}

inline std::filesystem::path with_suffix(std::filesystem::path p, const char* suffix) {
  p += suffix;
  return p;
}

}  // namespace detail

inline void write_field(const std::filesystem::path& path, const ScalarField& f, FieldMeta meta = {}) {
  const auto& g = f.grid();
  meta.kind = FieldKind::Cell;
  write_file_atomic(path, detail::serialize(f.values(), g.nx, g.ny, FieldKind::Cell, g, meta));
}

/// Writes <path>.fx and <path>.fy.
inline void write_field(const std::filesystem::path& path, const VectorField& f, FieldMeta meta = {}) {
  const auto& g = f.grid();
  write_file_atomic(detail::with_suffix(path, ".fx"),
                    detail::serialize(f.xvals(), g.nx + 1, g.ny, FieldKind::FaceX, g, meta));
  write_file_atomic(detail::with_suffix(path, ".fy"),
                    detail::serialize(f.yvals(), g.nx, g.ny + 1, FieldKind::FaceY, g, meta));
}

inline std::pair<ScalarField, FieldMeta> read_scalar_field(const std::filesystem::path& path,
                                                           const GridSpec* expected = nullptr) {
  auto raw = detail::read_raw(path);
  if (raw.kind != FieldKind::Cell) throw IoError(path.string() + ": expected a cc field");
  detail::check_expected(raw, expected, path);
  ScalarField f(raw.grid);
  std::copy(raw.values.begin(), raw.values.end(), f.values().begin());
  return {std::move(f), raw.meta};
}

inline std::pair<VectorField, FieldMeta> read_vector_field(const std::filesystem::path& path,
                                                           const GridSpec* expected = nullptr) {
  const auto px = detail::with_suffix(path, ".fx");
  const auto py = detail::with_suffix(path, ".fy");
  auto rx = detail::read_raw(px);
  auto ry = detail::read_raw(py);
  if (rx.kind != FieldKind::FaceX) throw IoError(px.string() + ": expected a face-x field");
  if (ry.kind != FieldKind::FaceY) throw IoError(py.string() + ": expected a face-y field");
  detail::check_expected(rx, expected, px);
  detail::check_expected(ry, &rx.grid, py);
  VectorField f(rx.grid);
  std::copy(rx.values.begin(), rx.values.end(), f.xvals().begin());
  std::copy(ry.values.begin(), ry.values.end(), f.yvals().begin());
  return {std::move(f), rx.meta};
}

/// Minimal CSV accumulator: header once, rows of reals printed with %.17g.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) os_ << (i ? "," : "") << columns_[i];
    os_ << '\n';
  }

  void row(const std::vector<double>& vals) {
    if (vals.size() != columns_.size()) throw ShapeError("CsvTable: row width mismatch");
    for (std::size_t i = 0; i < vals.size(); ++i) os_ << (i ? "," : "") << format_g17(vals[i]);
    os_ << '\n';
  }

  std::string str() const { return os_.str(); }
  void write(const std::filesystem::path& path) const { write_file_atomic(path, str()); }

 private:
  std::vector<std::string> columns_;
  std::ostringstream os_;
};

}  // namespace scho
