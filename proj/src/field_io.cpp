#include "anderson/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "anderson/errors.hpp"

namespace anderson {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary field dumps assume a little-endian host");

std::string extension(const std::filesystem::path& path) { return path.extension().string(); }

void write_csv(const GridField& u, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "i,j,value\n";
  const std::size_t n = u.grid().n();
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", u.at(i, j));
      out << i << ',' << j << ',' << buf << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

void write_f64(const GridField& u, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(u.grid().n()), 0u};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(u.values().data()),
            static_cast<std::streamsize>(u.size() * sizeof(double)));
  if (!out) throw Error("write failed: " + path.string());
}

GridField read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("i,j,value", 0) != 0) throw ConfigError(path.string() + ": missing i,j,value header");
  struct Row {
    std::size_t i, j;
    double v;
  };
  std::vector<Row> rows;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Row r{};
    char c1 = 0, c2 = 0;
    if (!(ss >> r.i >> c1 >> r.j >> c2 >> r.v) || c1 != ',' || c2 != ',') {
      throw ConfigError(path.string() + ": malformed row '" + line + "'");
    }
    max_index = std::max({max_index, r.i, r.j});
    rows.push_back(r);
  }
  const std::size_t n = max_index + 1;
  if (rows.size() != n * n) throw ConfigError(path.string() + ": expected a full n x n grid");
  GridField u{TorusGrid(n)};
  for (const Row& r : rows) u[u.grid().index(r.i, r.j)] = r.v;
  return u;
}

GridField read_f64(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::uint32_t header[2] = {0, 0};
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in) throw ConfigError(path.string() + ": truncated header");
  GridField u{TorusGrid(header[0])};
  in.read(reinterpret_cast<char*>(u.values().data()),
          static_cast<std::streamsize>(u.size() * sizeof(double)));
  if (!in) throw ConfigError(path.string() + ": truncated payload");
  return u;
}

}  // namespace

void write_field(const GridField& u, const std::filesystem::path& path) {
  const std::string ext = extension(path);
  if (ext == ".csv") return write_csv(u, path);
  if (ext == ".f64") return write_f64(u, path);
  throw ConfigError("unknown field format '" + ext + "' (expected .csv or .f64)");
}

GridField read_field(const std::filesystem::path& path) {
  const std::string ext = extension(path);
  if (ext == ".csv") return read_csv(path);
  if (ext == ".f64") return read_f64(path);
  throw ConfigError("unknown field format '" + ext + "' (expected .csv or .f64)");
}

}  // namespace anderson
