#include "mfe/cli/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "mfe/errors.hpp"

namespace mfe::cli {

namespace {

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

Json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

CsvWriter::CsvWriter(std::filesystem::path path, std::vector<std::string> header)
    : path_(std::move(path)), columns_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw Error("csv row has the wrong number of columns");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
}

void CsvWriter::row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double v : cells) s.push_back(format_double(v));
  row(s);
}

void CsvWriter::close() { write_file(path_, text_); }

void write_pgm(const std::filesystem::path& path, const ScalarField& f) {
  const int n = f.grid().n_side();
  double lo = INFINITY, hi = -INFINITY;
  for (double v : f.values()) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::string bytes = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  const std::size_t header = bytes.size();
  bytes.resize(header + f.size(), '\0');
  if (hi > lo) {
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (!std::isfinite(f[k])) continue;
      const double level = std::round(255.0 * (f[k] - lo) / (hi - lo));
      bytes[header + k] = static_cast<char>(static_cast<unsigned char>(std::clamp(level, 0.0, 255.0)));
    }
  }
  write_file(path, bytes);
}

void write_json(const std::filesystem::path& path, const Json& value) {
  write_file(path, value.dump(2) + "\n");
}

}  // namespace mfe::cli
