#pragma once

// File emission shared by the subcommands. Numbers are written in shortest round-trip
// form, so identical runs produce byte-identical files.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfe/grid.hpp"

namespace mfe::cli {

using Json = nlohmann::ordered_json;

/// Shortest string that parses back to the same double; "inf", "-inf" and "nan" otherwise.
std::string format_double(double v);

/// JSON number, or the format_double string for non-finite values.
Json number(double v);

class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& cells);
  /// Writes the file; throws Error on I/O failure.
  void close();

 private:
  std::filesystem::path path_;
  std::size_t columns_;
  std::string text_;
};

/// Binary P5 heatmap: round(255 (f - min) / (max - min)) row-major from the y = 0 row;
/// constant fields map to 0.
void write_pgm(const std::filesystem::path& path, const ScalarField& f);

void write_json(const std::filesystem::path& path, const Json& value);

}  // namespace mfe::cli
