#pragma once

// Run configuration: line-oriented `key = value` with `[section]` headers and `#` comments.
//
//   seed = 1
//   [grid]
//   n_side = 64
//   [form]
//   kind = cosine:2.0          # lebesgue | cosine:A | file:path
//   [measure]
//   kind = klt                 # lebesgue | klt | file:path
//   poles = (0.5,0.5,0.5), (0.25,0.25,0.75)
//   [solver]
//   beta = 1.0
//   [sweep]
//   betas = 1, 4, 16, 64, 256
//   [output]
//   dir = out
//
// File densities hold n_side^2 whitespace-separated numbers, row-major from the y = 0 row.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "mfe/errors.hpp"
#include "mfe/measure.hpp"
#include "mfe/torus_grid.hpp"

namespace mfe::cli {

/// User-input error; line is 0 when the error is not tied to a config line.
class ConfigError : public Error {
 public:
  ConfigError(std::string source, int line, const std::string& message)
      : Error(line > 0 ? source + ":" + std::to_string(line) + ": " + message
                       : source + ": " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct DensitySpec {
  std::string kind = "lebesgue";  // lebesgue | cosine | klt | file
  double amplitude = 0.0;
  std::filesystem::path path;
  int line = 0;
};

struct RunConfig {
  std::string source = "<defaults>";
  std::uint64_t seed = 1;
  int n_side = 64;
  DensitySpec form;
  DensitySpec measure;
  std::vector<Pole> poles;

  double beta = 1.0;
  double tol_residual = 1e-9;
  double tol_gap = 1e-10;
  int max_iter = 5000;
  std::optional<double> damping;
  std::string method = "auto";  // auto | fixed_point | newton
  bool override_coercivity = false;
  std::optional<double> alpha_hint;

  std::vector<double> betas{1, 4, 16, 64, 256};

  std::filesystem::path out_dir = "out";
  bool heatmaps = true;
  bool timing = false;
};

/// Parses a config stream. base_dir resolves relative file: paths.
RunConfig parse_config(std::istream& in, const std::string& source,
                       const std::filesystem::path& base_dir);

RunConfig load_config(const std::filesystem::path& path);

/// Checks module preconditions that do not need the grid data.
void validate(const RunConfig& config);

BackgroundForm make_form(const RunConfig& config);
Measure make_measure(const RunConfig& config);

}  // namespace mfe::cli
