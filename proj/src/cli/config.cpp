#include "mfe/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mfe/alpha_mt.hpp"

namespace mfe::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Entry> entries)
      : source_(std::move(source)), entries_(std::move(entries)) {}

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(source_, line, msg);
  }

  const Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.push_back(key);
    return &it->second;
  }

  double real(const std::string& key, double fallback) {
    const Entry* e = find(key);
    return e ? parse_real(*e, key) : fallback;
  }

  std::optional<double> optional_real(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    return parse_real(*e, key);
  }

  long long integer(const std::string& key, long long fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    long long v = 0;
    const auto& s = e->value;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail(e->line, key + ": expected an integer, got '" + s + "'");
    if (v < -(1LL << 40) || v > (1LL << 40)) fail(e->line, key + ": integer out of range");
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    const std::string v = lower(e->value);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    fail(e->line, key + ": expected a boolean, got '" + e->value + "'");
  }

  std::vector<double> real_list(const std::string& key, std::vector<double> fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::vector<double> out;
    std::string s = e->value;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(parse_real({tok, e->line}, key));
    if (out.empty()) fail(e->line, key + ": expected a list of numbers");
    return out;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        fail(entry.line, "unknown key '" + key + "'");
      }
    }
  }

  double parse_real(const Entry& e, const std::string& key) const {
    double v = 0.0;
    const auto& s = e.value;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    auto [p, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
      fail(e.line, key + ": expected a finite number, got '" + s + "'");
    }
    return v;
  }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> used_;
};

DensitySpec parse_density(Reader& r, const Entry& e, const std::string& key,
                          const std::filesystem::path& base_dir, bool allow_cosine,
                          bool allow_klt) {
  DensitySpec d;
  d.line = e.line;
  const std::string& v = e.value;
  if (v == "lebesgue") {
    d.kind = "lebesgue";
  } else if (allow_klt && v == "klt") {
    d.kind = "klt";
  } else if (allow_cosine && v.rfind("cosine:", 0) == 0) {
    d.kind = "cosine";
    d.amplitude = r.parse_real({trim(v.substr(7)), e.line}, key);
  } else if (v.rfind("file:", 0) == 0) {
    d.kind = "file";
    d.path = trim(v.substr(5));
    if (d.path.empty()) r.fail(e.line, key + ": empty file path");
    if (d.path.is_relative()) d.path = base_dir / d.path;
    if (!std::filesystem::exists(d.path)) r.fail(e.line, key + ": file not found: " + d.path.string());
  } else {
    r.fail(e.line, key + ": unrecognized kind '" + v + "'");
  }
  return d;
}

std::vector<Pole> parse_poles(Reader& r, const Entry& e) {
  std::vector<Pole> poles;
  std::string_view s = e.value;
  while (true) {
    const auto open = s.find('(');
    if (open == std::string_view::npos) {
      if (!trim(s).empty() && trim(s) != ",") r.fail(e.line, "measure.poles: expected '(x,y,c)' groups");
      break;
    }
    if (!trim(s.substr(0, open)).empty() && trim(s.substr(0, open)) != ",") {
      r.fail(e.line, "measure.poles: unexpected text before '('");
    }
    const auto close = s.find(')', open);
    if (close == std::string_view::npos) r.fail(e.line, "measure.poles: missing ')'");
    std::string body(s.substr(open + 1, close - open - 1));
    std::vector<double> parts;
    std::istringstream in(body);
    std::string tok;
    while (std::getline(in, tok, ',')) parts.push_back(r.parse_real({trim(tok), e.line}, "measure.poles"));
    if (parts.size() != 3) r.fail(e.line, "measure.poles: each pole needs three numbers (x,y,c)");
    poles.push_back({{parts[0], parts[1]}, parts[2]});
    s = s.substr(close + 1);
  }
  return poles;
}

ScalarField read_density_file(const std::filesystem::path& path, const Grid& grid, int line,
                              const std::string& source) {
  std::ifstream in(path);
  if (!in) throw ConfigError(source, line, "cannot open " + path.string());
  ScalarField f(grid);
  std::string tok;
  std::size_t k = 0;
  while (in >> tok) {
    if (k == f.size()) {
      throw ConfigError(source, line, path.string() + ": more than " + std::to_string(f.size()) + " values");
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v)) {
      throw ConfigError(source, line, path.string() + ": bad value '" + tok + "'");
    }
    f[k++] = v;
  }
  if (k != f.size()) {
    throw ConfigError(source, line, path.string() + ": expected " + std::to_string(f.size()) +
                                        " values, found " + std::to_string(k));
  }
  return f;
}

struct Violation {
  std::string key;
  std::string message;
};

std::optional<Violation> find_violation(const RunConfig& c) {
  if (c.n_side < 4 || c.n_side % 2 != 0) return Violation{"grid.n_side", "must be an even integer >= 4"};
  if (c.n_side > 4096) return Violation{"grid.n_side", "must be <= 4096"};
  if (!(c.tol_residual > 0.0)) return Violation{"solver.tol_residual", "must be positive"};
  if (!(c.tol_gap > 0.0)) return Violation{"solver.tol_gap", "must be positive"};
  if (c.max_iter < 1 || c.max_iter > 100000000) return Violation{"solver.max_iter", "must lie in [1, 1e8]"};
  if (c.damping && !(*c.damping > 0.0 && *c.damping <= 1.0)) {
    return Violation{"solver.damping", "must lie in (0, 1]"};
  }
  if (c.alpha_hint && !(*c.alpha_hint > 0.0)) return Violation{"solver.alpha_hint", "must be positive"};
  if (c.method == "newton" && !(c.beta > 0.0)) return Violation{"solver.method", "newton needs beta > 0"};
  for (std::size_t i = 0; i < c.betas.size(); ++i) {
    if (!(c.betas[i] > 0.0) || (i > 0 && !(c.betas[i] > c.betas[i - 1]))) {
      return Violation{"sweep.betas", "must be positive and strictly increasing"};
    }
  }
  if (c.measure.kind == "klt") {
    if (c.poles.empty()) return Violation{"measure.poles", "klt measures need at least one pole"};
    for (const auto& p : c.poles) {
      if (!(p.exponent < 1.0)) return Violation{"measure.poles", "pole exponents must be < 1 (klt)"};
    }
    for (std::size_t a = 0; a < c.poles.size(); ++a)
      for (std::size_t b = a + 1; b < c.poles.size(); ++b)
        if (torus_distance(c.poles[a].center, c.poles[b].center) < 1e-12) {
          return Violation{"measure.poles", "pole centers must be distinct"};
        }
  }
  return std::nullopt;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source,
                       const std::filesystem::path& base_dir) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(source, line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line_no, "missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (entries.count(full)) {
      throw ConfigError(source, line_no,
                        "duplicate key '" + full + "' (first set on line " +
                            std::to_string(entries[full].line) + ")");
    }
    entries[full] = {value, line_no};
  }

  Reader r(source, std::move(entries));
  RunConfig c;
  c.source = source;
  const long long seed = r.integer("seed", 1);
  if (seed < 0) r.fail(r.find("seed")->line, "seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.n_side = static_cast<int>(std::clamp<long long>(r.integer("grid.n_side", c.n_side), -1, 1LL << 30));
  if (const Entry* e = r.find("form.kind")) c.form = parse_density(r, *e, "form.kind", base_dir, true, false);
  if (const Entry* e = r.find("measure.kind")) {
    c.measure = parse_density(r, *e, "measure.kind", base_dir, false, true);
  }
  if (const Entry* e = r.find("measure.poles")) {
    c.poles = parse_poles(r, *e);
    if (c.measure.kind != "klt") r.fail(e->line, "measure.poles requires measure.kind = klt");
  }

  c.beta = r.real("solver.beta", c.beta);
  c.tol_residual = r.real("solver.tol_residual", c.tol_residual);
  c.tol_gap = r.real("solver.tol_gap", c.tol_gap);
  c.max_iter = static_cast<int>(std::clamp<long long>(r.integer("solver.max_iter", c.max_iter), -1, 1LL << 30));
  c.damping = r.optional_real("solver.damping");
  if (const Entry* e = r.find("solver.method")) {
    c.method = e->value;
    if (c.method != "auto" && c.method != "fixed_point" && c.method != "newton") {
      r.fail(e->line, "solver.method must be auto, fixed_point or newton");
    }
  }
  c.override_coercivity = r.boolean("solver.override_coercivity", c.override_coercivity);
  c.alpha_hint = r.optional_real("solver.alpha_hint");

  c.betas = r.real_list("sweep.betas", c.betas);

  if (const Entry* e = r.find("output.dir")) {
    if (e->value.empty()) r.fail(e->line, "output.dir is empty");
    c.out_dir = e->value;
    if (c.out_dir.is_relative()) c.out_dir = base_dir / c.out_dir;
  }
  c.heatmaps = r.boolean("output.heatmaps", c.heatmaps);
  c.timing = r.boolean("output.timing", c.timing);
  r.reject_unused();

  if (auto v = find_violation(c)) {
    const Entry* e = r.find(v->key);
    r.fail(e ? e->line : 0, v->key + ": " + v->message);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  return parse_config(in, path.string(), path.parent_path());
}

void validate(const RunConfig& c) {
  if (auto v = find_violation(c)) throw ConfigError(c.source, 0, v->key + ": " + v->message);
}

BackgroundForm make_form(const RunConfig& c) {
  const Grid grid(c.n_side);
  if (c.form.kind == "lebesgue") return BackgroundForm::lebesgue(grid);
  if (c.form.kind == "cosine") return BackgroundForm::cosine(grid, c.form.amplitude);
  ScalarField rho = read_density_file(c.form.path, grid, c.form.line, c.source);
  const double mass = integral(rho);
  if (std::abs(mass - 1.0) > 1e-6) {
    throw ConfigError(c.source, c.form.line,
                      "form.kind: form density must integrate to 1, got " + std::to_string(mass));
  }
  rho *= 1.0 / mass;
  return BackgroundForm::from_density(std::move(rho));
}

Measure make_measure(const RunConfig& c) {
  const Grid grid(c.n_side);
  if (c.measure.kind == "lebesgue") return Measure::lebesgue(grid);
  if (c.measure.kind == "klt") return klt_measure(grid, c.poles);
  ScalarField d = read_density_file(c.measure.path, grid, c.measure.line, c.source);
  if (d.min() < 0.0) throw ConfigError(c.source, c.measure.line, "measure.kind: negative density");
  if (!(integral(d) > 0.0)) throw ConfigError(c.source, c.measure.line, "measure.kind: zero mass");
  return Measure::from_density(std::move(d));
}

}  // namespace mfe::cli
