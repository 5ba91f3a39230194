#include "mfe/grid.hpp"

#include <algorithm>
#include <numeric>

namespace mfe {

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw InvalidArgument("field has " + std::to_string(values_.size()) + " values, grid needs " +
                          std::to_string(grid_.size()));
  }
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(size());
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::interpolate(Point p) const {
  const int n = grid_.n_side();
  const double gx = wrap_unit(p.x) * n;
  const double gy = wrap_unit(p.y) * n;
  const int i = static_cast<int>(std::floor(gx));
  const int j = static_cast<int>(std::floor(gy));
  const double tx = gx - i;
  const double ty = gy - j;
  return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) +
         (1 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
}

void ScalarField::check_same_grid(const ScalarField& o) const {
  if (!(grid_ == o.grid_)) throw InvalidArgument("fields live on different grids");
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  check_same_grid(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  check_same_grid(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator+=(double c) {
  for (double& v : values_) v += c;
  return *this;
}

double integral(const ScalarField& f) {
  return std::accumulate(f.values().begin(), f.values().end(), 0.0) * f.grid().cell_area();
}

double integral(const ScalarField& f, const ScalarField& g) {
  if (!(f.grid() == g.grid())) throw InvalidArgument("fields live on different grids");
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * g[k];
  return s * f.grid().cell_area();
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double l1_norm(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += std::abs(v);
  return s * f.grid().cell_area();
}

}  // namespace mfe
