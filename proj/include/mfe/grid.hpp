#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mfe/errors.hpp"

namespace mfe {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Periodic node grid on the unit torus [0,1)^2. Node (i, j) sits at (i/n, j/n);
/// storage is row-major starting from the y = 0 row.
class Grid {
 public:
  explicit Grid(int n_side) : n_(n_side) {
    if (n_side < 4 || n_side % 2 != 0) {
      throw InvalidArgument("grid n_side must be even and >= 4, got " + std::to_string(n_side));
    }
  }

  int n_side() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  double spacing() const { return 1.0 / n_; }
  double cell_area() const { return 1.0 / (static_cast<double>(n_) * n_); }

  std::size_t index(int i, int j) const {
    i %= n_;
    j %= n_;
    if (i < 0) i += n_;
    if (j < 0) j += n_;
    return static_cast<std::size_t>(j) * n_ + i;
  }
  int ix(std::size_t k) const { return static_cast<int>(k % n_); }
  int iy(std::size_t k) const { return static_cast<int>(k / n_); }
  Point node(std::size_t k) const { return {ix(k) * spacing(), iy(k) * spacing()}; }

  friend bool operator==(const Grid& a, const Grid& b) { return a.n_ == b.n_; }

 private:
  int n_;
};

/// Wrap a coordinate difference into [-1/2, 1/2).
inline double wrap_delta(double d) { return d - std::floor(d + 0.5); }

/// Wrap a coordinate into [0, 1).
inline double wrap_unit(double x) {
  double w = x - std::floor(x);
  return w >= 1.0 ? 0.0 : w;
}

inline double torus_distance(Point a, Point b) {
  return std::hypot(wrap_delta(a.x - b.x), wrap_delta(a.y - b.y));
}

/// Real values on the nodes of a Grid.
class ScalarField {
 public:
  explicit ScalarField(Grid grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}
  ScalarField(Grid grid, std::vector<double> values);

  template <class F>
  static ScalarField sample(Grid grid, F&& f) {
    ScalarField out(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      Point p = grid.node(k);
      out.values_[k] = f(p.x, p.y);
    }
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& at(int i, int j) { return values_[grid_.index(i, j)]; }
  double at(int i, int j) const { return values_[grid_.index(i, j)]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double min() const;
  double max() const;
  /// Node average; equals the trapezoid integral over the unit torus.
  double mean() const;
  bool all_finite() const;

  /// Bilinear interpolation of the periodic node values.
  double interpolate(Point p) const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double c);
  ScalarField& operator-=(double c) { return *this += -c; }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator+(ScalarField a, double c) { return a += c; }
  friend ScalarField operator-(ScalarField a, double c) { return a += -c; }

 private:
  void check_same_grid(const ScalarField& o) const;

  Grid grid_;
  std::vector<double> values_;
};

/// Trapezoid integral against the flat area element: sum f * cell_area.
double integral(const ScalarField& f);
/// Trapezoid integral of the product f * g.
double integral(const ScalarField& f, const ScalarField& g);
double max_abs(const ScalarField& f);
/// Sum |f| * cell_area.
double l1_norm(const ScalarField& f);

}  // namespace mfe
