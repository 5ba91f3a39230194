#include "mfe/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

namespace mfe::quad {

namespace {

constexpr double kPi = std::numbers::pi;

GaussLegendre make_rule(int n) {
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1 - x * x) * dp * dp);
  }
  return rule;
}

struct Rect {
  double x0, x1, y0, y1;
};

double rect_distance(const Rect& r, Point q) {
  const double dx = std::max({r.x0 - q.x, 0.0, q.x - r.x1});
  const double dy = std::max({r.y0 - q.y, 0.0, q.y - r.y1});
  return std::hypot(dx, dy);
}

// Accumulates quadrature samples of one cell into the hats of its four corners.
class CellAccumulator {
 public:
  CellAccumulator(const Rect& cell, double h, std::array<std::size_t, 4> corners,
                  const Weight& weight, std::vector<double>& out)
      : cell_(cell), h_(h), corners_(corners), weight_(weight), out_(out) {}

  // Returns the four hat-weighted contributions of one sample.
  // The sample sits at anchor + offset; the weight sees both so that points within
  // rounding distance of a singular anchor keep their exact offset.
  std::array<double, 4> sample(Point anchor, Point offset, double w) const {
    const double val = weight_(anchor, offset) * w;
    const Point p{anchor.x + offset.x, anchor.y + offset.y};
    const double tx = (p.x - cell_.x0) / h_;
    const double ty = (p.y - cell_.y0) / h_;
    return {(1 - tx) * (1 - ty) * val, tx * (1 - ty) * val, (1 - tx) * ty * val, tx * ty * val};
  }

  void add(const std::array<double, 4>& c) {
    for (int i = 0; i < 4; ++i) out_[corners_[i]] += c[i];
  }

  const std::array<std::size_t, 4>& corners() const { return corners_; }

 private:
  Rect cell_;
  double h_;
  std::array<std::size_t, 4> corners_;
  const Weight& weight_;
  std::vector<double>& out_;
};

struct TraceSlot {
  LevelTrace* trace;
  std::array<std::size_t, 4> slot;  // position of each cell corner in trace->nodes
};

std::size_t slot_for(LevelTrace& trace, std::size_t node, int levels) {
  for (std::size_t i = 0; i < trace.nodes.size(); ++i) {
    if (trace.nodes[i] == node) return i;
  }
  trace.nodes.push_back(node);
  trace.levels.emplace_back(levels, 0.0);
  return trace.nodes.size() - 1;
}

void integrate_tensor(CellAccumulator& acc, const Rect& r, int order) {
  const GaussLegendre& rule = gauss_legendre(order);
  const double hx = 0.5 * (r.x1 - r.x0), hy = 0.5 * (r.y1 - r.y0);
  const double cx = 0.5 * (r.x0 + r.x1), cy = 0.5 * (r.y0 + r.y1);
  for (int a = 0; a < order; ++a) {
    for (int b = 0; b < order; ++b) {
      Point p{cx + hx * rule.nodes[a], cy + hy * rule.nodes[b]};
      acc.add(acc.sample(p, {0.0, 0.0}, hx * hy * rule.weights[a] * rule.weights[b]));
    }
  }
}

// Polar integration of a sub-rectangle that has q as one of its corners. The radial
// direction is cut into dyadic annuli down to the singular point.
void integrate_corner(CellAccumulator& acc, const Rect& r, Point q, const HatOptions& opt,
                      TraceSlot* trace) {
  const bool left = q.x == r.x0;
  const bool bottom = q.y == r.y0;
  const double sx = left ? 1.0 : -1.0, sy = bottom ? 1.0 : -1.0;
  const double a = r.x1 - r.x0, b = r.y1 - r.y0;
  if (a <= 0 || b <= 0) return;
  const double split = std::atan2(b, a);
  const GaussLegendre& ang = gauss_legendre(opt.polar_angular);
  const GaussLegendre& rad = gauss_legendre(opt.polar_radial);
  const std::array<std::array<double, 2>, 2> pieces{{{0.0, split}, {split, 0.5 * kPi}}};
  for (int piece = 0; piece < 2; ++piece) {
    const double lo = pieces[piece][0], hi = pieces[piece][1];
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (int ia = 0; ia < opt.polar_angular; ++ia) {
      const double phi = mid + half * ang.nodes[ia];
      const double wphi = half * ang.weights[ia];
      const double c = std::cos(phi), s = std::sin(phi);
      const double reach = piece == 0 ? a / c : b / s;
      const Point dir{sx * c, sy * s};
      double outer = reach;
      for (int k = 0; k < opt.levels; ++k) {
        const double inner = 0.5 * outer;
        const double rh = 0.5 * (outer - inner), rm = 0.5 * (outer + inner);
        std::array<double, 4> level{};
        for (int ir = 0; ir < opt.polar_radial; ++ir) {
          const double rr = rm + rh * rad.nodes[ir];
          const auto cont =
              acc.sample(q, {rr * dir.x, rr * dir.y}, rr * rh * rad.weights[ir] * wphi);
          for (int i = 0; i < 4; ++i) level[i] += cont[i];
        }
        acc.add(level);
        if (trace) {
          for (int i = 0; i < 4; ++i) trace->trace->levels[trace->slot[i]][k] += level[i];
        }
        outer = inner;
      }
    }
  }
}

// Polar integration of a rectangle seen from an exterior point q.
void integrate_exterior(CellAccumulator& acc, const Rect& r, Point q, const HatOptions& opt) {
  const double cx = 0.5 * (r.x0 + r.x1), cy = 0.5 * (r.y0 + r.y1);
  const double ref = std::atan2(cy - q.y, cx - q.x);
  std::array<double, 4> angles{};
  const std::array<Point, 4> corners{{{r.x0, r.y0}, {r.x1, r.y0}, {r.x0, r.y1}, {r.x1, r.y1}}};
  for (int i = 0; i < 4; ++i) {
    double t = std::atan2(corners[i].y - q.y, corners[i].x - q.x);
    while (t - ref > kPi) t -= 2 * kPi;
    while (t - ref <= -kPi) t += 2 * kPi;
    angles[i] = t;
  }
  std::sort(angles.begin(), angles.end());
  const GaussLegendre& ang = gauss_legendre(opt.polar_angular);
  const GaussLegendre& rad = gauss_legendre(opt.polar_radial);
  for (int piece = 0; piece < 3; ++piece) {
    const double lo = angles[piece], hi = angles[piece + 1];
    if (hi - lo < 1e-15) continue;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (int ia = 0; ia < opt.polar_angular; ++ia) {
      const double phi = mid + half * ang.nodes[ia];
      const double wphi = half * ang.weights[ia];
      const double dx = std::cos(phi), dy = std::sin(phi);
      double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
      auto slab = [&](double origin, double d, double lo_edge, double hi_edge) {
        if (std::abs(d) < 1e-300) {
          if (origin < lo_edge || origin > hi_edge) t1 = -1.0;
          return;
        }
        const double ta = (lo_edge - origin) / d, tb = (hi_edge - origin) / d;
        t0 = std::max(t0, std::min(ta, tb));
        t1 = std::min(t1, std::max(ta, tb));
      };
      slab(q.x, dx, r.x0, r.x1);
      slab(q.y, dy, r.y0, r.y1);
      if (!(t1 > t0)) continue;
      double start = t0;
      while (start < t1) {
        const double stop = (start > 0.0 && 2.0 * start < t1) ? 2.0 * start : t1;
        const double rh = 0.5 * (stop - start), rm = 0.5 * (stop + start);
        for (int ir = 0; ir < opt.polar_radial; ++ir) {
          const double rr = rm + rh * rad.nodes[ir];
          acc.add(acc.sample(q, {rr * dx, rr * dy}, rr * rh * rad.weights[ir] * wphi));
        }
        start = stop;
      }
    }
  }
}

void integrate_polar(CellAccumulator& acc, const Rect& cell, Point q, const HatOptions& opt,
                     TraceSlot* trace) {
  const double eps = 1e-12 * (cell.x1 - cell.x0);
  if (std::abs(q.x - cell.x0) <= eps) q.x = cell.x0;
  if (std::abs(q.x - cell.x1) <= eps) q.x = cell.x1;
  if (std::abs(q.y - cell.y0) <= eps) q.y = cell.y0;
  if (std::abs(q.y - cell.y1) <= eps) q.y = cell.y1;
  std::vector<double> xs{cell.x0}, ys{cell.y0};
  if (q.x > cell.x0 && q.x < cell.x1) xs.push_back(q.x);
  if (q.y > cell.y0 && q.y < cell.y1) ys.push_back(q.y);
  xs.push_back(cell.x1);
  ys.push_back(cell.y1);
  for (std::size_t a = 0; a + 1 < xs.size(); ++a) {
    for (std::size_t b = 0; b + 1 < ys.size(); ++b) {
      const Rect sub{xs[a], xs[a + 1], ys[b], ys[b + 1]};
      const bool corner_x = q.x == sub.x0 || q.x == sub.x1;
      const bool corner_y = q.y == sub.y0 || q.y == sub.y1;
      if (corner_x && corner_y) {
        integrate_corner(acc, sub, q, opt, trace);
      } else {
        integrate_exterior(acc, sub, q, opt);
      }
    }
  }
}

}  // namespace

const GaussLegendre& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, GaussLegendre> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
  return it->second;
}

HatMoments hat_moments(const Grid& grid, std::span<const Point> singular, const Weight& weight,
                       const HatOptions& options) {
  const int n = grid.n_side();
  const double h = grid.spacing();
  HatMoments result;
  result.weights.assign(grid.size(), 0.0);
  result.traces.resize(singular.size());
  for (std::size_t s = 0; s < singular.size(); ++s) result.traces[s].point = singular[s];

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Rect cell{i * h, (i + 1) * h, j * h, (j + 1) * h};
      const std::array<std::size_t, 4> corners{grid.index(i, j), grid.index(i + 1, j),
                                               grid.index(i, j + 1), grid.index(i + 1, j + 1)};
      CellAccumulator acc(cell, h, corners, weight, result.weights);
      const double cx = (i + 0.5) * h, cy = (j + 0.5) * h;

      double best = std::numeric_limits<double>::infinity();
      std::size_t nearest = 0;
      Point image{};
      for (std::size_t s = 0; s < singular.size(); ++s) {
        const Point q{singular[s].x + std::round(cx - singular[s].x),
                      singular[s].y + std::round(cy - singular[s].y)};
        const double d = rect_distance(cell, q);
        if (d < best) {
          best = d;
          nearest = s;
          image = q;
        }
      }

      if (singular.empty()) {
        integrate_tensor(acc, cell, 3);
      } else if (best < options.near_cells * h) {
        const bool touches = best <= 1e-12 * h;
        TraceSlot slot{};
        if (touches) {
          slot.trace = &result.traces[nearest];
          for (int c = 0; c < 4; ++c) {
            slot.slot[c] = slot_for(*slot.trace, corners[c], options.levels);
          }
        }
        integrate_polar(acc, cell, image, options, touches ? &slot : nullptr);
      } else if (best < 4 * h) {
        integrate_tensor(acc, cell, 8);
      } else if (best < 8 * h) {
        integrate_tensor(acc, cell, 6);
      } else if (best < 16 * h) {
        integrate_tensor(acc, cell, 4);
      } else {
        integrate_tensor(acc, cell, 3);
      }
    }
  }
  return result;
}

TailEstimate estimate_tail(const LevelTrace& trace, std::span<const double> node_factor) {
  TailEstimate est;
  if (trace.levels.empty()) return est;
  const std::size_t levels = trace.levels.front().size();
  est.annuli.assign(levels, 0.0);
  for (std::size_t i = 0; i < trace.nodes.size(); ++i) {
    const double f = node_factor[trace.nodes[i]];
    for (std::size_t k = 0; k < levels; ++k) est.annuli[k] += f * trace.levels[i][k];
  }
  if (levels < 3) return est;
  const double a1 = est.annuli[levels - 1], a2 = est.annuli[levels - 2],
               a3 = est.annuli[levels - 3];
  if (a1 == 0.0 || a2 == 0.0) {
    est.ratio = 0.0;
    return est;
  }
  est.ratio = a1 / a2;
  est.ratio_drift = a3 != 0.0 ? std::abs(est.ratio - a2 / a3) : 1.0;
  if (est.ratio >= 1.0 - 1e-9) {
    est.summable = false;
    est.tail = std::numeric_limits<double>::infinity();
  } else {
    est.tail = a1 * est.ratio / (1.0 - est.ratio);
  }
  return est;
}

double disk_integral(Point center, double radius, const Weight& f, int angular, int levels) {
  const GaussLegendre& rad = gauss_legendre(8);
  std::vector<double> dirs_x(angular), dirs_y(angular);
  for (int a = 0; a < angular; ++a) {
    const double t = 2 * kPi * a / angular;
    dirs_x[a] = std::cos(t);
    dirs_y[a] = std::sin(t);
  }
  const double wtheta = 2 * kPi / angular;
  double total = 0.0, prev = 0.0, prev_ratio = 0.0;
  double outer = radius;
  for (int k = 0; k < levels; ++k) {
    const double inner = 0.5 * outer;
    const double rh = 0.5 * (outer - inner), rm = 0.5 * (outer + inner);
    double level = 0.0;
    for (int ir = 0; ir < 8; ++ir) {
      const double rr = rm + rh * rad.nodes[ir];
      double ring = 0.0;
      for (int a = 0; a < angular; ++a) {
        ring += f(center, {rr * dirs_x[a], rr * dirs_y[a]});
      }
      level += ring * wtheta * rr * rh * rad.weights[ir];
    }
    total += level;
    if (k >= 2 && prev != 0.0) {
      const double ratio = level / prev;
      const bool settled = std::abs(ratio - prev_ratio) < 1e-10 || std::abs(level) < 1e-16 * std::abs(total);
      if (settled && ratio < 1.0 && ratio >= 0.0) {
        return total + level * ratio / (1.0 - ratio);
      }
      prev_ratio = ratio;
    } else if (prev != 0.0) {
      prev_ratio = level / prev;
    }
    prev = level;
    outer = inner;
  }
  if (prev_ratio >= 1.0) return std::numeric_limits<double>::infinity();
  return total + prev * prev_ratio / (1.0 - prev_ratio);
}

}  // namespace mfe::quad
