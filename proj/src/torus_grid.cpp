#include "mfe/torus_grid.hpp"

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace mfe {

namespace {

constexpr double kPi = std::numbers::pi;

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter>;

template <class T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
  return FftwBuffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * n)));
}

struct Plans {
  fftw_plan forward;
  fftw_plan backward;
};

// FFTW planning is not thread-safe; execution with the new-array interface is.
const Plans& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const std::size_t real_size = static_cast<std::size_t>(n) * n;
  const std::size_t complex_size = static_cast<std::size_t>(n) * (n / 2 + 1);
  auto in = fftw_alloc<double>(real_size);
  auto out = fftw_alloc<fftw_complex>(complex_size);
  Plans p;
  p.forward = fftw_plan_dft_r2c_2d(n, n, in.get(), out.get(), FFTW_ESTIMATE);
  p.backward = fftw_plan_dft_c2r_2d(n, n, out.get(), in.get(), FFTW_ESTIMATE);
  return cache.emplace(n, p).first->second;
}

// Apply a diagonal multiplier in the Fourier basis of the stencil. The multiplier receives
// the discrete Laplacian eigenvalue of each mode; mode (0,0) is passed as 0.
template <class Multiplier>
ScalarField spectral_apply(const ScalarField& f, Multiplier&& multiplier) {
  const int n = f.grid().n_side();
  const std::size_t real_size = f.size();
  const int half = n / 2 + 1;
  const Plans& plans = plans_for(n);
  auto in = fftw_alloc<double>(real_size);
  auto out = fftw_alloc<fftw_complex>(static_cast<std::size_t>(n) * half);
  std::copy(f.values().begin(), f.values().end(), in.get());
  fftw_execute_dft_r2c(plans.forward, in.get(), out.get());
  // FFTW row-major with first dimension y: out[j * half + i], i = x mode, j = y mode.
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < half; ++i) {
      const double lambda = laplacian_eigenvalue(n, i, j);
      const double m = multiplier(i, j, lambda) / static_cast<double>(real_size);
      fftw_complex& c = out[static_cast<std::size_t>(j) * half + i];
      c[0] *= m;
      c[1] *= m;
    }
  }
  fftw_execute_dft_c2r(plans.backward, out.get(), in.get());
  ScalarField u(f.grid());
  std::copy(in.get(), in.get() + real_size, u.values().begin());
  return u;
}

struct ThetaConstants {
  double nome_sq;    // q^2 = exp(-2 pi)
  double mean_shift; // K: makes the torus average of the Green function vanish
  double offset;     // c0
};

const ThetaConstants& theta_constants() {
  static const ThetaConstants c = [] {
    const double q = std::exp(-kPi);
    double log_prod = 0.0;
    double prod = 1.0;
    for (int n = 1; n < 40; ++n) {
      const double qn = std::pow(q, 2 * n);
      log_prod += std::log1p(-qn);
      prod *= (1 - qn) * (1 - qn) * (1 - qn);
    }
    const double theta_prime0 = 2 * std::pow(q, 0.25) * prod;
    ThetaConstants t;
    t.nome_sq = q * q;
    t.mean_shift = kPi / 6 - 2 * log_prod;
    t.offset = 2 * std::log(kPi * theta_prime0) + t.mean_shift;
    return t;
  }();
  return c;
}

}  // namespace

BackgroundForm BackgroundForm::lebesgue(Grid grid) { return {ScalarField(grid, 1.0), 1.0}; }

BackgroundForm BackgroundForm::cosine(Grid grid, double amplitude) {
  auto rho = ScalarField::sample(grid, [&](double x, double) {
    return 1.0 + amplitude * std::cos(2 * kPi * x);
  });
  return from_density(std::move(rho));
}

BackgroundForm BackgroundForm::from_density(ScalarField rho) {
  if (!rho.all_finite()) throw InvalidArgument("background form density is not finite");
  const double mass = integral(rho);
  if (std::abs(mass - 1.0) > 1e-12) {
    throw InvalidArgument("background form must have total mass 1, got " + std::to_string(mass));
  }
  return {std::move(rho), 1.0};
}

double laplacian_eigenvalue(int n_side, int k, int l) {
  const double n2 = static_cast<double>(n_side) * n_side;
  return -n2 * (4.0 - 2.0 * std::cos(2 * kPi * k / n_side) - 2.0 * std::cos(2 * kPi * l / n_side));
}

ScalarField laplacian(const ScalarField& u) {
  const Grid& g = u.grid();
  const int n = g.n_side();
  const double n2 = static_cast<double>(n) * n;
  ScalarField out(g);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      out.at(i, j) =
          n2 * (u.at(i + 1, j) + u.at(i - 1, j) + u.at(i, j + 1) + u.at(i, j - 1) - 4 * u.at(i, j));
    }
  }
  return out;
}

ScalarField poisson_solve(const ScalarField& f, double tol_mean) {
  const double m = f.mean();
  const double scale = std::max(1.0, max_abs(f));
  if (std::abs(m) > tol_mean * scale) throw NonZeroMeanRHS(m);
  return spectral_apply(f, [](int i, int j, double lambda) {
    return (i == 0 && j == 0) ? 0.0 : 1.0 / lambda;
  });
}

ScalarField shifted_poisson_solve(const ScalarField& f, double shift) {
  return spectral_apply(f, [shift](int i, int j, double lambda) {
    return (i == 0 && j == 0) ? 0.0 : 1.0 / (-lambda / (4 * kPi) + shift);
  });
}

double dirichlet(const ScalarField& u, const ScalarField& v) {
  return -integral(u, laplacian(v)) / (4 * kPi);
}

ScalarField hat_dirac(Grid grid, Point x0) {
  const int n = grid.n_side();
  const double gx = wrap_unit(x0.x) * n;
  const double gy = wrap_unit(x0.y) * n;
  const int i = static_cast<int>(std::floor(gx));
  const int j = static_cast<int>(std::floor(gy));
  const double tx = gx - i;
  const double ty = gy - j;
  ScalarField d(grid);
  const double inv_area = 1.0 / grid.cell_area();
  d.at(i, j) += (1 - tx) * (1 - ty) * inv_area;
  d.at(i + 1, j) += tx * (1 - ty) * inv_area;
  d.at(i, j + 1) += (1 - tx) * ty * inv_area;
  d.at(i + 1, j + 1) += tx * ty * inv_area;
  return d;
}

double torus_green(double dx, double dy) {
  const ThetaConstants& c = theta_constants();
  dx = wrap_delta(dx);
  dy = wrap_delta(dy);
  const std::complex<double> z(kPi * dx, kPi * dy);
  // theta_1(z) = 2 sum_n (-1)^n q^{(n+1/2)^2} sin((2n+1) z), q = exp(-pi), written as
  // sin(z) * sum_n a_n U_{2n}(cos z) with Chebyshev U so tiny |z| keeps full precision.
  static const std::array<double, 5> coeff = [] {
    std::array<double, 5> a{};
    for (int n = 0; n < 5; ++n) {
      const double h = n + 0.5;
      a[n] = 2 * std::exp(-kPi * h * h) * (n % 2 == 0 ? 1.0 : -1.0);
    }
    return a;
  }();
  const std::complex<double> cz = std::cos(z);
  std::complex<double> u_prev = 1.0, u_cur = 2.0 * cz;  // U_0, U_1
  std::complex<double> series = coeff[0];
  for (int n = 1; n < 5; ++n) {
    const std::complex<double> u_next = 2.0 * cz * u_cur - u_prev;       // U_{2n}
    const std::complex<double> u_after = 2.0 * cz * u_next - u_cur;     // U_{2n+1}
    series += coeff[n] * u_next;
    u_prev = u_next;
    u_cur = u_after;
  }
  const std::complex<double> theta = std::sin(z) * series;
  return 2 * std::log(std::abs(theta)) - 2 * kPi * dy * dy + c.mean_shift;
}

double torus_green(Point x, Point pole) { return torus_green(x.x - pole.x, x.y - pole.y); }

double torus_green_offset() { return theta_constants().offset; }

double log_dist2(Point x, Point pole) { return torus_green(x, pole) - theta_constants().offset; }

double log_dist2(Point anchor, Point offset, Point pole) {
  return torus_green(wrap_delta(anchor.x - pole.x) + offset.x,
                     wrap_delta(anchor.y - pole.y) + offset.y) -
         theta_constants().offset;
}

ScalarField green_function(Point x0, const BackgroundForm& omega) {
  ScalarField rhs = hat_dirac(omega.grid(), x0);
  rhs -= omega.rho;
  rhs *= 4 * kPi;
  ScalarField g = poisson_solve(rhs);
  g -= integral(g, omega.rho);
  return g;
}

}  // namespace mfe
