#pragma once

// Spectral grid for the periodic box (0, 2*pi)^2 and the half-complex
// Fourier representation of real, zero-mean scalar fields.
//
// Layout: physical values are row-major with y outer, x inner
// (value(iy, ix) at x = 2*pi*ix/n, y = 2*pi*iy/n).  Spectral coefficients
// use the real-to-complex layout: row iy holds ky, column ix holds
// kx = 0 .. n/2.  Negative kx are implied by conjugate symmetry.
// Coefficients are true Fourier-series coefficients (forward DFT / n^2).

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <new>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace etdsav {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double box_area = two_pi * two_pi;

using complex = std::complex<double>;

/// Allocator backed by fftw_malloc so every buffer satisfies FFTW's SIMD
/// alignment and can be passed to the new-array execute interface.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() noexcept = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}

  T* allocate(std::size_t count) {
    void* p = fftw_malloc(count * sizeof(T));
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept {
    return true;
  }
};

using RealArray = std::vector<double, FftwAllocator<double>>;
using CoeffArray = std::vector<complex, FftwAllocator<complex>>;

namespace detail {
// The FFTW planner is not thread-safe; execution is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

class SpectralGrid {
 public:
  explicit SpectralGrid(int n) : n_(n) {
    if (n < 8 || n % 2 != 0) {
      throw std::invalid_argument("SpectralGrid: n must be even and >= 8, got " +
                                  std::to_string(n));
    }
    nk_ = n / 2 + 1;
    const std::size_t ns = spectral_size();
    k2_.resize(ns);
    dkx_.resize(ns);
    dky_.resize(ns);
    mask_.resize(ns);
    weight_.resize(ns);
    for (int iy = 0; iy < n_; ++iy) {
      for (int ix = 0; ix < nk_; ++ix) {
        const std::size_t i = index(iy, ix);
        const int kx = kx_of(ix);
        const int ky = ky_of(iy);
        k2_[i] = static_cast<double>(kx * kx + ky * ky);
        // Derivatives of the Nyquist modes are zeroed so real fields stay real.
        dkx_[i] = (ix == n_ / 2) ? 0.0 : static_cast<double>(kx);
        dky_[i] = (iy == n_ / 2) ? 0.0 : static_cast<double>(ky);
        mask_[i] = (3 * std::abs(kx) < n_) && (3 * std::abs(ky) < n_);
        weight_[i] = (ix == 0 || ix == n_ / 2) ? 1.0 : 2.0;
      }
    }

    RealArray phys(physical_size());
    CoeffArray spec(ns);
    std::lock_guard<std::mutex> lock(detail::planner_mutex());
    // FFTW_ESTIMATE keeps plans (and hence results) identical run to run.
    forward_ = fftw_plan_dft_r2c_2d(n_, n_, phys.data(),
                                    reinterpret_cast<fftw_complex*>(spec.data()),
                                    FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_2d(n_, n_, reinterpret_cast<fftw_complex*>(spec.data()),
                                    phys.data(), FFTW_ESTIMATE);
    if (forward_ == nullptr || inverse_ == nullptr) {
      throw std::runtime_error("SpectralGrid: FFTW planning failed");
    }
  }

  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  ~SpectralGrid() {
    std::lock_guard<std::mutex> lock(detail::planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  int n() const noexcept { return n_; }
  int nk() const noexcept { return nk_; }
  double length() const noexcept { return two_pi; }
  std::size_t spectral_size() const noexcept { return static_cast<std::size_t>(n_) * nk_; }
  std::size_t physical_size() const noexcept { return static_cast<std::size_t>(n_) * n_; }
  std::size_t index(int iy, int ix) const noexcept {
    return static_cast<std::size_t>(iy) * nk_ + ix;
  }

  /// Signed wavenumbers in {-n/2, ..., n/2 - 1}; the stored kx column n/2 is
  /// the Nyquist mode -n/2.
  int kx_of(int ix) const noexcept { return ix == n_ / 2 ? -n_ / 2 : ix; }
  int ky_of(int iy) const noexcept { return iy < n_ / 2 ? iy : iy - n_; }
  /// Row holding wavenumber ky (any integer, reduced mod n).
  int row_of(int ky) const noexcept { return ((ky % n_) + n_) % n_; }

  double x(int ix) const noexcept { return two_pi * ix / n_; }
  double y(int iy) const noexcept { return two_pi * iy / n_; }

  std::span<const double> k2() const noexcept { return k2_; }
  std::span<const double> dkx() const noexcept { return dkx_; }
  std::span<const double> dky() const noexcept { return dky_; }
  const std::vector<bool>& dealias_mask() const noexcept { return mask_; }
  /// Multiplicity of each stored mode in the full spectrum (1 or 2).
  std::span<const double> parseval_weight() const noexcept { return weight_; }

  /// Spectral -> physical.  `spec` is left untouched.
  void to_physical(std::span<const complex> spec, std::span<double> phys) const {
    check_sizes(spec.size(), phys.size());
    CoeffArray scratch(spec.begin(), spec.end());
    RealArray out(physical_size());
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
    std::copy(out.begin(), out.end(), phys.begin());
  }

  /// Physical -> spectral, normalized by 1/n^2.
  void to_spectral(std::span<const double> phys, std::span<complex> spec) const {
    check_sizes(spec.size(), phys.size());
    RealArray in(phys.begin(), phys.end());
    CoeffArray out(spectral_size());
    fftw_execute_dft_r2c(forward_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / static_cast<double>(physical_size());
    for (std::size_t i = 0; i < out.size(); ++i) spec[i] = out[i] * scale;
  }

  /// Raw variants on FFTW-aligned buffers.  to_physical_destructive
  /// overwrites `spec`; to_spectral_unscaled skips the 1/n^2 factor.
  void to_physical_destructive(CoeffArray& spec, RealArray& phys) const {
    check_sizes(spec.size(), phys.size());
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(spec.data()), phys.data());
  }
  void to_spectral_unscaled(RealArray& phys, CoeffArray& spec) const {
    check_sizes(spec.size(), phys.size());
    fftw_execute_dft_r2c(forward_, phys.data(), reinterpret_cast<fftw_complex*>(spec.data()));
  }

 private:
  void check_sizes(std::size_t ns, std::size_t np) const {
    if (ns != spectral_size() || np != physical_size()) {
      throw std::invalid_argument("SpectralGrid: buffer size mismatch");
    }
  }

  int n_;
  int nk_;
  std::vector<double> k2_, dkx_, dky_, weight_;
  std::vector<bool> mask_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

inline GridPtr make_grid(int n) { return std::make_shared<const SpectralGrid>(n); }

/// Spectral coefficients of a real, zero-mean scalar field.
class ScalarFieldHat {
 public:
  ScalarFieldHat() = default;
  explicit ScalarFieldHat(GridPtr grid)
      : grid_(std::move(grid)), coeffs_(grid_ ? grid_->spectral_size() : 0) {}

  static ScalarFieldHat zeros(GridPtr grid) { return ScalarFieldHat(std::move(grid)); }

  /// Forward transform of physical samples; the mean mode is dropped.
  static ScalarFieldHat from_physical(GridPtr grid, std::span<const double> values) {
    ScalarFieldHat f(grid);
    grid->to_spectral(values, f.coeffs_);
    f.coeffs_[0] = 0.0;
    return f;
  }

  /// Samples `fn(x, y)` on the grid and transforms it.
  template <class Fn>
  static ScalarFieldHat from_function(GridPtr grid, Fn&& fn) {
    std::vector<double> values(grid->physical_size());
    const int n = grid->n();
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        values[static_cast<std::size_t>(iy) * n + ix] = fn(grid->x(ix), grid->y(iy));
      }
    }
    return from_physical(std::move(grid), values);
  }

  std::vector<double> to_physical() const {
    std::vector<double> values(grid_->physical_size());
    grid_->to_physical(coeffs_, values);
    return values;
  }

  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const SpectralGrid& grid() const noexcept { return *grid_; }
  bool valid() const noexcept { return grid_ != nullptr; }

  std::span<complex> coeffs() noexcept { return coeffs_; }
  std::span<const complex> coeffs() const noexcept { return coeffs_; }
  CoeffArray& raw() noexcept { return coeffs_; }
  const CoeffArray& raw() const noexcept { return coeffs_; }

  complex& at(int iy, int ix) { return coeffs_[grid_->index(iy, ix)]; }
  const complex& at(int iy, int ix) const { return coeffs_[grid_->index(iy, ix)]; }

  /// Coefficient of the mode (kx, ky) for any sign of kx, through conjugate
  /// symmetry when kx < 0.
  complex mode(int kx, int ky) const {
    if (kx >= 0) return at(grid_->row_of(ky), kx);
    return std::conj(at(grid_->row_of(-ky), -kx));
  }
  void set_mode(int kx, int ky, complex value) {
    if (kx >= 0) {
      at(grid_->row_of(ky), kx) = value;
    } else {
      at(grid_->row_of(-ky), -kx) = std::conj(value);
    }
  }

  bool same_grid(const ScalarFieldHat& other) const noexcept {
    return grid_ && other.grid_ && grid_->n() == other.grid_->n();
  }

  ScalarFieldHat& operator+=(const ScalarFieldHat& o) {
    require_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  ScalarFieldHat& operator-=(const ScalarFieldHat& o) {
    require_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  ScalarFieldHat& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  /// this += s * o
  ScalarFieldHat& axpy(double s, const ScalarFieldHat& o) {
    require_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += s * o.coeffs_[i];
    return *this;
  }

  friend ScalarFieldHat operator+(ScalarFieldHat a, const ScalarFieldHat& b) { return a += b; }
  friend ScalarFieldHat operator-(ScalarFieldHat a, const ScalarFieldHat& b) { return a -= b; }
  friend ScalarFieldHat operator*(double s, ScalarFieldHat a) { return a *= s; }

  /// Zero-mean check: the (0,0) coefficient is exactly zero.
  bool has_zero_mean() const { return coeffs_[0] == complex(0.0, 0.0); }

  /// Largest violation of coeff(-k) = conj(coeff(k)) on the self-paired
  /// columns kx = 0 and kx = n/2, relative to the largest coefficient.
  double conjugate_symmetry_defect() const {
    const int n = grid_->n();
    double worst = 0.0, scale = 0.0;
    for (const auto& c : coeffs_) scale = std::max(scale, std::abs(c));
    for (int ix : {0, n / 2}) {
      for (int iy = 0; iy < n; ++iy) {
        const int partner = (n - iy) % n;
        worst = std::max(worst, std::abs(at(iy, ix) - std::conj(at(partner, ix))));
      }
    }
    return scale > 0.0 ? worst / scale : worst;
  }

 private:
  void require_same(const ScalarFieldHat& o) const {
    if (!same_grid(o)) throw std::invalid_argument("ScalarFieldHat: grid mismatch");
  }

  GridPtr grid_;
  CoeffArray coeffs_;
};

/// Spectral velocity pair.
struct VelocityHat {
  ScalarFieldHat u;
  ScalarFieldHat v;
};

}  // namespace etdsav
