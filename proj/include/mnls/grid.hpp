#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mnls {

using cplx = std::complex<double>;

/// Raised when a configuration or parameter set violates a named condition.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string condition, const std::string& what)
      : std::runtime_error(what), condition_(std::move(condition)) {}
  const std::string& condition() const { return condition_; }

 private:
  std::string condition_;
};

/// Raised by iterative solvers that fail to meet their tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct GridSpec {
  int dim = 1;           // N in {1,2,3}
  int n_axis = 64;       // points per axis, power of two, >= 8
  double half_width = 10.0;  // domain is [-L, L)^N
  std::size_t max_points = std::size_t{1} << 26;
};

/// Uniform periodic grid on [-L, L)^N with FFT plans.
///
/// Immutable after construction; transforms may be executed concurrently
/// from several threads on distinct buffers.
class Grid {
 public:
  explicit Grid(const GridSpec& spec);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int n_axis() const { return spec_.n_axis; }
  double half_width() const { return spec_.half_width; }
  double dx() const { return dx_; }
  /// Cell volume dx^N.
  double cell_volume() const { return dv_; }
  std::size_t size() const { return size_; }

  /// Coordinate along axis d of every grid point (row-major, axis 0 slowest).
  std::span<const double> x(int d) const { return x_[d]; }
  /// Angular wavenumber along axis d of every Fourier mode, FFT ordering.
  std::span<const double> k(int d) const { return k_[d]; }
  /// |k|^2 of every Fourier mode.
  std::span<const double> k2() const { return k2_; }
  /// Wavenumbers of a single axis in FFT order: (2 pi / 2L) * {0,..,n/2-1,-n/2,..,-1}.
  const std::vector<double>& axis_wavenumbers() const { return axis_k_; }
  const std::vector<double>& axis_coordinates() const { return axis_x_; }

  /// Unnormalized forward DFT.
  void forward(std::span<const cplx> in, std::span<cplx> out) const;
  /// Inverse DFT including the 1/size normalization.
  void inverse(std::span<const cplx> in, std::span<cplx> out) const;

  /// Distance of each grid point to the origin under the minimum-image convention.
  std::vector<double> periodic_radius() const;

 private:
  GridSpec spec_;
  double dx_ = 0.0;
  double dv_ = 0.0;
  std::size_t size_ = 0;
  std::vector<double> axis_k_, axis_x_;
  std::vector<double> x_[3], k_[3];
  std::vector<double> k2_;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(const GridSpec& spec);

/// m-component complex field on a shared grid; components are stored
/// contiguously, component-major.
class Field {
 public:
  Field() = default;
  Field(GridPtr grid, int components);

  const GridPtr& grid() const { return grid_; }
  int components() const { return m_; }
  std::size_t points() const { return grid_ ? grid_->size() : 0; }

  std::span<cplx> component(int j) {
    return {data_.data() + static_cast<std::size_t>(j) * points(), points()};
  }
  std::span<const cplx> component(int j) const {
    return {data_.data() + static_cast<std::size_t>(j) * points(), points()};
  }
  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  bool all_finite() const;
  void set_zero();

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
  Field& operator*=(cplx s);
  /// this += s * o
  Field& axpy(cplx s, const Field& o);

 private:
  GridPtr grid_;
  int m_ = 0;
  std::vector<cplx> data_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(cplx s, Field a);
Field operator*(double s, Field a);

/// Riemann-sum L^p norm of one component; p = +inf gives the max modulus.
double lp_norm(const Grid& grid, std::span<const cplx> f, double p);

struct FieldNorm {
  std::vector<double> per_component;
  /// sqrt(sum_j |Phi_j|_p^2)
  double aggregate = 0.0;
};
FieldNorm lp_norm(const Field& f, double p);

/// Discrete L^2 inner product  sum conj(a) b dV  (conjugate-linear in a).
cplx inner(const Grid& grid, std::span<const cplx> a, std::span<const cplx> b);
cplx inner(const Field& a, const Field& b);
/// Real part of the L^2 pairing, <a, b> = Re sum a conj(b) dV.
double real_inner(const Field& a, const Field& b);

/// Per-component squared L^2 norms.
std::vector<double> charges(const Field& f);

/// Spectral gradient of a component: one array per axis.
std::vector<std::vector<cplx>> spectral_gradient(const Grid& grid,
                                                  std::span<const cplx> f);

/// Fraction of the squared L^2 norm located within `band` of the box boundary
/// (max-norm distance). Used to decide whether L must be enlarged.
double boundary_mass_fraction(const Field& f, double band);

}  // namespace mnls
