#include "mnls/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

namespace mnls {

namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const cplx* p) {
  // FFTW takes non-const input pointers even for out-of-place transforms.
  return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p));
}

}  // namespace

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  if (spec.dim < 1 || spec.dim > 3) {
    throw ValidationError("grid.dim", "grid dimension must be 1, 2 or 3, got " +
                                          std::to_string(spec.dim));
  }
  if (!is_power_of_two(spec.n_axis)) {
    throw ValidationError("grid.n_axis", "points per axis must be a power of 2, got " +
                                             std::to_string(spec.n_axis));
  }
  if (spec.n_axis < 8) {
    throw ValidationError("grid.n_axis", "points per axis must be at least 8");
  }
  if (!(spec.half_width > 0.0) || !std::isfinite(spec.half_width)) {
    throw ValidationError("grid.L", "box half-width must be positive");
  }
  const int n = spec.n_axis;
  size_ = 1;
  for (int d = 0; d < spec.dim; ++d) {
    if (size_ > spec.max_points / static_cast<std::size_t>(n)) {
      throw ValidationError("grid.max_points", "grid exceeds the configured point budget");
    }
    size_ *= static_cast<std::size_t>(n);
  }

  dx_ = 2.0 * spec.half_width / n;
  dv_ = std::pow(dx_, spec.dim);
  const double dk = std::numbers::pi / spec.half_width;
  axis_k_.resize(n);
  axis_x_.resize(n);
  for (int i = 0; i < n; ++i) {
    axis_x_[i] = -spec.half_width + i * dx_;
    axis_k_[i] = dk * (i < n / 2 ? i : i - n);
  }

  k2_.assign(size_, 0.0);
  for (int d = 0; d < spec.dim; ++d) {
    x_[d].resize(size_);
    k_[d].resize(size_);
  }
  for (std::size_t idx = 0; idx < size_; ++idx) {
    std::size_t rem = idx;
    for (int d = spec.dim - 1; d >= 0; --d) {
      const auto i = static_cast<int>(rem % n);
      rem /= n;
      x_[d][idx] = axis_x_[i];
      k_[d][idx] = axis_k_[i];
      k2_[idx] += axis_k_[i] * axis_k_[i];
    }
  }

  std::vector<int> dims(spec.dim, n);
  std::vector<cplx> a(size_), b(size_);
  std::lock_guard lock(planner_mutex());
  plan_fwd_ = fftw_plan_dft(spec.dim, dims.data(), as_fftw(a.data()), as_fftw(b.data()),
                            FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_inv_ = fftw_plan_dft(spec.dim, dims.data(), as_fftw(a.data()), as_fftw(b.data()),
                            FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

Grid::~Grid() {
  std::lock_guard lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
}

void Grid::forward(std::span<const cplx> in, std::span<cplx> out) const {
  if (in.data() == out.data()) {
    std::vector<cplx> tmp(in.begin(), in.end());
    fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), as_fftw(tmp.data()), as_fftw(out.data()));
    return;
  }
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), as_fftw(in.data()), as_fftw(out.data()));
}

void Grid::inverse(std::span<const cplx> in, std::span<cplx> out) const {
  if (in.data() == out.data()) {
    std::vector<cplx> tmp(in.begin(), in.end());
    fftw_execute_dft(static_cast<fftw_plan>(plan_inv_), as_fftw(tmp.data()), as_fftw(out.data()));
  } else {
    fftw_execute_dft(static_cast<fftw_plan>(plan_inv_), as_fftw(in.data()), as_fftw(out.data()));
  }
  const double s = 1.0 / static_cast<double>(size_);
  for (auto& v : out) v *= s;
}

std::vector<double> Grid::periodic_radius() const {
  std::vector<double> r(size_, 0.0);
  for (int d = 0; d < dim(); ++d) {
    for (std::size_t i = 0; i < size_; ++i) r[i] += x_[d][i] * x_[d][i];
  }
  for (auto& v : r) v = std::sqrt(v);
  return r;
}

GridPtr make_grid(const GridSpec& spec) { return std::make_shared<const Grid>(spec); }

Field::Field(GridPtr grid, int components) : grid_(std::move(grid)), m_(components) {
  if (!grid_) throw std::invalid_argument("Field requires a grid");
  if (components < 1) throw ValidationError("field.m", "a field needs at least one component");
  data_.assign(static_cast<std::size_t>(components) * grid_->size(), cplx{});
}

bool Field::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const cplx& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

void Field::set_zero() { std::fill(data_.begin(), data_.end(), cplx{}); }

namespace {
void require_same_shape(const Field& a, const Field& b) {
  if (a.data().size() != b.data().size() || a.components() != b.components()) {
    throw ValidationError("field.shape", "field operands differ in grid size or component count");
  }
}
}  // namespace

Field& Field::operator+=(const Field& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Field& Field::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Field& Field::axpy(cplx s, const Field& o) {
  require_same_shape(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(cplx s, Field a) { return a *= s; }
Field operator*(double s, Field a) { return a *= s; }

double lp_norm(const Grid& grid, std::span<const cplx> f, double p) {
  if (!(p >= 1.0)) throw ValidationError("lp_norm.p", "L^p norm requires p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& z : f) m = std::max(m, std::abs(z));
    return m;
  }
  double s = 0.0;
  if (p == 2.0) {
    for (const auto& z : f) s += std::norm(z);
  } else {
    for (const auto& z : f) s += std::pow(std::abs(z), p);
  }
  return std::pow(s * grid.cell_volume(), 1.0 / p);
}

FieldNorm lp_norm(const Field& f, double p) {
  FieldNorm out;
  double sq = 0.0;
  for (int j = 0; j < f.components(); ++j) {
    const double v = lp_norm(*f.grid(), f.component(j), p);
    out.per_component.push_back(v);
    sq += v * v;
  }
  out.aggregate = std::sqrt(sq);
  return out;
}

cplx inner(const Grid& grid, std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s * grid.cell_volume();
}

cplx inner(const Field& a, const Field& b) {
  return inner(*a.grid(), a.data(), b.data());
}

double real_inner(const Field& a, const Field& b) { return inner(a, b).real(); }

std::vector<double> charges(const Field& f) {
  std::vector<double> out;
  for (int j = 0; j < f.components(); ++j) {
    const double v = lp_norm(*f.grid(), f.component(j), 2.0);
    out.push_back(v * v);
  }
  return out;
}

std::vector<std::vector<cplx>> spectral_gradient(const Grid& grid, std::span<const cplx> f) {
  const std::size_t n = grid.size();
  std::vector<cplx> fhat(n), tmp(n);
  grid.forward(f, fhat);
  std::vector<std::vector<cplx>> out(grid.dim(), std::vector<cplx>(n));
  for (int d = 0; d < grid.dim(); ++d) {
    const auto kd = grid.k(d);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = cplx(0.0, kd[i]) * fhat[i];
    grid.inverse(tmp, out[d]);
  }
  return out;
}

double boundary_mass_fraction(const Field& f, double band) {
  const Grid& g = *f.grid();
  const double L = g.half_width();
  double total = 0.0, near = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double dist = std::numeric_limits<double>::infinity();
    for (int d = 0; d < g.dim(); ++d) dist = std::min(dist, L - std::abs(g.x(d)[i]));
    double rho = 0.0;
    for (int j = 0; j < f.components(); ++j) rho += std::norm(f.component(j)[i]);
    total += rho;
    if (dist <= band) near += rho;
  }
  return total > 0.0 ? near / total : 0.0;
}

}  // namespace mnls
