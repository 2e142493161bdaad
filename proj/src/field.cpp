#include "boltzmann/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "boltzmann/errors.hpp"

namespace boltzmann {

namespace {

constexpr double kPi = std::numbers::pi;

void check_dim(int dim) {
  if (dim != 2 && dim != 3) throw ArgumentError("dim must be 2 or 3");
}

int pow_int(int base, int exp) {
  int r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Applies a dense transform along one axis of a row-major dim-d array:
// out[..., k, ...] = sum_j mat[k*n_in + j] * in[..., j, ...].
void transform_axis(const std::vector<Complex>& in, std::vector<Complex>& out,
                    const int* shape, int dim, int axis, const Complex* mat,
                    int n_out) {
  int n_in = shape[axis];
  std::size_t inner = 1;
  for (int a = axis + 1; a < dim; ++a) inner *= shape[a];
  std::size_t outer = 1;
  for (int a = 0; a < axis; ++a) outer *= shape[a];

  out.assign(outer * static_cast<std::size_t>(n_out) * inner, Complex(0.0, 0.0));
  for (std::size_t o = 0; o < outer; ++o) {
    const Complex* in_base = in.data() + o * n_in * inner;
    Complex* out_base = out.data() + o * n_out * inner;
    for (int k = 0; k < n_out; ++k) {
      const Complex* row = mat + static_cast<std::size_t>(k) * n_in;
      Complex* dst = out_base + static_cast<std::size_t>(k) * inner;
      for (int j = 0; j < n_in; ++j) {
        const Complex w = row[j];
        const Complex* src = in_base + static_cast<std::size_t>(j) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += w * src[i];
      }
    }
  }
}

// mat[k*n + j] = exp(-i k x_j)/n for k = -N..N (shifted), used by project.
std::vector<Complex> projection_matrix(const VelocityGrid& grid, int order) {
  const int n = grid.points_per_axis;
  const int side = 2 * order + 1;
  std::vector<Complex> mat(static_cast<std::size_t>(side) * n);
  for (int ks = 0; ks < side; ++ks) {
    const int k = ks - order;
    for (int j = 0; j < n; ++j) {
      const double phase = -k * grid.node(j);
      mat[static_cast<std::size_t>(ks) * n + j] =
          Complex(std::cos(phase) / n, std::sin(phase) / n);
    }
  }
  return mat;
}

// mat[j*side + ks] = exp(i k x_j), used by evaluate.
std::vector<Complex> evaluation_matrix(const VelocityGrid& grid, int order) {
  const int n = grid.points_per_axis;
  const int side = 2 * order + 1;
  std::vector<Complex> mat(static_cast<std::size_t>(n) * side);
  for (int j = 0; j < n; ++j) {
    for (int ks = 0; ks < side; ++ks) {
      const int k = ks - order;
      const double phase = k * grid.node(j);
      mat[static_cast<std::size_t>(j) * side + ks] =
          Complex(std::cos(phase), std::sin(phase));
    }
  }
  return mat;
}

}  // namespace

VelocityGrid::VelocityGrid(int dim, int points_per_axis)
    : dim(dim), points_per_axis(points_per_axis) {
  check_dim(dim);
  if (points_per_axis < 2) throw ArgumentError("grid needs at least 2 points per axis");
}

VelocityGrid VelocityGrid::for_order(int dim, int order) {
  if (order < 1) throw ArgumentError("order must be >= 1");
  int n = 2;
  while (n < 2 * order + 2) n *= 2;
  return VelocityGrid(dim, n);
}

double VelocityGrid::node(int j) const {
  return -kPi + 2.0 * kPi * j / points_per_axis;
}

double VelocityGrid::spacing() const { return 2.0 * kPi / points_per_axis; }

std::vector<double> VelocityGrid::nodes() const {
  std::vector<double> v(points_per_axis);
  for (int j = 0; j < points_per_axis; ++j) v[j] = node(j);
  return v;
}

std::size_t VelocityGrid::total_points() const {
  std::size_t t = 1;
  for (int a = 0; a < dim; ++a) t *= points_per_axis;
  return t;
}

SpectralField::SpectralField(int dim, int order) : dim(dim), order(order) {
  check_dim(dim);
  if (order < 1) throw ArgumentError("order must be >= 1");
  coeffs.assign(static_cast<std::size_t>(pow_int(2 * order + 1, dim)),
                Complex(0.0, 0.0));
}

std::size_t SpectralField::linear_index(const int* k) const {
  std::size_t idx = 0;
  for (int a = 0; a < dim; ++a) idx = idx * side() + (k[a] + order);
  return idx;
}

Complex& SpectralField::at(const int* k) { return coeffs[linear_index(k)]; }
const Complex& SpectralField::at(const int* k) const { return coeffs[linear_index(k)]; }
Complex& SpectralField::at(std::initializer_list<int> k) { return at(k.begin()); }
const Complex& SpectralField::at(std::initializer_list<int> k) const {
  return at(k.begin());
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  if (dim != other.dim || order != other.order)
    throw ArgumentError("field shape mismatch");
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += other.coeffs[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  if (dim != other.dim || order != other.order)
    throw ArgumentError("field shape mismatch");
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= other.coeffs[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& c : coeffs) c *= s;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

void axpy(double a, const SpectralField& x, SpectralField& y) {
  if (x.dim != y.dim || x.order != y.order)
    throw ArgumentError("field shape mismatch");
  for (std::size_t i = 0; i < x.coeffs.size(); ++i) y.coeffs[i] += a * x.coeffs[i];
}

bool all_finite(const SpectralField& f) {
  for (const auto& c : f.coeffs)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

double coeff_linf(const SpectralField& f) {
  double m = 0.0;
  for (const auto& c : f.coeffs) m = std::max(m, std::abs(c));
  return m;
}

double conjugate_symmetry_defect(const SpectralField& f) {
  const int N = f.order;
  double worst = 0.0;
  int k[3] = {0, 0, 0};
  int mk[3] = {0, 0, 0};
  const std::size_t total = f.size();
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    for (int a = f.dim - 1; a >= 0; --a) {
      k[a] = static_cast<int>(rem % f.side()) - N;
      rem /= f.side();
    }
    for (int a = 0; a < f.dim; ++a) mk[a] = -k[a];
    const Complex d = f.at(mk) - std::conj(f.coeffs[lin]);
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

SpectralField project(const std::vector<double>& samples, const VelocityGrid& grid,
                      int order) {
  check_dim(grid.dim);
  if (order < 1) throw ArgumentError("order must be >= 1");
  if (grid.points_per_axis < 2 * order + 2)
    throw ConfigError("grid too coarse for requested order: need >= 2N+2 points");
  if (samples.size() != grid.total_points())
    throw ConfigError("sample count does not match grid");
  for (double s : samples)
    if (!std::isfinite(s)) throw ArgumentError("non-finite sample");

  const int n = grid.points_per_axis;
  const int side = 2 * order + 1;
  const auto mat = projection_matrix(grid, order);

  std::vector<Complex> buf(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) buf[i] = Complex(samples[i], 0.0);

  std::vector<Complex> tmp;
  int shape[3] = {n, n, n};
  for (int axis = grid.dim - 1; axis >= 0; --axis) {
    transform_axis(buf, tmp, shape, grid.dim, axis, mat.data(), side);
    buf.swap(tmp);
    shape[axis] = side;
  }

  SpectralField out(grid.dim, order);
  out.coeffs = std::move(buf);
  return out;
}

std::vector<double> evaluate(const SpectralField& field, const VelocityGrid& grid) {
  if (grid.dim != field.dim) throw ArgumentError("grid/field dimension mismatch");
  if (!all_finite(field)) throw ArgumentError("non-finite field");

  const int n = grid.points_per_axis;
  const int side = field.side();
  const auto mat = evaluation_matrix(grid, field.order);

  std::vector<Complex> buf = field.coeffs;
  std::vector<Complex> tmp;
  int shape[3] = {side, side, side};
  for (int axis = field.dim - 1; axis >= 0; --axis) {
    transform_axis(buf, tmp, shape, field.dim, axis, mat.data(), n);
    buf.swap(tmp);
    shape[axis] = n;
  }

  std::vector<double> out(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
  return out;
}

SpectralField pad(const SpectralField& field, int new_order) {
  if (new_order <= field.order)
    throw ArgumentError("pad requires new_order > order");
  SpectralField out(field.dim, new_order);
  const int N = field.order;
  int k[3] = {0, 0, 0};
  const std::size_t total = field.size();
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    for (int a = field.dim - 1; a >= 0; --a) {
      k[a] = static_cast<int>(rem % field.side()) - N;
      rem /= field.side();
    }
    out.at(k) = field.coeffs[lin];
  }
  return out;
}

SpectralField truncate(const SpectralField& field, int new_order) {
  if (new_order >= field.order)
    throw ArgumentError("truncate requires new_order < order");
  SpectralField out(field.dim, new_order);
  int k[3] = {0, 0, 0};
  const std::size_t total = out.size();
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    for (int a = field.dim - 1; a >= 0; --a) {
      k[a] = static_cast<int>(rem % out.side()) - new_order;
      rem /= out.side();
    }
    out.coeffs[lin] = field.at(k);
  }
  return out;
}

double norm(const SpectralField& field, const VelocityGrid& grid, NormKind kind,
            double sobolev_r) {
  const double box_factor = std::pow(2.0 * kPi, field.dim / 2.0);
  switch (kind) {
    case NormKind::L2: {
      double s = 0.0;
      for (const auto& c : field.coeffs) s += std::norm(c);
      return box_factor * std::sqrt(s);
    }
    case NormKind::Hr: {
      if (sobolev_r < 0.0) throw ArgumentError("Hr norm requires r >= 0");
      double s = 0.0;
      int k[3] = {0, 0, 0};
      const std::size_t total = field.size();
      for (std::size_t lin = 0; lin < total; ++lin) {
        std::size_t rem = lin;
        double k2 = 0.0;
        for (int a = field.dim - 1; a >= 0; --a) {
          k[a] = static_cast<int>(rem % field.side()) - field.order;
          rem /= field.side();
          k2 += static_cast<double>(k[a]) * k[a];
        }
        s += std::pow(1.0 + k2, sobolev_r) * std::norm(field.coeffs[lin]);
      }
      return box_factor * std::sqrt(s);
    }
    case NormKind::L1Grid: {
      const auto values = evaluate(field, grid);
      const double w = std::pow(grid.spacing(), field.dim);
      double s = 0.0;
      for (double v : values) s += std::abs(v);
      return w * s;
    }
    case NormKind::LinfGrid: {
      const auto values = evaluate(field, grid);
      double m = 0.0;
      for (double v : values) m = std::max(m, std::abs(v));
      return m;
    }
  }
  throw ArgumentError("unknown norm kind");
}

double norm(const SpectralField& field, NormKind kind, double sobolev_r) {
  return norm(field, VelocityGrid::for_order(field.dim, field.order), kind,
              sobolev_r);
}

}  // namespace boltzmann
