#pragma once

// Cell-centred finite-volume discretization of u -> (a u_x)_x + alpha u on
// (-1,1) with zero-flux ends. Boundary fluxes are simply absent from the
// stencil, so nothing ever divides by a(+-1) = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "degctl/coefficient.hpp"
#include "degctl/error.hpp"

namespace degctl {

class Grid {
 public:
  static constexpr std::size_t kMinCells = 4;

  explicit Grid(std::size_t n_cells) : n_(n_cells) {
    if (n_cells < kMinCells) {
      throw Error(ErrorCode::TooFewCells,
                  "need at least " + std::to_string(kMinCells) + " cells, got " + std::to_string(n_cells));
    }
    h_ = 2.0 / static_cast<double>(n_cells);
  }

  std::size_t size() const noexcept { return n_; }
  double h() const noexcept { return h_; }

  /// Centre of cell i (0-based): -1 + (i + 1/2) h.
  double center(std::size_t i) const noexcept {
    return -1.0 + (static_cast<double>(i) + 0.5) * h_;
  }

  /// Face i (0-based, i = 0..n): -1 + i h, with the end faces exactly +-1.
  double face(std::size_t i) const noexcept {
    if (i == 0) return -1.0;
    if (i == n_) return 1.0;
    return -1.0 + static_cast<double>(i) * h_;
  }

  std::vector<double> centers() const {
    std::vector<double> c(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = center(i);
    return c;
  }

  std::vector<double> faces() const {
    std::vector<double> f(n_ + 1);
    for (std::size_t i = 0; i <= n_; ++i) f[i] = face(i);
    return f;
  }

  friend bool operator==(const Grid& a, const Grid& b) noexcept { return a.n_ == b.n_; }

 private:
  std::size_t n_;
  double h_;
};

inline Grid build_grid(std::size_t n_cells) { return Grid(n_cells); }

class StateField {
 public:
  explicit StateField(Grid grid) : grid_(grid), values_(grid.size(), 0.0) {}

  StateField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw Error(ErrorCode::GridMismatch, "field length " + std::to_string(values_.size()) +
                                               " vs " + std::to_string(grid_.size()) + " cells");
    }
  }

  static StateField sample(Grid grid, const std::function<double(double)>& f) {
    StateField s(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) s.values_[i] = f(grid.center(i));
    return s;
  }

  static StateField constant(Grid grid, double c) {
    return StateField(grid, std::vector<double>(grid.size(), c));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  StateField& operator+=(const StateField& o) {
    require_same_grid(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  StateField& operator-=(const StateField& o) {
    require_same_grid(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  StateField& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  friend StateField operator+(StateField a, const StateField& b) { return a += b; }
  friend StateField operator-(StateField a, const StateField& b) { return a -= b; }
  friend StateField operator*(double s, StateField a) { return a *= s; }

  void require_same_grid(const StateField& o) const {
    if (!(grid_ == o.grid_)) {
      throw Error(ErrorCode::GridMismatch, std::to_string(grid_.size()) + " vs " +
                                               std::to_string(o.grid_.size()) + " cells");
    }
  }

  friend bool operator==(const StateField& a, const StateField& b) {
    return a.grid_ == b.grid_ && a.values_ == b.values_;
  }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Midpoint-rule L2 inner product h * sum u_i w_i.
inline double inner_product(const StateField& u, const StateField& w) {
  u.require_same_grid(w);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * w[i];
  return u.grid().h() * s;
}

inline double l2_norm(const StateField& u) { return std::sqrt(inner_product(u, u)); }

inline double l2_distance(const StateField& u, const StateField& w) { return l2_norm(u - w); }

/// |u|_{1,a} = || sqrt(a) u_x ||, differences taken across interior faces only.
inline double weighted_seminorm(const DiffusionCoefficient& coeff, const StateField& u) {
  const Grid& g = u.grid();
  const double h = g.h();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double du = (u[i + 1] - u[i]) / h;
    s += coeff(g.face(i + 1)) * du * du * h;
  }
  return std::sqrt(s);
}

/// Symmetric tridiagonal matrix of u -> (a u_x)_x + alpha u.
class AssembledOperator {
 public:
  AssembledOperator(Grid grid, std::vector<double> diag, std::vector<double> offdiag, StateField alpha)
      : grid_(grid), diag_(std::move(diag)), offdiag_(std::move(offdiag)), alpha_(std::move(alpha)) {}

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> diag() const noexcept { return diag_; }
  /// offdiag()[i] couples cells i and i+1; equals a(x_{i+1/2}) / h^2 >= 0.
  std::span<const double> offdiag() const noexcept { return offdiag_; }
  const StateField& alpha() const noexcept { return alpha_; }
  std::size_t size() const noexcept { return diag_.size(); }

  StateField apply(const StateField& u) const {
    if (!(u.grid() == grid_)) throw Error(ErrorCode::GridMismatch, "operator/field grid");
    const std::size_t n = size();
    StateField out(grid_);
    for (std::size_t i = 0; i < n; ++i) {
      double v = diag_[i] * u[i];
      if (i > 0) v += offdiag_[i - 1] * u[i - 1];
      if (i + 1 < n) v += offdiag_[i] * u[i + 1];
      out[i] = v;
    }
    return out;
  }

  /// Same matrix with alpha replaced by alpha + shift.
  AssembledOperator shifted(double shift) const {
    AssembledOperator copy = *this;
    for (double& d : copy.diag_) d += shift;
    for (double& a : copy.alpha_.values()) a += shift;
    return copy;
  }

  /// Debug export: (row, col, entry), 0-based, nonzeros only in row-major order.
  void write_csv(std::ostream& os) const {
    os << "row,col,entry\n" << std::setprecision(17);
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) os << i << ',' << i - 1 << ',' << offdiag_[i - 1] << '\n';
      os << i << ',' << i << ',' << diag_[i] << '\n';
      if (i + 1 < n) os << i << ',' << i + 1 << ',' << offdiag_[i] << '\n';
    }
  }

 private:
  Grid grid_;
  std::vector<double> diag_;
  std::vector<double> offdiag_;
  StateField alpha_;
};

inline AssembledOperator assemble(const DiffusionCoefficient& coeff, const StateField& alpha,
                                  const Grid& grid) {
  if (!(alpha.grid() == grid)) throw Error(ErrorCode::GridMismatch, "alpha sampled on another grid");
  const std::size_t n = grid.size();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  std::vector<double> off(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) off[i] = coeff(grid.face(i + 1)) * inv_h2;
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    if (i > 0) d -= off[i - 1];
    if (i + 1 < n) d -= off[i];
    diag[i] = d + alpha[i];
  }
  return AssembledOperator(grid, std::move(diag), std::move(off), alpha);
}

inline AssembledOperator assemble(const DiffusionCoefficient& coeff, const Grid& grid) {
  return assemble(coeff, StateField(grid), grid);
}

// ---------------------------------------------------------------------------
// Time traces and the energy-space norm

struct EvolutionTrace {
  std::vector<double> times;
  std::vector<StateField> states;
  std::vector<double> l2_norms;
  std::vector<double> min_values;
  std::vector<double> negative_part_norms;
  /// Spectral traces only: e^{(-lambda_{k_max+1} + beta) t} ||v0|| per snapshot.
  std::vector<double> truncation_bounds;

  bool empty() const noexcept { return states.empty(); }
  const StateField& final_state() const {
    if (states.empty()) throw Error(ErrorCode::EmptyTrace, "trace has no states");
    return states.back();
  }

  void push(double t, StateField v) {
    double neg = 0.0;
    for (double x : v.values()) {
      if (x < 0.0) neg += x * x;
    }
    times.push_back(t);
    l2_norms.push_back(l2_norm(v));
    min_values.push_back(v.min());
    negative_part_norms.push_back(std::sqrt(neg * v.grid().h()));
    states.push_back(std::move(v));
  }
};

/// sup_t ||v(t)||^2 + 2 int_0^T |v(t)|_{1,a}^2 dt, time integral by the
/// trapezoid rule over the stored snapshots.
inline double b_norm(const EvolutionTrace& trace, const DiffusionCoefficient& coeff) {
  if (trace.empty()) throw Error(ErrorCode::EmptyTrace, "b_norm of an empty trace");
  double sup = 0.0;
  for (const auto& v : trace.states) sup = std::max(sup, inner_product(v, v));
  double integral = 0.0;
  double prev = 0.0;
  for (std::size_t j = 0; j < trace.states.size(); ++j) {
    const double s = weighted_seminorm(coeff, trace.states[j]);
    const double cur = s * s;
    if (j > 0) integral += 0.5 * (trace.times[j] - trace.times[j - 1]) * (prev + cur);
    prev = cur;
  }
  return sup + 2.0 * integral;
}

// ---------------------------------------------------------------------------
// CSV (x_center, value) serialization

inline void write_field_csv(std::ostream& os, const StateField& f, const std::string& value_name = "value") {
  os << "x," << value_name << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < f.size(); ++i) os << f.grid().center(i) << ',' << f[i] << '\n';
}

inline void write_field_csv(const std::string& path, const StateField& f,
                            const std::string& value_name = "value") {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path);
  write_field_csv(os, f, value_name);
}

/// Reads a field written by write_field_csv. The grid is rebuilt from the row
/// count and the x column must match its cell centres.
inline StateField read_field_csv(std::istream& in, const std::string& source = "<stream>") {
  std::vector<double> xs;
  std::vector<double> vs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::Io, source + ":" + std::to_string(lineno) + ": expected x,value");
    try {
      std::size_t used = 0;
      const double x = std::stod(line.substr(0, comma), &used);
      const double v = std::stod(line.substr(comma + 1));
      xs.push_back(x);
      vs.push_back(v);
    } catch (const std::logic_error&) {
      if (lineno == 1) continue;  // header
      throw Error(ErrorCode::Io, source + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  Grid g(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::abs(xs[i] - g.center(i)) > 1e-9) {
      throw Error(ErrorCode::GridMismatch, source + ": x column is not a uniform cell-centred grid");
    }
  }
  return StateField(g, std::move(vs));
}

inline StateField read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_field_csv(in, path);
}

}  // namespace degctl
