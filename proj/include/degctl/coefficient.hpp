#pragma once

// Degenerate diffusion coefficients a(x) on [-1,1] and their classification
// against the strong-degeneracy / integrable-antiderivative assumptions.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "degctl/error.hpp"

namespace degctl {

namespace kind {
struct Legendre {};
struct PowerDegenerate {
  double gamma;
};
struct Constant {
  double c;
};
struct Tabulated {
  std::vector<double> x;
  std::vector<double> a;
};
}  // namespace kind

using CoefficientKind =
    std::variant<kind::Legendre, kind::PowerDegenerate, kind::Constant, kind::Tabulated>;

class DiffusionCoefficient {
 public:
  static constexpr double kEndpointTolerance = 1e-12;

  explicit DiffusionCoefficient(CoefficientKind k) : kind_(std::move(k)) { validate(); }

  const CoefficientKind& kind() const noexcept { return kind_; }

  double operator()(double x) const { return value(x); }

  double value(double x) const {
    return std::visit(
        [x](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, kind::Legendre>) {
            return (1.0 - x) * (1.0 + x);
          } else if constexpr (std::is_same_v<K, kind::PowerDegenerate>) {
            const double base = (1.0 - x) * (1.0 + x);
            return base <= 0.0 ? 0.0 : std::pow(base, k.gamma);
          } else if constexpr (std::is_same_v<K, kind::Constant>) {
            return k.c;
          } else {
            return interpolate(k, x);
          }
        },
        kind_);
  }

  double derivative(double x) const {
    return std::visit(
        [this, x](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, kind::Legendre>) {
            return -2.0 * x;
          } else if constexpr (std::is_same_v<K, kind::PowerDegenerate>) {
            const double base = (1.0 - x) * (1.0 + x);
            if (base <= 0.0) return 0.0;
            return -2.0 * x * k.gamma * std::pow(base, k.gamma - 1.0);
          } else if constexpr (std::is_same_v<K, kind::Constant>) {
            return 0.0;
          } else {
            constexpr double step = 1e-6;
            const double lo = std::max(-1.0, x - step);
            const double hi = std::min(1.0, x + step);
            return (value(hi) - value(lo)) / (hi - lo);
          }
        },
        kind_);
  }

  bool is_tabulated() const noexcept { return std::holds_alternative<kind::Tabulated>(kind_); }

  /// Interior breakpoints where a is only piecewise smooth (table nodes).
  std::vector<double> breakpoints() const {
    if (const auto* t = std::get_if<kind::Tabulated>(&kind_)) {
      return {t->x.begin() + 1, t->x.end() - 1};
    }
    return {};
  }

  std::string describe() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          std::ostringstream os;
          os.precision(17);
          if constexpr (std::is_same_v<K, kind::Legendre>) {
            os << "legendre";
          } else if constexpr (std::is_same_v<K, kind::PowerDegenerate>) {
            os << "power:" << k.gamma;
          } else if constexpr (std::is_same_v<K, kind::Constant>) {
            os << "constant:" << k.c;
          } else {
            os << "table(" << k.x.size() << " samples)";
          }
          return os.str();
        },
        kind_);
  }

 private:
  static double interpolate(const kind::Tabulated& t, double x) {
    if (x <= t.x.front()) return t.a.front();
    if (x >= t.x.back()) return t.a.back();
    const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - t.x.begin()) - 1;
    const double dx = t.x[j + 1] - t.x[j];
    // Weighted form keeps a exactly proportional to (1-x) next to a zero endpoint.
    return (t.a[j] * (t.x[j + 1] - x) + t.a[j + 1] * (x - t.x[j])) / dx;
  }

  void validate() {
    if (auto* p = std::get_if<kind::PowerDegenerate>(&kind_)) {
      if (!(p->gamma > 0.0) || !std::isfinite(p->gamma)) {
        throw Error(ErrorCode::InvalidParameter, "power exponent must be positive");
      }
    } else if (auto* c = std::get_if<kind::Constant>(&kind_)) {
      if (!(c->c > 0.0) || !std::isfinite(c->c)) {
        throw Error(ErrorCode::NonPositiveInterior, "constant coefficient must be positive");
      }
    } else if (auto* t = std::get_if<kind::Tabulated>(&kind_)) {
      validate_table(*t);
    }
  }

  static void validate_table(kind::Tabulated& t) {
    if (t.x.size() != t.a.size() || t.x.size() < 2) {
      throw Error(ErrorCode::BadTable, "table needs at least two (x, a) rows");
    }
    for (std::size_t i = 1; i < t.x.size(); ++i) {
      if (!(t.x[i] > t.x[i - 1])) throw Error(ErrorCode::BadTable, "x samples not strictly increasing");
    }
    if (std::abs(t.x.front() + 1.0) > kEndpointTolerance ||
        std::abs(t.x.back() - 1.0) > kEndpointTolerance) {
      throw Error(ErrorCode::BadTable, "x samples must span exactly [-1, 1]");
    }
    t.x.front() = -1.0;
    t.x.back() = 1.0;
    for (double* end : {&t.a.front(), &t.a.back()}) {
      if (*end < -kEndpointTolerance) throw Error(ErrorCode::BadTable, "negative endpoint value");
      if (std::abs(*end) <= kEndpointTolerance) *end = 0.0;
    }
    for (std::size_t i = 1; i + 1 < t.a.size(); ++i) {
      if (!(t.a[i] > 0.0)) {
        throw Error(ErrorCode::NonPositiveInterior,
                    "a(" + std::to_string(t.x[i]) + ") is not positive");
      }
    }
  }

  CoefficientKind kind_;
};

inline DiffusionCoefficient make_coefficient(CoefficientKind k) {
  return DiffusionCoefficient(std::move(k));
}

/// Reads a two-column (x, a) CSV. Lines starting with '#' and a non-numeric
/// header line are skipped.
inline kind::Tabulated read_coefficient_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open coefficient table " + path);
  kind::Tabulated t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x = 0, a = 0;
    if (!(row >> x >> a)) {
      if (t.x.empty() && lineno == 1) continue;  // header
      throw Error(ErrorCode::BadTable, path + ":" + std::to_string(lineno) + ": expected two numbers");
    }
    t.x.push_back(x);
    t.a.push_back(a);
  }
  return t;
}

/// Parses `legendre | power:<g> | constant:<c> | table:<path>`.
inline DiffusionCoefficient parse_coefficient(const std::string& descriptor) {
  const auto colon = descriptor.find(':');
  const std::string head = descriptor.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : descriptor.substr(colon + 1);
  auto number = [&](const std::string& s) {
    double v = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
      throw Error(ErrorCode::InvalidParameter, "bad number in coefficient descriptor '" + descriptor + "'");
    }
    return v;
  };
  if (head == "legendre" && arg.empty()) return make_coefficient(kind::Legendre{});
  if (head == "power") return make_coefficient(kind::PowerDegenerate{number(arg)});
  if (head == "constant") return make_coefficient(kind::Constant{number(arg)});
  if (head == "table") return make_coefficient(read_coefficient_table(arg));
  throw Error(ErrorCode::InvalidParameter, "unknown coefficient descriptor '" + descriptor + "'");
}

// ---------------------------------------------------------------------------
// Degeneracy classification

enum class Integrability { Integrable, Divergent, Inconclusive };

struct DegeneracyReport {
  bool strongly_degenerate = false;  // 1/a not in L1(-1,1)
  bool A_integrable = false;         // A(x) = int_0^x ds/a(s) in L1(-1,1)
  std::function<double(double)> A;   // antiderivative on (-1,1)
};

namespace detail {

using Gauss20 = boost::math::quadrature::gauss<double, 20>;

// Splits [lo, hi] at the given breakpoints and at the dyadic points 1 - 2^-l
// and -1 + 2^-l (l = 1..levels) so that integrands singular at +-1 stay resolved.
inline double integrate_graded(const std::function<double(double)>& f, double lo, double hi,
                               const std::vector<double>& breaks, int levels = 40) {
  if (lo == hi) return 0.0;
  const double sign = lo < hi ? 1.0 : -1.0;
  if (lo > hi) std::swap(lo, hi);
  std::vector<double> cuts{lo, hi};
  for (double b : breaks) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  for (int l = 1; l <= levels; ++l) {
    const double d = std::ldexp(1.0, -l);
    for (double c : {1.0 - d, -1.0 + d}) {
      if (c > lo && c < hi) cuts.push_back(c);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += Gauss20::integrate(f, cuts[i], cuts[i + 1]);
  }
  return sign * total;
}

// Integrals of f over the dyadic shells [1-2^-(l-1), 1-2^-l] (or the mirror
// toward -1), l = 1..levels. Shell 1 is [0, 1/2].
inline std::vector<double> shell_integrals(const std::function<double(double)>& f, bool right,
                                           const std::vector<double>& breaks, int levels) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(levels));
  for (int l = 1; l <= levels; ++l) {
    double inner = 1.0 - std::ldexp(1.0, -(l - 1));
    double outer = 1.0 - std::ldexp(1.0, -l);
    if (!right) {
      inner = -inner;
      outer = -outer;
    }
    out.push_back(std::abs(integrate_graded(f, inner, outer, breaks, 0)));
  }
  return out;
}

// Geometric tail test on shell integrals: the series converges when the
// successive ratio settles below 1 and the Richardson-style extrapolated sum
// S_L + I_L * rho / (1 - rho) stabilizes; it diverges when the ratio stays at
// or above 1.
inline Integrability classify_shells(const std::vector<double>& shells) {
  const std::size_t n = shells.size();
  if (n < 8) return Integrability::Inconclusive;
  double partial = 0.0;
  std::vector<double> extrapolated;
  double rho_min = 1e300;
  double rho_max = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    partial += shells[l];
    if (l + 6 < n || l == 0) continue;
    const double prev = shells[l - 1];
    if (prev <= 0.0) {
      if (shells[l] <= 0.0) {
        rho_max = std::max(rho_max, 0.0);
        rho_min = std::min(rho_min, 0.0);
        extrapolated.push_back(partial);
        continue;
      }
      return Integrability::Inconclusive;
    }
    const double rho = shells[l] / prev;
    rho_min = std::min(rho_min, rho);
    rho_max = std::max(rho_max, rho);
    extrapolated.push_back(rho < 1.0 ? partial + shells[l] * rho / (1.0 - rho) : INFINITY);
  }
  if (rho_min >= 0.999) return Integrability::Divergent;
  if (rho_max <= 0.9) {
    const auto [lo, hi] = std::minmax_element(extrapolated.begin(), extrapolated.end());
    if (*hi - *lo <= 1e-6 * std::max(1.0, std::abs(*hi))) return Integrability::Integrable;
  }
  return Integrability::Inconclusive;
}

inline std::function<double(double)> numeric_antiderivative(const DiffusionCoefficient& coeff) {
  auto breaks = coeff.breakpoints();
  return [coeff, breaks](double x) -> double {
    if (x <= -1.0 || x >= 1.0) return x > 0 ? HUGE_VAL : -HUGE_VAL;
    return integrate_graded([&](double s) { return 1.0 / coeff(s); }, 0.0, x, breaks);
  };
}

}  // namespace detail

/// Quadrature-based integrability estimate for 1/a (which = false) or for
/// |A| (which = true). Used for tabulated coefficients and as an independent
/// check of the closed forms.
inline Integrability estimate_integrability(const DiffusionCoefficient& coeff, bool of_antiderivative,
                                            int levels = 40) {
  const auto breaks = coeff.breakpoints();
  auto inv_a = [&](double s) { return 1.0 / coeff(s); };
  Integrability worst = Integrability::Integrable;
  for (bool right : {true, false}) {
    std::vector<double> shells;
    if (!of_antiderivative) {
      shells = detail::shell_integrals(inv_a, right, breaks, levels);
    } else {
      // A at shell boundaries is accumulated shell by shell; inside a shell
      // A(s) = A(inner) + int_inner^s 1/a.
      double a_inner = 0.0;
      for (int l = 1; l <= levels; ++l) {
        double inner = 1.0 - std::ldexp(1.0, -(l - 1));
        double outer = 1.0 - std::ldexp(1.0, -l);
        if (!right) {
          inner = -inner;
          outer = -outer;
        }
        const double base = a_inner;
        auto abs_a = [&](double s) {
          return std::abs(base + detail::integrate_graded(inv_a, inner, s, breaks, 0));
        };
        shells.push_back(std::abs(detail::integrate_graded(abs_a, inner, outer, breaks, 0)));
        a_inner = base + detail::integrate_graded(inv_a, inner, outer, breaks, 0);
      }
    }
    const auto verdict = detail::classify_shells(shells);
    if (verdict == Integrability::Divergent) return Integrability::Divergent;
    if (verdict == Integrability::Inconclusive) worst = Integrability::Inconclusive;
  }
  return worst;
}

inline DegeneracyReport classify_degeneracy(const DiffusionCoefficient& coeff) {
  return std::visit(
      [&](const auto& k) -> DegeneracyReport {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, kind::Legendre>) {
          return {true, true, [](double x) { return 0.5 * std::log((1.0 + x) / (1.0 - x)); }};
        } else if constexpr (std::is_same_v<K, kind::Constant>) {
          const double c = k.c;
          return {false, true, [c](double x) { return x / c; }};
        } else if constexpr (std::is_same_v<K, kind::PowerDegenerate>) {
          // Near x = 1, 1/a ~ (2(1-x))^-g and A ~ (1-x)^(1-g) (log for g = 1).
          DegeneracyReport r{k.gamma >= 1.0, k.gamma < 2.0, {}};
          if (k.gamma == 1.0) {
            r.A = [](double x) { return 0.5 * std::log((1.0 + x) / (1.0 - x)); };
          } else if (k.gamma == 2.0) {
            r.A = [](double x) {
              return x / (2.0 * (1.0 - x) * (1.0 + x)) + 0.25 * std::log((1.0 + x) / (1.0 - x));
            };
          } else {
            r.A = detail::numeric_antiderivative(coeff);
          }
          return r;
        } else {
          const auto inv = estimate_integrability(coeff, false);
          const auto anti = estimate_integrability(coeff, true);
          if (inv == Integrability::Inconclusive || anti == Integrability::Inconclusive) {
            throw Error(ErrorCode::InconclusiveIntegrability,
                        "tail extrapolation did not stabilize; the table may violate A in L1");
          }
          return {inv == Integrability::Divergent, anti == Integrability::Integrable,
                  detail::numeric_antiderivative(coeff)};
        }
      },
      coeff.kind());
}

}  // namespace degctl
