#pragma once

// Flat `key = value` scenario files with '#' comments.
//
//   coefficient     = legendre | power:<g> | constant:<c> | table:<path>
//   initial_state   = const:<c> | affine:<a>,<b> | bump:<center>,<width> | csv:<path>
//   target_state    = (same presets)
//   epsilon, mode (T1|C1), n_cells, dt, mollifier_delta, output_dir, c_margin, snapshots
//
// Relative paths are resolved against the scenario file's directory.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "degctl/coefficient.hpp"
#include "degctl/control.hpp"
#include "degctl/discretization.hpp"
#include "degctl/error.hpp"

namespace degctl {

struct Scenario {
  std::string name = "scenario";
  std::string coefficient = "legendre";
  std::string initial_state = "const:1";
  std::string target_state = "const:1";
  double epsilon = 1e-2;
  ControlMode mode = ControlMode::T1;
  std::size_t n_cells = 2000;
  double dt = 1e-4;
  double mollifier_delta = 1e-3;
  double c_margin = 2.0;
  std::size_t snapshots = 64;
  std::string output_dir = "out";

  std::filesystem::path base_dir = ".";
  std::string source = "<built-in>";
  std::map<std::string, std::size_t> key_lines;

  /// "<source>:<line>" of a key, or just the source when the key was defaulted.
  std::string where(const std::string& key) const {
    const auto it = key_lines.find(key);
    return it == key_lines.end() ? source + " (default " + key + ")"
                                 : source + ":" + std::to_string(it->second) + " (" + key + ")";
  }

  std::string resolve(const std::string& path) const {
    const std::filesystem::path p(path);
    return p.is_absolute() ? p.string() : (base_dir / p).string();
  }
};

namespace detail {

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline double parse_double(const std::string& text, const std::string& context) {
  double v = 0;
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw Error(ErrorCode::BadScenario, context + ": '" + text + "' is not a number");
  }
  return v;
}

inline std::vector<double> parse_list(const std::string& text, const std::string& context) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), context));
  return out;
}

// Two numeric columns, optional header, '#' comments. Returns false on any
// malformed row.
inline bool read_two_columns(const std::string& path, std::vector<double>& xs, std::vector<double>& ys) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) return false;
    const std::string a = trim(line.substr(0, comma));
    const std::string b = trim(line.substr(comma + 1));
    double x = 0, y = 0;
    auto r1 = std::from_chars(a.data(), a.data() + a.size(), x);
    auto r2 = std::from_chars(b.data(), b.data() + b.size(), y);
    const bool ok = r1.ec == std::errc{} && r1.ptr == a.data() + a.size() && r2.ec == std::errc{} &&
                    r2.ptr == b.data() + b.size() && std::isfinite(x) && std::isfinite(y);
    if (!ok) {
      if (lineno == 1 && xs.empty()) continue;  // header
      return false;
    }
    xs.push_back(x);
    ys.push_back(y);
  }
  return xs.size() >= 2;
}

}  // namespace detail

inline Scenario parse_scenario(std::istream& in, const std::string& source = "<stream>",
                               const std::filesystem::path& base_dir = ".") {
  Scenario s;
  s.source = source;
  s.base_dir = base_dir;
  s.name = std::filesystem::path(source).stem().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string here = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw Error(ErrorCode::BadScenario, here + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (value.empty()) throw Error(ErrorCode::BadScenario, here + ": empty value for " + key);
    s.key_lines[key] = lineno;

    auto positive = [&](double v) {
      if (!(v > 0.0)) throw Error(ErrorCode::BadScenario, here + ": " + key + " must be positive");
      return v;
    };
    if (key == "name") {
      s.name = value;
    } else if (key == "coefficient") {
      s.coefficient = value;
    } else if (key == "initial_state") {
      s.initial_state = value;
    } else if (key == "target_state") {
      s.target_state = value;
    } else if (key == "epsilon") {
      s.epsilon = positive(detail::parse_double(value, here));
    } else if (key == "mode") {
      if (value == "T1") s.mode = ControlMode::T1;
      else if (value == "C1") s.mode = ControlMode::C1;
      else throw Error(ErrorCode::BadScenario, here + ": mode must be T1 or C1");
    } else if (key == "n_cells") {
      s.n_cells = static_cast<std::size_t>(positive(detail::parse_double(value, here)));
    } else if (key == "dt") {
      s.dt = positive(detail::parse_double(value, here));
    } else if (key == "mollifier_delta") {
      s.mollifier_delta = positive(detail::parse_double(value, here));
    } else if (key == "c_margin") {
      s.c_margin = positive(detail::parse_double(value, here));
    } else if (key == "snapshots") {
      s.snapshots = static_cast<std::size_t>(positive(detail::parse_double(value, here)));
    } else if (key == "output_dir") {
      s.output_dir = value;
    } else {
      throw Error(ErrorCode::BadScenario, here + ": unknown key '" + key + "'");
    }
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario " + path);
  return parse_scenario(in, path, std::filesystem::path(path).parent_path());
}

/// Samples a state preset on the grid. `csv:` files hold (x, value) rows and
/// are linearly interpolated onto the cell centres.
inline StateField evaluate_preset(const std::string& preset, const Grid& grid,
                                  const std::filesystem::path& base_dir = ".") {
  const auto colon = preset.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::BadScenario, "state preset '" + preset + "' needs a kind prefix");
  }
  const std::string head = preset.substr(0, colon);
  const std::string arg = preset.substr(colon + 1);
  if (head == "const") {
    const double c = detail::parse_double(detail::trim(arg), preset);
    return StateField::constant(grid, c);
  }
  if (head == "affine") {
    const auto p = detail::parse_list(arg, preset);
    if (p.size() != 2) throw Error(ErrorCode::BadScenario, "affine:<a>,<b> needs two numbers");
    return StateField::sample(grid, [a = p[0], b = p[1]](double x) { return a + b * x; });
  }
  if (head == "bump") {
    const auto p = detail::parse_list(arg, preset);
    if (p.size() != 2 || !(p[1] > 0.0)) {
      throw Error(ErrorCode::BadScenario, "bump:<center>,<width> needs a positive width");
    }
    return StateField::sample(grid, [c = p[0], w = p[1]](double x) {
      const double r = (x - c) / w;
      if (std::abs(r) >= 1.0) return 0.0;
      const double cs = std::cos(0.5 * std::numbers::pi * r);
      return cs * cs;
    });
  }
  if (head == "csv") {
    const std::filesystem::path p(arg);
    const std::string path = p.is_absolute() ? p.string() : (base_dir / p).string();
    std::vector<double> xs, ys;
    if (!detail::read_two_columns(path, xs, ys)) {
      throw Error(ErrorCode::Io, "cannot read two-column CSV " + path);
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (!(xs[i] > xs[i - 1])) throw Error(ErrorCode::BadScenario, path + ": x not increasing");
    }
    return StateField::sample(grid, [&](double x) {
      if (x <= xs.front()) return ys.front();
      if (x >= xs.back()) return ys.back();
      const auto j = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
      const double t = (x - xs[j]) / (xs[j + 1] - xs[j]);
      return (1.0 - t) * ys[j] + t * ys[j + 1];
    });
  }
  throw Error(ErrorCode::BadScenario, "unknown state preset '" + preset + "'");
}

}  // namespace degctl
