#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpm/errors.hpp"

namespace gpm {

using cd = std::complex<double>;

/// Uniform, strictly increasing axis: start + i*step, i < count.
struct Axis {
  double start = 0.0;
  double step = 1.0;
  std::size_t count = 1;

  double at(std::size_t i) const { return start + static_cast<double>(i) * step; }
  double back() const { return at(count - 1); }

  /// Axis spanning [lo, hi] with the given step; hi is hit up to rounding.
  static Axis span(double lo, double hi, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("axis: step must be positive");
    if (!(hi >= lo)) throw DomainError("axis: upper bound below lower bound");
    const double n = (hi - lo) / step;
    const auto count = static_cast<std::size_t>(std::llround(n)) + 1;
    if (std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n)) {
      throw DomainError("axis: step does not divide the interval");
    }
    return Axis{lo, step, count};
  }

  friend bool operator==(const Axis& a, const Axis& b) {
    return a.count == b.count && a.start == b.start && a.step == b.step;
  }
};

/// Rectangular (t, x) sampling box.
struct GridSpec {
  double t_min = 0.0, t_max = 0.0, tau = 1.0;
  double x_min = -10.0, x_max = 10.0, h = 0.05;

  Axis t_axis() const { return Axis::span(t_min, t_max, tau); }
  Axis x_axis() const { return Axis::span(x_min, x_max, h); }
};

enum class Provenance { NSoliton, Perturbed, CnEvolved };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::NSoliton: return "nsoliton";
    case Provenance::Perturbed: return "perturbed";
    case Provenance::CnEvolved: return "cn-evolved";
  }
  return "unknown";
}

inline Provenance provenance_from_string(std::string_view s) {
  if (s == "nsoliton") return Provenance::NSoliton;
  if (s == "perturbed") return Provenance::Perturbed;
  if (s == "cn-evolved") return Provenance::CnEvolved;
  throw ConfigError("unknown provenance tag: " + std::string(s));
}

/// Complex samples u(t_i, x_j), row-major in t.
class FieldGrid {
 public:
  FieldGrid() = default;
  FieldGrid(Axis t, Axis x, Provenance provenance)
      : t_(t), x_(x), provenance_(provenance), values_(t.count * x.count) {
    if (!(t.step > 0.0) || !(x.step > 0.0)) throw DomainError("field grid: axes must increase");
  }

  const Axis& t_axis() const { return t_; }
  const Axis& x_axis() const { return x_; }
  Provenance provenance() const { return provenance_; }

  cd& operator()(std::size_t i, std::size_t j) { return values_[i * x_.count + j]; }
  const cd& operator()(std::size_t i, std::size_t j) const { return values_[i * x_.count + j]; }

  std::vector<cd>& values() { return values_; }
  const std::vector<cd>& values() const { return values_; }

  /// One time slice.
  std::vector<cd> row(std::size_t i) const {
    return {values_.begin() + static_cast<std::ptrdiff_t>(i * x_.count),
            values_.begin() + static_cast<std::ptrdiff_t>((i + 1) * x_.count)};
  }

  /// CSV: t,x,re_u,im_u,abs_u with 17 significant digits.
  void write_csv(std::ostream& os) const {
    os << "t,x,re_u,im_u,abs_u\n";
    char buf[160];
    for (std::size_t i = 0; i < t_.count; ++i) {
      for (std::size_t j = 0; j < x_.count; ++j) {
        const cd u = (*this)(i, j);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", t_.at(i), x_.at(j),
                      u.real(), u.imag(), std::abs(u));
        os << buf;
      }
    }
  }

  nlohmann::json metadata() const {
    return {{"provenance", std::string(to_string(provenance_))},
            {"t", {{"start", t_.start}, {"step", t_.step}, {"count", t_.count}}},
            {"x", {{"start", x_.start}, {"step", x_.step}, {"count", x_.count}}},
            {"columns", {"t", "x", "re_u", "im_u", "abs_u"}}};
  }

  /// Writes path and a JSON sidecar at path + ".json"; extra is merged into
  /// the sidecar object.
  void save(const std::string& path, const nlohmann::json& extra = nlohmann::json::object()) const {
    std::ofstream csv(path);
    if (!csv) throw ConfigError("cannot open output file: " + path);
    write_csv(csv);
    nlohmann::json meta = metadata();
    for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
    std::ofstream side(path + ".json");
    if (!side) throw ConfigError("cannot open sidecar file: " + path + ".json");
    side << meta.dump(2) << '\n';
  }

  /// Reads a CSV written by save() together with its sidecar.
  static FieldGrid load(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) throw ConfigError("missing sidecar: " + path + ".json");
    const auto meta = nlohmann::json::parse(side);
    auto axis = [&](const char* key) {
      const auto& a = meta.at(key);
      return Axis{a.at("start").get<double>(), a.at("step").get<double>(),
                  a.at("count").get<std::size_t>()};
    };
    FieldGrid g(axis("t"), axis("x"), provenance_from_string(meta.at("provenance").get<std::string>()));
    std::ifstream csv(path);
    if (!csv) throw ConfigError("cannot open field csv: " + path);
    std::string line;
    std::getline(csv, line);
    std::size_t n = 0;
    while (std::getline(csv, line)) {
      if (line.empty()) continue;
      if (n >= g.values_.size()) throw ConfigError("field csv: too many rows");
      double t, x, re, im, ab;
      if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &t, &x, &re, &im, &ab) != 5) {
        throw ConfigError("field csv: malformed row: " + line);
      }
      g.values_[n++] = {re, im};
    }
    if (n != g.values_.size()) throw ConfigError("field csv: row count does not match sidecar");
    return g;
  }

 private:
  Axis t_{};
  Axis x_{};
  Provenance provenance_ = Provenance::NSoliton;
  std::vector<cd> values_;
};

}  // namespace gpm
