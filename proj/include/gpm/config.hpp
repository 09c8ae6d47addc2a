#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpm/errors.hpp"
#include "gpm/field_grid.hpp"
#include "gpm/kernels.hpp"
#include "gpm/marchenko.hpp"
#include "gpm/scattering.hpp"

namespace gpm {

struct ReflectionConfig {
  std::string family = "none";
  double amplitude = 0.0;
  double width = 1.0;
  int decay_index = 3;
  std::vector<ReflectionCoefficient::Sample> samples;
  std::string samples_file;  // CSV lambda,plus,minus; alternative to inline samples
};

/// Experiment manifest. Every tolerance the CLI checks lives in here.
struct RunConfig {
  std::vector<double> lambdas;
  std::vector<double> mus0;
  double guard_delta = ScatteringData::kDefaultGuard;
  ReflectionConfig reflection;
  GridSpec grid{0.0, 0.0, 0.01, -10.0, 10.0, 0.05};
  double half_line_length = 45.0;
  std::size_t half_line_intervals = 900;
  double tol = 1e-12;
  std::size_t max_iter = 200;
  double dz = 0.005;
  std::string output;

  // command options
  std::string source = "nsoliton";  // field used by residual / lax-check: nsoliton | perturbed
  std::string input;                // residual: read a saved field instead of building one
  double xi_re = 0.0;
  double xi_im = -0.45;
  std::vector<double> times{10.0, 20.0, 30.0};
  double eta_min = -5.0, eta_max = 5.0, eta_step = 0.1;
  std::size_t save_stride = 1;
  double residual_tol = 1e-2;
  double lax_tol = 1e-3;
  double asymptotic_tol = 1e-5;
  double cn_tol = 5e-3;
  double ratio_tol = 0.5;

  ScatteringData scattering() const { return ScatteringData::validate(lambdas, mus0, guard_delta); }

  ReflectionCoefficient reflection_coefficient() const {
    const auto& r = reflection;
    if (r.family == "none") return ReflectionCoefficient::none();
    if (r.family == "gaussian") return ReflectionCoefficient::gaussian(r.amplitude, r.width, r.decay_index);
    if (r.family == "table") {
      auto samples = r.samples;
      if (!r.samples_file.empty()) samples = read_samples(r.samples_file);
      return ReflectionCoefficient::table(std::move(samples), r.decay_index);
    }
    throw ConfigError("unknown reflection family: " + r.family);
  }

  HalfLineGrid half_line() const { return HalfLineGrid(half_line_length, half_line_intervals); }
  SolverOptions solver() const { return {tol, max_iter, true}; }
  KernelTableOptions kernel_options() const {
    KernelTableOptions k;
    k.dz = dz;
    return k;
  }

  std::vector<double> etas() const {
    std::vector<double> out;
    for (Axis a = Axis::span(eta_min, eta_max, eta_step); out.size() < a.count;) out.push_back(a.at(out.size()));
    return out;
  }

  /// Throws ConfigError on any violated invariant.
  void check() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(grid.tau, "grid.tau");
    positive(grid.h, "grid.h");
    positive(half_line_length, "half_line.P");
    positive(dz, "kernel.dz");
    if (grid.t_max < grid.t_min || grid.x_max < grid.x_min) throw ConfigError("grid bounds are reversed");
    if (half_line_intervals < 2) throw ConfigError("half_line.M must be >= 2");
    if (!(tol > 0.0 && tol <= 1e-2)) throw ConfigError("solver.tol must lie in (0, 1e-2]");
    if (max_iter == 0) throw ConfigError("solver.max_iter must be >= 1");
    if (!input.empty() && !std::filesystem::exists(input)) throw ConfigError("input file not found: " + input);
    if (!reflection.samples_file.empty() && !std::filesystem::exists(reflection.samples_file)) {
      throw ConfigError("reflection samples file not found: " + reflection.samples_file);
    }
    if (source != "nsoliton" && source != "perturbed") throw ConfigError("source must be nsoliton or perturbed");
    if (save_stride == 0) throw ConfigError("options.save_stride must be >= 1");
    try {
      (void)grid.t_axis();
      (void)grid.x_axis();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  }

  static std::vector<ReflectionCoefficient::Sample> read_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open reflection samples: " + path);
    std::vector<ReflectionCoefficient::Sample> out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line[0] == 'l') continue;
      for (char& c : line) {
        if (c == ',') c = ' ';
      }
      std::istringstream row(line);
      ReflectionCoefficient::Sample s{};
      if (!(row >> s.lambda >> s.plus >> s.minus)) throw ConfigError("malformed sample row: " + line);
      out.push_back(s);
    }
    return out;
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
      c.lambdas = j.value("lambdas", c.lambdas);
      c.mus0 = j.value("mus0", c.mus0);
      c.guard_delta = j.value("guard_delta", c.guard_delta);
      if (j.contains("reflection")) {
        const auto& r = j.at("reflection");
        c.reflection.family = r.value("family", c.reflection.family);
        c.reflection.amplitude = r.value("amplitude", c.reflection.amplitude);
        c.reflection.width = r.value("width", c.reflection.width);
        c.reflection.decay_index = r.value("decay_index", c.reflection.decay_index);
        c.reflection.samples_file = r.value("samples_file", c.reflection.samples_file);
        if (r.contains("samples")) {
          for (const auto& s : r.at("samples")) {
            c.reflection.samples.push_back({s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()});
          }
        }
      }
      if (j.contains("grid")) {
        const auto& g = j.at("grid");
        c.grid.t_min = g.value("t_min", c.grid.t_min);
        c.grid.t_max = g.value("t_max", c.grid.t_max);
        c.grid.tau = g.value("tau", c.grid.tau);
        c.grid.x_min = g.value("x_min", c.grid.x_min);
        c.grid.x_max = g.value("x_max", c.grid.x_max);
        c.grid.h = g.value("h", c.grid.h);
      }
      if (j.contains("half_line")) {
        c.half_line_length = j.at("half_line").value("P", c.half_line_length);
        c.half_line_intervals = j.at("half_line").value("M", c.half_line_intervals);
      }
      if (j.contains("solver")) {
        c.tol = j.at("solver").value("tol", c.tol);
        c.max_iter = j.at("solver").value("max_iter", c.max_iter);
      }
      if (j.contains("kernel")) c.dz = j.at("kernel").value("dz", c.dz);
      c.output = j.value("output", c.output);
      if (j.contains("options")) {
        const auto& o = j.at("options");
        c.source = o.value("source", c.source);
        c.input = o.value("input", c.input);
        c.xi_re = o.value("xi_re", c.xi_re);
        c.xi_im = o.value("xi_im", c.xi_im);
        c.times = o.value("times", c.times);
        c.eta_min = o.value("eta_min", c.eta_min);
        c.eta_max = o.value("eta_max", c.eta_max);
        c.eta_step = o.value("eta_step", c.eta_step);
        c.save_stride = o.value("save_stride", c.save_stride);
        c.residual_tol = o.value("residual_tol", c.residual_tol);
        c.lax_tol = o.value("lax_tol", c.lax_tol);
        c.asymptotic_tol = o.value("asymptotic_tol", c.asymptotic_tol);
        c.cn_tol = o.value("cn_tol", c.cn_tol);
        c.ratio_tol = o.value("ratio_tol", c.ratio_tol);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_json(j);
  }
};

}  // namespace gpm
