#pragma once

// Command-line front end. Exit codes: 0 ok, 2 configuration error,
// 3 solver divergence or failure, 4 failed --check.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpm/asymptotics.hpp"
#include "gpm/config.hpp"
#include "gpm/errors.hpp"
#include "gpm/field_grid.hpp"
#include "gpm/marchenko.hpp"
#include "gpm/nsoliton.hpp"
#include "gpm/validate.hpp"

namespace gpm::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDivergence = 3, kCheckFailed = 4 };

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

class Printer {
 public:
  explicit Printer(std::ostream& os) : os_(os) {}
  void kv(const std::string& key, double v) { os_ << key << '=' << fmt(v) << '\n'; }
  void kv(const std::string& key, std::size_t v) { os_ << key << '=' << v << '\n'; }
  void kv(const std::string& key, const std::string& v) { os_ << key << '=' << v << '\n'; }

 private:
  std::ostream& os_;
};

namespace detail {

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("not a number in list: " + item);
    }
  }
  return out;
}

inline FieldGrid build_field(const RunConfig& cfg) {
  if (!cfg.input.empty()) return FieldGrid::load(cfg.input);
  const ScatteringData data = cfg.scattering();
  if (cfg.source == "perturbed") {
    return perturbed_grid_eval(data, cfg.reflection_coefficient(), cfg.grid, cfg.half_line(), cfg.solver(),
                               cfg.kernel_options())
        .field;
  }
  return grid_eval(data, cfg.grid);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open output file: " + path);
  f << text;
}

inline int check_result(Printer& p, bool check, bool ok) {
  if (!check) return kOk;
  p.kv("check", std::string(ok ? "pass" : "fail"));
  return ok ? kOk : kCheckFailed;
}

inline int validate_params(const RunConfig& cfg, Printer& p) {
  const ScatteringData data = cfg.scattering();
  const ReflectionCoefficient refl = cfg.reflection_coefficient();
  p.kv("N", data.size());
  for (std::size_t k = 0; k < data.size(); ++k) p.kv("nu_" + std::to_string(k + 1), data.nu(k));
  p.kv("nus_distinct", std::string(data.nus_pairwise_distinct() ? "true" : "false"));
  p.kv("reflection", cfg.reflection.family);
  p.kv("status", std::string("ok"));
  return kOk;
}

inline int nsoliton_eval(const RunConfig& cfg, Printer& p) {
  const FieldGrid f = grid_eval(cfg.scattering(), cfg.grid);
  double max_abs = 0.0;
  for (const cd& u : f.values()) max_abs = std::max(max_abs, std::abs(u));
  if (!cfg.output.empty()) f.save(cfg.output);
  p.kv("provenance", std::string(to_string(f.provenance())));
  p.kv("points", f.values().size());
  p.kv("max_abs_u", max_abs);
  return kOk;
}

inline int perturbed_eval(const RunConfig& cfg, Printer& p, bool check) {
  const PerturbedField pf = perturbed_grid_eval(cfg.scattering(), cfg.reflection_coefficient(), cfg.grid,
                                                cfg.half_line(), cfg.solver(), cfg.kernel_options());
  double ratio = 0.0, residual = 0.0, budget = 0.0;
  std::size_t iters = 0;
  for (const auto& d : pf.diagnostics) {
    ratio = std::max(ratio, d.contraction_ratio);
    residual = std::max(residual, d.residual);
    budget = std::max(budget, d.error_budget);
    iters = std::max(iters, d.iterations);
  }
  if (!cfg.output.empty()) pf.field.save(cfg.output, {{"diagnostics", pf.diagnostics_json()}});
  p.kv("provenance", std::string(to_string(pf.field.provenance())));
  p.kv("points", pf.field.values().size());
  p.kv("max_iterations", iters);
  p.kv("max_ratio", ratio);
  p.kv("max_residual", residual);
  p.kv("max_budget", budget);
  return check_result(p, check, ratio < cfg.ratio_tol && residual <= 10.0 * cfg.tol);
}

inline int residual(const RunConfig& cfg, Printer& p, bool check) {
  const FieldGrid f = build_field(cfg);
  const ResidualReport r = gp_residual(f);
  if (!cfg.output.empty()) r.residual.save(cfg.output, {{"quantity", "gp_residual"}});
  p.kv("h", r.h);
  p.kv("tau", r.tau);
  p.kv("linf", r.linf);
  p.kv("l2", r.l2);
  return check_result(p, check, r.linf <= cfg.residual_tol);
}

inline int lax_check(const RunConfig& cfg, Printer& p, bool check) {
  const ScatteringData data = cfg.scattering();
  const ReflectionCoefficient refl = cfg.source == "perturbed" ? cfg.reflection_coefficient()
                                                               : ReflectionCoefficient::none();
  const Axis xa = cfg.grid.x_axis();
  const double t = cfg.grid.t_min;
  GridSpec slice = cfg.grid;
  slice.t_max = slice.t_min;
  const FieldGrid f = refl.is_zero()
                          ? grid_eval(data, slice)
                          : perturbed_grid_eval(data, refl, slice, cfg.half_line(), cfg.solver(),
                                                cfg.kernel_options())
                                .field;
  const ZSState st = zs_eigenfunction(data, refl, t, xa, cd(cfg.xi_re, cfg.xi_im), cfg.half_line(),
                                      cfg.solver(), cfg.kernel_options());
  const double r = lax_residual(st, f, 0);
  p.kv("t", t);
  p.kv("re_lambda", st.lambda.real());
  p.kv("im_lambda", st.lambda.imag());
  p.kv("lax_residual", r);
  return check_result(p, check, r <= cfg.lax_tol);
}

inline int asymptotics(const RunConfig& cfg, Printer& p, bool check) {
  const ScatteringData data = cfg.scattering();
  const std::vector<double> etas = cfg.etas();
  bool ok = true;
  for (std::size_t k = 1; k <= data.size(); ++k) {
    for (TimeSign s : {TimeSign::Minus, TimeSign::Plus}) {
      const auto dev = empirical_limit(data, k, s, cfg.times, etas);
      const std::string tag = std::to_string(k) + (s == TimeSign::Minus ? "_minus" : "_plus");
      p.kv("eta_" + tag, shift_eta(data, k, s));
      for (std::size_t i = 0; i < dev.size(); ++i) p.kv("dev_" + tag + "_T" + fmt(cfg.times[i]), dev[i]);
      if (!dev.empty() && !(dev.back() <= cfg.asymptotic_tol)) ok = false;
    }
  }
  return check_result(p, check, ok);
}

inline std::string shift_table_csv(const ScatteringData& data) {
  std::ostringstream os;
  os << "k,sign,eta,re_A,im_A,theta_k\n";
  for (const ShiftReport& r : shift_table(data)) {
    os << r.k << ',' << to_char(r.sign) << ',' << fmt(r.eta) << ',' << fmt(r.phase.real()) << ','
       << fmt(r.phase.imag()) << ',' << fmt(r.theta) << '\n';
  }
  return os.str();
}

inline int shift_table_cmd(const RunConfig& cfg, std::ostream& out) {
  const std::string csv = shift_table_csv(cfg.scattering());
  if (cfg.output.empty()) {
    out << csv;
  } else {
    write_text(cfg.output, csv);
  }
  return kOk;
}

inline int evolve_cn(const RunConfig& cfg, Printer& p, bool check) {
  const ScatteringData data = cfg.scattering();
  const Axis xa = cfg.grid.x_axis();
  std::vector<cd> init(xa.count);
  for (std::size_t j = 0; j < xa.count; ++j) init[j] = u_N(data, cfg.grid.t_min, xa.at(j));
  CnOptions opt;
  opt.save_stride = cfg.save_stride;
  const double lo = xa.start, hi = xa.back();
  const FieldGrid f = cn_evolve(
      init, xa, cfg.grid.t_min, cfg.grid.t_max, cfg.grid.tau, [&](double t) { return u_N(data, t, lo); },
      [&](double t) { return u_N(data, t, hi); }, opt);
  FieldGrid exact(f.t_axis(), f.x_axis(), Provenance::NSoliton);
  for (std::size_t i = 0; i < f.t_axis().count; ++i) {
    for (std::size_t j = 0; j < xa.count; ++j) exact(i, j) = u_N(data, f.t_axis().at(i), xa.at(j));
  }
  const FieldGap gap = compare_fields(f, exact);
  if (!cfg.output.empty()) f.save(cfg.output);
  p.kv("steps", static_cast<std::size_t>(std::llround((cfg.grid.t_max - cfg.grid.t_min) / cfg.grid.tau)));
  p.kv("linf_gap", gap.linf);
  p.kv("rms_gap", gap.rms);
  return check_result(p, check, gap.linf <= cfg.cn_tol);
}

}  // namespace detail

/// Runs one subcommand; argv[0] is the program name.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Gross-Pitaevskii solitons via the Marchenko system", "gpm"};
  app.require_subcommand(1);

  std::string config_path, lambdas, mus0, family, output, source, input;
  double amplitude = 0, width = 0, t_min = 0, t_max = 0, tau = 0, x_min = 0, x_max = 0, h = 0, p_len = 0;
  double tol = 0, xi_re = 0, xi_im = 0;
  std::size_t m_count = 0, max_iter = 0, stride = 0;
  bool check = false;

  app.add_option("-c,--config", config_path, "JSON run configuration");
  auto* o_lambdas = app.add_option("--lambdas", lambdas, "comma-separated spectral points");
  auto* o_mus = app.add_option("--mus0", mus0, "comma-separated norming constants");
  auto* o_family = app.add_option("--family", family, "reflection family: none|gaussian|table");
  auto* o_amp = app.add_option("--amplitude", amplitude, "reflection amplitude");
  auto* o_width = app.add_option("--width", width, "gaussian width");
  auto* o_tmin = app.add_option("--t-min", t_min);
  auto* o_tmax = app.add_option("--t-max", t_max);
  auto* o_tau = app.add_option("--tau", tau);
  auto* o_xmin = app.add_option("--x-min", x_min);
  auto* o_xmax = app.add_option("--x-max", x_max);
  auto* o_h = app.add_option("--dx", h, "spatial step");
  auto* o_p = app.add_option("--P", p_len, "half-line length");
  auto* o_m = app.add_option("--M", m_count, "half-line intervals");
  auto* o_tol = app.add_option("--tol", tol, "fixed-point tolerance");
  auto* o_iter = app.add_option("--max-iter", max_iter);
  auto* o_out = app.add_option("-o,--output", output, "output file");
  auto* o_src = app.add_option("--source", source, "nsoliton|perturbed");
  auto* o_in = app.add_option("--input", input, "saved field CSV (residual)");
  auto* o_xre = app.add_option("--xi-re", xi_re);
  auto* o_xim = app.add_option("--xi-im", xi_im);
  auto* o_stride = app.add_option("--save-stride", stride);
  app.add_flag("--check", check, "exit 4 when the configured tolerance is not met");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"validate-params", "validate scattering data"},
      {"nsoliton-eval", "sample the N-soliton on the grid"},
      {"perturbed-eval", "sample the radiation-perturbed field on the grid"},
      {"residual", "finite-difference GP residual of a field"},
      {"lax-check", "Zakharov-Shabat eigenfunction residual"},
      {"asymptotics", "long-time limits against shifted one-solitons"},
      {"shift-table", "closed-form shifts and phases as CSV"},
      {"evolve-cn", "Crank-Nicolson evolution against the exact field"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  Printer p(out);
  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    if (*o_lambdas) cfg.lambdas = detail::parse_list(lambdas);
    if (*o_mus) cfg.mus0 = detail::parse_list(mus0);
    if (*o_family) cfg.reflection.family = family;
    if (*o_amp) cfg.reflection.amplitude = amplitude;
    if (*o_width) cfg.reflection.width = width;
    if (*o_tmin) cfg.grid.t_min = t_min;
    if (*o_tmax) cfg.grid.t_max = t_max;
    if (*o_tau) cfg.grid.tau = tau;
    if (*o_xmin) cfg.grid.x_min = x_min;
    if (*o_xmax) cfg.grid.x_max = x_max;
    if (*o_h) cfg.grid.h = h;
    if (*o_p) cfg.half_line_length = p_len;
    if (*o_m) cfg.half_line_intervals = m_count;
    if (*o_tol) cfg.tol = tol;
    if (*o_iter) cfg.max_iter = max_iter;
    if (*o_out) cfg.output = output;
    if (*o_src) cfg.source = source;
    if (*o_in) cfg.input = input;
    if (*o_xre) cfg.xi_re = xi_re;
    if (*o_xim) cfg.xi_im = xi_im;
    if (*o_stride) cfg.save_stride = stride;
    cfg.check();

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd != "shift-table") p.kv("command", cmd);  // shift-table stdout is pure CSV
    if (cmd == "validate-params") return detail::validate_params(cfg, p);
    if (cmd == "nsoliton-eval") return detail::nsoliton_eval(cfg, p);
    if (cmd == "perturbed-eval") return detail::perturbed_eval(cfg, p, check);
    if (cmd == "residual") return detail::residual(cfg, p, check);
    if (cmd == "lax-check") return detail::lax_check(cfg, p, check);
    if (cmd == "asymptotics") return detail::asymptotics(cfg, p, check);
    if (cmd == "shift-table") return detail::shift_table_cmd(cfg, out);
    if (cmd == "evolve-cn") return detail::evolve_cn(cfg, p, check);
    err << "unknown subcommand: " << cmd << '\n';
    return kConfigError;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kDivergence;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kConfigError;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  argv.push_back("gpm");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace gpm::cli
