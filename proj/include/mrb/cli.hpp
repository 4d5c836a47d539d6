// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "mrb/approximant.hpp"
#include "mrb/io.hpp"
#include "mrb/oracle.hpp"
#include "mrb/quantization.hpp"
#include "mrb/semiclassical.hpp"

namespace mrb {
namespace cli {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kEmptyResult = 2;

struct Run {
  io::KeyValueFile config;
  std::string out_dir;

  MultiRectBilliard billiard() const {
    if (config.has("billiard")) return io::read_billiard(io::KeyValueFile::from_file(config.raw("billiard")));
    return io::read_billiard(config);
  }
  TruncationSpec truncation() const {
    TruncationSpec t;
    t.M = static_cast<int>(config.integer_or("m_modes", 30));
    t.N = static_cast<int>(config.integer_or("n_modes", 30));
    t.n0 = static_cast<int>(config.integer_or("reference_n0", 1));
    t.m0 = static_cast<int>(config.integer_or("reference_m0", 1));
    if (t.M < 1 || t.N < 1) throw io::ConfigError("m_modes and n_modes must be positive");
    return t;
  }
  ScanOptions scan_options() const {
    ScanOptions o;
    o.threshold_factor = config.number_or("threshold_factor", 1e-6);
    o.threads = static_cast<int>(config.integer_or("threads", 0));
    return o;
  }
  std::ofstream output(const std::string& name) const {
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    auto os = io::open_output(out_dir, name);
    io::write_header(os, config);
    return os;
  }
};

inline int cmd_spectrum(const Run& run) {
  const MultiRectBilliard b = run.billiard();
  const double k_lo = run.config.number("kappa_min");
  const double k_hi = run.config.number("kappa_max");
  const int pts = static_cast<int>(run.config.integer_or("grid_points", 600));
  const SpectrumResult res =
      scan_spectrum(b, k_lo, k_hi, pts, run.truncation(), run.scan_options());

  auto os = run.output("spectrum.csv");
  for (const auto& w : res.warnings) os << "# warning: " << w << "\n";
  os << "index,kappa,kappa_squared,indicator,residual\n";
  for (std::size_t i = 0; i < res.levels.size(); ++i)
    os << i + 1 << ',' << io::format_number(res.levels[i]) << ','
       << io::format_number(res.levels[i] * res.levels[i]) << ','
       << io::format_number(res.indicators[i]) << ',' << io::format_number(res.residuals[i])
       << "\n";
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  if (res.levels.empty()) {
    std::cerr << "no levels found in [" << k_lo << ", " << k_hi << "] at threshold "
              << res.threshold << "\n";
    return kEmptyResult;
  }
  return kOk;
}

inline int cmd_wavefunction(const Run& run) {
  const MultiRectBilliard b = run.billiard();
  const TruncationSpec trunc = run.truncation();
  double kappa;
  if (run.config.has("kappa")) {
    kappa = run.config.number("kappa");
  } else {
    // locate by 1-based level index within the scan range
    const int index = static_cast<int>(run.config.integer("level_index"));
    const auto levels = lowest_levels(b, index, trunc, run.scan_options());
    kappa = levels.back();
  }
  // refine to the nearest indicator minimum so slightly rounded inputs work
  GammaAssembler assembler(b, trunc);
  auto refined = detail::golden_minimize([&](double k) { return assembler.indicator(k); },
                                         kappa * (1.0 - 2e-6), kappa * (1.0 + 2e-6), 1e-12);
  kappa = refined.first;

  const auto amps = solve_amplitudes(b, kappa, trunc);
  const int nx = static_cast<int>(run.config.integer_or("wf_nx", 201));
  const int ny = static_cast<int>(run.config.integer_or("wf_ny", 201));
  const WavefunctionField f = wavefunction(amps.front(), b, nx, ny);

  auto os = run.output("wavefunction.grid");
  os << f.nx << ' ' << f.ny << ' ' << io::format_number(f.bbox.x0) << ' '
     << io::format_number(f.bbox.y0) << ' ' << io::format_number(f.bbox.x1) << ' '
     << io::format_number(f.bbox.y1) << "\n";
  for (int iy = 0; iy < f.ny; ++iy) {
    for (int ix = 0; ix < f.nx; ++ix) os << (ix ? " " : "") << io::format_number(f.values(iy, ix));
    os << "\n";
  }

  auto oc = run.output("matching_error.csv");
  oc << "h_channel,v_channel,x0,y0,x1,y1,matching_error\n";
  for (const auto& ce : f.matching_errors)
    oc << ce.h_channel << ',' << ce.v_channel << ',' << io::format_number(ce.rect.x0) << ','
       << io::format_number(ce.rect.y0) << ',' << io::format_number(ce.rect.x1) << ','
       << io::format_number(ce.rect.y1) << ',' << io::format_number(ce.matching_error) << "\n";
  return kOk;
}

inline int cmd_superscar(const Run& run) {
  const MultiRectBilliard b = run.billiard();
  const TruncationSpec base_trunc = run.truncation();
  const int k = static_cast<int>(run.config.integer_or("k", 1));
  const int l = static_cast<int>(run.config.integer_or("l", 1));

  std::vector<std::int64_t> ns;
  for (const auto& item : run.config.list("approximants"))
    ns.push_back(static_cast<std::int64_t>(std::llround(io::parse_value(item).value)));
  if (ns.empty()) throw io::ConfigError("approximants list is empty");

  auto os = run.output("superscar.csv");
  os << "k,l,n,kappa_sc2,kappa_exact2,delta,rel_dev,dominance_H,dominance_V,overlap,"
        "sin_cert_H,sin_cert_V,bound_H,bound_V,status\n";

  int found = 0;
  for (std::int64_t n : ns) {
    const DrmrbApprox approx = build_approximant(b, n);
    const SemiclassicalMode mode = semiclassical_mode(approx, k, l);

    // make sure the truncation accommodates the mode's sine indices
    TruncationSpec trunc = base_trunc;
    for (const auto& pieces : {mode.h_pieces, mode.v_pieces})
      for (const auto& p : pieces) {
        trunc.M = std::max(trunc.M, p.mx + 6);
        trunc.N = std::max(trunc.N, p.ny + 6);
      }

    // scan a window around the semiclassical level
    SuperscarReport probe;  // window estimate comes from the match routine
    {
      SpectrumResult empty;
      probe = superscar_match(b, approx, k, l, empty, {});
    }
    const double w = probe.window;
    const double k_lo = std::sqrt(std::max(mode.kappa_sc2 - w, 0.25 * mode.kappa_sc2));
    const double k_hi = std::sqrt(mode.kappa_sc2 + w);
    const double mean_gap_k2 = 4.0 * M_PI / b.area();
    const int pts = std::max<int>(
        180, static_cast<int>(run.config.integer_or(
                 "grid_points", 24 * std::max<std::int64_t>(
                                         4, std::llround((2.0 * w) / mean_gap_k2)))));
    const SpectrumResult spec = scan_spectrum(b, k_lo, k_hi, pts, trunc, run.scan_options());

    std::vector<AmplitudeSet> amps;
    double best = std::numeric_limits<double>::infinity();
    double best_kappa = 0.0;
    for (double lev : spec.levels) {
      const double dist = std::abs(lev * lev - mode.kappa_sc2);
      if (dist < best) {
        best = dist;
        best_kappa = lev;
      }
    }
    if (best_kappa > 0.0) {
      try {
        amps = solve_amplitudes(b, best_kappa, trunc, SolveOptions{1e-2, 20.0});
      } catch (const NotAnEigenvalue&) {
      }
    }
    const SuperscarReport rep = superscar_match(b, approx, k, l, spec, amps);
    os << rep.k << ',' << rep.l << ',' << n << ',' << io::format_number(rep.kappa_sc2) << ','
       << io::format_number(rep.kappa_exact2) << ',' << io::format_number(rep.delta) << ','
       << io::format_number(rep.rel_dev) << ',' << io::format_number(rep.dominance_h) << ','
       << io::format_number(rep.dominance_v) << ',' << io::format_number(rep.overlap) << ','
       << io::format_number(rep.sin_cert_h) << ',' << io::format_number(rep.sin_cert_v) << ','
       << io::format_number(rep.bound_h) << ',' << io::format_number(rep.bound_v) << ','
       << (rep.found ? "found" : "NoNearbyLevel") << "\n";
    if (rep.found) ++found;
  }
  return found > 0 ? kOk : kEmptyResult;
}

inline int cmd_approximate(const Run& run) {
  const MultiRectBilliard b = run.billiard();
  auto os = run.output("approximants.txt");
  for (const auto& item : run.config.list("approximants")) {
    const std::int64_t n = static_cast<std::int64_t>(std::llround(io::parse_value(item).value));
    const DrmrbApprox ap = build_approximant(b, n);
    os << "approximant n = " << n << "\n";
    auto axis = [&](const char* name, const AxisApprox& ax, const std::vector<double>& cuts) {
      os << "  " << name << ": common ladder C1 = " << ax.C1 << "\n";
      for (std::size_t i = 0; i < ax.ratios.size(); ++i)
        os << "    cut " << i + 1 << ": " << io::format_number(cuts[i]) << " ~ " << ax.ratios[i].str()
           << " * " << io::format_number(cuts[0]) << "  (error "
           << io::format_number(ax.achieved_error[i]) << ", bound "
           << io::format_number(ax.certified_bound[i]) << ")\n";
    };
    axis("x", ap.x_axis, b.xs());
    axis("y", ap.y_axis, b.ys());
    os << "  max deformation displacement = " << io::format_number(ap.max_displacement) << "\n";
  }
  return kOk;
}

inline int cmd_validate(const Run& run) {
  const MultiRectBilliard b = run.billiard();
  const TruncationSpec trunc = run.truncation();
  const int count = static_cast<int>(run.config.integer_or("levels", 5));
  const double h = run.config.number_or("fd_h", 1.0 / 128.0);
  const double tol = run.config.number_or("tolerance", 0.005);

  const std::vector<double> match = lowest_levels(b, count, trunc, run.scan_options());
  const oracle::OracleReport fd = oracle::fd_oracle(b, h, count);

  {
    auto os = run.output("oracle.csv");
    os << "index,lambda_h,lambda_h2,richardson,est_error\n";
    for (int i = 0; i < count; ++i)
      os << i + 1 << ',' << io::format_number(fd.lambda_h[i]) << ','
         << io::format_number(fd.lambda_h2[i]) << ',' << io::format_number(fd.extrapolated[i])
         << ',' << io::format_number(fd.est_error[i]) << "\n";
  }

  // semiclassical product-sine levels exist for doubly rational billiards
  std::vector<double> sc;
  if (b.is_doubly_rational()) {
    const DrmrbApprox self = build_approximant(b, 1);
    const double px = M_PI * static_cast<double>(self.x_axis.C1) / b.xs()[0];
    const double py = M_PI * static_cast<double>(self.y_axis.C1) / b.ys()[0];
    const double k2max = match[count - 1] * match[count - 1] * 1.0001;
    for (int kk = 1; kk * kk * px * px <= k2max; ++kk)
      for (int ll = 1; kk * kk * px * px + ll * ll * py * py <= k2max; ++ll)
        sc.push_back(kk * kk * px * px + ll * ll * py * py);
    std::sort(sc.begin(), sc.end());
  }

  // Dirichlet bracketing of the ground state
  const Rect box = b.bounding_box();
  const double lower =
      M_PI * M_PI * (1.0 / (box.width() * box.width()) + 1.0 / (box.height() * box.height()));
  double upper = std::numeric_limits<double>::infinity();
  for (const auto& ch : poc_decomposition(b))
    upper = std::min(upper, ch.level(1, 1));

  auto os = run.output("comparison.csv");
  os << "index,matching_k2,fd_richardson_k2,rel_diff_fd,semiclassical_k2,rel_diff_sc,pass\n";
  bool all_pass = true;
  for (int i = 0; i < count; ++i) {
    const double m2 = match[i] * match[i];
    const double f2 = fd.extrapolated[i];
    const double rel = std::abs(m2 / f2 - 1.0);
    double sc2 = std::numeric_limits<double>::quiet_NaN();
    double rel_sc = std::numeric_limits<double>::quiet_NaN();
    for (double s : sc)
      if (!(std::abs(s - m2) > 5.0 * tol * m2) &&
          (std::isnan(sc2) || std::abs(s - m2) < std::abs(sc2 - m2)))
        sc2 = s;
    if (!std::isnan(sc2)) rel_sc = std::abs(m2 / sc2 - 1.0);
    const bool pass = rel <= tol;
    all_pass = all_pass && pass;
    os << i + 1 << ',' << io::format_number(m2) << ',' << io::format_number(f2) << ','
       << io::format_number(rel) << ',' << io::format_number(sc2) << ','
       << io::format_number(rel_sc) << ',' << (pass ? "yes" : "no") << "\n";
  }
  os << "# ground-state bracket: " << io::format_number(lower) << " <= "
     << io::format_number(match[0] * match[0]) << " <= " << io::format_number(upper) << " : "
     << ((match[0] * match[0] >= lower && match[0] * match[0] <= upper * (1 + 1e-9)) ? "ok"
                                                                                     : "violated")
     << "\n";
  return all_pass ? kOk : kEmptyResult;
}

inline int cmd_poc_residuals(const Run& run) {
  const MultiRectBilliard b = run.billiard();
  const TruncationSpec trunc = run.truncation();
  const int m0 = static_cast<int>(run.config.integer("m0"));
  const int n0 = static_cast<int>(run.config.integer("n0"));
  const PurePocResiduals res = pure_poc_residuals(b, m0, n0, trunc.M, trunc.N);

  auto of = run.output("residuals_f.csv");
  of << "m,f\n";
  for (int m = 1; m <= trunc.M; ++m) of << m << ',' << io::format_number(res.f(m - 1)) << "\n";

  auto og = run.output("residuals_g.csv");
  og << "m,n,g\n";
  for (int m = 1; m <= trunc.M; ++m)
    for (int n = 1; n <= trunc.N; ++n)
      og << m << ',' << n << ',' << io::format_number(res.g(m - 1, n - 1)) << "\n";
  return kOk;
}

/// Dispatch one subcommand. Returns a process exit code.
inline int run_command(const std::string& command, const io::KeyValueFile& config,
                       const std::string& out_dir) {
  Run run{config, out_dir};
  try {
    if (command == "spectrum") return cmd_spectrum(run);
    if (command == "wavefunction") return cmd_wavefunction(run);
    if (command == "superscar") return cmd_superscar(run);
    if (command == "approximate") return cmd_approximate(run);
    if (command == "validate") return cmd_validate(run);
    if (command == "poc-residuals") return cmd_poc_residuals(run);
    std::cerr << "unknown command: " << command << "\n";
    return kConfigError;
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidRange& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEmptyResult;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace cli
}  // namespace mrb
