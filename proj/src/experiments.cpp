#include "magmix/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "magmix/error.hpp"

namespace magmix {

void parallel_for_cells(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = n;
  std::exception_ptr err;
  auto worker = [&] {
#ifdef _OPENMP
    omp_set_num_threads(1);  // the pool already owns the cores
#endif
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        fn(k);
      } catch (...) {
        // Report the failure with the lowest index so the error is scheduling-independent.
        std::lock_guard lock(err_mutex);
        if (k < err_index) {
          err_index = k;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

namespace {

template <class F>
auto with_context(const std::string& label, F&& f) {
  try {
    return f();
  } catch (const DivergenceError& e) {
    throw DivergenceError(label + ": " + e.what(), e.cell(), e.time());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(label + ": " + e.what(), e.final_torque());
  } catch (const BudgetError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(label + ": " + e.what());
  }
}

std::vector<std::int64_t> tone_hz(const DriveSpec& drive) {
  std::vector<std::int64_t> out;
  for (const auto& t : drive.tones) out.push_back(std::llround(t.frequency_hz));
  return out;
}

void note(const RunOptions& opt, const std::string& msg) {
  if (!opt.progress) return;
  static std::mutex m;
  std::lock_guard lock(m);
  *opt.progress << msg << '\n' << std::flush;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Tone pump_tone(const Scenario& sc, double f) {
  Tone t = sc.drive.tones.empty() ? Tone{8e-4, f, 0.0, {0.0, 1.0, 0.0}} : sc.drive.tones.front();
  t.frequency_hz = static_cast<double>(std::llround(f));
  return t;
}

// Cell-steps one full-sim run of this drive would take (relaxation not included).
double run_cost(const Scenario& sc, const DriveSpec& drive, int harmonics) {
  Scenario local = sc;
  local.timing.analysis_harmonics = std::max(local.timing.analysis_harmonics, harmonics);
  double duration = 0.0;
  const auto cfg = coherent_config(local, drive, false, &duration);
  return static_cast<double>(sc.full_sim.grid.cells()) * (duration + cfg.settle_time) / cfg.dt;
}

void check_budget(const Scenario& sc, double cost, std::size_t runs, const std::string& what) {
  if (cost <= sc.full_sim.max_cell_steps) return;
  throw BudgetError(what + ": full-sim needs " + fmt("%.3e", cost) + " cell-steps (" + std::to_string(runs) +
                    " runs on " + std::to_string(sc.full_sim.grid.nx) + "x" + std::to_string(sc.full_sim.grid.ny) +
                    " cells), budget full_sim.max_cell_steps = " + fmt("%.3e", sc.full_sim.max_cell_steps));
}

// Relax the full-sim texture under the bias, run the drive, and return the m_z spectrum.
Spectrum simulate_cell(const Scenario& sc, const DriveSpec& drive, int harmonics) {
  Scenario local = sc;
  local.timing.analysis_harmonics = std::max(local.timing.analysis_harmonics, harmonics);
  auto [s, mat] = build_texture(sc.full_sim.texture, sc.full_sim.grid, sc.material, sc.demag);
  double duration = 0.0;
  const auto cfg = coherent_config(local, drive, false, &duration);
  const auto relaxed = relax(s, mat, drive.bias_only(), sc.analysis.relax_tol, cfg);
  const auto res = run(relaxed.state, mat, drive, duration, cfg);
  return fft_spectrum(res.series, 2);
}

bool near_esr(double f, std::span<const EsrPair> esr, double tol) {
  for (const auto& p : esr) {
    if (std::abs(f - p.f_plus) <= tol || std::abs(f - p.f_minus) <= tol) return true;
  }
  return false;
}

// Line amplitude read from a simulated spectrum; 0 if the line is off-grid or past Nyquist.
double line_field(const Spectrum& spec, double f, double kappa) {
  const double k = std::round(f / spec.df);
  if (k < 1.0 || k >= static_cast<double>(spec.bins.size())) return 0.0;
  if (std::abs(k * spec.df - f) > 1e-6 * spec.df) return 0.0;
  return kappa * std::abs(spec.bins[static_cast<std::size_t>(k)]);
}

std::vector<double> mixing_frequencies(double f1, double f2, int max_order) {
  std::vector<double> out;
  for (int a = 0; a <= max_order; ++a) {
    for (int b = -(max_order - a); b <= max_order - a; ++b) {
      if (a == 0 && b <= 0) continue;
      const double f = std::abs(a * f1 + b * f2);
      if (f > 0.0) out.push_back(f);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double x, double y) { return std::abs(x - y) <= 1e-6; }),
            out.end());
  return out;
}

}  // namespace

IntegratorConfig coherent_config(const Scenario& sc, const DriveSpec& drive, bool per_cell, double* duration) {
  if (drive.tones.empty()) throw ConfigError("coherent run needs at least one drive tone");
  const auto tones = tone_hz(drive);
  const RunTiming timing = plan_run_timing(tones, sc.timing);
  IntegratorConfig cfg = sc.integrator;
  if (!(cfg.dt > 0.0)) {
    cfg.dt = timing.dt;
    cfg.sample_every = timing.sample_every;
    cfg.cell_sample_every = timing.cell_sample_every;
    cfg.settle_time = timing.settle_time;
  }
  cfg.record_per_cell = per_cell;
  if (duration) *duration = timing.duration;
  return cfg;
}

SweepResult HarmonicResult::table() const {
  SweepResult out;
  out.axis1_name = "texture";
  out.axis2_name = "harmonic";
  for (std::size_t r = 0; r < rows.size(); ++r) out.axis1.push_back(static_cast<double>(r));
  if (!rows.empty()) {
    for (const auto& h : rows.front().harmonics) out.axis2.push_back(h.first);
  }
  for (const auto& row : rows) {
    for (const auto& h : row.harmonics) out.values.push_back(std::abs(h.second));
  }
  return out;
}

HarmonicResult run_harmonic_experiment(const Scenario& sc, const RunOptions& opt) {
  if (sc.drive.tones.size() != 1) {
    throw ConfigError("harmonics: the drive must have exactly one tone, found " +
                      std::to_string(sc.drive.tones.size()));
  }
  HarmonicResult out;
  out.f_pump = static_cast<double>(std::llround(sc.drive.tones.front().frequency_hz));
  const EsrPair nv_esr = esr_frequencies(sc.nv, sc.sensing.bias_T, sc.sensing.axes.empty() ? 0 : sc.sensing.axes[0]);

  std::vector<std::optional<TextureRun>> rows(sc.textures.size());
  parallel_for_cells(sc.textures.size(), opt.threads, [&](std::size_t k) {
    const TextureSpec& spec = sc.textures[k];
    const std::string label = spec.label();
    rows[k] = with_context(label, [&] {
      auto [s, mat] = build_texture(spec, sc.grid, sc.material, sc.demag);
      apply_overrides(sc, mat);
      double duration = 0.0;
      const auto cfg = coherent_config(sc, sc.drive, sc.analysis.mode_maps, &duration);
      note(opt, label + ": relaxing");
      auto relaxed = relax(s, mat, sc.drive.bias_only(), sc.analysis.relax_tol, cfg);
      TextureRun row{spec, label, wall_metrics(relaxed.state), relaxed.steps, relaxed.final_torque, {}, {}, {}, {},
                     relaxed.state};
      note(opt, label + ": " + std::to_string(row.walls.wall_count) + " walls after " +
                    std::to_string(relaxed.steps) + " relax steps; driving");
      const auto res = run(relaxed.state, mat, sc.drive, duration, cfg);
      row.spectrum = fft_spectrum(res.series, 2);
      for (int n : sc.analysis.harmonics) {
        row.harmonics.emplace_back(n, harmonic_amplitude(row.spectrum, out.f_pump, n));
        if (sc.analysis.mode_maps) {
          row.mode_maps.emplace_back(n, spatial_mode_map(res.series, n * out.f_pump));
        }
      }
      try {
        row.detection = detectable(row.spectrum, nv_esr, sc.nv.threshold_T, sc.nv.kappa_T);
      } catch (const ContractViolation&) {
        row.detection.reset();  // ESR not on a bin of this record
      }
      note(opt, label + ": done");
      return row;
    });
  });
  for (auto& r : rows) out.rows.push_back(std::move(*r));
  return out;
}

RelaxResult run_relax(const Scenario& sc) {
  const TextureSpec& spec = sc.textures.front();
  return with_context(spec.label(), [&] {
    auto [s, mat] = build_texture(spec, sc.grid, sc.material, sc.demag);
    apply_overrides(sc, mat);
    IntegratorConfig cfg = sc.integrator;
    if (!(cfg.dt > 0.0)) {
      double duration = 0.0;
      cfg = sc.drive.tones.empty() ? IntegratorConfig{} : coherent_config(sc, sc.drive, false, &duration);
    }
    return relax(s, mat, sc.drive.bias_only(), sc.analysis.relax_tol, cfg);
  });
}

SingleRun run_single(const Scenario& sc) {
  const TextureSpec& spec = sc.textures.front();
  return with_context(spec.label(), [&] {
    auto [s, mat] = build_texture(spec, sc.grid, sc.material, sc.demag);
    apply_overrides(sc, mat);
    double duration = 0.0;
    const auto cfg = coherent_config(sc, sc.drive, sc.analysis.mode_maps, &duration);
    const auto relaxed = relax(s, mat, sc.drive.bias_only(), sc.analysis.relax_tol, cfg);
    SingleRun out{run(relaxed.state, mat, sc.drive, duration, cfg), {}};
    out.spectrum = fft_spectrum(out.run.series, 2);
    return out;
  });
}

SweepResult run_odmr_map(const Scenario& sc, const RunOptions& opt) {
  const auto& cfg = sc.odmr_map;
  SweepResult out;
  out.axis1_name = "bias_T";
  out.axis2_name = "pump_hz";
  out.axis1 = cfg.bias_T.values();
  out.axis2 = cfg.pump_hz.values();
  const std::size_t n1 = out.axis1.size();
  const std::size_t n2 = out.axis2.size();
  out.values.assign(n1 * n2, 1.0);

  std::vector<std::array<EsrPair, 4>> esr(n1);
  for (std::size_t i = 0; i < n1; ++i) esr[i] = esr_all_axes(sc.nv, cfg.bias_direction * out.axis1[i]);
  const double tol = 0.5 * sc.nv.linewidth_hz;

  if (!opt.full_sim) {
    parallel_for_cells(n1 * n2, opt.threads, [&](std::size_t idx) {
      const std::size_t i = idx / n2;
      const double f = out.axis2[idx % n2];
      double dip = 0.0;
      for (int n = 1; n <= cfg.max_harmonic; ++n) {
        const double fl = n * f;
        if (!near_esr(fl, esr[i], tol)) continue;
        dip += line_dip(sc.nv, {fl, cfg.analytic_line_T}, esr[i]);
      }
      out.values[idx] = std::max(0.0, 1.0 - dip);
    });
    return out;
  }

  double cost = 0.0;
  for (std::size_t j = 0; j < n2; ++j) {
    DriveSpec d{cfg.bias_direction * out.axis1.front(), {pump_tone(sc, out.axis2[j])}};
    cost += static_cast<double>(n1) * run_cost(sc, d, cfg.max_harmonic);
  }
  check_budget(sc, cost, n1 * n2, "odmr-map");

  parallel_for_cells(n1 * n2, opt.threads, [&](std::size_t idx) {
    const std::size_t i = idx / n2;
    const std::size_t j = idx % n2;
    DriveSpec d{cfg.bias_direction * out.axis1[i], {pump_tone(sc, out.axis2[j])}};
    const double f = d.tones.front().frequency_hz;
    const Spectrum spec = with_context("odmr-map cell " + std::to_string(idx),
                                       [&] { return simulate_cell(sc, d, cfg.max_harmonic); });
    double dip = 0.0;
    for (int n = 1; n <= cfg.max_harmonic; ++n) {
      const double fl = n * f;
      const double b = line_field(spec, fl, sc.nv.kappa_T);
      if (!near_esr(fl, esr[i], tol) || !(b > sc.nv.threshold_T)) continue;
      dip += line_dip(sc.nv, {fl, b}, esr[i]);
    }
    out.values[idx] = std::max(0.0, 1.0 - dip);
    note(opt, "odmr-map cell " + std::to_string(idx + 1) + "/" + std::to_string(n1 * n2));
  });
  return out;
}

SweepResult run_two_tone_map(const Scenario& sc, const RunOptions& opt) {
  const auto& cfg = sc.two_tone_map;
  SweepResult out;
  out.axis1_name = "f1_hz";
  out.axis2_name = "f2_hz";
  out.axis1 = cfg.f1_hz.values();
  out.axis2 = cfg.f2_hz.values();
  const std::size_t n1 = out.axis1.size();
  const std::size_t n2 = out.axis2.size();
  out.values.assign(n1 * n2, 1.0);
  const auto esr = esr_all_axes(sc.nv, cfg.bias_direction * cfg.bias_T);
  const double tol = cfg.tolerance_hz > 0.0 ? cfg.tolerance_hz : 0.5 * sc.nv.linewidth_hz;

  if (!opt.full_sim) {
    parallel_for_cells(n1 * n2, opt.threads, [&](std::size_t idx) {
      const double f1 = out.axis1[idx / n2];
      const double f2 = out.axis2[idx % n2];
      double dip = 0.0;
      for (double f : mixing_frequencies(f1, f2, cfg.max_order)) {
        if (near_esr(f, esr, tol)) dip += line_dip(sc.nv, {f, cfg.analytic_line_T}, esr);
      }
      out.values[idx] = std::max(0.0, 1.0 - dip);
    });
    return out;
  }

  auto drive_for = [&](double f1, double f2) {
    Tone t1 = pump_tone(sc, f1);
    Tone t2 = t1;
    t2.frequency_hz = static_cast<double>(std::llround(f2));
    t2.amplitude_T = cfg.tone2_amplitude_T;
    // The film sees the same bias as the NV.
    DriveSpec d{cfg.bias_direction * cfg.bias_T, {t1}};
    if (t2.frequency_hz != t1.frequency_hz) d.tones.push_back(t2);
    return d;
  };
  double cost = 0.0;
  for (std::size_t idx = 0; idx < n1 * n2; ++idx) {
    cost += run_cost(sc, drive_for(out.axis1[idx / n2], out.axis2[idx % n2]), 2 * cfg.max_order);
  }
  check_budget(sc, cost, n1 * n2, "two-tone-map");

  parallel_for_cells(n1 * n2, opt.threads, [&](std::size_t idx) {
    const DriveSpec d = drive_for(out.axis1[idx / n2], out.axis2[idx % n2]);
    const double f1 = d.tones.front().frequency_hz;
    const double f2 = d.tones.back().frequency_hz;
    const Spectrum spec = with_context("two-tone-map cell " + std::to_string(idx),
                                       [&] { return simulate_cell(sc, d, 2 * cfg.max_order); });
    double dip = 0.0;
    for (double f : mixing_frequencies(f1, f2, cfg.max_order)) {
      const double b = line_field(spec, f, sc.nv.kappa_T);
      if (near_esr(f, esr, tol) && b > sc.nv.threshold_T) dip += line_dip(sc.nv, {f, b}, esr);
    }
    out.values[idx] = std::max(0.0, 1.0 - dip);
    note(opt, "two-tone-map cell " + std::to_string(idx + 1) + "/" + std::to_string(n1 * n2));
  });
  return out;
}

SensingReport run_sensing_plan(const Scenario& sc, Hz f2, const RunOptions& opt) {
  if (f2 <= 0) throw ContractViolation("sensing plan: f2 must be > 0");
  const auto& cfg = sc.sensing;
  SensingReport rep;
  rep.f2_hz = f2;
  for (int axis : cfg.axes) {
    const EsrPair p = esr_frequencies(sc.nv, cfg.bias_T, axis);
    for (const auto& t : esr_targets(std::span<const EsrPair>(&p, 1))) {
      const bool dup = std::any_of(rep.targets.begin(), rep.targets.end(),
                                   [&](const EsrTarget& o) { return o.f_hz == t.f_hz; });
      if (!dup) rep.targets.push_back(t);
    }
  }

  for (const auto& t : rep.targets) {
    if (f2 < t.f_hz) {
      const auto p = plan_up_conversion(f2, t);
      if (p.f1_hz <= cfg.max_pump_hz) rep.plans.push_back(p);
    } else if (f2 > t.f_hz) {
      for (int k = 1; k + 1 <= cfg.max_order; ++k) {
        const auto p = plan_down_conversion(f2, t, k);
        if (p.f1_hz <= cfg.max_pump_hz && p.f1_hz >= cfg.f1_band.lo) rep.plans.push_back(p);
      }
    } else {
      // The signal already sits on the ESR line: no pump needed.
      rep.plans.push_back({0, 1, 1, 0.0, f2, t.f_hz, t.branch, t.axis});
    }
  }
  for (const auto& p : fingerprint(f2, rep.targets, cfg.max_order, cfg.f1_band)) {
    if (p.b != 0) rep.fingerprint.push_back(p);
  }
  if (rep.plans.empty() && rep.fingerprint.empty()) {
    rep.warnings.push_back("no mixing protocol reaches an ESR line for f2 = " + std::to_string(f2) +
                           " Hz within the pump band and max_order " + std::to_string(cfg.max_order));
  }

  if (cfg.verify) {
    const auto it = std::find_if(rep.plans.begin(), rep.plans.end(), [](const auto& p) { return p.a != 0; });
    if (it == rep.plans.end()) {
      rep.warnings.push_back("verification skipped: no pumped plan");
    } else if (std::abs(it->f1_hz - std::round(it->f1_hz)) > 1e-6) {
      rep.warnings.push_back("verification skipped: pump frequency is not a whole number of Hz");
    } else {
      Tone t1 = pump_tone(sc, it->f1_hz);
      Tone t2 = t1;
      t2.frequency_hz = static_cast<double>(f2);
      t2.amplitude_T = cfg.tone2_amplitude_T;
      DriveSpec d{sc.drive.bias_T, {t1, t2}};
      const int order = it->order();
      check_budget(sc, run_cost(sc, d, order), 1, "sensing verification");
      note(opt, "sensing: verifying (" + std::to_string(it->a) + "," + std::to_string(it->b) + ")");
      const Spectrum spec = with_context("sensing verification", [&] { return simulate_cell(sc, d, order); });
      const double f_esr = static_cast<double>(it->esr_hz);
      const auto det = detectable(spec, EsrPair{f_esr, f_esr, it->axis}, sc.nv.threshold_T, sc.nv.kappa_T);
      rep.verification = SensingReport::Verification{*it, det.field_plus_T, det.plus};
    }
  }
  return rep;
}

}  // namespace magmix
