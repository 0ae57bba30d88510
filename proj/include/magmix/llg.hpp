#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "magmix/magnetics.hpp"

namespace magmix {

/// Fixed-step RK4 settings.
struct IntegratorConfig {
  double dt = 1e-12;
  int sample_every = 10;
  bool record_per_cell = false;
  /// Stride for per-cell m_z samples; 0 means sample_every.
  int cell_sample_every = 0;
  /// Unrecorded lead-in before the coherent window starts.
  double settle_time = 0.0;
  std::size_t max_relax_steps = 1'000'000;

  void validate() const;
};

/// Uniformly sampled magnetization record. The window starts at t0 and spans
/// samples.size() * dt_sample seconds (end point excluded).
struct TimeSeries {
  double t0 = 0.0;
  double dt_sample = 0.0;
  std::vector<Vec3> samples;

  // Per-cell m_z, sample-major: cell_mz[k * cells + c].
  std::size_t cells = 0;
  double cell_dt_sample = 0.0;
  std::vector<double> cell_mz;

  double duration() const { return dt_sample * static_cast<double>(samples.size()); }
  std::vector<double> component(int axis) const;
  bool has_cells() const { return cells > 0 && !cell_mz.empty(); }
  std::size_t cell_sample_count() const { return cells ? cell_mz.size() / cells : 0; }
  std::vector<double> cell_series(std::size_t cell) const;
};

/// dm/dt for a field H in A/m (Landau-Lifshitz-Gilbert, explicit form).
std::vector<Vec3> llg_rhs(const SpinField& s, const VectorField& h, const MaterialMap& mat);

/// Largest local precession frequency (Hz) at time t, including drive tone frequencies.
double max_precession_frequency(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive,
                                double t);

/// Throws ConfigError unless dt <= 1 / (50 f_max).
void check_time_step(double dt, double f_max);

/// Reusable RK4 stepper that owns its scratch buffers.
class LlgStepper {
 public:
  LlgStepper(const MaterialMap& mat, const DriveSpec& drive);

  /// Replaces every cell's damping (used by relaxation).
  void override_damping(double alpha);

  void rates(std::span<const Vec3> m, double t, std::span<Vec3> dmdt);
  /// Advances m in place by one RK4 step and renormalizes. k1 may be supplied
  /// if it was already evaluated at (m, t).
  void advance(std::span<Vec3> m, double t, double dt, std::span<const Vec3> k1 = {});

  /// max over cells of |m x B_eff| (T), using the field from the last rates() call on m.
  double max_torque(std::span<const Vec3> m) const;

 private:
  FieldKernel kernel_;
  std::vector<double> pre_;    // gamma / (1 + alpha^2)
  std::vector<double> alpha_;
  std::vector<Vec3> h_, k1_, k2_, k3_, k4_, tmp_;
};

/// One RK4 step from t to t + cfg.dt.
SpinField step(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive, double t,
               const IntegratorConfig& cfg);

struct RelaxResult {
  SpinField state;
  std::size_t steps = 0;
  double final_torque = 0.0;
  double energy = 0.0;
};

/// Damped descent (alpha = 1) under the bias field until max |m x B_eff| < tol (T).
/// Steps that would raise the total energy are rejected and retried with half the step.
RelaxResult relax(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive, double tol,
                  const IntegratorConfig& cfg);

struct RunResult {
  TimeSeries series;
  SpinField final_state;
};

/// Driven integration over a coherent window of the given duration, which must be an
/// integer multiple of every tone period and of cfg.dt * cfg.sample_every.
RunResult run(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive, double duration,
              const IntegratorConfig& cfg);

/// Sampling plan for a coherent run driven by integer-Hz tones.
struct RunTiming {
  double dt = 0.0;
  double duration = 0.0;
  double settle_time = 0.0;
  int sample_every = 10;
  int cell_sample_every = 50;
};

struct TimingOptions {
  int periods = 20;           // of the slowest tone
  int settle_periods = 10;
  int analysis_harmonics = 30;
  double oversample = 100.0;  // steps per Nyquist period of the analysis ceiling
  double nyquist_margin = 1.2;
  int sample_every = 10;
  int cell_sample_every = 50;
};

RunTiming plan_run_timing(std::span<const std::int64_t> tone_hz, const TimingOptions& opt = {});

/// Text snapshot: "MMS1 nx ny dx dy thickness" then one "mx my mz" line per cell.
void write_snapshot(std::ostream& os, const SpinField& s);
SpinField read_snapshot(std::istream& is);
void save_snapshot(const std::filesystem::path& path, const SpinField& s);
SpinField load_snapshot(const std::filesystem::path& path);

}  // namespace magmix
