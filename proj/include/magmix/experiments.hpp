#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "magmix/scenario.hpp"
#include "magmix/spectral.hpp"

namespace magmix {

/// Full-sim request larger than full_sim.max_cell_steps.
class BudgetError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct RunOptions {
  int threads = 1;          // 0 = hardware concurrency
  bool full_sim = false;    // maps: run the LLG solver per cell
  std::ostream* progress = nullptr;
};

/// Runs fn(0..n-1) on a worker pool. Each index is handled exactly once; callers write
/// results into slot [index], so output never depends on scheduling.
void parallel_for_cells(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Row-major scalar map: values[i * axis2.size() + j] belongs to (axis1[i], axis2[j]).
struct SweepResult {
  std::string axis1_name;
  std::string axis2_name;
  std::vector<double> axis1;
  std::vector<double> axis2;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * axis2.size() + j]; }
};

/// Integrator settings for a coherent run of the given drive: the timing plan fills dt
/// (unless the scenario fixes it), the sampling strides and the settle time.
IntegratorConfig coherent_config(const Scenario& sc, const DriveSpec& drive, bool per_cell, double* duration);

struct TextureRun {
  TextureSpec spec;
  std::string label;
  WallMetrics walls;
  std::size_t relax_steps = 0;
  double relax_torque = 0.0;
  Spectrum spectrum;                                  // m_z
  std::vector<std::pair<int, Complex>> harmonics;     // (n, bin at n f_pump)
  std::vector<std::pair<int, ModeMap>> mode_maps;     // when analysis.mode_maps
  std::optional<Detection> detection;                 // ESR of axis 0 under the bias
  SpinField relaxed;
};

struct HarmonicResult {
  double f_pump = 0.0;
  std::vector<TextureRun> rows;

  /// Sweep view: axis1 = texture index, axis2 = harmonic order, value = |amplitude|.
  SweepResult table() const;
};

/// Relax, drive, FFT and read harmonics for every texture in the scenario. Requires a
/// single-tone drive. Solver errors are rethrown with the texture label prepended.
HarmonicResult run_harmonic_experiment(const Scenario& sc, const RunOptions& opt = {});

/// Relaxed state of the first scenario texture under the bias.
RelaxResult run_relax(const Scenario& sc);

struct SingleRun {
  RunResult run;
  Spectrum spectrum;  // m_z
};

/// One coherent driven run of the first scenario texture, starting from its relaxed state.
SingleRun run_single(const Scenario& sc);

/// PL over (bias, pump frequency). Analytic mode places a nominal line at every
/// harmonic n f_pump; full-sim mode takes the line amplitudes kappa |m_z(n f_pump)| from
/// an LLG run per cell. Either way a line only counts when it lies within linewidth / 2
/// of an ESR transition (and, in full-sim mode, exceeds the detection threshold).
SweepResult run_odmr_map(const Scenario& sc, const RunOptions& opt = {});

/// PL over (f1, f2); lines sit at every |a f1 + b f2| with |a| + |b| <= max_order.
SweepResult run_two_tone_map(const Scenario& sc, const RunOptions& opt = {});

struct SensingReport {
  Hz f2_hz = 0;
  std::vector<EsrTarget> targets;
  std::vector<ProtocolSolution> plans;        // up/down conversion and pass-through first
  std::vector<ProtocolSolution> fingerprint;  // all identities involving f2
  std::vector<std::string> warnings;
  struct Verification {
    ProtocolSolution plan;
    double field_T = 0.0;
    bool detected = false;
  };
  std::optional<Verification> verification;
};

/// Protocols for a target f2 against the ESR lines of the sensing axes at sensing.bias_T.
SensingReport run_sensing_plan(const Scenario& sc, Hz f2_target, const RunOptions& opt = {});

}  // namespace magmix
