#include "magmix/llg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "magmix/constants.hpp"
#include "magmix/error.hpp"

namespace magmix {

namespace {

// True when x is within 1e-6 of an integer; n receives the rounded value.
bool near_integer(double x, std::int64_t& n) {
  const double r = std::round(x);
  n = static_cast<std::int64_t>(r);
  return std::abs(x - r) <= 1e-6 * std::max(1.0, std::abs(x)) && r >= 0.0;
}

std::int64_t ceil_tolerant(double x) { return static_cast<std::int64_t>(std::ceil(x - 1e-9)); }

}  // namespace

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("integrator: dt must be > 0");
  if (sample_every < 1) throw ConfigError("integrator: sample_every must be >= 1");
  if (cell_sample_every < 0) throw ConfigError("integrator: cell_sample_every must be >= 0");
  if (!(settle_time >= 0.0)) throw ConfigError("integrator: settle_time must be >= 0");
  if (max_relax_steps == 0) throw ConfigError("integrator: max_relax_steps must be >= 1");
}

std::vector<double> TimeSeries::component(int axis) const {
  std::vector<double> out(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Vec3& v = samples[k];
    out[k] = axis == 0 ? v.x : (axis == 1 ? v.y : v.z);
  }
  return out;
}

std::vector<double> TimeSeries::cell_series(std::size_t cell) const {
  const auto n = cell_sample_count();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = cell_mz[k * cells + cell];
  return out;
}

std::vector<Vec3> llg_rhs(const SpinField& s, const VectorField& h, const MaterialMap& mat) {
  if (!(s.grid() == h.grid) || !(s.grid() == mat.grid)) {
    throw ContractViolation("llg_rhs: grid shape mismatch");
  }
  std::vector<Vec3> out(s.size());
  for (std::size_t c = 0; c < s.size(); ++c) {
    const double a = mat.alpha[c];
    const Vec3 b = h.v[c] * kMu0;
    const Vec3 mxb = cross(s[c], b);
    out[c] = (mxb + cross(s[c], mxb) * a) * (-kGammaLL / (1.0 + a * a));
  }
  return out;
}

double max_precession_frequency(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive,
                                double t) {
  const auto h = effective_field(s, mat, drive, t);
  double bmax = 0.0;
  for (const auto& v : h.v) bmax = std::max(bmax, norm(v) * kMu0);
  double f_tone = 0.0;
  for (const auto& tone : drive.tones) {
    bmax += tone.amplitude_T;
    f_tone = std::max(f_tone, tone.frequency_hz);
  }
  return std::max(f_tone, kGammaLL * bmax / (2.0 * kPi));
}

void check_time_step(double dt, double f_max) {
  if (f_max > 0.0 && dt > 1.0 / (50.0 * f_max)) {
    std::ostringstream os;
    os << "integrator: dt = " << dt << " s does not resolve f_max = " << f_max
       << " Hz (need dt <= " << 1.0 / (50.0 * f_max) << " s)";
    throw ConfigError(os.str());
  }
}

LlgStepper::LlgStepper(const MaterialMap& mat, const DriveSpec& drive)
    : kernel_(mat, drive), pre_(mat.grid.cells()), alpha_(mat.alpha) {
  const auto n = mat.grid.cells();
  for (std::size_t c = 0; c < n; ++c) pre_[c] = kGammaLL / (1.0 + alpha_[c] * alpha_[c]);
  h_.resize(n);
  k1_.resize(n);
  k2_.resize(n);
  k3_.resize(n);
  k4_.resize(n);
  tmp_.resize(n);
}

void LlgStepper::override_damping(double alpha) {
  std::fill(alpha_.begin(), alpha_.end(), alpha);
  std::fill(pre_.begin(), pre_.end(), kGammaLL / (1.0 + alpha * alpha));
}

void LlgStepper::rates(std::span<const Vec3> m, double t, std::span<Vec3> dmdt) {
  kernel_.evaluate(m, t, h_);
  const auto n = static_cast<std::ptrdiff_t>(m.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    const Vec3 b = h_[c] * kMu0;
    const Vec3 mxb = cross(m[c], b);
    dmdt[c] = (mxb + cross(m[c], mxb) * alpha_[c]) * (-pre_[c]);
  }
}

void LlgStepper::advance(std::span<Vec3> m, double t, double dt, std::span<const Vec3> k1) {
  const auto n = m.size();
  if (k1.empty()) {
    rates(m, t, k1_);
    k1 = k1_;
  }
  const double half = 0.5 * dt;
  for (std::size_t c = 0; c < n; ++c) tmp_[c] = m[c] + k1[c] * half;
  rates(tmp_, t + half, k2_);
  for (std::size_t c = 0; c < n; ++c) tmp_[c] = m[c] + k2_[c] * half;
  rates(tmp_, t + half, k3_);
  for (std::size_t c = 0; c < n; ++c) tmp_[c] = m[c] + k3_[c] * dt;
  rates(tmp_, t + dt, k4_);
  const double w = dt / 6.0;
  for (std::size_t c = 0; c < n; ++c) {
    Vec3 v = m[c] + (k1[c] + (k2_[c] + k3_[c]) * 2.0 + k4_[c]) * w;
    if (!is_finite(v)) {
      throw DivergenceError("integration diverged at cell " + std::to_string(c) + ", t = " +
                                std::to_string(t + dt) + " s",
                            c, t + dt);
    }
    m[c] = normalized(v);
  }
}

double LlgStepper::max_torque(std::span<const Vec3> m) const {
  double tmax = 0.0;
  for (std::size_t c = 0; c < m.size(); ++c) tmax = std::max(tmax, norm(cross(m[c], h_[c] * kMu0)));
  return tmax;
}

SpinField step(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive, double t,
               const IntegratorConfig& cfg) {
  cfg.validate();
  check_time_step(cfg.dt, max_precession_frequency(s, mat, drive, t));
  SpinField out = s;
  LlgStepper stepper(mat, drive);
  stepper.advance(out.mutable_values(), t, cfg.dt);
  return out;
}

RelaxResult relax(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive, double tol,
                  const IntegratorConfig& cfg) {
  if (!(tol > 0.0)) throw ContractViolation("relax: tol must be > 0");
  cfg.validate();
  const DriveSpec bias = drive.bias_only();
  LlgStepper stepper(mat, bias);
  stepper.override_damping(1.0);

  RelaxResult res{s, 0, 0.0, total_energy(s, mat, bias, 0.0)};
  std::vector<Vec3> k1(s.size());
  stepper.rates(res.state.values(), 0.0, k1);
  res.final_torque = stepper.max_torque(res.state.values());
  if (res.final_torque < tol) return res;

  check_time_step(cfg.dt, max_precession_frequency(s, mat, bias, 0.0));
  double dt = cfg.dt;
  SpinField trial = res.state;
  while (res.final_torque >= tol) {
    if (res.steps >= cfg.max_relax_steps) {
      throw ConvergenceError("relax: no convergence after " + std::to_string(res.steps) +
                                 " steps, final torque " + std::to_string(res.final_torque) + " T",
                             res.final_torque);
    }
    auto tv = trial.mutable_values();
    std::copy(res.state.values().begin(), res.state.values().end(), tv.begin());
    stepper.advance(tv, 0.0, dt, k1);
    ++res.steps;
    const double e = total_energy(trial, mat, bias, 0.0);
    if (e <= res.energy) {
      std::swap(res.state, trial);
      res.energy = e;
      stepper.rates(res.state.values(), 0.0, k1);
      res.final_torque = stepper.max_torque(res.state.values());
      dt = std::min(cfg.dt, 2.0 * dt);
    } else {
      dt *= 0.5;
      if (dt < cfg.dt * 1e-6) {
        throw ConvergenceError("relax: stalled with torque " + std::to_string(res.final_torque) +
                                   " T (energy no longer decreases)",
                               res.final_torque);
      }
    }
  }
  return res;
}

RunResult run(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive, double duration,
              const IntegratorConfig& cfg) {
  cfg.validate();
  drive.validate();
  if (!(s.grid() == mat.grid)) throw ContractViolation("run: grid shape mismatch");
  if (!(duration > 0.0)) throw ConfigError("run: duration must be > 0");
  for (const auto& tone : drive.tones) {
    std::int64_t periods = 0;
    if (!near_integer(duration * tone.frequency_hz, periods)) {
      std::ostringstream os;
      os.precision(12);
      os << "run: duration " << duration << " s is not an integer number of periods of the "
         << tone.frequency_hz << " Hz tone";
      throw ConfigError(os.str());
    }
  }
  std::int64_t steps = 0;
  if (!near_integer(duration / cfg.dt, steps) || steps < 1) {
    throw ConfigError("run: duration is not an integer number of time steps");
  }
  const int cell_every = cfg.cell_sample_every > 0 ? cfg.cell_sample_every : cfg.sample_every;
  if (steps % cfg.sample_every != 0 || (cfg.record_per_cell && steps % cell_every != 0)) {
    throw ConfigError("run: step count " + std::to_string(steps) +
                      " is not a multiple of the sampling stride");
  }
  check_time_step(cfg.dt, max_precession_frequency(s, mat, drive, 0.0));

  std::int64_t settle = 0;
  if (cfg.settle_time > 0.0) settle = static_cast<std::int64_t>(std::llround(cfg.settle_time / cfg.dt));

  RunResult out{TimeSeries{}, s};
  TimeSeries& ts = out.series;
  ts.t0 = static_cast<double>(settle) * cfg.dt;
  ts.dt_sample = cfg.dt * cfg.sample_every;
  ts.samples.reserve(static_cast<std::size_t>(steps / cfg.sample_every));
  if (cfg.record_per_cell) {
    ts.cells = s.size();
    ts.cell_dt_sample = cfg.dt * cell_every;
    ts.cell_mz.reserve(static_cast<std::size_t>(steps / cell_every) * s.size());
  }

  LlgStepper stepper(mat, drive);
  auto m = out.final_state.mutable_values();
  const std::int64_t total = settle + steps;
  for (std::int64_t n = 0; n < total; ++n) {
    const std::int64_t r = n - settle;
    if (r >= 0) {
      if (r % cfg.sample_every == 0) ts.samples.push_back(out.final_state.average());
      if (cfg.record_per_cell && r % cell_every == 0) {
        for (const auto& v : m) ts.cell_mz.push_back(v.z);
      }
    }
    stepper.advance(m, static_cast<double>(n) * cfg.dt, cfg.dt);
  }
  return out;
}

RunTiming plan_run_timing(std::span<const std::int64_t> tone_hz, const TimingOptions& opt) {
  if (tone_hz.empty()) throw ConfigError("timing: at least one tone frequency is required");
  std::int64_t g = 0;
  std::int64_t f_min = tone_hz[0];
  std::int64_t f_max = tone_hz[0];
  for (auto f : tone_hz) {
    if (f <= 0) throw ConfigError("timing: tone frequencies must be positive integers (Hz)");
    g = std::gcd(g, f);
    f_min = std::min(f_min, f);
    f_max = std::max(f_max, f);
  }
  if (opt.periods < 1 || opt.settle_periods < 0 || opt.analysis_harmonics < 1 ||
      opt.sample_every < 1 || opt.cell_sample_every < 1) {
    throw ConfigError("timing: periods, harmonics and strides must be positive");
  }
  const double t_common = 1.0 / static_cast<double>(g);
  // Shortest whole number of common periods covering the requested slow-tone periods.
  const std::int64_t n_common = (opt.periods * g + f_min - 1) / f_min;
  const double ceiling = std::max(static_cast<double>(opt.analysis_harmonics) * static_cast<double>(f_min),
                                  2.0 * static_cast<double>(f_max));
  const double dt_target = 1.0 / (opt.oversample * opt.nyquist_margin * ceiling);
  const std::int64_t stride = std::lcm<std::int64_t>(opt.sample_every, opt.cell_sample_every);
  std::int64_t per_common = ceil_tolerant(t_common / dt_target);
  per_common = ((per_common + stride - 1) / stride) * stride;

  RunTiming rt;
  rt.dt = t_common / static_cast<double>(per_common);
  rt.duration = t_common * static_cast<double>(n_common);
  const double settle = static_cast<double>(opt.settle_periods) / static_cast<double>(f_min);
  rt.settle_time = static_cast<double>(ceil_tolerant(settle / rt.dt)) * rt.dt;
  rt.sample_every = opt.sample_every;
  rt.cell_sample_every = opt.cell_sample_every;
  return rt;
}

}  // namespace magmix
