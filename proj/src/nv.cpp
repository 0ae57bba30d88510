#include "magmix/nv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "magmix/constants.hpp"
#include "magmix/error.hpp"

namespace magmix {

std::array<Vec3, 4> default_nv_axes() {
  const double r2 = std::sqrt(2.0);
  const double r6 = std::sqrt(6.0);
  return {Vec3{1.0, 0.0, 0.0}, Vec3{-1.0 / 3.0, 2.0 * r2 / 3.0, 0.0},
          Vec3{-1.0 / 3.0, -r2 / 3.0, r6 / 3.0}, Vec3{-1.0 / 3.0, -r2 / 3.0, -r6 / 3.0}};
}

void NVModel::validate() const {
  if (!(D_hz > 0.0)) throw ConfigError("nv: D must be > 0");
  if (!(gamma_e > 0.0)) throw ConfigError("nv: gamma_e must be > 0");
  if (!(linewidth_hz > 0.0)) throw ConfigError("nv: linewidth must be > 0");
  if (!(contrast_max >= 0.0 && contrast_max < 1.0)) throw ConfigError("nv: contrast_max must lie in [0, 1)");
  if (!(B_sat_T > 0.0)) throw ConfigError("nv: B_sat must be > 0");
  if (!(kappa_T >= 0.0)) throw ConfigError("nv: kappa must be >= 0");
  if (!(threshold_T >= 0.0)) throw ConfigError("nv: threshold must be >= 0");
  for (const auto& a : axes) {
    if (std::abs(norm(a) - 1.0) > 1e-9) throw ConfigError("nv: axes must be unit vectors");
  }
}

SymmetricEigen3 jacobi_eigen(std::array<std::array<double, 3>, 3> a) {
  SymmetricEigen3 out;
  auto& v = out.vectors;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[i][j] = i == j ? 1.0 : 0.0;

  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    const double diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
    if (off <= 1e-34 * diag || off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        // Rotation that annihilates a[p][q] (Numerical Recipes form).
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p];
          const double vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  for (int i = 0; i < 3; ++i) out.values[i] = a[i][i];
  return out;
}

EsrPair esr_frequencies(const NVModel& nv, const Vec3& b, int axis_index) {
  if (axis_index < 0 || axis_index > 3) throw ContractViolation("esr_frequencies: axis index must be 0..3");
  if (!(norm(b) < 0.1)) throw ContractViolation("esr_frequencies: |B| must be below 0.1 T");
  const Vec3& axis = nv.axes[static_cast<std::size_t>(axis_index)];
  const double b_par = dot(b, axis);
  const double b_perp = norm(b - axis * b_par);
  // Basis |+1>, |0>, |-1>; the transverse field is rotated onto the local x axis.
  const double gz = nv.gamma_e * b_par;
  const double gx = nv.gamma_e * b_perp / std::sqrt(2.0);
  const std::array<std::array<double, 3>, 3> h{{{nv.D_hz + gz, gx, 0.0},
                                                {gx, 0.0, gx},
                                                {0.0, gx, nv.D_hz - gz}}};
  const auto eig = jacobi_eigen(h);
  int zero = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(eig.vectors[1][k]) > std::abs(eig.vectors[1][zero])) zero = k;
  }
  double f[2];
  int n = 0;
  for (int k = 0; k < 3; ++k) {
    if (k != zero) f[n++] = eig.values[k] - eig.values[zero];
  }
  return {std::max(f[0], f[1]), std::min(f[0], f[1]), axis_index};
}

std::array<EsrPair, 4> esr_all_axes(const NVModel& nv, const Vec3& b) {
  std::array<EsrPair, 4> out;
  for (int k = 0; k < 4; ++k) out[static_cast<std::size_t>(k)] = esr_frequencies(nv, b, k);
  return out;
}

double lorentzian(double f, double f0, double fwhm) {
  const double hw = 0.5 * fwhm;
  const double d = f - f0;
  return hw * hw / (d * d + hw * hw);
}

double line_dip(const NVModel& nv, const DriveLine& line, std::span<const EsrPair> esr) {
  if (!(line.amplitude_T >= 0.0)) throw ContractViolation("odmr: drive amplitudes must be >= 0");
  const double s = (line.amplitude_T / nv.B_sat_T) * (line.amplitude_T / nv.B_sat_T);
  const double sat = nv.contrast_max * s / (1.0 + s);
  double dip = 0.0;
  for (const auto& p : esr) {
    dip += sat * lorentzian(line.frequency_hz, p.f_plus, nv.linewidth_hz);
    dip += sat * lorentzian(line.frequency_hz, p.f_minus, nv.linewidth_hz);
  }
  return dip;
}

std::vector<double> odmr_spectrum(const NVModel& nv, std::span<const DriveLine> lines,
                                  std::span<const EsrPair> esr, std::span<const double> probe_hz) {
  std::vector<double> pl(probe_hz.size(), 1.0);
  if (probe_hz.empty()) return pl;
  for (const auto& line : lines) {
    if (!(line.amplitude_T >= 0.0)) throw ContractViolation("odmr: drive amplitudes must be >= 0");
    const auto it = std::lower_bound(probe_hz.begin(), probe_hz.end(), line.frequency_hz);
    std::size_t k = static_cast<std::size_t>(it - probe_hz.begin());
    if (k == probe_hz.size() ||
        (k > 0 && line.frequency_hz - probe_hz[k - 1] < probe_hz[k] - line.frequency_hz)) {
      k = k > 0 ? k - 1 : 0;
    }
    double spacing = std::numeric_limits<double>::infinity();
    if (k > 0) spacing = std::min(spacing, probe_hz[k] - probe_hz[k - 1]);
    if (k + 1 < probe_hz.size()) spacing = std::min(spacing, probe_hz[k + 1] - probe_hz[k]);
    const double tol = std::isfinite(spacing) ? 0.5 * spacing : 0.5;
    if (std::abs(line.frequency_hz - probe_hz[k]) > tol) continue;
    DriveLine at_probe{probe_hz[k], line.amplitude_T};
    pl[k] -= line_dip(nv, at_probe, esr);
  }
  for (auto& v : pl) v = std::max(v, 0.0);
  return pl;
}

Detection detectable(const Spectrum& spec, const EsrPair& esr, double threshold_T, double kappa_T,
                     double tolerance_hz) {
  auto field_at = [&](double f) {
    if (!(spec.df > 0.0)) throw ContractViolation("detectable: empty spectrum");
    const double k = std::round(f / spec.df);
    const double off = std::abs(k * spec.df - f);
    if (off > std::max(tolerance_hz, 1e-6 * spec.df) || k < 0 ||
        k >= static_cast<double>(spec.bins.size())) {
      throw ContractViolation("detectable: ESR frequency " + std::to_string(f) +
                              " Hz is not aligned with a spectrum bin (nearest " +
                              std::to_string(k * spec.df) + " Hz)");
    }
    return kappa_T * std::abs(spec.bins[static_cast<std::size_t>(k)]);
  };
  Detection d;
  d.field_plus_T = field_at(esr.f_plus);
  d.field_minus_T = field_at(esr.f_minus);
  d.plus = d.field_plus_T > threshold_T;
  d.minus = d.field_minus_T > threshold_T;
  return d;
}

double rabi_frequency(const NVModel& nv, double b1_perp) {
  if (!(b1_perp >= 0.0)) throw ContractViolation("rabi_frequency: B1 must be >= 0");
  return 0.5 * nv.gamma_e * b1_perp;
}

RabiTrace simulate_rabi(double omega_hz, double t_decay, double duration, double dt) {
  if (!(omega_hz >= 0.0) || !(duration > 0.0) || !(dt > 0.0)) {
    throw ContractViolation("simulate_rabi: need omega >= 0, duration > 0, dt > 0");
  }
  if (!(dt * 20.0 * omega_hz < 1.0)) throw ContractViolation("simulate_rabi: dt must be < 1 / (20 Omega)");
  const bool decays = t_decay > 0.0 && std::isfinite(t_decay);
  RabiTrace tr;
  tr.dt = dt;
  const auto n = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
  tr.population.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double env = decays ? std::exp(-t / t_decay) : 1.0;
    tr.population[k] = 0.5 * (1.0 + env * std::cos(2.0 * kPi * omega_hz * t));
  }
  return tr;
}

double fit_rabi_frequency(const RabiTrace& trace) {
  // Crossings of P0 = 1/2 fall at t_k = (k + 1/2) / (2 Omega), independent of decay.
  std::vector<double> times;
  const auto& p = trace.population;
  // Past the point where the decayed oscillation drops below rounding level, P0 - 1/2 is
  // noise (or exactly zero) and its crossings are meaningless.
  std::size_t end = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (std::abs(p[k] - 0.5) > 1e-9) end = k + 1;
  }
  // Sign changes between consecutive non-zero samples; a crossing that lands on exact
  // zeros is placed at the middle of the zero run.
  std::size_t last = 0;
  double last_v = 0.0;
  bool have_last = false;
  for (std::size_t k = 0; k < end; ++k) {
    const double v = p[k] - 0.5;
    if (v == 0.0) continue;
    if (have_last && (v > 0.0) != (last_v > 0.0)) {
      const double idx = k == last + 1 ? static_cast<double>(last) + last_v / (last_v - v)
                                       : 0.5 * static_cast<double>(last + k);
      times.push_back(trace.dt * idx);
    }
    last = k;
    last_v = v;
    have_last = true;
  }
  if (times.size() < 2) throw ContractViolation("fit_rabi_frequency: fewer than two oscillation half-periods");
  // Least-squares slope of crossing time against crossing index.
  const double n = static_cast<double>(times.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double x = static_cast<double>(k);
    sx += x;
    sy += times[k];
    sxx += x * x;
    sxy += x * times[k];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return 1.0 / (2.0 * slope);
}

double conversion_efficiency(double omega_converted, double omega_reference) {
  if (!(omega_reference > 0.0)) throw ContractViolation("conversion_efficiency: reference Rabi frequency must be > 0");
  const double r = omega_converted / omega_reference;
  return r * r;
}

}  // namespace magmix
