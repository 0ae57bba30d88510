#pragma once

#include <array>
#include <span>
#include <vector>

#include "magmix/spectral.hpp"
#include "magmix/vec3.hpp"

namespace magmix {

/// The four <111> NV orientations, with the first one along +x (the bias direction).
std::array<Vec3, 4> default_nv_axes();

struct NVModel {
  double D_hz = 2.870e9;
  double gamma_e = 2.8024e10;  // Hz/T
  std::array<Vec3, 4> axes = default_nv_axes();
  double linewidth_hz = 8e6;   // FWHM
  double contrast_max = 0.02;
  double B_sat_T = 1e-4;
  /// Stray field at the NV per unit normalized film magnetization (T).
  double kappa_T = 1e-3;
  /// Minimum stray-field amplitude (T) that counts as detected.
  double threshold_T = 2.27e-19;

  /// D > 0, linewidth > 0, 0 <= contrast_max < 1, B_sat > 0, unit axes.
  void validate() const;
};

enum class EsrBranch { Plus, Minus };

struct EsrPair {
  double f_plus = 0.0;
  double f_minus = 0.0;
  int axis = 0;
};

/// Ground-state transitions from exact diagonalization of D Sz^2 + gamma_e B.S in the
/// frame of the given axis. B is in tesla, lab frame; |B| must be below 0.1 T.
EsrPair esr_frequencies(const NVModel& nv, const Vec3& b, int axis_index);
std::array<EsrPair, 4> esr_all_axes(const NVModel& nv, const Vec3& b);

/// Eigen-decomposition of a real symmetric 3x3 matrix by cyclic Jacobi rotations.
/// Columns of `vectors` are the eigenvectors.
struct SymmetricEigen3 {
  std::array<double, 3> values{};
  std::array<std::array<double, 3>, 3> vectors{};
};
SymmetricEigen3 jacobi_eigen(std::array<std::array<double, 3>, 3> a);

struct DriveLine {
  double frequency_hz = 0.0;
  double amplitude_T = 0.0;  // transverse
};

/// Unit-peak Lorentzian with full width fwhm.
double lorentzian(double f, double f0, double fwhm);

/// PL reduction caused by one line on every ESR transition in `esr`.
double line_dip(const NVModel& nv, const DriveLine& line, std::span<const EsrPair> esr);

/// Relative PL at each probe frequency (ascending grid). A drive line acts only at the
/// probe point it coincides with (nearest point, within half the local spacing).
std::vector<double> odmr_spectrum(const NVModel& nv, std::span<const DriveLine> lines,
                                  std::span<const EsrPair> esr, std::span<const double> probe_hz);

struct Detection {
  bool plus = false;
  bool minus = false;
  double field_plus_T = 0.0;
  double field_minus_T = 0.0;
};

/// Stray field kappa |m_z(f_ESR)| compared against threshold_T for each branch. The ESR
/// frequency must sit within tolerance_hz of a bin (exactly on a bin when zero).
Detection detectable(const Spectrum& spec, const EsrPair& esr, double threshold_T, double kappa_T,
                     double tolerance_hz = 0.0);

/// Rotating-frame Rabi frequency gamma_e B1 / 2.
double rabi_frequency(const NVModel& nv, double b1_perp);

struct RabiTrace {
  double dt = 0.0;
  std::vector<double> population;  // P(ms = 0)
};

/// P0(t) = (1 + exp(-t / T) cos(2 pi Omega t)) / 2 sampled at k dt for t < duration.
/// t_decay <= 0 or infinity means no decay.
RabiTrace simulate_rabi(double omega_hz, double t_decay, double duration, double dt);

/// Rabi frequency recovered from the zero crossings of P0 - 1/2.
double fit_rabi_frequency(const RabiTrace& trace);

/// Energy ratio (Omega_converted / Omega_reference)^2.
double conversion_efficiency(double omega_converted, double omega_reference);

}  // namespace magmix
