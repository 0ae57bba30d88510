#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "magmix/vec3.hpp"

namespace magmix {

/// Cell geometry of a single-layer film. Cells are stored row-major with x fastest.
struct Grid {
  int nx = 256;
  int ny = 64;
  double dx = 5e-9;
  double dy = 5e-9;
  double thickness = 15e-9;

  std::size_t cells() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double cell_volume() const { return dx * dy * thickness; }

  /// Throws ConfigError unless nx, ny >= 2 and all lengths are positive.
  void validate() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Unit magnetization per cell. Every mutating entry point renormalizes.
class SpinField {
 public:
  explicit SpinField(const Grid& grid, const Vec3& initial = {1.0, 0.0, 0.0});

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return m_.size(); }

  const Vec3& operator[](std::size_t idx) const { return m_[idx]; }
  const Vec3& at(int i, int j) const { return m_[grid_.index(i, j)]; }
  void set(std::size_t idx, const Vec3& v);
  void set(int i, int j, const Vec3& v) { set(grid_.index(i, j), v); }

  std::span<const Vec3> values() const { return m_; }
  /// Raw access for integrators; callers must call renormalize() afterwards.
  std::span<Vec3> mutable_values() { return m_; }
  void renormalize();

  Vec3 average() const;

  friend bool operator==(const SpinField&, const SpinField&) = default;

 private:
  Grid grid_;
  std::vector<Vec3> m_;
};

enum class DemagMode { ThinFilmLocal, None };

/// Accepts "thin-film-local" and "none"; anything else is a ConfigError.
DemagMode parse_demag_mode(std::string_view name);
std::string_view to_string(DemagMode mode);

/// Bulk parameters used to fill a MaterialMap. Defaults are CoFeB-like.
struct Material {
  double Ms = 1.0e6;      // A/m
  double A_ex = 1.5e-11;  // J/m
  double K_u = 5.0e3;     // J/m^3
  Vec3 easy_axis{1.0, 0.0, 0.0};
  double alpha = 0.02;
};

/// Per-cell material parameters.
struct MaterialMap {
  Grid grid;
  std::vector<double> Ms;
  std::vector<double> A_ex;
  std::vector<double> K_u;
  std::vector<Vec3> easy_axis;
  std::vector<double> alpha;
  DemagMode demag = DemagMode::ThinFilmLocal;

  static MaterialMap uniform(const Grid& grid, const Material& mat,
                             DemagMode demag = DemagMode::ThinFilmLocal);

  void set_cell(std::size_t idx, const Material& mat);
  /// Ms > 0, A_ex >= 0, K_u >= 0, alpha in [0, 1], |u| = 1. Throws ConfigError.
  void validate() const;
};

struct Tone {
  double amplitude_T = 0.0;
  double frequency_hz = 1.0;
  double phase = 0.0;
  Vec3 axis{0.0, 1.0, 0.0};
};

/// Spatially uniform applied field: static bias plus RF tones.
struct DriveSpec {
  Vec3 bias_T{};
  std::vector<Tone> tones;

  void validate() const;
  DriveSpec bias_only() const { return DriveSpec{bias_T, {}}; }
};

/// Per-cell 3-vector in A/m.
struct VectorField {
  Grid grid;
  std::vector<Vec3> v;

  explicit VectorField(const Grid& g) : grid(g), v(g.cells()) {}
};

VectorField exchange_field(const SpinField& s, const MaterialMap& mat);
VectorField anisotropy_field(const SpinField& s, const MaterialMap& mat);
VectorField demag_field(const SpinField& s, const MaterialMap& mat, DemagMode mode);

/// Applied flux density (T) at time t.
Vec3 applied_flux_density(const DriveSpec& drive, double t);
/// Applied field (A/m), identical in every cell.
VectorField zeeman_field(const DriveSpec& drive, double t, const Grid& grid);

VectorField effective_field(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive,
                            double t);

/// Total micromagnetic energy in joules.
double total_energy(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive, double t);

/// Fused effective-field evaluator with precomputed per-cell coefficients. This is the
/// hot path used by the integrator; the per-term functions above are the reference.
class FieldKernel {
 public:
  FieldKernel(const MaterialMap& mat, const DriveSpec& drive);

  const Grid& grid() const { return grid_; }

  /// Writes H_eff (A/m) for magnetization m at time t into h.
  void evaluate(std::span<const Vec3> m, double t, std::span<Vec3> h) const;

 private:
  Grid grid_;
  DriveSpec drive_;
  // Exchange coupling to the -x, +x, -y, +y neighbour (zero across the film edge).
  std::vector<double> cxm_, cxp_, cym_, cyp_;
  std::vector<double> anis_;
  std::vector<Vec3> axis_;
  std::vector<double> demag_;
};

}  // namespace magmix
