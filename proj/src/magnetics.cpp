#include "magmix/magnetics.hpp"

#include <cmath>
#include <string>

#include "magmix/constants.hpp"
#include "magmix/error.hpp"

namespace magmix {

namespace {

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) {
    throw ContractViolation(std::string(what) + ": grid shape mismatch (" + std::to_string(a.nx) +
                            "x" + std::to_string(a.ny) + " vs " + std::to_string(b.nx) + "x" +
                            std::to_string(b.ny) + ")");
  }
}

double edge_stiffness(double a, double b) {
  // Harmonic mean; reduces to A when both cells agree.
  return (a + b) > 0.0 ? 2.0 * a * b / (a + b) : 0.0;
}

}  // namespace

void Grid::validate() const {
  if (nx < 2 || ny < 2) {
    throw ConfigError("grid: nx and ny must be >= 2 (got " + std::to_string(nx) + "x" +
                      std::to_string(ny) + ")");
  }
  if (!(dx > 0.0) || !(dy > 0.0) || !(thickness > 0.0)) {
    throw ConfigError("grid: dx, dy and thickness must be positive");
  }
}

SpinField::SpinField(const Grid& grid, const Vec3& initial) : grid_(grid) {
  grid_.validate();
  m_.assign(grid_.cells(), normalized(initial));
}

void SpinField::set(std::size_t idx, const Vec3& v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw ContractViolation("SpinField::set: vector must be finite and non-zero");
  m_.at(idx) = v * (1.0 / n);
}

void SpinField::renormalize() {
  for (auto& v : m_) v = normalized(v);
}

Vec3 SpinField::average() const {
  Vec3 sum{};
  for (const auto& v : m_) sum += v;
  return sum * (1.0 / static_cast<double>(m_.size()));
}

DemagMode parse_demag_mode(std::string_view name) {
  if (name == "thin-film-local") return DemagMode::ThinFilmLocal;
  if (name == "none") return DemagMode::None;
  throw ConfigError("unknown demag mode '" + std::string(name) +
                    "' (expected thin-film-local or none)");
}

std::string_view to_string(DemagMode mode) {
  return mode == DemagMode::ThinFilmLocal ? "thin-film-local" : "none";
}

MaterialMap MaterialMap::uniform(const Grid& grid, const Material& mat, DemagMode demag) {
  grid.validate();
  const auto n = grid.cells();
  MaterialMap out;
  out.grid = grid;
  out.Ms.assign(n, mat.Ms);
  out.A_ex.assign(n, mat.A_ex);
  out.K_u.assign(n, mat.K_u);
  out.easy_axis.assign(n, normalized(mat.easy_axis));
  out.alpha.assign(n, mat.alpha);
  out.demag = demag;
  return out;
}

void MaterialMap::set_cell(std::size_t idx, const Material& mat) {
  Ms.at(idx) = mat.Ms;
  A_ex.at(idx) = mat.A_ex;
  K_u.at(idx) = mat.K_u;
  easy_axis.at(idx) = normalized(mat.easy_axis);
  alpha.at(idx) = mat.alpha;
}

void MaterialMap::validate() const {
  grid.validate();
  const auto n = grid.cells();
  if (Ms.size() != n || A_ex.size() != n || K_u.size() != n || easy_axis.size() != n ||
      alpha.size() != n) {
    throw ConfigError("material: per-cell arrays do not match the grid");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(Ms[i] > 0.0)) throw ConfigError("material: Ms must be > 0 (cell " + std::to_string(i) + ")");
    if (!(A_ex[i] >= 0.0)) throw ConfigError("material: A_ex must be >= 0 (cell " + std::to_string(i) + ")");
    if (!(K_u[i] >= 0.0)) throw ConfigError("material: K_u must be >= 0 (cell " + std::to_string(i) + ")");
    if (!(alpha[i] >= 0.0 && alpha[i] <= 1.0)) {
      throw ConfigError("material: alpha must lie in [0, 1] (cell " + std::to_string(i) + ")");
    }
    if (std::abs(norm(easy_axis[i]) - 1.0) > 1e-9) {
      throw ConfigError("material: easy axis must be a unit vector (cell " + std::to_string(i) + ")");
    }
  }
}

void DriveSpec::validate() const {
  if (!is_finite(bias_T)) throw ConfigError("drive: bias must be finite");
  for (std::size_t k = 0; k < tones.size(); ++k) {
    const auto& t = tones[k];
    const auto where = "drive: tone " + std::to_string(k);
    if (!(t.amplitude_T >= 0.0)) throw ConfigError(where + " amplitude must be >= 0");
    if (!(t.frequency_hz > 0.0)) throw ConfigError(where + " frequency must be > 0");
    if (std::abs(norm(t.axis) - 1.0) > 1e-9) throw ConfigError(where + " axis must be a unit vector");
  }
}

VectorField exchange_field(const SpinField& s, const MaterialMap& mat) {
  require_same_grid(s.grid(), mat.grid, "exchange_field");
  const Grid& g = s.grid();
  VectorField out(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const auto c = g.index(i, j);
      const Vec3& m0 = s[c];
      // Mirror boundary: a missing neighbour equals the cell itself.
      const auto xm = g.index(i > 0 ? i - 1 : i, j);
      const auto xp = g.index(i + 1 < g.nx ? i + 1 : i, j);
      const auto ym = g.index(i, j > 0 ? j - 1 : j);
      const auto yp = g.index(i, j + 1 < g.ny ? j + 1 : j);
      const double pre = 2.0 / (kMu0 * mat.Ms[c]);
      Vec3 lap{};
      lap += (s[xm] - m0) * (edge_stiffness(mat.A_ex[c], mat.A_ex[xm]) / (g.dx * g.dx));
      lap += (s[xp] - m0) * (edge_stiffness(mat.A_ex[c], mat.A_ex[xp]) / (g.dx * g.dx));
      lap += (s[ym] - m0) * (edge_stiffness(mat.A_ex[c], mat.A_ex[ym]) / (g.dy * g.dy));
      lap += (s[yp] - m0) * (edge_stiffness(mat.A_ex[c], mat.A_ex[yp]) / (g.dy * g.dy));
      out.v[c] = lap * pre;
    }
  }
  return out;
}

VectorField anisotropy_field(const SpinField& s, const MaterialMap& mat) {
  require_same_grid(s.grid(), mat.grid, "anisotropy_field");
  VectorField out(s.grid());
  for (std::size_t c = 0; c < s.size(); ++c) {
    const Vec3& u = mat.easy_axis[c];
    out.v[c] = u * (2.0 * mat.K_u[c] / (kMu0 * mat.Ms[c]) * dot(s[c], u));
  }
  return out;
}

VectorField demag_field(const SpinField& s, const MaterialMap& mat, DemagMode mode) {
  require_same_grid(s.grid(), mat.grid, "demag_field");
  VectorField out(s.grid());
  if (mode == DemagMode::None) return out;
  for (std::size_t c = 0; c < s.size(); ++c) out.v[c] = {0.0, 0.0, -mat.Ms[c] * s[c].z};
  return out;
}

Vec3 applied_flux_density(const DriveSpec& drive, double t) {
  Vec3 b = drive.bias_T;
  for (const auto& tone : drive.tones) {
    b += tone.axis * (tone.amplitude_T * std::sin(2.0 * kPi * tone.frequency_hz * t + tone.phase));
  }
  return b;
}

VectorField zeeman_field(const DriveSpec& drive, double t, const Grid& grid) {
  VectorField out(grid);
  const Vec3 h = applied_flux_density(drive, t) * (1.0 / kMu0);
  for (auto& v : out.v) v = h;
  return out;
}

VectorField effective_field(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive,
                            double t) {
  require_same_grid(s.grid(), mat.grid, "effective_field");
  FieldKernel kernel(mat, drive);
  VectorField out(s.grid());
  kernel.evaluate(s.values(), t, out.v);
  return out;
}

double total_energy(const SpinField& s, const MaterialMap& mat, const DriveSpec& drive, double t) {
  require_same_grid(s.grid(), mat.grid, "total_energy");
  const Grid& g = s.grid();
  const Vec3 h_zee = applied_flux_density(drive, t) * (1.0 / kMu0);
  const bool demag = mat.demag == DemagMode::ThinFilmLocal;
  double e = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const auto c = g.index(i, j);
      const Vec3& m = s[c];
      // Each interior edge is counted once, through its +x / +y end.
      double ex = 0.0;
      if (i + 1 < g.nx) {
        const auto n = g.index(i + 1, j);
        const Vec3 d = s[n] - m;
        ex += edge_stiffness(mat.A_ex[c], mat.A_ex[n]) * dot(d, d) / (g.dx * g.dx);
      }
      if (j + 1 < g.ny) {
        const auto n = g.index(i, j + 1);
        const Vec3 d = s[n] - m;
        ex += edge_stiffness(mat.A_ex[c], mat.A_ex[n]) * dot(d, d) / (g.dy * g.dy);
      }
      const double mu = dot(m, mat.easy_axis[c]);
      double density = ex - mat.K_u[c] * mu * mu - kMu0 * mat.Ms[c] * dot(m, h_zee);
      if (demag) density += 0.5 * kMu0 * mat.Ms[c] * mat.Ms[c] * m.z * m.z;
      e += density;
    }
  }
  return e * g.cell_volume();
}

FieldKernel::FieldKernel(const MaterialMap& mat, const DriveSpec& drive)
    : grid_(mat.grid), drive_(drive) {
  const Grid& g = grid_;
  const auto n = g.cells();
  cxm_.assign(n, 0.0);
  cxp_.assign(n, 0.0);
  cym_.assign(n, 0.0);
  cyp_.assign(n, 0.0);
  anis_.resize(n);
  axis_.resize(n);
  demag_.resize(n);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const auto c = g.index(i, j);
      const double pre = 2.0 / (kMu0 * mat.Ms[c]);
      if (i > 0) cxm_[c] = pre * edge_stiffness(mat.A_ex[c], mat.A_ex[c - 1]) / (g.dx * g.dx);
      if (i + 1 < g.nx) cxp_[c] = pre * edge_stiffness(mat.A_ex[c], mat.A_ex[c + 1]) / (g.dx * g.dx);
      if (j > 0) cym_[c] = pre * edge_stiffness(mat.A_ex[c], mat.A_ex[c - g.nx]) / (g.dy * g.dy);
      if (j + 1 < g.ny) cyp_[c] = pre * edge_stiffness(mat.A_ex[c], mat.A_ex[c + g.nx]) / (g.dy * g.dy);
      anis_[c] = 2.0 * mat.K_u[c] / (kMu0 * mat.Ms[c]);
      axis_[c] = mat.easy_axis[c];
      demag_[c] = mat.demag == DemagMode::ThinFilmLocal ? -mat.Ms[c] : 0.0;
    }
  }
}

void FieldKernel::evaluate(std::span<const Vec3> m, double t, std::span<Vec3> h) const {
  const Grid& g = grid_;
  const Vec3 h_zee = applied_flux_density(drive_, t) * (1.0 / kMu0);
  const int nx = g.nx;
  const int ny = g.ny;
  const Vec3* mp = m.data();
  Vec3* hp = h.data();
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * static_cast<std::size_t>(nx);
    for (int i = 0; i < nx; ++i) {
      const std::size_t c = row + static_cast<std::size_t>(i);
      const Vec3 m0 = mp[c];
      // Edge coefficients are zero, so clamped indices contribute nothing.
      const Vec3& mxm = mp[i > 0 ? c - 1 : c];
      const Vec3& mxp = mp[i + 1 < nx ? c + 1 : c];
      const Vec3& mym = mp[j > 0 ? c - nx : c];
      const Vec3& myp = mp[j + 1 < ny ? c + nx : c];
      Vec3 out = h_zee;
      out += (mxm - m0) * cxm_[c];
      out += (mxp - m0) * cxp_[c];
      out += (mym - m0) * cym_[c];
      out += (myp - m0) * cyp_[c];
      const Vec3& u = axis_[c];
      out += u * (anis_[c] * dot(m0, u));
      out.z += demag_[c] * m0.z;
      hp[c] = out;
    }
  }
}

}  // namespace magmix
