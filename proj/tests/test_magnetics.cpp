#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "magmix/constants.hpp"
#include "magmix/error.hpp"
#include "magmix/magnetics.hpp"

using namespace magmix;

namespace {

Grid small_grid(int nx, int ny) { return Grid{nx, ny, 4e-9, 6e-9, 10e-9}; }

SpinField random_field(const Grid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  SpinField s(g);
  for (std::size_t c = 0; c < s.size(); ++c) s.set(c, {n(rng), n(rng), n(rng)});
  return s;
}

MaterialMap random_material(const Grid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  auto mat = MaterialMap::uniform(g, Material{});
  for (std::size_t c = 0; c < g.cells(); ++c) {
    mat.Ms[c] *= u(rng);
    mat.A_ex[c] *= u(rng);
    mat.K_u[c] *= u(rng);
  }
  return mat;
}

// Exchange field written out neighbour by neighbour, with the boundary handled by
// literally duplicating the edge value into a ghost cell.
Vec3 exchange_oracle(const SpinField& s, const MaterialMap& mat, int i, int j) {
  const Grid& g = s.grid();
  const auto c = g.index(i, j);
  auto ghost = [&](int a, int b) {
    const int ia = std::clamp(a, 0, g.nx - 1);
    const int jb = std::clamp(b, 0, g.ny - 1);
    return g.index(ia, jb);
  };
  Vec3 h{};
  const int di[4] = {-1, 1, 0, 0};
  const int dj[4] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    const auto n = ghost(i + di[k], j + dj[k]);
    const double a1 = mat.A_ex[c];
    const double a2 = mat.A_ex[n];
    const double a = 2.0 * a1 * a2 / (a1 + a2);
    const double h2 = k < 2 ? g.dx * g.dx : g.dy * g.dy;
    h += (s[n] - s[c]) * (2.0 * a / (kMu0 * mat.Ms[c] * h2));
  }
  return h;
}

double max_diff(const VectorField& a, const VectorField& b) {
  double d = 0.0;
  for (std::size_t c = 0; c < a.v.size(); ++c) d = std::max(d, norm(a.v[c] - b.v[c]));
  return d;
}

double max_norm(const VectorField& a) {
  double d = 0.0;
  for (const auto& v : a.v) d = std::max(d, norm(v));
  return d;
}

}  // namespace

TEST_CASE("grid and spin field invariants") {
  CHECK_THROWS_AS(Grid({1, 4, 1e-9, 1e-9, 1e-9}).validate(), ConfigError);
  CHECK_THROWS_AS(Grid({4, 4, -1e-9, 1e-9, 1e-9}).validate(), ConfigError);
  CHECK_THROWS_AS(SpinField(Grid{4, 1, 1e-9, 1e-9, 1e-9}), ConfigError);

  SpinField s(small_grid(3, 3), {3.0, 4.0, 0.0});
  CHECK(s.at(0, 0).x == doctest::Approx(0.6));
  s.set(1, 2, {0.0, 0.0, 7.0});
  CHECK(s.at(1, 2).z == doctest::Approx(1.0));
  for (std::size_t c = 0; c < s.size(); ++c) CHECK(std::abs(norm(s[c]) - 1.0) <= 1e-12);
  CHECK_THROWS_AS(s.set(0, Vec3{}), ContractViolation);
}

TEST_CASE("material and drive validation") {
  const Grid g = small_grid(3, 3);
  auto mat = MaterialMap::uniform(g, Material{});
  CHECK_NOTHROW(mat.validate());
  mat.alpha[4] = 1.5;
  CHECK_THROWS_AS(mat.validate(), ConfigError);
  mat.alpha[4] = 0.0;  // undamped cells are allowed
  CHECK_NOTHROW(mat.validate());
  mat.Ms[0] = 0.0;
  CHECK_THROWS_AS(mat.validate(), ConfigError);

  DriveSpec d{{1e-3, 0, 0}, {Tone{1e-4, 1e9, 0.0, {0, 1, 0}}}};
  CHECK_NOTHROW(d.validate());
  d.tones[0].frequency_hz = 0.0;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  d.tones[0].frequency_hz = 1e9;
  d.tones[0].axis = {0, 2, 0};
  CHECK_THROWS_AS(d.validate(), ConfigError);

  CHECK(parse_demag_mode("none") == DemagMode::None);
  CHECK_THROWS_AS(parse_demag_mode("full"), ConfigError);
}

TEST_CASE("exchange field") {
  SUBCASE("uniform state gives exactly zero for any grid") {
    for (auto [nx, ny] : {std::pair{2, 2}, std::pair{7, 3}, std::pair{32, 17}}) {
      const Grid g = small_grid(nx, ny);
      SpinField s(g, {0.3, -0.2, 0.9});
      const auto h = exchange_field(s, random_material(g, 3));
      CHECK(max_norm(h) == 0.0);
    }
  }
  SUBCASE("matches the ghost-cell oracle on a 3x3 grid, edges included") {
    const Grid g = small_grid(3, 3);
    const auto s = random_field(g, 11);
    const auto mat = random_material(g, 12);
    const auto h = exchange_field(s, mat);
    for (int j = 0; j < 3; ++j) {
      for (int i = 0; i < 3; ++i) {
        const Vec3 ref = exchange_oracle(s, mat, i, j);
        CHECK(norm(h.v[g.index(i, j)] - ref) <= 1e-12 * (1.0 + norm(ref)));
      }
    }
  }
  SUBCASE("single sinusoid: discrete Laplacian eigenvalue") {
    // m = (cos kx, sin kx, 0) along x; interior cells see H = 2A/(mu0 Ms) * (2 cos(k dx) - 2) / dx^2 * m.
    const Grid g{16, 2, 5e-9, 5e-9, 5e-9};
    const auto mat = MaterialMap::uniform(g, Material{});
    SpinField s(g);
    const double k = 0.3 / g.dx;
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) s.set(i, j, {std::cos(k * i * g.dx), std::sin(k * i * g.dx), 0.0});
    }
    const auto h = exchange_field(s, mat);
    const double lam = 2.0 * Material{}.A_ex / (kMu0 * Material{}.Ms) * (2.0 * std::cos(k * g.dx) - 2.0) /
                       (g.dx * g.dx);
    for (int i = 1; i + 1 < g.nx; ++i) {
      const Vec3 got = h.v[g.index(i, 0)];
      const Vec3 want = s.at(i, 0) * lam;
      CHECK(norm(got - want) <= 1e-9 * std::abs(lam));
    }
  }
}

TEST_CASE("anisotropy, demag and zeeman terms") {
  const Grid g = small_grid(4, 3);
  const auto s = random_field(g, 5);
  auto mat = random_material(g, 6);

  const auto ha = anisotropy_field(s, mat);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const Vec3 want = mat.easy_axis[c] * (2.0 * mat.K_u[c] / (kMu0 * mat.Ms[c]) * s[c].x);
    CHECK(norm(ha.v[c] - want) <= 1e-12 * norm(want) + 1e-300);
  }
  auto mat2 = mat;
  for (auto& k : mat2.K_u) k *= 3.0;
  const auto ha2 = anisotropy_field(s, mat2);
  for (std::size_t c = 0; c < g.cells(); ++c) CHECK(norm(ha2.v[c] - ha.v[c] * 3.0) <= 1e-12 * norm(ha2.v[c]));

  const auto hd = demag_field(s, mat, DemagMode::ThinFilmLocal);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    CHECK(hd.v[c].x == 0.0);
    CHECK(hd.v[c].y == 0.0);
    CHECK(hd.v[c].z == doctest::Approx(-mat.Ms[c] * s[c].z));
  }
  CHECK(max_norm(demag_field(s, mat, DemagMode::None)) == 0.0);

  DriveSpec d{{1e-3, 2e-3, 0.0}, {Tone{5e-4, 1e9, 0.3, {0, 0, 1}}}};
  const double t = 0.37e-9;
  const auto hz = zeeman_field(d, t, g);
  const Vec3 want{1e-3 / kMu0, 2e-3 / kMu0, 5e-4 * std::sin(2.0 * kPi * 1e9 * t + 0.3) / kMu0};
  for (const auto& v : hz.v) CHECK(norm(v - want) <= 1e-12 * norm(want));

  // Tone amplitude enters linearly.
  DriveSpec d2 = d;
  d2.tones[0].amplitude_T *= 4.0;
  const Vec3 rf1 = zeeman_field(d, t, g).v[0] - zeeman_field(d.bias_only(), t, g).v[0];
  const Vec3 rf2 = zeeman_field(d2, t, g).v[0] - zeeman_field(d2.bias_only(), t, g).v[0];
  CHECK(norm(rf2 - rf1 * 4.0) <= 1e-9 * norm(rf2));
}

TEST_CASE("fused kernel equals the sum of the reference terms") {
  const Grid g = small_grid(9, 5);
  const auto s = random_field(g, 21);
  for (auto mode : {DemagMode::ThinFilmLocal, DemagMode::None}) {
    auto mat = random_material(g, 22);
    mat.demag = mode;
    DriveSpec d{{1e-3, 0, 0}, {Tone{8e-4, 3e8, 0.0, {0, 1, 0}}}};
    const double t = 1.3e-9;
    const auto heff = effective_field(s, mat, d, t);
    const auto hx = exchange_field(s, mat);
    const auto ha = anisotropy_field(s, mat);
    const auto hd = demag_field(s, mat, mode);
    const auto hz = zeeman_field(d, t, g);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const Vec3 want = hx.v[c] + ha.v[c] + hd.v[c] + hz.v[c];
      CHECK(norm(heff.v[c] - want) <= 1e-12 * norm(want));
    }
  }
}

TEST_CASE("energy is consistent with the effective field") {
  // H_eff = -(1 / (mu0 Ms V)) dE/dm, checked by central differences per component.
  const Grid g = small_grid(4, 3);
  const auto s = random_field(g, 31);
  const auto mat = random_material(g, 32);
  DriveSpec d{{2e-3, -1e-3, 5e-4}, {}};
  const auto h = effective_field(s, mat, d, 0.0);
  const double v = g.cell_volume();
  for (std::size_t c : {std::size_t{0}, std::size_t{5}, std::size_t{11}}) {
    for (int comp = 0; comp < 3; ++comp) {
      SpinField sp = s;
      SpinField sm = s;
      const double eps = 1e-6;
      // Raw (unnormalized) perturbation: the energy is a function on R^3 per cell.
      Vec3 e{};
      (comp == 0 ? e.x : comp == 1 ? e.y : e.z) = eps;
      sp.mutable_values()[c] = s[c] + e;
      sm.mutable_values()[c] = s[c] - e;
      const double de = (total_energy(sp, mat, d, 0.0) - total_energy(sm, mat, d, 0.0)) / (2.0 * eps);
      const double hfd = -de / (kMu0 * mat.Ms[c] * v);
      const double got = comp == 0 ? h.v[c].x : comp == 1 ? h.v[c].y : h.v[c].z;
      CHECK(got == doctest::Approx(hfd).epsilon(1e-6).scale(1e3));
    }
  }
}

TEST_CASE("energy closed forms and descent") {
  const Grid g = small_grid(5, 4);
  Material m;
  m.K_u = 0.0;
  auto mat = MaterialMap::uniform(g, m, DemagMode::None);
  const Vec3 b{0.0, 3e-3, 0.0};
  DriveSpec d{b, {}};
  SpinField s(g, {0.0, 1.0, 0.0});
  const double vtot = g.cell_volume() * static_cast<double>(g.cells());
  CHECK(total_energy(s, mat, d, 0.0) == doctest::Approx(-m.Ms * norm(b) * vtot).epsilon(1e-12));
  SpinField flipped(g, {0.0, -1.0, 0.0});
  CHECK(total_energy(flipped, mat, d, 0.0) == doctest::Approx(m.Ms * norm(b) * vtot).epsilon(1e-12));

  // Rotating one spin slightly toward H_eff lowers the energy.
  const auto sr = random_field(g, 41);
  const auto mr = random_material(g, 42);
  DriveSpec dr{{1e-3, 0, 0}, {}};
  const auto h = effective_field(sr, mr, dr, 0.0);
  const double e0 = total_energy(sr, mr, dr, 0.0);
  for (std::size_t c = 0; c < g.cells(); c += 3) {
    const Vec3 perp = h.v[c] - sr[c] * dot(sr[c], h.v[c]);
    if (norm(perp) == 0.0) continue;
    SpinField moved = sr;
    moved.set(c, sr[c] + normalized(perp) * 1e-4);
    CHECK(total_energy(moved, mr, dr, 0.0) < e0);
  }
}

TEST_CASE("grid mismatch is a contract violation") {
  const auto s = random_field(small_grid(3, 3), 1);
  const auto mat = MaterialMap::uniform(small_grid(4, 3), Material{});
  CHECK_THROWS_AS(exchange_field(s, mat), ContractViolation);
  CHECK_THROWS_AS(total_energy(s, mat, DriveSpec{}, 0.0), ContractViolation);
}

#ifdef _OPENMP
TEST_CASE("field evaluation is bit-identical across thread counts") {
  const Grid g = small_grid(37, 23);
  const auto s = random_field(g, 51);
  const auto mat = random_material(g, 52);
  DriveSpec d{{1e-3, 0, 0}, {Tone{8e-4, 3e8, 0.0, {0, 1, 0}}}};
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto h1 = effective_field(s, mat, d, 1e-9);
  omp_set_num_threads(4);
  const auto h4 = effective_field(s, mat, d, 1e-9);
  omp_set_num_threads(saved);
  bool same = true;
  for (std::size_t c = 0; c < g.cells(); ++c) same = same && h1.v[c] == h4.v[c];
  CHECK(same);
}
#endif
