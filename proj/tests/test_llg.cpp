#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "magmix/constants.hpp"
#include "magmix/error.hpp"
#include "magmix/llg.hpp"

using namespace magmix;

namespace {

// A 2x2 uniform grid behaves as a single macrospin: the exchange field of a uniform state
// vanishes and every other term is local.
Grid spin_grid() { return Grid{2, 2, 5e-9, 5e-9, 5e-9}; }

MaterialMap free_spin(double alpha) {
  Material m;
  m.K_u = 0.0;
  m.alpha = alpha;
  return MaterialMap::uniform(spin_grid(), m, DemagMode::None);
}

double larmor_hz(double b) { return kGammaLL * b / (2.0 * kPi); }

SpinField random_field(const Grid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  SpinField s(g);
  for (std::size_t c = 0; c < s.size(); ++c) s.set(c, {n(rng), n(rng), n(rng)});
  return s;
}

double max_dist(const SpinField& a, const SpinField& b) {
  double d = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) d = std::max(d, norm(a[c] - b[c]));
  return d;
}

}  // namespace

TEST_CASE("llg right-hand side closed forms") {
  const Grid g = spin_grid();
  const double b = 0.2;
  SpinField s(g, {1, 0, 0});
  VectorField h(g);
  for (auto& v : h.v) v = Vec3{0, 0, b / kMu0};

  auto rhs = llg_rhs(s, h, free_spin(0.0));
  for (const auto& r : rhs) {
    CHECK(r.x == doctest::Approx(0.0).scale(1.0));
    CHECK(r.y == doctest::Approx(kGammaLL * b).epsilon(1e-12));
    CHECK(r.z == doctest::Approx(0.0).scale(1.0));
  }

  const double alpha = 0.3;
  rhs = llg_rhs(s, h, free_spin(alpha));
  const double want = kGammaLL * b * std::sqrt(1.0 + alpha * alpha) / (1.0 + alpha * alpha);
  for (const auto& r : rhs) CHECK(norm(r) == doctest::Approx(want).epsilon(1e-12));

  SpinField par(g, {0, 0, 1});
  for (const auto& r : llg_rhs(par, h, free_spin(alpha))) CHECK(norm(r) == 0.0);

  CHECK_THROWS_AS(llg_rhs(SpinField(Grid{3, 2, 5e-9, 5e-9, 5e-9}), h, free_spin(0.0)), ContractViolation);
}

TEST_CASE("time step resolution check") {
  CHECK_NOTHROW(check_time_step(1e-12, 1e9));
  CHECK_NOTHROW(check_time_step(1.0 / (50.0 * 1e9), 1e9));
  CHECK_THROWS_AS(check_time_step(1e-10, 1e9), ConfigError);

  const DriveSpec drive{{0, 0, 1.0}, {}};
  SpinField s(spin_grid());
  IntegratorConfig cfg;
  cfg.dt = 2.0 / (50.0 * larmor_hz(1.0));
  CHECK_THROWS_AS(step(s, free_spin(0.0), drive, 0.0, cfg), ConfigError);
  cfg.dt = 0.5 / (50.0 * larmor_hz(1.0));
  CHECK_NOTHROW(step(s, free_spin(0.0), drive, 0.0, cfg));
  cfg.dt = 0.0;
  CHECK_THROWS_AS(step(s, free_spin(0.0), drive, 0.0, cfg), ConfigError);
}

TEST_CASE("zero field leaves the state unchanged") {
  const SpinField s(spin_grid(), {0.3, -0.5, 0.8});
  IntegratorConfig cfg;
  const auto out = step(s, free_spin(0.1), DriveSpec{}, 0.0, cfg);
  CHECK(max_dist(out, s) <= 1e-15);
}

TEST_CASE("undamped single spin precesses at the Larmor frequency") {
  const double b = 1e-3;
  const DriveSpec drive{{0, 0, b}, {}};
  const auto mat = free_spin(0.0);
  IntegratorConfig cfg;
  cfg.dt = 1e-12;
  SpinField s(spin_grid(), {1, 0, 0});
  LlgStepper stepper(mat, drive);
  const int n = 1000;
  auto m = s.mutable_values();
  for (int k = 0; k < n; ++k) stepper.advance(m, k * cfg.dt, cfg.dt);
  // dm/dt = +gamma B y at m = x: the in-plane angle advances counterclockwise.
  const double angle = std::atan2(s[0].y, s[0].x);
  const double want = kGammaLL * b * n * cfg.dt;
  CHECK(angle == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("undamped precession conserves m.H and the norm") {
  const Vec3 b{0.3e-3, -0.2e-3, 1e-3};
  const Vec3 bhat = normalized(b);
  const DriveSpec drive{b, {}};
  IntegratorConfig cfg;
  cfg.dt = 1e-12;
  SpinField s(spin_grid(), {1, 0.2, 0.4});
  const double p0 = dot(s[0], bhat);
  LlgStepper stepper(free_spin(0.0), drive);
  auto m = s.mutable_values();
  double worst_norm = 0.0;
  for (int k = 0; k < 10000; ++k) {
    stepper.advance(m, k * cfg.dt, cfg.dt);
    for (const auto& v : m) worst_norm = std::max(worst_norm, std::abs(norm(v) - 1.0));
  }
  CHECK(std::abs(dot(s[0], bhat) - p0) <= 1e-8);
  CHECK(worst_norm <= 1e-9);
}

TEST_CASE("damped spin approaches the field monotonically") {
  const DriveSpec drive{{0, 0, 0.05}, {}};
  IntegratorConfig cfg;
  cfg.dt = 1e-13;
  SpinField s(spin_grid(), {1, 0, -0.2});
  LlgStepper stepper(free_spin(0.5), drive);
  auto m = s.mutable_values();
  double prev = s[0].z;
  bool monotone = true;
  for (int k = 0; k < 20000; ++k) {
    stepper.advance(m, k * cfg.dt, cfg.dt);
    monotone = monotone && s[0].z >= prev;
    prev = s[0].z;
  }
  CHECK(monotone);
  CHECK(s[0].z > 0.99);
}

TEST_CASE("norm preservation on a textured grid") {
  const Grid g{12, 6, 5e-9, 5e-9, 10e-9};
  const auto mat = MaterialMap::uniform(g, Material{});
  const DriveSpec drive{{1e-3, 0, 0}, {Tone{8e-4, 2.87e8, 0.0, {0, 1, 0}}}};
  SpinField s = random_field(g, 7);
  LlgStepper stepper(mat, drive);
  auto m = s.mutable_values();
  for (int k = 0; k < 500; ++k) stepper.advance(m, k * 2e-13, 2e-13);
  for (std::size_t c = 0; c < s.size(); ++c) CHECK(std::abs(norm(s[c]) - 1.0) <= 1e-9);
}

TEST_CASE("RK4 converges at fourth order") {
  const Grid g{4, 3, 5e-9, 5e-9, 10e-9};
  Material base;
  base.alpha = 0.1;
  base.K_u = 5e4;
  const auto mat = MaterialMap::uniform(g, base);
  const DriveSpec drive{{0.3, 0.1, 0.0}, {Tone{0.05, 5e9, 0.2, {0, 0, 1}}}};
  const SpinField s0 = random_field(g, 17);

  auto integrate = [&](double dt, int steps) {
    SpinField s = s0;
    LlgStepper stepper(mat, drive);
    auto m = s.mutable_values();
    for (int k = 0; k < steps; ++k) stepper.advance(m, k * dt, dt);
    return s;
  };
  const double dt = 2e-13;
  const auto coarse = integrate(dt, 100);
  const auto fine = integrate(dt / 2, 200);
  const auto ref = integrate(dt / 32, 3200);
  const double ratio = max_dist(coarse, ref) / max_dist(fine, ref);
  CHECK(ratio > 16.0 * 0.7);
  CHECK(ratio < 16.0 * 1.3);
}

TEST_CASE("relax") {
  IntegratorConfig cfg;
  cfg.dt = 1e-13;

  SUBCASE("state along the bias is returned unchanged") {
    const SpinField s(spin_grid(), {1, 0, 0});
    const auto res = relax(s, free_spin(0.02), DriveSpec{{5e-3, 0, 0}, {}}, 1e-6, cfg);
    CHECK(res.steps == 0);
    CHECK(res.state == s);
  }
  SUBCASE("tilted spin relaxes onto the bias") {
    const double tilt = 10.0 * kPi / 180.0;
    const SpinField s(spin_grid(), {std::cos(tilt), std::sin(tilt), 0});
    const DriveSpec drive{{5e-3, 0, 0}, {Tone{1e-3, 1e9, 0.0, {0, 1, 0}}}};
    const auto res = relax(s, free_spin(0.02), drive, 1e-7, cfg);
    const double angle = std::acos(std::min(1.0, res.state[0].x));
    CHECK(angle < 0.1 * kPi / 180.0);
    CHECK(res.final_torque < 1e-7);
    CHECK(res.energy <= total_energy(s, free_spin(0.02), drive.bias_only(), 0.0));
  }
  SUBCASE("energy never increases from random inputs") {
    const Grid g{8, 4, 5e-9, 5e-9, 10e-9};
    const auto mat = MaterialMap::uniform(g, Material{});
    const DriveSpec drive{{1e-3, 0, 0}, {}};
    for (unsigned seed : {1u, 2u, 3u}) {
      const auto s = random_field(g, seed);
      auto fine = cfg;
      fine.dt = 2e-14;  // random states carry Tesla-scale exchange fields
      const auto res = relax(s, mat, drive, 1e-4, fine);
      CHECK(res.energy <= total_energy(s, mat, drive, 0.0));
      CHECK(res.energy == doctest::Approx(total_energy(res.state, mat, drive, 0.0)).epsilon(1e-14));
    }
  }
  SUBCASE("iteration cap reports the final torque") {
    const Grid g{8, 4, 5e-9, 5e-9, 10e-9};
    auto capped = cfg;
    capped.dt = 2e-14;
    capped.max_relax_steps = 3;
    const auto s = random_field(g, 9);
    try {
      relax(s, MaterialMap::uniform(g, Material{}), DriveSpec{}, 1e-9, capped);
      FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
      CHECK(e.final_torque() > 1e-9);
    }
  }
  SUBCASE("tol must be positive") {
    CHECK_THROWS_AS(relax(SpinField(spin_grid()), free_spin(0.02), DriveSpec{}, 0.0, cfg), ContractViolation);
  }
}

TEST_CASE("driven run") {
  SUBCASE("zero-amplitude tone gives a constant series") {
    const SpinField s(spin_grid(), {1, 0, 0});
    const DriveSpec drive{{2e-3, 0, 0}, {Tone{0.0, 1e9, 0.0, {0, 1, 0}}}};
    IntegratorConfig cfg;
    cfg.dt = 1e-12;
    cfg.sample_every = 5;
    const auto res = run(s, free_spin(0.02), drive, 10e-9, cfg);
    REQUIRE(res.series.samples.size() == 2000);
    for (const auto& v : res.series.samples) CHECK(v == Vec3{1, 0, 0});
    CHECK(res.series.dt_sample == doctest::Approx(5e-12));
  }
  SUBCASE("resonant transverse tone grows the precession cone") {
    const double b = 10e-3;
    const double f = larmor_hz(b);
    // Integer-Hz tone close to resonance; record 40 periods.
    const double fi = std::round(f);
    const DriveSpec drive{{0, 0, b}, {Tone{2e-6, fi, 0.0, {1, 0, 0}}}};
    IntegratorConfig cfg;
    const int per_period = 200;
    cfg.dt = 1.0 / (fi * per_period);
    cfg.sample_every = 10;
    const auto res = run(SpinField(spin_grid(), {0, 0, 1}), free_spin(0.0), drive, 40.0 / fi, cfg);
    const auto& smp = res.series.samples;
    const std::size_t q = smp.size() / 4;
    double early = 0.0;
    double late = 0.0;
    for (std::size_t k = 0; k < q; ++k) early = std::max(early, std::hypot(smp[k].x, smp[k].y));
    for (std::size_t k = smp.size() - q; k < smp.size(); ++k) late = std::max(late, std::hypot(smp[k].x, smp[k].y));
    CHECK(late > 3.0 * early);
  }
  SUBCASE("per-cell recording and settle window") {
    const Grid g{4, 2, 5e-9, 5e-9, 10e-9};
    const auto mat = MaterialMap::uniform(g, Material{});
    const DriveSpec drive{{1e-3, 0, 0}, {Tone{1e-4, 1e9, 0.0, {0, 1, 0}}}};
    IntegratorConfig cfg;
    cfg.dt = 1e-12;
    cfg.sample_every = 10;
    cfg.record_per_cell = true;
    cfg.cell_sample_every = 50;
    cfg.settle_time = 2e-9;
    const auto res = run(SpinField(g), mat, drive, 5e-9, cfg);
    CHECK(res.series.t0 == doctest::Approx(2e-9));
    CHECK(res.series.samples.size() == 500);
    CHECK(res.series.cell_sample_count() == 100);
    CHECK(res.series.cell_series(3).size() == 100);
    CHECK(res.series.duration() == doctest::Approx(5e-9));
  }
  SUBCASE("incommensurate windows are configuration errors") {
    const DriveSpec drive{{1e-3, 0, 0}, {Tone{1e-4, 3e8, 0.0, {0, 1, 0}}}};
    IntegratorConfig cfg;
    cfg.dt = 1e-12;
    CHECK_THROWS_AS(run(SpinField(spin_grid()), free_spin(0.02), drive, 10.5 / 3e8, cfg), ConfigError);
    cfg.sample_every = 7;
    CHECK_THROWS_AS(run(SpinField(spin_grid()), free_spin(0.02), drive, 10.0 / 1e8, cfg), ConfigError);
    cfg.sample_every = 10;
    CHECK_THROWS_AS(run(SpinField(spin_grid()), free_spin(0.02), drive, -1.0, cfg), ConfigError);
  }
  SUBCASE("non-finite state raises a divergence error") {
    SpinField s(spin_grid());
    s.mutable_values()[3] = {std::nan(""), 0, 0};
    IntegratorConfig cfg;
    cfg.dt = 1e-12;
    cfg.sample_every = 1;
    try {
      run(s, free_spin(0.02), DriveSpec{{1e-3, 0, 0}, {}}, 10e-12, cfg);
      FAIL("expected a divergence error");
    } catch (const DivergenceError& e) {
      CHECK(e.cell() < 4);
      CHECK(e.time() == doctest::Approx(1e-12));
    }
  }
}

TEST_CASE("coherent timing plan") {
  const std::int64_t f = 287'000'000;
  const auto rt = plan_run_timing(std::span<const std::int64_t>(&f, 1));
  const double target = 1.0 / (100.0 * 1.2 * 30.0 * 287e6);
  CHECK(rt.dt <= target * (1.0 + 1e-12));
  CHECK(rt.dt > 0.99 * target);
  CHECK(rt.duration == doctest::Approx(20.0 / 287e6).epsilon(1e-12));
  const double steps = rt.duration / rt.dt;
  CHECK(std::abs(steps - std::round(steps)) < 1e-6);
  CHECK(static_cast<std::int64_t>(std::llround(steps)) % 50 == 0);
  CHECK(rt.settle_time >= 10.0 / 287e6);

  const std::int64_t two[] = {1'000'000'000, 1'500'000'000};
  const auto rt2 = plan_run_timing(two);
  for (auto hz : two) {
    const double periods = rt2.duration * static_cast<double>(hz);
    CHECK(std::abs(periods - std::round(periods)) < 1e-6);
    CHECK(periods >= 20.0 - 1e-9);
  }
  CHECK(rt2.dt <= 1.0 / (100.0 * 1.2 * 30.0 * 1e9) * (1.0 + 1e-12));

  const std::int64_t bad[] = {0};
  CHECK_THROWS_AS(plan_run_timing(bad), ConfigError);
  CHECK_THROWS_AS(plan_run_timing({}), ConfigError);
}

TEST_CASE("snapshot round trip is bit-exact") {
  const Grid g{7, 5, 4.5e-9, 5.25e-9, 15e-9};
  const auto s = random_field(g, 99);
  std::stringstream ss;
  write_snapshot(ss, s);
  const auto back = read_snapshot(ss);
  CHECK(back.grid() == g);
  CHECK(back == s);

  const auto dir = std::filesystem::temp_directory_path() / "magmix_test_snapshot";
  std::filesystem::create_directories(dir);
  save_snapshot(dir / "s.snap", s);
  CHECK(load_snapshot(dir / "s.snap") == s);
  CHECK_THROWS_AS(load_snapshot(dir / "missing.snap"), IoError);
  std::filesystem::remove_all(dir);

  std::istringstream bad_header("MMS2 2 2 1 1 1\n");
  CHECK_THROWS_AS(read_snapshot(bad_header), ConfigError);
  std::istringstream short_body("MMS1 2 2 1e-9 1e-9 1e-9\n1 0 0\n");
  CHECK_THROWS_AS(read_snapshot(short_body), ConfigError);
  std::istringstream not_unit("MMS1 2 2 1e-9 1e-9 1e-9\n1 0 0\n1 0 0\n1 0 0\n2 0 0\n");
  CHECK_THROWS_AS(read_snapshot(not_unit), ConfigError);
}
