#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <tuple>
#include <vector>

#include "magmix/error.hpp"
#include "magmix/nv.hpp"
#include "magmix/planner.hpp"

using namespace magmix;

namespace {

constexpr Hz GHz = 1'000'000'000;
constexpr Hz MHz = 1'000'000;

EsrTarget target(Hz f, EsrBranch br = EsrBranch::Plus, int axis = 0) { return {f, br, axis}; }

bool contains(const std::vector<ProtocolSolution>& v, int a, int b, int sign, double f1) {
  return std::any_of(v.begin(), v.end(), [&](const auto& s) {
    return s.a == a && s.b == b && s.sign == sign && std::abs(s.f1_hz - f1) < 0.5;
  });
}

// (a, b, sign) of the mirrored relation b f1 + a f2 = sign f_esr, renormalized so the
// leading coefficient is positive.
std::tuple<int, int, int> mirrored(int a, int b, int sign) {
  if (b > 0) return {b, a, sign};
  if (b < 0) return {-b, -a, -sign};
  return {0, a, sign};
}

}  // namespace

TEST_CASE("quoted protocols") {
  const std::vector<EsrTarget> esr{target(2870 * MHz)};
  const Band band{0.1e9, 12e9};

  const auto up = enumerate_protocols(400 * MHz, esr, 6, band);
  CHECK(contains(up, 1, 1, 1, 2.47e9));

  const auto down = enumerate_protocols(10 * GHz, esr, 6, band);
  CHECK(contains(down, 1, -1, -1, 7.13e9));
  CHECK(contains(down, 2, -1, -1, 3.565e9));
  CHECK(contains(enumerate_protocols(10 * GHz, esr, 3, band), 2, -1, -1, 3.565e9));
  CHECK_FALSE(contains(enumerate_protocols(10 * GHz, esr, 2, band), 2, -1, -1, 3.565e9));

  const auto u = plan_up_conversion(400 * MHz, esr[0]);
  CHECK(u.a == 1);
  CHECK(u.b == 1);
  CHECK(u.f1_hz == 2.47e9);
  CHECK(u.residual_hz() == 0.0);
  CHECK(plan_up_conversion(1, esr[0]).f1_hz == 2870e6 - 1);
  CHECK(plan_up_conversion(1435 * MHz, esr[0]).f1_hz == 1435e6);
  CHECK_THROWS_AS(plan_up_conversion(2870 * MHz, esr[0]), ContractViolation);
  CHECK_THROWS_AS(plan_up_conversion(0, esr[0]), ContractViolation);

  const auto d1 = plan_down_conversion(10 * GHz, esr[0], 1);
  CHECK(d1.f1_hz == 7.13e9);
  CHECK(d1.a == 1);
  CHECK(d1.b == -1);
  CHECK(d1.residual_hz() == 0.0);
  const auto d2 = plan_down_conversion(10 * GHz, esr[0], 2);
  CHECK(d2.f1_hz == 3.565e9);
  CHECK(d2.a == 2);
  CHECK(d2.residual_hz() == 0.0);
  CHECK(plan_down_conversion(2870 * MHz + 1, esr[0], 1).f1_hz == 1.0);
  CHECK_THROWS_AS(plan_down_conversion(2870 * MHz, esr[0], 1), ContractViolation);
  CHECK_THROWS_AS(plan_down_conversion(10 * GHz, esr[0], 0), ContractViolation);
}

TEST_CASE("enumeration contract") {
  const std::vector<EsrTarget> esr{target(2870 * MHz), target(2828 * MHz, EsrBranch::Minus)};
  const Band band{0.1e9, 12e9};
  CHECK_THROWS_AS(enumerate_protocols(GHz, esr, 9, band), ContractViolation);
  CHECK_THROWS_AS(enumerate_protocols(GHz, esr, 0, band), ContractViolation);
  CHECK_THROWS_AS(enumerate_protocols(GHz, esr, 4, Band{2e9, 1e9}), ContractViolation);
  CHECK(enumerate_protocols(GHz, esr, 4, Band{20e9, 30e9}).empty());

  for (Hz f2 : {137 * MHz, 1 * GHz, 4321 * MHz + 7, 11 * GHz}) {
    const auto sols = enumerate_protocols(f2, esr, 8, band);
    REQUIRE_FALSE(sols.empty());
    for (std::size_t k = 0; k < sols.size(); ++k) {
      const auto& s = sols[k];
      CHECK(s.a >= 1);
      CHECK(s.order() <= 8);
      CHECK(s.f1_hz > 0.0);
      CHECK(s.f1_hz >= band.lo);
      CHECK(s.f1_hz <= band.hi);
      CHECK(s.f2_hz == f2);
      // Exact in integers: a f1 is an integer number of Hz.
      CHECK(s.residual_hz() <= 1.0);
      if (k > 0) {
        const auto& p = sols[k - 1];
        CHECK((p.order() < s.order() || (p.order() == s.order() && p.f1_hz <= s.f1_hz)));
      }
    }
    CHECK(enumerate_protocols(f2, esr, 8, band).size() == sols.size());
    const auto again = enumerate_protocols(f2, esr, 8, band);
    for (std::size_t k = 0; k < sols.size(); ++k) {
      CHECK(again[k].a == sols[k].a);
      CHECK(again[k].b == sols[k].b);
      CHECK(again[k].sign == sols[k].sign);
      CHECK(again[k].f1_hz == sols[k].f1_hz);
      CHECK(again[k].esr_hz == sols[k].esr_hz);
    }
  }

  // Duplicate targets collapse.
  const std::vector<EsrTarget> twice{target(2870 * MHz), target(2870 * MHz)};
  const std::vector<EsrTarget> once{target(2870 * MHz)};
  CHECK(enumerate_protocols(GHz, twice, 6, band).size() == enumerate_protocols(GHz, once, 6, band).size());
}

TEST_CASE("brute-force scan of the 10 MHz grid") {
  // Two on-grid lines and one that no pair of grid tones can hit.
  const std::vector<EsrTarget> esr{target(2870 * MHz), target(2910 * MHz, EsrBranch::Minus),
                                   target(2873 * MHz + 400'000)};
  const Band band{0.1e9, 12e9};
  const int max_order = 4;
  const Hz step = 10 * MHz;
  const Hz lo = 100 * MHz;
  const Hz hi = 12 * GHz;

  using Key = std::tuple<int, int, int, Hz, Hz>;  // a, b, sign, f1, esr
  std::size_t checked_pairs = 0;
  for (Hz f2 = lo; f2 <= hi; f2 += 7 * step) {
    std::set<Key> brute;
    for (Hz f1 = lo; f1 <= hi; f1 += step) {
      for (const auto& t : esr) {
        for (int a = 1; a <= max_order; ++a) {
          for (int b = -max_order; b <= max_order; ++b) {
            if (a + std::abs(b) > max_order) continue;
            for (int sign : {1, -1}) {
              if (a * f1 + b * f2 == sign * t.f_hz) brute.insert({a, b, sign, f1, t.f_hz});
            }
          }
        }
      }
    }
    std::set<Key> planned;
    for (const auto& s : enumerate_protocols(f2, esr, max_order, band)) {
      const double f1 = s.f1_hz;
      const Hz f1_int = static_cast<Hz>(f1);
      if (static_cast<double>(f1_int) != f1 || f1_int % step != 0) continue;
      planned.insert({s.a, s.b, s.sign, f1_int, s.esr_hz});
    }
    CAPTURE(f2);
    CHECK(planned == brute);
    ++checked_pairs;
  }
  CHECK(checked_pairs > 150);
}

TEST_CASE("tone-swap symmetry") {
  const std::vector<EsrTarget> esr{target(2870 * MHz)};
  const Band band{0.1e9, 12e9};

  SUBCASE("enumeration") {
    for (Hz f2 : {400 * MHz, 1200 * MHz, 10 * GHz}) {
      for (const auto& s : enumerate_protocols(f2, esr, 6, band)) {
        const Hz f1 = static_cast<Hz>(s.f1_hz);
        if (static_cast<double>(f1) != s.f1_hz || s.b == 0) continue;
        if (static_cast<double>(f2) < band.lo || static_cast<double>(f2) > band.hi) continue;
        const auto [a2, b2, sign2] = mirrored(s.a, s.b, s.sign);
        if (a2 == 0) continue;
        CAPTURE(s.a);
        CAPTURE(s.b);
        CAPTURE(f2);
        CHECK(contains(enumerate_protocols(f1, esr, 6, band), a2, b2, sign2, static_cast<double>(f2)));
      }
    }
  }

  SUBCASE("mixing lines") {
    const PlaneBounds bounds{0.1e9, 12e9, 0.1e9, 12e9};
    const auto lines = theoretical_mixing_lines(esr, 6, bounds);
    REQUIRE_FALSE(lines.empty());
    auto same_segment = [](const MixLine& x, double p1, double q1, double p2, double q2) {
      auto near = [](double u, double v) { return std::abs(u - v) <= 1e-6 * std::max(1.0, std::abs(v)); };
      return (near(x.f1_start, p1) && near(x.f2_start, q1) && near(x.f1_end, p2) && near(x.f2_end, q2)) ||
             (near(x.f1_start, p2) && near(x.f2_start, q2) && near(x.f1_end, p1) && near(x.f2_end, q1));
    };
    for (const auto& l : lines) {
      const auto [a2, b2, s2] = mirrored(l.a, l.b, l.sign);
      const bool found = std::any_of(lines.begin(), lines.end(), [&](const MixLine& m) {
        return m.a == a2 && m.b == b2 && m.sign == s2 && m.esr_hz == l.esr_hz &&
               same_segment(m, l.f2_start, l.f1_start, l.f2_end, l.f1_end);
      });
      CAPTURE(l.a);
      CAPTURE(l.b);
      CAPTURE(l.sign);
      CHECK(found);
    }
  }
}

TEST_CASE("theoretical mixing lines") {
  const std::vector<EsrTarget> esr{target(2870 * MHz)};
  const PlaneBounds bounds{0.1e9, 12e9, 0.1e9, 12e9};
  const auto lines = theoretical_mixing_lines(esr, 6, bounds);

  auto find = [&](int a, int b, int sign) {
    return std::find_if(lines.begin(), lines.end(),
                        [&](const MixLine& l) { return l.a == a && l.b == b && l.sign == sign; });
  };

  const auto vertical = find(1, 0, 1);
  REQUIRE(vertical != lines.end());
  CHECK(vertical->f1_start == 2.87e9);
  CHECK(vertical->f1_end == 2.87e9);
  CHECK(vertical->f2_start == bounds.f2_lo);
  CHECK(vertical->f2_end == bounds.f2_hi);

  CHECK(find(3, -3, 1) != lines.end());
  CHECK(find(3, -3, -1) != lines.end());
  const auto l5 = theoretical_mixing_lines(esr, 5, bounds);
  CHECK(std::none_of(l5.begin(), l5.end(), [](const MixLine& l) { return l.order() > 5; }));

  for (const auto& l : lines) {
    CHECK(l.order() <= 6);
    CHECK(l.order() >= 1);
    for (auto [f1, f2] : {std::pair{l.f1_start, l.f2_start}, std::pair{l.f1_end, l.f2_end}}) {
      CHECK(f1 >= bounds.f1_lo);
      CHECK(f1 <= bounds.f1_hi);
      CHECK(f2 >= bounds.f2_lo);
      CHECK(f2 <= bounds.f2_hi);
      CHECK(std::abs(l.a * f1 + l.b * f2 - l.sign * 2.87e9) <= 1e-6 * 12e9);
    }
  }

  CHECK_THROWS_AS(theoretical_mixing_lines(esr, 9, bounds), ContractViolation);
  CHECK_THROWS_AS(theoretical_mixing_lines(esr, 3, PlaneBounds{1e9, 1e9, 0.1e9, 1e9}), ContractViolation);
}

TEST_CASE("fingerprint") {
  const Band band{0.1e9, 12e9};

  SUBCASE("single branch, first order only") {
    const std::vector<EsrTarget> esr{target(2870 * MHz)};
    const auto fp = fingerprint(5 * GHz, esr, 1, band);
    REQUIRE(fp.size() == 1);
    CHECK(fp[0].a == 1);
    CHECK(fp[0].b == 0);
    CHECK(fp[0].f1_hz == 2.87e9);
  }

  SUBCASE("down-conversion under an axial bias") {
    NVModel nv;
    const Vec3 b = nv.axes[0] * 1.5e-3;
    const std::array<EsrPair, 1> pair{esr_frequencies(nv, b, 0)};
    const auto esr = esr_targets(pair);
    REQUIRE(esr.size() == 2);
    CHECK(esr[0].f_hz - esr[1].f_hz == doctest::Approx(2 * 1.5e-3 * nv.gamma_e).epsilon(1e-6));

    const auto fp = fingerprint(10 * GHz, esr, 3, band);
    std::vector<ProtocolSolution> pump2;
    std::copy_if(fp.begin(), fp.end(), std::back_inserter(pump2),
                 [](const auto& s) { return s.a == 2 && s.b == -1; });
    CHECK(pump2.size() == 4);
    // f1- pairs with f_ESR+ and f1+ with f_ESR-: 2 f1 = f2 - f_esr.
    for (const auto& t : esr) {
      CHECK(contains(pump2, 2, -1, -1, static_cast<double>(10 * GHz - t.f_hz) / 2));
      CHECK(contains(pump2, 2, -1, 1, static_cast<double>(10 * GHz + t.f_hz) / 2));
    }
    for (const auto& s : fp) CHECK(s.residual_hz() <= 1.0);
  }

  SUBCASE("peak set grows with order") {
    NVModel nv;
    const auto pairs = esr_all_axes(nv, Vec3{1.5e-3, 0.4e-3, 0.0});
    const auto esr = esr_targets(pairs);
    using Key = std::tuple<int, int, int, double, Hz>;
    std::set<Key> prev;
    for (int n = 1; n <= 8; ++n) {
      std::set<Key> cur;
      for (const auto& s : fingerprint(10 * GHz, esr, n, band)) cur.insert({s.a, s.b, s.sign, s.f1_hz, s.esr_hz});
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      CHECK(cur.size() >= prev.size());
      prev = std::move(cur);
    }
  }

  SUBCASE("shared lines collapse across axes") {
    // Three equivalent axes under a bias along the first give identical lines.
    NVModel nv;
    const auto pairs = esr_all_axes(nv, nv.axes[0] * 1.5e-3);
    const auto esr = esr_targets(pairs);
    const auto fp = fingerprint(10 * GHz, esr, 2, band);
    const auto all = enumerate_protocols(10 * GHz, esr, 2, band);
    CHECK(fp.size() <= all.size());
    for (std::size_t i = 0; i < fp.size(); ++i) {
      for (std::size_t j = i + 1; j < fp.size(); ++j) {
        CHECK_FALSE((fp[i].a == fp[j].a && fp[i].b == fp[j].b && fp[i].sign == fp[j].sign &&
                     fp[i].f1_hz == fp[j].f1_hz && fp[i].esr_hz == fp[j].esr_hz));
      }
    }
  }
}
