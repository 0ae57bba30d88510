#include "magmix/planner.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "magmix/error.hpp"

namespace magmix {

namespace {

constexpr int kMaxOrder = 8;

void check_order(int max_order) {
  if (max_order < 1 || max_order > kMaxOrder) {
    throw ContractViolation("planner: max_order must be in 1.." + std::to_string(kMaxOrder) + ", got " +
                            std::to_string(max_order));
  }
}

bool solution_less(const ProtocolSolution& x, const ProtocolSolution& y) {
  return std::make_tuple(x.order(), x.f1_hz, x.a, x.b, x.sign, x.esr_hz, x.branch, x.axis) <
         std::make_tuple(y.order(), y.f1_hz, y.a, y.b, y.sign, y.esr_hz, y.branch, y.axis);
}

bool same_identity(const ProtocolSolution& x, const ProtocolSolution& y) {
  return x.a == y.a && x.b == y.b && x.sign == y.sign && x.f1_hz == y.f1_hz && x.esr_hz == y.esr_hz;
}

}  // namespace

std::string_view to_string(EsrBranch b) { return b == EsrBranch::Plus ? "plus" : "minus"; }

std::vector<EsrTarget> esr_targets(std::span<const EsrPair> pairs) {
  std::vector<EsrTarget> out;
  for (const auto& p : pairs) {
    out.push_back({std::llround(p.f_plus), EsrBranch::Plus, p.axis});
    out.push_back({std::llround(p.f_minus), EsrBranch::Minus, p.axis});
  }
  return out;
}

double ProtocolSolution::residual_hz() const {
  return std::abs(a * f1_hz + static_cast<double>(b) * static_cast<double>(f2_hz) -
                  static_cast<double>(sign) * static_cast<double>(esr_hz));
}

std::vector<ProtocolSolution> enumerate_protocols(Hz f2, std::span<const EsrTarget> esr, int max_order,
                                                  Band f1_band) {
  check_order(max_order);
  if (!(f1_band.lo < f1_band.hi)) throw ContractViolation("enumerate_protocols: band needs lo < hi");
  if (f2 <= 0) throw ContractViolation("enumerate_protocols: f2 must be > 0");
  std::vector<ProtocolSolution> out;
  for (const auto& target : esr) {
    for (int a = 1; a <= max_order; ++a) {
      for (int b = -(max_order - a); b <= max_order - a; ++b) {
        for (int sign : {1, -1}) {
          const Hz num = sign * target.f_hz - static_cast<Hz>(b) * f2;
          if (num <= 0) continue;
          const double f1 = static_cast<double>(num) / a;
          if (f1 < f1_band.lo || f1 > f1_band.hi) continue;
          out.push_back({a, b, sign, f1, f2, target.f_hz, target.branch, target.axis});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), solution_less);
  out.erase(std::unique(out.begin(), out.end(),
                        [](const auto& x, const auto& y) {
                          return same_identity(x, y) && x.branch == y.branch && x.axis == y.axis;
                        }),
            out.end());
  return out;
}

std::vector<MixLine> theoretical_mixing_lines(std::span<const EsrTarget> esr, int max_order,
                                              const PlaneBounds& bounds) {
  check_order(max_order);
  if (!(bounds.f1_lo < bounds.f1_hi) || !(bounds.f2_lo < bounds.f2_hi)) {
    throw ContractViolation("theoretical_mixing_lines: empty plane bounds");
  }
  std::vector<MixLine> out;
  for (const auto& target : esr) {
    for (int a = 0; a <= max_order; ++a) {
      for (int b = -(max_order - a); b <= max_order - a; ++b) {
        if (a == 0 && b <= 0) continue;
        for (int sign : {1, -1}) {
          const double c = static_cast<double>(sign) * static_cast<double>(target.f_hz);
          // Intersections of a f1 + b f2 = c with the rectangle edges.
          std::vector<std::pair<double, double>> pts;
          auto keep = [&](double f1, double f2) {
            const double e1 = 1e-9 * (bounds.f1_hi - bounds.f1_lo);
            const double e2 = 1e-9 * (bounds.f2_hi - bounds.f2_lo);
            if (f1 >= bounds.f1_lo - e1 && f1 <= bounds.f1_hi + e1 && f2 >= bounds.f2_lo - e2 &&
                f2 <= bounds.f2_hi + e2) {
              pts.emplace_back(std::clamp(f1, bounds.f1_lo, bounds.f1_hi),
                               std::clamp(f2, bounds.f2_lo, bounds.f2_hi));
            }
          };
          if (b != 0) {
            keep(bounds.f1_lo, (c - a * bounds.f1_lo) / b);
            keep(bounds.f1_hi, (c - a * bounds.f1_hi) / b);
          }
          if (a != 0) {
            keep((c - b * bounds.f2_lo) / a, bounds.f2_lo);
            keep((c - b * bounds.f2_hi) / a, bounds.f2_hi);
          }
          if (pts.empty()) continue;
          const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end());
          MixLine line;
          line.a = a;
          line.b = b;
          line.sign = sign;
          line.esr_hz = target.f_hz;
          line.branch = target.branch;
          line.f1_start = lo->first;
          line.f2_start = lo->second;
          line.f1_end = hi->first;
          line.f2_end = hi->second;
          out.push_back(line);
        }
      }
    }
  }
  return out;
}

ProtocolSolution plan_up_conversion(Hz f2, const EsrTarget& esr) {
  if (f2 <= 0) throw ContractViolation("plan_up_conversion: f2 must be > 0");
  if (f2 >= esr.f_hz) {
    throw ContractViolation("plan_up_conversion: f2 = " + std::to_string(f2) + " Hz is not below f_ESR = " +
                            std::to_string(esr.f_hz) + " Hz; use down-conversion");
  }
  return {1, 1, 1, static_cast<double>(esr.f_hz - f2), f2, esr.f_hz, esr.branch, esr.axis};
}

ProtocolSolution plan_down_conversion(Hz f2, const EsrTarget& esr, int k) {
  if (k < 1) throw ContractViolation("plan_down_conversion: pump order k must be >= 1");
  if (f2 <= esr.f_hz) {
    throw ContractViolation("plan_down_conversion: f2 = " + std::to_string(f2) +
                            " Hz must exceed f_ESR = " + std::to_string(esr.f_hz) + " Hz");
  }
  const double f1 = static_cast<double>(f2 - esr.f_hz) / k;
  // k f1 - f2 = -f_esr
  return {k, -1, -1, f1, f2, esr.f_hz, esr.branch, esr.axis};
}

std::vector<ProtocolSolution> fingerprint(Hz f2, std::span<const EsrTarget> esr, int max_order, Band f1_band) {
  auto all = enumerate_protocols(f2, esr, max_order, f1_band);
  std::vector<ProtocolSolution> out;
  for (const auto& s : all) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const auto& o) { return same_identity(o, s); });
    if (!seen) out.push_back(s);
  }
  return out;
}

}  // namespace magmix
