#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "magmix/nv.hpp"

namespace magmix {

using Hz = std::int64_t;

std::string_view to_string(EsrBranch b);

/// One ESR transition the planner can target.
struct EsrTarget {
  Hz f_hz = 0;
  EsrBranch branch = EsrBranch::Plus;
  int axis = 0;
};

/// Both branches of every pair, rounded to integer Hz.
std::vector<EsrTarget> esr_targets(std::span<const EsrPair> pairs);

/// A pump/signal pair whose mixing product a f1 + b f2 lands on an ESR line:
/// a f1 + b f2 = sign * f_esr, with a > 0 (or a = 0, b > 0).
struct ProtocolSolution {
  int a = 0;
  int b = 0;
  int sign = 1;
  double f1_hz = 0.0;
  Hz f2_hz = 0;
  Hz esr_hz = 0;
  EsrBranch branch = EsrBranch::Plus;
  int axis = 0;

  int order() const { return (a < 0 ? -a : a) + (b < 0 ? -b : b); }
  /// |a f1 + b f2 - sign f_esr|
  double residual_hz() const;
};

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

/// Every (a, b) with 1 <= a, |a| + |b| <= max_order and both signs of the ESR term whose
/// f1 lies in the band (f1 > 0). Sorted by order, then f1; exact duplicates removed.
std::vector<ProtocolSolution> enumerate_protocols(Hz f2, std::span<const EsrTarget> esr, int max_order,
                                                  Band f1_band);

struct PlaneBounds {
  double f1_lo = 0.0;
  double f1_hi = 0.0;
  double f2_lo = 0.0;
  double f2_hi = 0.0;
};

/// The line a f1 + b f2 = sign f_esr clipped to the plane bounds, from p0 to p1.
struct MixLine {
  int a = 0;
  int b = 0;
  int sign = 1;
  Hz esr_hz = 0;
  EsrBranch branch = EsrBranch::Plus;
  double f1_start = 0.0, f2_start = 0.0;
  double f1_end = 0.0, f2_end = 0.0;

  int order() const { return (a < 0 ? -a : a) + (b < 0 ? -b : b); }
};

std::vector<MixLine> theoretical_mixing_lines(std::span<const EsrTarget> esr, int max_order,
                                              const PlaneBounds& bounds);

/// (1, 1): f1 = esr - f2. Requires 0 < f2 < esr.
ProtocolSolution plan_up_conversion(Hz f2, const EsrTarget& esr);
/// (k, -1): k f1 = f2 - esr. Requires f2 > esr, k >= 1.
ProtocolSolution plan_down_conversion(Hz f2, const EsrTarget& esr, int k);

/// Union of enumerate_protocols over all targets, one entry per distinct
/// (a, b, sign, f1, f_esr), first branch/axis kept.
std::vector<ProtocolSolution> fingerprint(Hz f2, std::span<const EsrTarget> esr, int max_order, Band f1_band);

}  // namespace magmix
