#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "magmix/magnetics.hpp"

namespace magmix {

enum class TextureKind { Uniform, OneStep, TwoStep, MultiStep };
enum class WallStabilization { AnisotropyStripes, InitOnly };

TextureKind parse_texture_kind(std::string_view name);
std::string_view to_string(TextureKind kind);
WallStabilization parse_wall_stabilization(std::string_view name);
std::string_view to_string(WallStabilization s);

/// Domain configuration: straight walls with normal along x, separating alternating
/// +x / -x stripes.
struct TextureSpec {
  TextureKind kind = TextureKind::Uniform;
  int n_walls = 0;
  WallStabilization stabilization = WallStabilization::AnisotropyStripes;
  /// K_u multiplier for the domain interiors; walls keep the base K_u inside a gap
  /// of stripe_gap seed widths sqrt(A_ex / K_u) centred on each seeded wall.
  double stripe_anisotropy_factor = 4.0;
  double stripe_gap = 2.0;

  static TextureSpec uniform() { return {TextureKind::Uniform, 0}; }
  static TextureSpec one_step() { return {TextureKind::OneStep, 1}; }
  static TextureSpec two_step() { return {TextureKind::TwoStep, 2}; }
  static TextureSpec multi_step(int n) { return {TextureKind::MultiStep, n}; }

  /// Throws ConfigError on a kind / n_walls mismatch.
  void validate() const;
  std::string label() const;
};

struct WallMetrics {
  int wall_count = 0;
  double total_length = 0.0;  // m
  double mean_width = 0.0;    // m, tanh width parameter
};

/// Initial (unrelaxed) state and material map for a texture. Walls are seeded as tanh
/// profiles rotating through +y, with the width sqrt(A_ex / K_u) of the base material.
std::pair<SpinField, MaterialMap> build_texture(const TextureSpec& spec, const Grid& grid,
                                                const Material& base,
                                                DemagMode demag = DemagMode::ThinFilmLocal);

/// Counts connected m_x sign-change interfaces, their total edge length and mean fitted
/// tanh width. An interface only counts as a wall if m_x reaches +threshold on one side
/// and -threshold on the other within the 10-cell fit window.
WallMetrics wall_metrics(const SpinField& s, double threshold = 0.5);

/// Least-squares width of m = sign * tanh((x - x0) / width) over the given samples.
/// Returns {x0, width}.
std::pair<double, double> fit_tanh_profile(std::span<const double> x, std::span<const double> m,
                                           double sign, double x0_guess, double width_guess);

}  // namespace magmix
