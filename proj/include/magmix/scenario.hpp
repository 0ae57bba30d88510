#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "magmix/error.hpp"
#include "magmix/llg.hpp"
#include "magmix/magnetics.hpp"
#include "magmix/nv.hpp"
#include "magmix/planner.hpp"
#include "magmix/texture.hpp"

namespace magmix {

/// Linearly spaced axis; steps == 1 means the single value `start`.
struct SweepAxis {
  double start = 0.0;
  double stop = 0.0;
  int steps = 1;

  double value(int k) const;
  std::vector<double> values() const;
};

/// Rectangle of cells [i0, i1) x [j0, j1) whose material is replaced after the texture
/// is built. Unset fields keep the texture's value.
struct MaterialOverride {
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
  std::optional<double> Ms, A_ex, K_u, alpha;
  std::optional<Vec3> easy_axis;
};

struct AnalysisConfig {
  std::vector<int> harmonics{10};
  /// (a, b) pairs read at |a f1 + b f2| for two-tone runs.
  std::vector<std::array<int, 2>> mixing;
  bool mode_maps = false;
  double relax_tol = 1e-6;  // T
};

struct OdmrMapConfig {
  SweepAxis bias_T{0.0, 3e-3, 100};
  Vec3 bias_direction{1.0, 0.0, 0.0};
  SweepAxis pump_hz{1e8, 3e9, 200};
  int max_harmonic = 25;
  /// Transverse amplitude assigned to every harmonic line in analytic mode.
  double analytic_line_T = 1e-4;
};

struct TwoToneMapConfig {
  SweepAxis f1_hz{1e8, 6e9, 120};
  SweepAxis f2_hz{1e8, 6e9, 120};
  double bias_T = 1.5e-3;
  Vec3 bias_direction{1.0, 0.0, 0.0};
  int max_order = 6;
  /// Coincidence window around each ESR line; 0 means linewidth / 2.
  double tolerance_hz = 0.0;
  double analytic_line_T = 1e-4;
  double tone2_amplitude_T = 8e-4;
};

struct SensingConfig {
  double f2_hz = 4e8;
  Vec3 bias_T{};               // field at the NV during sensing
  std::vector<int> axes{0};    // NV axes whose ESR lines are targeted
  Band f1_band{1e8, 1.2e10};
  int max_order = 6;
  double max_pump_hz = 8e9;
  bool verify = false;
  double tone2_amplitude_T = 8e-4;
};

/// Guard for modes that run the LLG solver once per sweep cell.
struct FullSimConfig {
  double max_cell_steps = 2e10;
  TextureSpec texture = TextureSpec::one_step();
  Grid grid{64, 2, 5e-9, 5e-9, 15e-9};
};

struct Scenario {
  Grid grid;
  Material material;
  DemagMode demag = DemagMode::ThinFilmLocal;
  std::vector<MaterialOverride> overrides;
  std::vector<TextureSpec> textures{TextureSpec::uniform(), TextureSpec::one_step(), TextureSpec::two_step(),
                                    TextureSpec::multi_step(4)};
  DriveSpec drive{{1e-3, 0.0, 0.0}, {Tone{8e-4, 2.87e8, 0.0, {0.0, 1.0, 0.0}}}};
  IntegratorConfig integrator{0.0};  // dt <= 0 means derive from the timing plan
  TimingOptions timing;
  AnalysisConfig analysis;
  NVModel nv;
  OdmrMapConfig odmr_map;
  TwoToneMapConfig two_tone_map;
  SensingConfig sensing;
  FullSimConfig full_sim;
  std::string output_dir = "out";
};

/// Every violation found while reading or checking a scenario, each prefixed by the
/// field path (e.g. "grid.dx: must be > 0").
class ScenarioError : public ConfigError {
 public:
  explicit ScenarioError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Reads a strict JSON scenario (unknown keys rejected). Parse errors report line and
/// column; all validation issues are collected before throwing ScenarioError.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Checks cross-field invariants; returns the issue list (empty when valid).
std::vector<std::string> validate_scenario(const Scenario& sc);

/// Canonical JSON form with every field written out.
std::string scenario_to_json(const Scenario& sc);

/// Applies the overrides to a material map built for sc.grid.
void apply_overrides(const Scenario& sc, MaterialMap& mat);

}  // namespace magmix
