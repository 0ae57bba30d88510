#include "magmix/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace magmix {

using json = nlohmann::json;

double SweepAxis::value(int k) const {
  if (steps <= 1) return start;
  return start + (stop - start) * static_cast<double>(k) / static_cast<double>(steps - 1);
}

std::vector<double> SweepAxis::values() const {
  std::vector<double> out(static_cast<std::size_t>(std::max(steps, 0)));
  for (int k = 0; k < steps; ++k) out[static_cast<std::size_t>(k)] = value(k);
  return out;
}

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid scenario";
  for (const auto& s : issues) out += "\n  " + s;
  return out;
}

// Collects type and key errors instead of stopping at the first one.
class Reader {
 public:
  std::vector<std::string> issues;

  void fail(const std::string& path, const std::string& msg) { issues.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) {
      fail(path, "must be an object");
      return false;
    }
    for (const auto& [k, v] : j.items()) {
      (void)v;
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(join(path, k), "unknown key");
    }
    return true;
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

  void read(const json& j, const std::string& path, double& out) {
    if (!j.is_number()) return fail(path, "must be a number");
    out = j.get<double>();
  }
  void read(const json& j, const std::string& path, int& out) {
    if (!j.is_number_integer()) return fail(path, "must be an integer");
    const auto v = j.get<std::int64_t>();
    if (v < INT32_MIN || v > INT32_MAX) return fail(path, "out of range");
    out = static_cast<int>(v);
  }
  void read(const json& j, const std::string& path, std::size_t& out) {
    if (!j.is_number_unsigned()) return fail(path, "must be a non-negative integer");
    out = j.get<std::size_t>();
  }
  void read(const json& j, const std::string& path, bool& out) {
    if (!j.is_boolean()) return fail(path, "must be true or false");
    out = j.get<bool>();
  }
  void read(const json& j, const std::string& path, std::string& out) {
    if (!j.is_string()) return fail(path, "must be a string");
    out = j.get<std::string>();
  }
  void read(const json& j, const std::string& path, Vec3& out) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number()) {
      return fail(path, "must be an array of 3 numbers");
    }
    out = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  }
  void read(const json& j, const std::string& path, std::optional<double>& out) {
    double v = 0.0;
    const auto before = issues.size();
    read(j, path, v);
    if (issues.size() == before) out = v;
  }
  void read(const json& j, const std::string& path, std::optional<Vec3>& out) {
    Vec3 v;
    const auto before = issues.size();
    read(j, path, v);
    if (issues.size() == before) out = v;
  }
  void read(const json& j, const std::string& path, SweepAxis& out) {
    if (!object(j, path, {"start", "stop", "steps"})) return;
    field(j, path, "start", out.start);
    field(j, path, "stop", out.stop);
    field(j, path, "steps", out.steps);
  }
  void read(const json& j, const std::string& path, Band& out) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
      return fail(path, "must be an array [lo, hi]");
    }
    out = {j[0].get<double>(), j[1].get<double>()};
  }

  template <class T>
  void field(const json& obj, const std::string& path, std::string_view key, T& out) {
    const auto it = obj.find(std::string(key));
    if (it != obj.end()) read(*it, join(path, key), out);
  }
};

void read_grid(Reader& r, const json& j, const std::string& path, Grid& g) {
  if (!r.object(j, path, {"nx", "ny", "dx", "dy", "thickness"})) return;
  r.field(j, path, "nx", g.nx);
  r.field(j, path, "ny", g.ny);
  r.field(j, path, "dx", g.dx);
  r.field(j, path, "dy", g.dy);
  r.field(j, path, "thickness", g.thickness);
}

void read_texture(Reader& r, const json& j, const std::string& path, TextureSpec& t) {
  if (!r.object(j, path, {"kind", "n_walls", "stabilization", "stripe_anisotropy_factor", "stripe_gap"})) return;
  std::string kind = std::string(to_string(t.kind));
  r.field(j, path, "kind", kind);
  try {
    t.kind = parse_texture_kind(kind);
  } catch (const ConfigError&) {
    r.fail(Reader::join(path, "kind"), "unknown texture kind '" + kind + "'");
  }
  switch (t.kind) {
    case TextureKind::Uniform: t.n_walls = 0; break;
    case TextureKind::OneStep: t.n_walls = 1; break;
    case TextureKind::TwoStep: t.n_walls = 2; break;
    case TextureKind::MultiStep: t.n_walls = 4; break;
  }
  r.field(j, path, "n_walls", t.n_walls);
  std::string stab = std::string(to_string(t.stabilization));
  r.field(j, path, "stabilization", stab);
  try {
    t.stabilization = parse_wall_stabilization(stab);
  } catch (const ConfigError&) {
    r.fail(Reader::join(path, "stabilization"), "unknown stabilization '" + stab + "'");
  }
  r.field(j, path, "stripe_anisotropy_factor", t.stripe_anisotropy_factor);
  r.field(j, path, "stripe_gap", t.stripe_gap);
}

void read_tone(Reader& r, const json& j, const std::string& path, Tone& t) {
  if (!r.object(j, path, {"amplitude_T", "frequency_hz", "phase", "axis"})) return;
  r.field(j, path, "amplitude_T", t.amplitude_T);
  r.field(j, path, "frequency_hz", t.frequency_hz);
  r.field(j, path, "phase", t.phase);
  r.field(j, path, "axis", t.axis);
}

template <class T, class F>
void read_list(Reader& r, const json& obj, const std::string& path, std::string_view key, std::vector<T>& out,
               F&& each) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) return;
  const std::string p = Reader::join(path, key);
  if (!it->is_array()) return r.fail(p, "must be an array");
  out.clear();
  for (std::size_t k = 0; k < it->size(); ++k) {
    T v{};
    each(r, (*it)[k], p + "[" + std::to_string(k) + "]", v);
    out.push_back(v);
  }
}

void read_scenario(Reader& r, const json& j, Scenario& sc) {
  if (!r.object(j, "", {"grid", "material", "demag", "overrides", "textures", "drive", "integrator", "timing",
                        "analysis", "nv", "odmr_map", "two_tone_map", "sensing", "full_sim", "output_dir"})) {
    return;
  }
  if (j.contains("grid")) read_grid(r, j["grid"], "grid", sc.grid);

  if (j.contains("material")) {
    const auto& m = j["material"];
    if (r.object(m, "material", {"Ms", "A_ex", "K_u", "easy_axis", "alpha"})) {
      r.field(m, "material", "Ms", sc.material.Ms);
      r.field(m, "material", "A_ex", sc.material.A_ex);
      r.field(m, "material", "K_u", sc.material.K_u);
      r.field(m, "material", "easy_axis", sc.material.easy_axis);
      r.field(m, "material", "alpha", sc.material.alpha);
    }
  }
  if (j.contains("demag")) {
    std::string d;
    r.field(j, "", "demag", d);
    try {
      sc.demag = parse_demag_mode(d);
    } catch (const ConfigError&) {
      r.fail("demag", "must be \"thin-film-local\" or \"none\"");
    }
  }
  read_list(r, j, "", "overrides", sc.overrides, [](Reader& rr, const json& o, const std::string& p, MaterialOverride& v) {
    if (!rr.object(o, p, {"i0", "i1", "j0", "j1", "Ms", "A_ex", "K_u", "alpha", "easy_axis"})) return;
    rr.field(o, p, "i0", v.i0);
    rr.field(o, p, "i1", v.i1);
    rr.field(o, p, "j0", v.j0);
    rr.field(o, p, "j1", v.j1);
    rr.field(o, p, "Ms", v.Ms);
    rr.field(o, p, "A_ex", v.A_ex);
    rr.field(o, p, "K_u", v.K_u);
    rr.field(o, p, "alpha", v.alpha);
    rr.field(o, p, "easy_axis", v.easy_axis);
  });
  read_list(r, j, "", "textures", sc.textures, read_texture);

  if (j.contains("drive")) {
    const auto& d = j["drive"];
    if (r.object(d, "drive", {"bias_T", "tones"})) {
      r.field(d, "drive", "bias_T", sc.drive.bias_T);
      read_list(r, d, "drive", "tones", sc.drive.tones, read_tone);
    }
  }
  if (j.contains("integrator")) {
    const auto& c = j["integrator"];
    if (r.object(c, "integrator", {"dt", "sample_every", "record_per_cell", "cell_sample_every", "settle_time",
                                   "max_relax_steps"})) {
      r.field(c, "integrator", "dt", sc.integrator.dt);
      r.field(c, "integrator", "sample_every", sc.integrator.sample_every);
      r.field(c, "integrator", "record_per_cell", sc.integrator.record_per_cell);
      r.field(c, "integrator", "cell_sample_every", sc.integrator.cell_sample_every);
      r.field(c, "integrator", "settle_time", sc.integrator.settle_time);
      r.field(c, "integrator", "max_relax_steps", sc.integrator.max_relax_steps);
    }
  }
  if (j.contains("timing")) {
    const auto& c = j["timing"];
    if (r.object(c, "timing", {"periods", "settle_periods", "analysis_harmonics", "oversample", "nyquist_margin",
                               "sample_every", "cell_sample_every"})) {
      r.field(c, "timing", "periods", sc.timing.periods);
      r.field(c, "timing", "settle_periods", sc.timing.settle_periods);
      r.field(c, "timing", "analysis_harmonics", sc.timing.analysis_harmonics);
      r.field(c, "timing", "oversample", sc.timing.oversample);
      r.field(c, "timing", "nyquist_margin", sc.timing.nyquist_margin);
      r.field(c, "timing", "sample_every", sc.timing.sample_every);
      r.field(c, "timing", "cell_sample_every", sc.timing.cell_sample_every);
    }
  }
  if (j.contains("analysis")) {
    const auto& a = j["analysis"];
    if (r.object(a, "analysis", {"harmonics", "mixing", "mode_maps", "relax_tol"})) {
      read_list(r, a, "analysis", "harmonics", sc.analysis.harmonics,
                [](Reader& rr, const json& v, const std::string& p, int& out) { rr.read(v, p, out); });
      read_list(r, a, "analysis", "mixing", sc.analysis.mixing,
                [](Reader& rr, const json& v, const std::string& p, std::array<int, 2>& out) {
                  if (!v.is_array() || v.size() != 2) return rr.fail(p, "must be an array [a, b]");
                  rr.read(v[0], p + "[0]", out[0]);
                  rr.read(v[1], p + "[1]", out[1]);
                });
      r.field(a, "analysis", "mode_maps", sc.analysis.mode_maps);
      r.field(a, "analysis", "relax_tol", sc.analysis.relax_tol);
    }
  }
  if (j.contains("nv")) {
    const auto& n = j["nv"];
    if (r.object(n, "nv", {"D_hz", "gamma_e", "axes", "linewidth_hz", "contrast_max", "B_sat_T", "kappa_T",
                           "threshold_T"})) {
      r.field(n, "nv", "D_hz", sc.nv.D_hz);
      r.field(n, "nv", "gamma_e", sc.nv.gamma_e);
      if (n.contains("axes")) {
        const auto& ax = n["axes"];
        if (!ax.is_array() || ax.size() != 4) {
          r.fail("nv.axes", "must be an array of 4 vectors");
        } else {
          for (std::size_t k = 0; k < 4; ++k) r.read(ax[k], "nv.axes[" + std::to_string(k) + "]", sc.nv.axes[k]);
        }
      }
      r.field(n, "nv", "linewidth_hz", sc.nv.linewidth_hz);
      r.field(n, "nv", "contrast_max", sc.nv.contrast_max);
      r.field(n, "nv", "B_sat_T", sc.nv.B_sat_T);
      r.field(n, "nv", "kappa_T", sc.nv.kappa_T);
      r.field(n, "nv", "threshold_T", sc.nv.threshold_T);
    }
  }
  if (j.contains("odmr_map")) {
    const auto& o = j["odmr_map"];
    if (r.object(o, "odmr_map", {"bias_T", "bias_direction", "pump_hz", "max_harmonic", "analytic_line_T"})) {
      r.field(o, "odmr_map", "bias_T", sc.odmr_map.bias_T);
      r.field(o, "odmr_map", "bias_direction", sc.odmr_map.bias_direction);
      r.field(o, "odmr_map", "pump_hz", sc.odmr_map.pump_hz);
      r.field(o, "odmr_map", "max_harmonic", sc.odmr_map.max_harmonic);
      r.field(o, "odmr_map", "analytic_line_T", sc.odmr_map.analytic_line_T);
    }
  }
  if (j.contains("two_tone_map")) {
    const auto& o = j["two_tone_map"];
    const std::string p = "two_tone_map";
    if (r.object(o, p, {"f1_hz", "f2_hz", "bias_T", "bias_direction", "max_order", "tolerance_hz", "analytic_line_T",
                        "tone2_amplitude_T"})) {
      r.field(o, p, "f1_hz", sc.two_tone_map.f1_hz);
      r.field(o, p, "f2_hz", sc.two_tone_map.f2_hz);
      r.field(o, p, "bias_T", sc.two_tone_map.bias_T);
      r.field(o, p, "bias_direction", sc.two_tone_map.bias_direction);
      r.field(o, p, "max_order", sc.two_tone_map.max_order);
      r.field(o, p, "tolerance_hz", sc.two_tone_map.tolerance_hz);
      r.field(o, p, "analytic_line_T", sc.two_tone_map.analytic_line_T);
      r.field(o, p, "tone2_amplitude_T", sc.two_tone_map.tone2_amplitude_T);
    }
  }
  if (j.contains("sensing")) {
    const auto& o = j["sensing"];
    if (r.object(o, "sensing", {"f2_hz", "bias_T", "axes", "f1_band_hz", "max_order", "max_pump_hz", "verify",
                                "tone2_amplitude_T"})) {
      r.field(o, "sensing", "f2_hz", sc.sensing.f2_hz);
      r.field(o, "sensing", "bias_T", sc.sensing.bias_T);
      read_list(r, o, "sensing", "axes", sc.sensing.axes,
                [](Reader& rr, const json& v, const std::string& p, int& out) { rr.read(v, p, out); });
      r.field(o, "sensing", "f1_band_hz", sc.sensing.f1_band);
      r.field(o, "sensing", "max_order", sc.sensing.max_order);
      r.field(o, "sensing", "max_pump_hz", sc.sensing.max_pump_hz);
      r.field(o, "sensing", "verify", sc.sensing.verify);
      r.field(o, "sensing", "tone2_amplitude_T", sc.sensing.tone2_amplitude_T);
    }
  }
  if (j.contains("full_sim")) {
    const auto& o = j["full_sim"];
    if (r.object(o, "full_sim", {"max_cell_steps", "texture", "grid"})) {
      r.field(o, "full_sim", "max_cell_steps", sc.full_sim.max_cell_steps);
      if (o.contains("texture")) read_texture(r, o["texture"], "full_sim.texture", sc.full_sim.texture);
      if (o.contains("grid")) read_grid(r, o["grid"], "full_sim.grid", sc.full_sim.grid);
    }
  }
  r.field(j, "", "output_dir", sc.output_dir);
}

// Small helper so each check reads as one line.
struct Checker {
  std::vector<std::string>& out;
  void require(bool ok, const std::string& path, const char* msg) {
    if (!ok) out.push_back(path + ": " + msg);
  }
};

bool is_unit(const Vec3& v) { return std::abs(norm(v) - 1.0) <= 1e-9; }
bool is_integer_hz(double f) { return std::abs(f - std::round(f)) < 1e-6; }

void check_grid(Checker& c, const Grid& g, const std::string& p) {
  c.require(g.nx >= 2, p + ".nx", "must be >= 2");
  c.require(g.ny >= 2, p + ".ny", "must be >= 2");
  c.require(g.dx > 0.0, p + ".dx", "must be > 0");
  c.require(g.dy > 0.0, p + ".dy", "must be > 0");
  c.require(g.thickness > 0.0, p + ".thickness", "must be > 0");
}

void check_texture(Checker& c, const TextureSpec& t, const Grid& g, const std::string& p) {
  try {
    t.validate();
  } catch (const ConfigError& e) {
    c.out.push_back(p + ": " + e.what());
    return;
  }
  if (g.nx >= 2 && t.n_walls > 0 && g.nx / (t.n_walls + 1) < 4) {
    c.out.push_back(p + ".n_walls: " + std::to_string(t.n_walls + 1) + " stripes do not fit nx = " +
                    std::to_string(g.nx) + " (need >= 4 cells per stripe)");
  }
}

void check_axis(Checker& c, const SweepAxis& a, const std::string& p, bool positive) {
  c.require(a.steps >= 1, p + ".steps", "must be >= 1");
  c.require(std::isfinite(a.start) && std::isfinite(a.stop), p, "bounds must be finite");
  if (positive) c.require(a.start > 0.0 && a.stop > 0.0, p, "bounds must be > 0");
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json axis_json(const SweepAxis& a) { return {{"start", a.start}, {"stop", a.stop}, {"steps", a.steps}}; }
json grid_json(const Grid& g) {
  return {{"nx", g.nx}, {"ny", g.ny}, {"dx", g.dx}, {"dy", g.dy}, {"thickness", g.thickness}};
}
json texture_json(const TextureSpec& t) {
  return {{"kind", std::string(to_string(t.kind))},
          {"n_walls", t.n_walls},
          {"stabilization", std::string(to_string(t.stabilization))},
          {"stripe_anisotropy_factor", t.stripe_anisotropy_factor},
          {"stripe_gap", t.stripe_gap}};
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> issues)
    : ConfigError(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<std::string> validate_scenario(const Scenario& sc) {
  std::vector<std::string> issues;
  Checker c{issues};
  check_grid(c, sc.grid, "grid");

  const auto& m = sc.material;
  c.require(m.Ms > 0.0, "material.Ms", "must be > 0");
  c.require(m.A_ex >= 0.0, "material.A_ex", "must be >= 0");
  c.require(m.K_u >= 0.0, "material.K_u", "must be >= 0");
  c.require(m.alpha >= 0.0 && m.alpha <= 1.0, "material.alpha", "must lie in [0, 1]");
  c.require(is_unit(m.easy_axis), "material.easy_axis", "must be a unit vector");

  for (std::size_t k = 0; k < sc.overrides.size(); ++k) {
    const auto& o = sc.overrides[k];
    const std::string p = "overrides[" + std::to_string(k) + "]";
    c.require(0 <= o.i0 && o.i0 < o.i1 && o.i1 <= sc.grid.nx, p + ".i0", "need 0 <= i0 < i1 <= nx");
    c.require(0 <= o.j0 && o.j0 < o.j1 && o.j1 <= sc.grid.ny, p + ".j0", "need 0 <= j0 < j1 <= ny");
    if (o.Ms) c.require(*o.Ms > 0.0, p + ".Ms", "must be > 0");
    if (o.A_ex) c.require(*o.A_ex >= 0.0, p + ".A_ex", "must be >= 0");
    if (o.K_u) c.require(*o.K_u >= 0.0, p + ".K_u", "must be >= 0");
    if (o.alpha) c.require(*o.alpha >= 0.0 && *o.alpha <= 1.0, p + ".alpha", "must lie in [0, 1]");
    if (o.easy_axis) c.require(is_unit(*o.easy_axis), p + ".easy_axis", "must be a unit vector");
  }

  c.require(!sc.textures.empty(), "textures", "must list at least one texture");
  for (std::size_t k = 0; k < sc.textures.size(); ++k) {
    check_texture(c, sc.textures[k], sc.grid, "textures[" + std::to_string(k) + "]");
  }

  c.require(is_finite(sc.drive.bias_T), "drive.bias_T", "must be finite");
  for (std::size_t k = 0; k < sc.drive.tones.size(); ++k) {
    const auto& t = sc.drive.tones[k];
    const std::string p = "drive.tones[" + std::to_string(k) + "]";
    c.require(t.amplitude_T >= 0.0, p + ".amplitude_T", "must be >= 0");
    c.require(t.frequency_hz > 0.0, p + ".frequency_hz", "must be > 0");
    c.require(is_integer_hz(t.frequency_hz), p + ".frequency_hz", "must be a whole number of Hz");
    c.require(is_unit(t.axis), p + ".axis", "must be a unit vector");
  }

  const auto& ic = sc.integrator;
  c.require(ic.dt >= 0.0, "integrator.dt", "must be >= 0 (0 derives dt from the timing plan)");
  c.require(ic.sample_every >= 1, "integrator.sample_every", "must be >= 1");
  c.require(ic.cell_sample_every >= 0, "integrator.cell_sample_every", "must be >= 0");
  c.require(ic.settle_time >= 0.0, "integrator.settle_time", "must be >= 0");
  c.require(ic.max_relax_steps >= 1, "integrator.max_relax_steps", "must be >= 1");

  const auto& tm = sc.timing;
  c.require(tm.periods >= 1, "timing.periods", "must be >= 1");
  c.require(tm.settle_periods >= 0, "timing.settle_periods", "must be >= 0");
  c.require(tm.analysis_harmonics >= 1, "timing.analysis_harmonics", "must be >= 1");
  c.require(tm.oversample >= 2.0, "timing.oversample", "must be >= 2");
  c.require(tm.nyquist_margin >= 1.0, "timing.nyquist_margin", "must be >= 1");
  c.require(tm.sample_every >= 1, "timing.sample_every", "must be >= 1");
  c.require(tm.cell_sample_every >= 1, "timing.cell_sample_every", "must be >= 1");

  for (std::size_t k = 0; k < sc.analysis.harmonics.size(); ++k) {
    c.require(sc.analysis.harmonics[k] >= 1, "analysis.harmonics[" + std::to_string(k) + "]", "must be >= 1");
  }
  for (std::size_t k = 0; k < sc.analysis.mixing.size(); ++k) {
    const auto& ab = sc.analysis.mixing[k];
    c.require(ab[0] != 0 || ab[1] != 0, "analysis.mixing[" + std::to_string(k) + "]", "a and b cannot both be 0");
  }
  c.require(sc.analysis.relax_tol > 0.0, "analysis.relax_tol", "must be > 0");

  const auto& nv = sc.nv;
  c.require(nv.D_hz > 0.0, "nv.D_hz", "must be > 0");
  c.require(nv.gamma_e > 0.0, "nv.gamma_e", "must be > 0");
  c.require(nv.linewidth_hz > 0.0, "nv.linewidth_hz", "must be > 0");
  c.require(nv.contrast_max >= 0.0 && nv.contrast_max < 1.0, "nv.contrast_max", "must lie in [0, 1)");
  c.require(nv.B_sat_T > 0.0, "nv.B_sat_T", "must be > 0");
  c.require(nv.kappa_T >= 0.0, "nv.kappa_T", "must be >= 0");
  c.require(nv.threshold_T >= 0.0, "nv.threshold_T", "must be >= 0");
  for (std::size_t k = 0; k < 4; ++k) {
    c.require(is_unit(nv.axes[k]), "nv.axes[" + std::to_string(k) + "]", "must be a unit vector");
  }

  const auto& om = sc.odmr_map;
  check_axis(c, om.bias_T, "odmr_map.bias_T", false);
  c.require(std::max(std::abs(om.bias_T.start), std::abs(om.bias_T.stop)) < 0.1, "odmr_map.bias_T",
            "|B| must stay below 0.1 T");
  c.require(is_unit(om.bias_direction), "odmr_map.bias_direction", "must be a unit vector");
  check_axis(c, om.pump_hz, "odmr_map.pump_hz", true);
  c.require(om.max_harmonic >= 1, "odmr_map.max_harmonic", "must be >= 1");
  c.require(om.analytic_line_T >= 0.0, "odmr_map.analytic_line_T", "must be >= 0");

  const auto& tt = sc.two_tone_map;
  check_axis(c, tt.f1_hz, "two_tone_map.f1_hz", true);
  check_axis(c, tt.f2_hz, "two_tone_map.f2_hz", true);
  c.require(std::abs(tt.bias_T) < 0.1, "two_tone_map.bias_T", "|B| must stay below 0.1 T");
  c.require(is_unit(tt.bias_direction), "two_tone_map.bias_direction", "must be a unit vector");
  c.require(tt.max_order >= 1 && tt.max_order <= 8, "two_tone_map.max_order", "must lie in 1..8");
  c.require(tt.tolerance_hz >= 0.0, "two_tone_map.tolerance_hz", "must be >= 0");
  c.require(tt.analytic_line_T >= 0.0, "two_tone_map.analytic_line_T", "must be >= 0");
  c.require(tt.tone2_amplitude_T >= 0.0, "two_tone_map.tone2_amplitude_T", "must be >= 0");

  const auto& se = sc.sensing;
  c.require(se.f2_hz > 0.0, "sensing.f2_hz", "must be > 0");
  c.require(is_integer_hz(se.f2_hz), "sensing.f2_hz", "must be a whole number of Hz");
  c.require(norm(se.bias_T) < 0.1, "sensing.bias_T", "|B| must stay below 0.1 T");
  c.require(!se.axes.empty(), "sensing.axes", "must list at least one NV axis");
  for (std::size_t k = 0; k < se.axes.size(); ++k) {
    c.require(se.axes[k] >= 0 && se.axes[k] <= 3, "sensing.axes[" + std::to_string(k) + "]", "must be 0..3");
  }
  c.require(se.f1_band.lo < se.f1_band.hi, "sensing.f1_band_hz", "need lo < hi");
  c.require(se.max_order >= 1 && se.max_order <= 8, "sensing.max_order", "must lie in 1..8");
  c.require(se.max_pump_hz > 0.0, "sensing.max_pump_hz", "must be > 0");
  c.require(se.tone2_amplitude_T >= 0.0, "sensing.tone2_amplitude_T", "must be >= 0");

  c.require(sc.full_sim.max_cell_steps > 0.0, "full_sim.max_cell_steps", "must be > 0");
  check_grid(c, sc.full_sim.grid, "full_sim.grid");
  check_texture(c, sc.full_sim.texture, sc.full_sim.grid, "full_sim.texture");

  c.require(!sc.output_dir.empty(), "output_dir", "must not be empty");
  return issues;
}

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line/column pair.
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t k = 0; k < pos; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    const auto colon = what.find(": ", what.find("parse error"));
    if (colon != std::string::npos) what = what.substr(colon + 2);
    throw ScenarioError({"parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                         what});
  }
  Scenario sc;
  Reader r;
  read_scenario(r, j, sc);
  auto issues = std::move(r.issues);
  for (auto& s : validate_scenario(sc)) issues.push_back(std::move(s));
  if (!issues.empty()) throw ScenarioError(std::move(issues));
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError({path.string() + ": cannot open scenario file"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["grid"] = grid_json(sc.grid);
  j["material"] = {{"Ms", sc.material.Ms},
                   {"A_ex", sc.material.A_ex},
                   {"K_u", sc.material.K_u},
                   {"easy_axis", vec_json(sc.material.easy_axis)},
                   {"alpha", sc.material.alpha}};
  j["demag"] = std::string(to_string(sc.demag));
  j["overrides"] = json::array();
  for (const auto& o : sc.overrides) {
    json e = {{"i0", o.i0}, {"i1", o.i1}, {"j0", o.j0}, {"j1", o.j1}};
    if (o.Ms) e["Ms"] = *o.Ms;
    if (o.A_ex) e["A_ex"] = *o.A_ex;
    if (o.K_u) e["K_u"] = *o.K_u;
    if (o.alpha) e["alpha"] = *o.alpha;
    if (o.easy_axis) e["easy_axis"] = vec_json(*o.easy_axis);
    j["overrides"].push_back(e);
  }
  j["textures"] = json::array();
  for (const auto& t : sc.textures) j["textures"].push_back(texture_json(t));
  json tones = json::array();
  for (const auto& t : sc.drive.tones) {
    tones.push_back({{"amplitude_T", t.amplitude_T},
                     {"frequency_hz", t.frequency_hz},
                     {"phase", t.phase},
                     {"axis", vec_json(t.axis)}});
  }
  j["drive"] = {{"bias_T", vec_json(sc.drive.bias_T)}, {"tones", tones}};
  j["integrator"] = {{"dt", sc.integrator.dt},
                     {"sample_every", sc.integrator.sample_every},
                     {"record_per_cell", sc.integrator.record_per_cell},
                     {"cell_sample_every", sc.integrator.cell_sample_every},
                     {"settle_time", sc.integrator.settle_time},
                     {"max_relax_steps", sc.integrator.max_relax_steps}};
  j["timing"] = {{"periods", sc.timing.periods},
                 {"settle_periods", sc.timing.settle_periods},
                 {"analysis_harmonics", sc.timing.analysis_harmonics},
                 {"oversample", sc.timing.oversample},
                 {"nyquist_margin", sc.timing.nyquist_margin},
                 {"sample_every", sc.timing.sample_every},
                 {"cell_sample_every", sc.timing.cell_sample_every}};
  json mixing = json::array();
  for (const auto& ab : sc.analysis.mixing) mixing.push_back({ab[0], ab[1]});
  j["analysis"] = {{"harmonics", sc.analysis.harmonics},
                   {"mixing", mixing},
                   {"mode_maps", sc.analysis.mode_maps},
                   {"relax_tol", sc.analysis.relax_tol}};
  json axes = json::array();
  for (const auto& a : sc.nv.axes) axes.push_back(vec_json(a));
  j["nv"] = {{"D_hz", sc.nv.D_hz},
             {"gamma_e", sc.nv.gamma_e},
             {"axes", axes},
             {"linewidth_hz", sc.nv.linewidth_hz},
             {"contrast_max", sc.nv.contrast_max},
             {"B_sat_T", sc.nv.B_sat_T},
             {"kappa_T", sc.nv.kappa_T},
             {"threshold_T", sc.nv.threshold_T}};
  j["odmr_map"] = {{"bias_T", axis_json(sc.odmr_map.bias_T)},
                   {"bias_direction", vec_json(sc.odmr_map.bias_direction)},
                   {"pump_hz", axis_json(sc.odmr_map.pump_hz)},
                   {"max_harmonic", sc.odmr_map.max_harmonic},
                   {"analytic_line_T", sc.odmr_map.analytic_line_T}};
  j["two_tone_map"] = {{"f1_hz", axis_json(sc.two_tone_map.f1_hz)},
                       {"f2_hz", axis_json(sc.two_tone_map.f2_hz)},
                       {"bias_T", sc.two_tone_map.bias_T},
                       {"bias_direction", vec_json(sc.two_tone_map.bias_direction)},
                       {"max_order", sc.two_tone_map.max_order},
                       {"tolerance_hz", sc.two_tone_map.tolerance_hz},
                       {"analytic_line_T", sc.two_tone_map.analytic_line_T},
                       {"tone2_amplitude_T", sc.two_tone_map.tone2_amplitude_T}};
  j["sensing"] = {{"f2_hz", sc.sensing.f2_hz},
                  {"bias_T", vec_json(sc.sensing.bias_T)},
                  {"axes", sc.sensing.axes},
                  {"f1_band_hz", {sc.sensing.f1_band.lo, sc.sensing.f1_band.hi}},
                  {"max_order", sc.sensing.max_order},
                  {"max_pump_hz", sc.sensing.max_pump_hz},
                  {"verify", sc.sensing.verify},
                  {"tone2_amplitude_T", sc.sensing.tone2_amplitude_T}};
  j["full_sim"] = {{"max_cell_steps", sc.full_sim.max_cell_steps},
                   {"texture", texture_json(sc.full_sim.texture)},
                   {"grid", grid_json(sc.full_sim.grid)}};
  j["output_dir"] = sc.output_dir;
  return j.dump(2) + "\n";
}

void apply_overrides(const Scenario& sc, MaterialMap& mat) {
  for (const auto& o : sc.overrides) {
    for (int j = o.j0; j < o.j1; ++j) {
      for (int i = o.i0; i < o.i1; ++i) {
        const auto c = mat.grid.index(i, j);
        if (o.Ms) mat.Ms[c] = *o.Ms;
        if (o.A_ex) mat.A_ex[c] = *o.A_ex;
        if (o.K_u) mat.K_u[c] = *o.K_u;
        if (o.alpha) mat.alpha[c] = *o.alpha;
        if (o.easy_axis) mat.easy_axis[c] = *o.easy_axis;
      }
    }
  }
}

}  // namespace magmix
