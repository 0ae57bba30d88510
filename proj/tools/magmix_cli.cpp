// magmix: command-line front end for the scenario pipelines.
//
//   magmix <relax|run|harmonics|odmr-map|two-tone-map|plan> --scenario s.json [--out dir]
//          [--mode analytic|full-sim] [--threads N]
//
// Data goes to files under --out (and short summaries to stdout); progress goes to stderr.
// Exit status: 0 ok, 1 invalid input or configuration, 2 solver divergence.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "magmix/error.hpp"
#include "magmix/export.hpp"
#include "magmix/scenario.hpp"

namespace fs = std::filesystem;
using namespace magmix;

namespace {

struct Options {
  std::string scenario;
  std::string out;
  std::string mode = "analytic";
  int threads = 1;
  double f2_hz = 0.0;
  bool quiet = false;
};

std::string file_label(std::string label) {
  for (auto& c : label) {
    if (c == '(' || c == ')') c = '-';
  }
  while (!label.empty() && label.back() == '-') label.pop_back();
  return label;
}

Scenario load(const Options& o) { return o.scenario.empty() ? Scenario{} : load_scenario(o.scenario); }

fs::path out_dir(const Options& o, const Scenario& sc) { return o.out.empty() ? fs::path(sc.output_dir) : fs::path(o.out); }

RunOptions run_options(const Options& o) {
  RunOptions r;
  r.threads = o.threads;
  r.full_sim = o.mode == "full-sim";
  r.progress = o.quiet ? nullptr : &std::cerr;
  return r;
}

int cmd_relax(const Options& o) {
  const Scenario sc = load(o);
  const auto res = run_relax(sc);
  const auto dir = out_dir(o, sc);
  export_result(res.state, dir / "relaxed.snap");
  const auto w = wall_metrics(res.state);
  std::printf("steps %zu\nfinal_torque_T %.6e\nenergy_J %.10e\nwalls %d\nwall_length_m %.6e\nwall_width_m %.6e\n",
              res.steps, res.final_torque, res.energy, w.wall_count, w.total_length, w.mean_width);
  return 0;
}

int cmd_run(const Options& o) {
  const Scenario sc = load(o);
  const auto res = run_single(sc);
  const auto dir = out_dir(o, sc);
  write_text_file(dir / "spectrum.csv", spectrum_csv(res.spectrum));
  write_text_file(dir / "timeseries.csv", time_series_csv(res.run.series));
  export_result(res.run.final_state, dir / "final.snap");
  std::printf("samples %zu\ndf_hz %.6e\n", res.run.series.samples.size(), res.spectrum.df);
  return 0;
}

int cmd_harmonics(const Options& o) {
  const Scenario sc = load(o);
  const auto res = run_harmonic_experiment(sc, run_options(o));
  const auto dir = out_dir(o, sc);
  write_text_file(dir / "harmonics.csv", harmonic_table_csv(res));
  for (const auto& row : res.rows) {
    const std::string tag = file_label(row.label);
    write_text_file(dir / ("spectrum_" + tag + ".csv"), spectrum_csv(row.spectrum));
    export_result(row.relaxed, dir / ("relaxed_" + tag + ".snap"));
    for (const auto& [n, map] : row.mode_maps) {
      write_text_file(dir / ("mode_" + tag + "_n" + std::to_string(n) + ".csv"), mode_map_csv(sc.grid, map));
    }
    for (const auto& [n, a] : row.harmonics) {
      std::printf("%-16s walls %d  n=%-3d |m_z| %.6e", row.label.c_str(), row.walls.wall_count, n, std::abs(a));
      if (row.detection) std::printf("  detectable %s", row.detection->plus ? "yes" : "no");
      std::printf("\n");
    }
  }
  return 0;
}

int cmd_odmr_map(const Options& o) {
  const Scenario sc = load(o);
  const auto res = run_odmr_map(sc, run_options(o));
  export_result(res, out_dir(o, sc) / "odmr_map.csv");
  std::printf("cells %zu (%zu x %zu)\n", res.values.size(), res.axis1.size(), res.axis2.size());
  return 0;
}

int cmd_two_tone_map(const Options& o) {
  const Scenario sc = load(o);
  const auto res = run_two_tone_map(sc, run_options(o));
  const auto dir = out_dir(o, sc);
  export_result(res, dir / "two_tone_map.csv");
  const auto& tt = sc.two_tone_map;
  const auto targets = esr_targets(esr_all_axes(sc.nv, tt.bias_direction * tt.bias_T));
  const PlaneBounds bounds{std::min(tt.f1_hz.start, tt.f1_hz.stop), std::max(tt.f1_hz.start, tt.f1_hz.stop),
                           std::min(tt.f2_hz.start, tt.f2_hz.stop), std::max(tt.f2_hz.start, tt.f2_hz.stop)};
  if (bounds.f1_lo < bounds.f1_hi && bounds.f2_lo < bounds.f2_hi) {
    write_text_file(dir / "mixing_lines.csv", mix_lines_csv(theoretical_mixing_lines(targets, tt.max_order, bounds)));
  }
  std::printf("cells %zu (%zu x %zu)\n", res.values.size(), res.axis1.size(), res.axis2.size());
  return 0;
}

int cmd_plan(const Options& o) {
  Scenario sc = load(o);
  const double f2 = o.f2_hz > 0.0 ? o.f2_hz : sc.sensing.f2_hz;
  if (o.mode == "full-sim") sc.sensing.verify = true;
  const auto rep = run_sensing_plan(sc, std::llround(f2), run_options(o));
  const auto dir = out_dir(o, sc);
  write_text_file(dir / "plan.csv", planner_csv(rep.plans));
  write_text_file(dir / "fingerprint.csv", planner_csv(rep.fingerprint));
  for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const auto& p : rep.plans) {
    std::printf("(%d,%d) %-5s f1 %.6f Hz  f2 %lld Hz  f_esr %lld Hz  order %d\n", p.a, p.b,
                std::string(to_string(p.branch)).c_str(), p.f1_hz, static_cast<long long>(p.f2_hz),
                static_cast<long long>(p.esr_hz), p.order());
  }
  std::printf("fingerprint peaks %zu\n", rep.fingerprint.size());
  if (rep.verification) {
    std::printf("verification (%d,%d): field %.6e T, detected %s\n", rep.verification->plan.a,
                rep.verification->plan.b, rep.verification->field_T, rep.verification->detected ? "yes" : "no");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"magmix: magnon frequency-mixing simulator with NV readout"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "scenario JSON file (defaults apply when omitted)")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (default: scenario output_dir)");
    sub->add_option("--mode", o.mode, "analytic or full-sim")->check(CLI::IsMember({"analytic", "full-sim"}));
    sub->add_option("--threads", o.threads, "worker threads, 0 = auto")->check(CLI::NonNegativeNumber);
    sub->add_flag("--quiet", o.quiet, "no progress on stderr");
  };
  int (*handler)(const Options&) = nullptr;
  auto add = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    auto* sub = app.add_subcommand(name, help);
    common(sub);
    sub->callback([&handler, fn] { handler = fn; });
    return sub;
  };
  add("relax", "relax the first texture under the bias and write relaxed.snap", cmd_relax);
  add("run", "coherent driven run of the first texture: spectrum, time series, final state", cmd_run);
  add("harmonics", "texture sweep of harmonic amplitudes", cmd_harmonics);
  add("odmr-map", "PL map over bias and pump frequency", cmd_odmr_map);
  add("two-tone-map", "PL map over two tone frequencies", cmd_two_tone_map);
  auto* plan = add("plan", "up/down-conversion protocols for a signal frequency", cmd_plan);
  plan->add_option("--f2", o.f2_hz, "signal frequency in Hz (default: sensing.f2_hz)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    return handler(o);
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return 2;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "no convergence: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
