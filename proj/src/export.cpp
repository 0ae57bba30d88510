#include "magmix/export.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "magmix/error.hpp"

namespace magmix {

namespace {

void put(std::string& out, const char* fmt, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, v);
  out += buf;
}

// %.16e: 17 significant digits, round-trips a double.
void num(std::string& out, double v) { put(out, "%.16e", v); }

}  // namespace

ExportFormat parse_export_format(std::string_view name) {
  if (name == "csv") return ExportFormat::Csv;
  if (name == "snapshot") return ExportFormat::Snapshot;
  throw ConfigError("unknown export format '" + std::string(name) + "' (csv or snapshot)");
}

std::string spectrum_csv(const Spectrum& spec) {
  std::string out = "freq_hz,amp_re,amp_im\n";
  for (std::size_t k = 0; k < spec.bins.size(); ++k) {
    num(out, spec.frequency(k));
    out += ',';
    num(out, spec.bins[k].real());
    out += ',';
    num(out, spec.bins[k].imag());
    out += '\n';
  }
  return out;
}

std::string odmr_csv(std::span<const double> probe_hz, std::span<const double> pl) {
  if (probe_hz.size() != pl.size()) throw ContractViolation("odmr_csv: probe and PL lengths differ");
  std::string out = "freq_hz,amp_re,amp_im\n";
  for (std::size_t k = 0; k < pl.size(); ++k) {
    num(out, probe_hz[k]);
    out += ',';
    num(out, pl[k]);
    out += ",0\n";
  }
  return out;
}

std::string sweep_csv(const SweepResult& r) {
  if (r.values.size() != r.axis1.size() * r.axis2.size()) {
    throw ContractViolation("sweep_csv: value count does not match the axis product");
  }
  std::string out = "axis1,axis2,value\n";
  out.reserve(out.size() + r.values.size() * 72);
  for (std::size_t i = 0; i < r.axis1.size(); ++i) {
    for (std::size_t j = 0; j < r.axis2.size(); ++j) {
      num(out, r.axis1[i]);
      out += ',';
      num(out, r.axis2[j]);
      out += ',';
      num(out, r.at(i, j));
      out += '\n';
    }
  }
  return out;
}

std::string planner_csv(std::span<const ProtocolSolution> plans) {
  std::string out = "a,b,branch,f1_hz,f2_hz,order\n";
  for (const auto& p : plans) {
    out += std::to_string(p.a) + ',' + std::to_string(p.b) + ',' + std::string(to_string(p.branch)) + ',';
    put(out, "%.6f", p.f1_hz);
    out += ',' + std::to_string(p.f2_hz) + ',' + std::to_string(p.order()) + '\n';
  }
  return out;
}

std::string mix_lines_csv(std::span<const MixLine> lines) {
  std::string out = "a,b,sign,branch,esr_hz,f1_start,f2_start,f1_end,f2_end\n";
  for (const auto& l : lines) {
    out += std::to_string(l.a) + ',' + std::to_string(l.b) + ',' + std::to_string(l.sign) + ',' +
           std::string(to_string(l.branch)) + ',' + std::to_string(l.esr_hz);
    for (double v : {l.f1_start, l.f2_start, l.f1_end, l.f2_end}) {
      out += ',';
      num(out, v);
    }
    out += '\n';
  }
  return out;
}

std::string harmonic_table_csv(const HarmonicResult& r) {
  std::string out = "texture,wall_count,wall_length_m,wall_width_m,harmonic,amp_re,amp_im,amp_abs\n";
  for (const auto& row : r.rows) {
    for (const auto& [n, a] : row.harmonics) {
      out += row.label + ',' + std::to_string(row.walls.wall_count) + ',';
      num(out, row.walls.total_length);
      out += ',';
      num(out, row.walls.mean_width);
      out += ',' + std::to_string(n) + ',';
      num(out, a.real());
      out += ',';
      num(out, a.imag());
      out += ',';
      num(out, std::abs(a));
      out += '\n';
    }
  }
  return out;
}

std::string mode_map_csv(const Grid& g, const ModeMap& m) {
  if (m.amplitude.size() != g.cells()) throw ContractViolation("mode_map_csv: map does not match the grid");
  std::string out = "i,j,amplitude\n";
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      out += std::to_string(i) + ',' + std::to_string(j) + ',';
      num(out, m.amplitude[g.index(i, j)]);
      out += '\n';
    }
  }
  return out;
}

std::string time_series_csv(const TimeSeries& ts) {
  std::string out = "t_s,mx,my,mz\n";
  for (std::size_t k = 0; k < ts.samples.size(); ++k) {
    num(out, ts.t0 + ts.dt_sample * static_cast<double>(k));
    const Vec3& v = ts.samples[k];
    for (double c : {v.x, v.y, v.z}) {
      out += ',';
      num(out, c);
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

void export_result(const SweepResult& r, const std::filesystem::path& path, ExportFormat fmt) {
  if (fmt != ExportFormat::Csv) throw ContractViolation("export: sweep results only export as csv");
  write_text_file(path, sweep_csv(r));
}

void export_result(const Spectrum& s, const std::filesystem::path& path, ExportFormat fmt) {
  if (fmt != ExportFormat::Csv) throw ContractViolation("export: spectra only export as csv");
  write_text_file(path, spectrum_csv(s));
}

void export_result(const SpinField& s, const std::filesystem::path& path, ExportFormat fmt) {
  if (fmt != ExportFormat::Snapshot) throw ContractViolation("export: spin fields only export as snapshot");
  std::ostringstream os;
  write_snapshot(os, s);
  write_text_file(path, os.str());
}

}  // namespace magmix
