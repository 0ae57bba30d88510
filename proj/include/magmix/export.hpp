#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "magmix/experiments.hpp"

namespace magmix {

enum class ExportFormat { Csv, Snapshot };
ExportFormat parse_export_format(std::string_view name);

// All writers use fixed printf formats so identical inputs give identical bytes.

/// freq_hz,amp_re,amp_im, one row per bin.
std::string spectrum_csv(const Spectrum& spec);
/// Same schema for an ODMR trace: PL in amp_re, amp_im = 0.
std::string odmr_csv(std::span<const double> probe_hz, std::span<const double> pl);
/// axis1,axis2,value in row-major order.
std::string sweep_csv(const SweepResult& r);
/// a,b,branch,f1_hz,f2_hz,order
std::string planner_csv(std::span<const ProtocolSolution> plans);
/// a,b,sign,branch,esr_hz,f1_start,f2_start,f1_end,f2_end
std::string mix_lines_csv(std::span<const MixLine> lines);
/// texture,wall_count,wall_length_m,wall_width_m,harmonic,amp_re,amp_im,amp_abs
std::string harmonic_table_csv(const HarmonicResult& r);
/// i,j,amplitude
std::string mode_map_csv(const Grid& g, const ModeMap& m);
/// t_s,mx,my,mz
std::string time_series_csv(const TimeSeries& ts);

/// Writes text to path (parent directories created). Throws IoError naming the path.
void write_text_file(const std::filesystem::path& path, std::string_view text);

void export_result(const SweepResult& r, const std::filesystem::path& path, ExportFormat fmt = ExportFormat::Csv);
void export_result(const Spectrum& s, const std::filesystem::path& path, ExportFormat fmt = ExportFormat::Csv);
void export_result(const SpinField& s, const std::filesystem::path& path,
                   ExportFormat fmt = ExportFormat::Snapshot);

}  // namespace magmix
