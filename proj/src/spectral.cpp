#include "magmix/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include "magmix/constants.hpp"
#include "magmix/error.hpp"

namespace magmix {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::size_t Spectrum::bin_index(double f) const {
  if (!(df > 0.0)) throw ContractViolation("spectrum: empty spectrum");
  const double pos = std::abs(f) / df;
  const double k = std::round(pos);
  if (std::abs(pos - k) > 1e-6) {
    std::ostringstream os;
    os.precision(12);
    os << "spectrum: " << f << " Hz is not on a bin center (nearest bin " << k * df << " Hz)";
    throw ContractViolation(os.str());
  }
  if (k >= static_cast<double>(bins.size())) {
    std::ostringstream os;
    os.precision(12);
    os << "spectrum: " << f << " Hz lies beyond the Nyquist bin " << frequency(bins.size() - 1) << " Hz";
    throw ContractViolation(os.str());
  }
  return static_cast<std::size_t>(k);
}

double Spectrum::spectral_power() const {
  double p = 0.0;
  const bool has_nyquist = n_samples % 2 == 0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double a2 = std::norm(bins[k]);
    const bool edge = k == 0 || (has_nyquist && k + 1 == bins.size());
    p += edge ? a2 : 0.5 * a2;
  }
  return p;
}

double mean_power(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  return x.empty() ? 0.0 : p / static_cast<double>(x.size());
}

Spectrum fft_spectrum(std::span<const double> x, double dt_sample) {
  const std::size_t n = x.size();
  if (n < 4) throw ContractViolation("fft_spectrum: need at least 4 samples, got " + std::to_string(n));
  if (!(dt_sample > 0.0)) throw ContractViolation("fft_spectrum: sample interval must be > 0");

  const std::size_t nb = n / 2 + 1;
  auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nb));
  std::unique_ptr<double, decltype(&fftw_free)> in_guard(in, &fftw_free);
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> out_guard(out, &fftw_free);

  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), in);
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  Spectrum s;
  s.n_samples = n;
  s.df = 1.0 / (dt_sample * static_cast<double>(n));
  s.bins.resize(nb);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < nb; ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    s.bins[k] = Complex(out[k][0], out[k][1]) * (edge ? inv_n : 2.0 * inv_n);
  }
  return s;
}

Spectrum fft_spectrum(const TimeSeries& ts, int component) {
  if (component < 0 || component > 2) throw ContractViolation("fft_spectrum: component must be x, y or z");
  const auto x = ts.component(component);
  return fft_spectrum(x, ts.dt_sample);
}

Complex harmonic_amplitude(const Spectrum& spec, double f_pump, int n) {
  return spec.bins[spec.bin_index(static_cast<double>(n) * f_pump)];
}

Complex mixing_amplitude(const Spectrum& spec, double f1, double f2, int a, int b) {
  return spec.bins[spec.bin_index(std::abs(a * f1 + b * f2))];
}

ModeMap spatial_mode_map(const TimeSeries& ts, double f) {
  if (!ts.has_cells()) throw ContractViolation("spatial_mode_map: per-cell samples were not recorded");
  const std::size_t n = ts.cell_sample_count();
  if (n < 4) throw ContractViolation("spatial_mode_map: need at least 4 per-cell samples");
  Spectrum grid;
  grid.df = 1.0 / (ts.cell_dt_sample * static_cast<double>(n));
  grid.n_samples = n;
  grid.bins.resize(n / 2 + 1);
  const std::size_t k = grid.bin_index(f);

  // Single-bin DFT with an exact index-reduced twiddle table.
  std::vector<Complex> twiddle(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double ph = -2.0 * kPi * static_cast<double>((k * t) % n) / static_cast<double>(n);
    twiddle[t] = Complex(std::cos(ph), std::sin(ph));
  }
  const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
  const double scale = (edge ? 1.0 : 2.0) / static_cast<double>(n);

  ModeMap out;
  out.amplitude.assign(ts.cells, 0.0);
  const auto cells = static_cast<std::ptrdiff_t>(ts.cells);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < cells; ++c) {
    Complex acc{};
    for (std::size_t t = 0; t < n; ++t) acc += twiddle[t] * ts.cell_mz[t * ts.cells + static_cast<std::size_t>(c)];
    out.amplitude[static_cast<std::size_t>(c)] = std::abs(acc) * scale;
  }
  double sum = 0.0;
  for (double a : out.amplitude) sum += a;
  out.average = sum / static_cast<double>(ts.cells);
  return out;
}

std::vector<double> polynomial_response(std::span<const double> h, const ChiSet& chi) {
  if (chi.chi.empty()) throw ContractViolation("polynomial_response: ChiSet needs at least chi^(1)");
  std::vector<double> m(h.size());
  for (std::size_t t = 0; t < h.size(); ++t) {
    // Horner on H * (chi1 + H * (chi2 + ...)).
    double acc = 0.0;
    for (auto it = chi.chi.rbegin(); it != chi.chi.rend(); ++it) acc = acc * h[t] + *it;
    m[t] = acc * h[t];
  }
  return m;
}

std::vector<MixingTerm> second_order_mixing_terms(Complex h1, Complex h2, double f1, double f2,
                                                  double chi2) {
  if (f1 == f2) {
    throw ContractViolation("second_order_mixing_terms: degenerate tones (f1 == f2); use the harmonic path");
  }
  std::vector<MixingTerm> out;
  auto add = [&](double f, Complex c, int n1, int n2) {
    if (c != Complex{}) out.push_back({f, c, n1, n2});
  };
  add(2.0 * f1, chi2 * h1 * h1, 2, 0);
  add(2.0 * f2, chi2 * h2 * h2, 0, 2);
  add(f1 + f2, 2.0 * chi2 * h1 * h2, 1, 1);
  const Complex diff = 2.0 * chi2 * h1 * std::conj(h2);
  add(std::abs(f1 - f2), f1 > f2 ? diff : std::conj(diff), 1, -1);
  out.push_back({0.0, 2.0 * chi2 * (std::norm(h1) + std::norm(h2)), 0, 0});
  return out;
}

double two_tone_field(Complex h1, Complex h2, double f1, double f2, double t) {
  const Complex e1 = std::polar(1.0, -2.0 * kPi * f1 * t);
  const Complex e2 = std::polar(1.0, -2.0 * kPi * f2 * t);
  return 2.0 * (h1 * e1 + h2 * e2).real();
}

Complex expected_bin_amplitude(const MixingTerm& term) {
  return term.frequency == 0.0 ? term.amplitude : 2.0 * std::conj(term.amplitude);
}

}  // namespace magmix
