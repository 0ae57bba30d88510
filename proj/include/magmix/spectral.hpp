#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "magmix/llg.hpp"

namespace magmix {

using Complex = std::complex<double>;

/// One-sided amplitude spectrum of a real, coherently sampled record. A component
/// A cos(2 pi f t + phi) on bin f reads back as A e^{i phi}; the DC bin holds the mean.
struct Spectrum {
  double df = 0.0;
  std::size_t n_samples = 0;
  std::vector<Complex> bins;

  double frequency(std::size_t k) const { return df * static_cast<double>(k); }
  /// Bin index for f; throws ContractViolation if f is off-grid or beyond Nyquist.
  std::size_t bin_index(double f) const;
  /// Sum of per-bin mean-square contributions (Parseval partner of mean_power()).
  double spectral_power() const;
};

/// Mean of x^2 over the record.
double mean_power(std::span<const double> x);

/// Rectangular-window FFT; the record must span whole periods of everything analysed.
Spectrum fft_spectrum(std::span<const double> x, double dt_sample);
Spectrum fft_spectrum(const TimeSeries& ts, int component);

Complex harmonic_amplitude(const Spectrum& spec, double f_pump, int n);
/// Bin at |a f1 + b f2|.
Complex mixing_amplitude(const Spectrum& spec, double f1, double f2, int a, int b);

struct ModeMap {
  std::vector<double> amplitude;  // per cell |bin of m_z at f|
  double average = 0.0;
};

/// Per-cell m_z amplitude at frequency f from the per-cell record.
ModeMap spatial_mode_map(const TimeSeries& ts, double f);

/// Polynomial susceptibilities chi[0] = chi^(1), chi[1] = chi^(2), ...
struct ChiSet {
  std::vector<double> chi;
};

/// M(t) = sum_n chi^(n) H(t)^n, pointwise.
std::vector<double> polynomial_response(std::span<const double> h, const ChiSet& chi);

/// A term c e^{-i 2 pi f t} (+ c.c. for f > 0) labelled by H1^n1 H2^n2 order.
struct MixingTerm {
  double frequency = 0.0;
  Complex amplitude;
  int n1 = 0;
  int n2 = 0;
};

/// Closed-form second-order response to H(t) = H1 e^{-i w1 t} + H2 e^{-i w2 t} + c.c.
/// The difference term is reported at |f1 - f2| with the coefficient of the
/// positive-frequency exponential (H1 H2* when f1 > f2, H1* H2 otherwise).
/// Terms with zero amplitude are dropped; the DC term is always present.
std::vector<MixingTerm> second_order_mixing_terms(Complex h1, Complex h2, double f1, double f2,
                                                  double chi2);

/// Real drive sample for the complex-exponential tone convention above.
double two_tone_field(Complex h1, Complex h2, double f1, double f2, double t);

/// What fft_spectrum reports on the term's bin: c for DC, 2 conj(c) otherwise.
Complex expected_bin_amplitude(const MixingTerm& term);

}  // namespace magmix
