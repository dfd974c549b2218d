#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "corecsp/trial.hpp"

namespace corecsp {

enum class FilterMode {
  zero_phase_offline,  // forward-backward pass, squared magnitude response
  causal_streaming,    // single forward pass
};

// Band-pass specification. `order` is the analog low-pass prototype order;
// the band-pass transform doubles the pole count.
struct FilterSpec {
  double low_cut_hz = 0.5;
  double high_cut_hz = 8.0;
  int order = 4;
  double sample_rate_hz = 160.0;
  FilterMode mode = FilterMode::zero_phase_offline;

  void validate() const {
    if (!(sample_rate_hz > 0.0)) throw spec_error("filter: sample rate must be positive");
    if (!(low_cut_hz > 0.0) || !(low_cut_hz < high_cut_hz) ||
        !(high_cut_hz < sample_rate_hz / 2.0)) {
      throw spec_error("filter: need 0 < low_cut < high_cut < sample_rate/2");
    }
    if (order < 2 || order > 8) throw spec_error("filter: order must be in [2, 8]");
  }
};

struct BiquadSection {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;  // numerator, z^0 z^-1 z^-2
  double a1 = 0.0, a2 = 0.0;            // denominator (a0 normalized to 1)
};

struct SosFilter {
  std::vector<BiquadSection> sections;
  double gain = 1.0;
};

// Complex frequency response of the cascade at freq_hz.
inline std::complex<double> sos_response(const SosFilter& filter, double freq_hz,
                                         double sample_rate_hz) {
  const double omega = 2.0 * M_PI * freq_hz / sample_rate_hz;
  const std::complex<double> z_inv = std::polar(1.0, -omega);
  std::complex<double> h = filter.gain;
  for (const auto& s : filter.sections) {
    h *= (s.b0 + s.b1 * z_inv + s.b2 * z_inv * z_inv) /
         (1.0 + s.a1 * z_inv + s.a2 * z_inv * z_inv);
  }
  return h;
}

namespace detail {

// Pairs the 2N digital poles into biquads with real coefficients: conjugate
// pairs together, leftover real poles paired among themselves.
inline std::vector<BiquadSection> pair_poles(std::vector<std::complex<double>> poles) {
  std::vector<BiquadSection> sections;
  std::vector<std::complex<double>> reals;
  std::sort(poles.begin(), poles.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  std::vector<bool> used(poles.size(), false);
  const double tol = 1e-10;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (used[i]) continue;
    if (std::abs(poles[i].imag()) <= tol) {
      reals.push_back(poles[i]);
      used[i] = true;
      continue;
    }
    // find the conjugate partner
    std::size_t match = poles.size();
    double best = 1e300;
    for (std::size_t j = i + 1; j < poles.size(); ++j) {
      if (used[j]) continue;
      const double dist = std::abs(poles[j] - std::conj(poles[i]));
      if (dist < best) {
        best = dist;
        match = j;
      }
    }
    if (match == poles.size())
      throw numeric_error("filter design: unpaired complex pole");
    used[i] = used[match] = true;
    BiquadSection s;
    s.a1 = -2.0 * poles[i].real();
    s.a2 = std::norm(poles[i]);
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;  // one zero at z=+1, one at z=-1
    sections.push_back(s);
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    BiquadSection s;
    s.a1 = -(reals[i].real() + reals[i + 1].real());
    s.a2 = reals[i].real() * reals[i + 1].real();
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    sections.push_back(s);
  }
  if (reals.size() % 2 != 0) throw numeric_error("filter design: odd real pole count");
  return sections;
}

}  // namespace detail

// Butterworth band-pass via the analog low-pass prototype, the low-pass to
// band-pass transform, and the bilinear map with frequency prewarping. Unit
// gain is pinned at the band's geometric center.
inline SosFilter design_butterworth_bandpass(const FilterSpec& spec) {
  spec.validate();
  const int n = spec.order;
  const double fs = spec.sample_rate_hz;
  const double fs2 = 2.0 * fs;
  const double w1 = fs2 * std::tan(M_PI * spec.low_cut_hz / fs);
  const double w2 = fs2 * std::tan(M_PI * spec.high_cut_hz / fs);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);

  std::vector<std::complex<double>> digital_poles;
  digital_poles.reserve(static_cast<std::size_t>(2 * n));
  for (int k = 1; k <= n; ++k) {
    const double phi = M_PI * (2.0 * k + n - 1.0) / (2.0 * n);
    const std::complex<double> proto = std::polar(1.0, phi);  // left half-plane
    const std::complex<double> q = proto * (bw / 2.0);
    const std::complex<double> disc = std::sqrt(q * q - std::complex<double>(w0 * w0, 0.0));
    for (const std::complex<double> s : {q + disc, q - disc}) {
      digital_poles.push_back((fs2 + s) / (fs2 - s));
    }
  }

  SosFilter filter;
  filter.sections = detail::pair_poles(std::move(digital_poles));

  // Normalize at the digital image of the analog center frequency.
  const double f_center = fs / M_PI * std::atan(w0 / fs2);
  const double unnormalized = std::abs(sos_response(filter, f_center, fs));
  if (!(unnormalized > 0.0) || !std::isfinite(unnormalized))
    throw numeric_error("filter design: degenerate center-frequency response");
  filter.gain = 1.0 / unnormalized;
  return filter;
}

// Single forward pass, direct form II transposed, zero initial conditions.
inline Eigen::VectorXd filter_forward(const SosFilter& filter, const Eigen::VectorXd& x) {
  Eigen::VectorXd y = x * filter.gain;
  for (const auto& s : filter.sections) {
    double z1 = 0.0, z2 = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double in = y[i];
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      y[i] = out;
    }
  }
  return y;
}

// Forward-backward pass; no padding, transients left in place.
inline Eigen::VectorXd filter_zero_phase(const SosFilter& filter, const Eigen::VectorXd& x) {
  Eigen::VectorXd y = filter_forward(filter, x);
  y.reverseInPlace();
  y = filter_forward(filter, y);
  y.reverseInPlace();
  return y;
}

// Filters every channel independently; output dimensions equal input.
inline TrialRecording bandpass(const TrialRecording& trial, const FilterSpec& spec) {
  spec.validate();
  if (trial.sample_rate_hz != spec.sample_rate_hz) {
    throw spec_error("bandpass: trial sample rate " +
                     std::to_string(trial.sample_rate_hz) + " does not match filter spec " +
                     std::to_string(spec.sample_rate_hz));
  }
  if (!trial.data.allFinite())
    throw value_error("bandpass: trial '" + trial.trial_id + "' has non-finite samples");

  const SosFilter filter = design_butterworth_bandpass(spec);
  TrialRecording out = trial;
  for (Eigen::Index c = 0; c < trial.channels(); ++c) {
    const Eigen::VectorXd channel = trial.data.row(c).transpose();
    const Eigen::VectorXd filtered = spec.mode == FilterMode::zero_phase_offline
                                         ? filter_zero_phase(filter, channel)
                                         : filter_forward(filter, channel);
    out.data.row(c) = filtered.transpose();
  }
  return out;
}

}  // namespace corecsp
