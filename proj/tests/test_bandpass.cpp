#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "corecsp/bandpass.hpp"
#include "test_support.hpp"

using namespace corecsp;

namespace {

// Independent magnitude oracle: the analog Butterworth band-pass response
// |H(jW)| = 1/sqrt(1 + ((W^2 - w0^2)/(B W))^(2N)) evaluated at the prewarped
// frequency, which is exactly what the bilinear-transformed digital filter
// must realize.
double analog_magnitude(double f_hz, const FilterSpec& spec) {
  const double fs2 = 2.0 * spec.sample_rate_hz;
  const double w = fs2 * std::tan(M_PI * f_hz / spec.sample_rate_hz);
  const double w1 = fs2 * std::tan(M_PI * spec.low_cut_hz / spec.sample_rate_hz);
  const double w2 = fs2 * std::tan(M_PI * spec.high_cut_hz / spec.sample_rate_hz);
  const double w0sq = w1 * w2;
  const double b = w2 - w1;
  const double x = (w * w - w0sq) / (b * w);
  return 1.0 / std::sqrt(1.0 + std::pow(x * x, spec.order));
}

Eigen::VectorXd sine(double freq_hz, double fs, Eigen::Index n) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = std::sin(2.0 * M_PI * freq_hz * i / fs);
  return x;
}

// Peak amplitude over the middle half of the signal, past the edge transients.
double steady_state_amplitude(const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  return y.segment(n / 4, n / 2).cwiseAbs().maxCoeff();
}

FilterSpec paper_band() {
  FilterSpec spec;
  spec.low_cut_hz = 0.5;
  spec.high_cut_hz = 8.0;
  spec.order = 4;
  spec.sample_rate_hz = 160.0;
  spec.mode = FilterMode::zero_phase_offline;
  return spec;
}

TrialRecording make_trial(const Eigen::MatrixXd& data, double fs) {
  TrialRecording trial;
  trial.data = data;
  trial.sample_rate_hz = fs;
  trial.label = 1;
  trial.trial_id = "t";
  return trial;
}

}  // namespace

TEST_CASE("designed response matches the analog-prototype oracle", "[bandpass]") {
  const FilterSpec spec = paper_band();
  const SosFilter filter = design_butterworth_bandpass(spec);
  for (double f : {0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 20.0, 40.0, 70.0}) {
    const double expected = analog_magnitude(f, spec);
    const double actual = std::abs(sos_response(filter, f, spec.sample_rate_hz));
    REQUIRE(actual == Catch::Approx(expected).margin(1e-9));
  }
}

TEST_CASE("zero-phase gain at 4 Hz is near unity, 40 Hz strongly attenuated", "[bandpass]") {
  const FilterSpec spec = paper_band();
  const double fs = spec.sample_rate_hz;

  // Frequency-domain oracle (zero-phase applies the magnitude twice).
  const double gain4 = analog_magnitude(4.0, spec) * analog_magnitude(4.0, spec);
  const double gain40 = analog_magnitude(40.0, spec) * analog_magnitude(40.0, spec);
  REQUIRE(gain4 >= 0.95);
  REQUIRE(gain4 <= 1.05);
  REQUIRE(gain40 <= 0.1);

  // Time-domain route must agree with the oracle.
  const SosFilter filter = design_butterworth_bandpass(spec);
  const Eigen::VectorXd in4 = sine(4.0, fs, 4800);
  const double amp4 = steady_state_amplitude(filter_zero_phase(filter, in4));
  REQUIRE(amp4 >= 0.95);
  REQUIRE(amp4 <= 1.05);
  REQUIRE(amp4 == Catch::Approx(gain4).margin(5e-3));

  const Eigen::VectorXd in40 = sine(40.0, fs, 4800);
  const double amp40 = steady_state_amplitude(filter_zero_phase(filter, in40));
  REQUIRE(amp40 <= 0.1);
}

TEST_CASE("all-zero trial filters to all zeros", "[bandpass]") {
  const FilterSpec spec = paper_band();
  const TrialRecording trial = make_trial(Eigen::MatrixXd::Zero(3, 400), spec.sample_rate_hz);
  const TrialRecording out = bandpass(trial, spec);
  REQUIRE(out.data.rows() == 3);
  REQUIRE(out.data.cols() == 400);
  REQUIRE(out.data.isZero(0.0));
}

TEST_CASE("bandpass is linear per channel", "[bandpass]") {
  FilterSpec spec = paper_band();
  std::mt19937_64 rng(31);
  for (FilterMode mode : {FilterMode::zero_phase_offline, FilterMode::causal_streaming}) {
    spec.mode = mode;
    const Eigen::MatrixXd x = testsup::random_matrix(rng, 2, 512);
    const Eigen::MatrixXd y = testsup::random_matrix(rng, 2, 512);
    const double a = 1.7, b = -0.4;
    const TrialRecording fx = bandpass(make_trial(x, spec.sample_rate_hz), spec);
    const TrialRecording fy = bandpass(make_trial(y, spec.sample_rate_hz), spec);
    const TrialRecording fxy = bandpass(make_trial(a * x + b * y, spec.sample_rate_hz), spec);
    const Eigen::MatrixXd combined = a * fx.data + b * fy.data;
    REQUIRE((fxy.data - combined).norm() <= 1e-9 * std::max(1.0, combined.norm()));
  }
}

TEST_CASE("zero-phase mode introduces no phase shift", "[bandpass]") {
  const FilterSpec spec = paper_band();
  const double fs = spec.sample_rate_hz;
  const SosFilter filter = design_butterworth_bandpass(spec);
  const Eigen::VectorXd x = sine(4.0, fs, 3200);
  const Eigen::VectorXd y = filter_zero_phase(filter, x);

  // Cross-correlation over the interior, peak must sit at lag zero.
  const Eigen::Index margin = 400;
  const Eigen::Index n = x.size();
  int best_lag = -1000;
  double best = -1e300;
  for (int lag = -20; lag <= 20; ++lag) {
    double acc = 0.0;
    for (Eigen::Index i = margin; i < n - margin; ++i) acc += x[i] * y[i + lag];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  REQUIRE(best_lag == 0);

  // The causal pass, by contrast, delays the signal (group delay at 4 Hz is
  // about 12 samples, well inside the scanned lag range).
  const Eigen::VectorXd yc = filter_forward(filter, x);
  int causal_lag = 0;
  best = -1e300;
  for (int lag = -20; lag <= 20; ++lag) {
    double acc = 0.0;
    for (Eigen::Index i = margin; i < n - margin; ++i) acc += x[i] * yc[i + lag];
    if (acc > best) {
      best = acc;
      causal_lag = lag;
    }
  }
  REQUIRE(causal_lag > 0);
}

TEST_CASE("filter spec validation", "[bandpass]") {
  FilterSpec spec = paper_band();
  SECTION("high cut above Nyquist") {
    spec.high_cut_hz = 90.0;
    REQUIRE_THROWS_AS(spec.validate(), spec_error);
  }
  SECTION("inverted band") {
    spec.low_cut_hz = 9.0;
    REQUIRE_THROWS_AS(spec.validate(), spec_error);
  }
  SECTION("order out of range") {
    spec.order = 9;
    REQUIRE_THROWS_AS(spec.validate(), spec_error);
    spec.order = 1;
    REQUIRE_THROWS_AS(spec.validate(), spec_error);
  }
  SECTION("sample-rate mismatch") {
    const TrialRecording trial = make_trial(Eigen::MatrixXd::Zero(1, 16), 128.0);
    REQUIRE_THROWS_AS(bandpass(trial, paper_band()), spec_error);
  }
  SECTION("non-finite input") {
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(1, 16);
    bad(0, 3) = std::numeric_limits<double>::quiet_NaN();
    TrialRecording trial = make_trial(bad, 160.0);
    REQUIRE_THROWS_AS(bandpass(trial, paper_band()), value_error);
  }
}

TEST_CASE("odd prototype orders design cleanly", "[bandpass]") {
  FilterSpec spec = paper_band();
  spec.order = 3;
  const SosFilter filter = design_butterworth_bandpass(spec);
  REQUIRE(filter.sections.size() == 3);
  const double center = std::sqrt(spec.low_cut_hz * spec.high_cut_hz);
  const double g = std::abs(sos_response(filter, center, spec.sample_rate_hz));
  REQUIRE(g == Catch::Approx(analog_magnitude(center, spec)).margin(1e-9));
}

TEST_CASE("causal mode output differs from zero-phase but keeps dimensions", "[bandpass]") {
  FilterSpec zp = paper_band();
  FilterSpec causal = paper_band();
  causal.mode = FilterMode::causal_streaming;
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = testsup::random_matrix(rng, 2, 256);
  const TrialRecording a = bandpass(make_trial(x, 160.0), zp);
  const TrialRecording c = bandpass(make_trial(x, 160.0), causal);
  REQUIRE(a.data.rows() == c.data.rows());
  REQUIRE(a.data.cols() == c.data.cols());
  REQUIRE((a.data - c.data).norm() > 0.0);
}
