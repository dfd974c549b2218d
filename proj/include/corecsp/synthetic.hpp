#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "corecsp/detail/strings.hpp"
#include "corecsp/trial.hpp"

namespace corecsp {

// Two-class stationary Gaussian generator: each class draws zero-mean samples
// with its own spatial covariance. Under this model CSP is the analytically
// optimal spatial filter, which makes the generated data a usable stand-in
// for recorded motor-imagery trials at desk scale.
struct SyntheticSpec {
  Eigen::Index channels = 0;
  Eigen::Index samples_per_trial = 0;
  Eigen::Index trials_per_class = 0;
  std::array<Eigen::MatrixXd, 2> class_covariances;
  std::uint64_t seed = 0;
  double sample_rate_hz = 160.0;
};

inline void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.channels < 1) throw spec_error("synthetic: channels must be >= 1");
  if (spec.samples_per_trial < 1) throw spec_error("synthetic: samples_per_trial must be >= 1");
  if (spec.trials_per_class < 1) throw spec_error("synthetic: trials_per_class must be >= 1");
  if (!(spec.sample_rate_hz > 0.0)) throw spec_error("synthetic: sample_rate_hz must be positive");
  for (int i = 0; i < 2; ++i) {
    const auto& cov = spec.class_covariances[i];
    const std::string name = "class " + std::to_string(i + 1) + " covariance";
    if (cov.rows() != spec.channels || cov.cols() != spec.channels) {
      throw spec_error("synthetic: " + name + " must be " + std::to_string(spec.channels) +
                       "x" + std::to_string(spec.channels));
    }
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw spec_error("synthetic: " + name + " is not symmetric within 1e-12");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (!(min_eig > 0.0)) {
      throw spec_error("synthetic: " + name + " is not positive-definite (eigenvalue " +
                       detail::format_g17(min_eig) + ")");
    }
  }
}

// Deterministic standard normals: mt19937_64 bits mapped to (0,1] uniforms
// and passed through Box-Muller. Avoids std::normal_distribution, whose
// output is implementation-defined.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  double uniform01() {
    // 53-bit mantissa, shifted into (0,1] so log() never sees zero.
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Draws trials_per_class trials for each class and returns them interleaved
// (class 1 trial 0, class 2 trial 0, class 1 trial 1, ...). The generator is
// consumed class-major, so the output is a pure function of (spec, seed).
inline std::vector<TrialRecording> generate_synthetic(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  const Eigen::Index d = spec.channels;
  const Eigen::Index t = spec.samples_per_trial;
  const Eigen::Index n = spec.trials_per_class;

  std::array<Eigen::MatrixXd, 2> chol;
  for (int i = 0; i < 2; ++i) {
    Eigen::LLT<Eigen::MatrixXd> llt(spec.class_covariances[i]);
    if (llt.info() != Eigen::Success) {
      throw spec_error("synthetic: class " + std::to_string(i + 1) +
                       " covariance has no Cholesky factor");
    }
    chol[i] = llt.matrixL();
  }

  GaussianStream gauss(spec.seed);
  std::array<std::vector<TrialRecording>, 2> per_class;
  for (int i = 0; i < 2; ++i) {
    per_class[i].reserve(static_cast<std::size_t>(n));
    for (Eigen::Index trial_index = 0; trial_index < n; ++trial_index) {
      Eigen::MatrixXd z(d, t);
      for (Eigen::Index col = 0; col < t; ++col)
        for (Eigen::Index row = 0; row < d; ++row) z(row, col) = gauss.next();
      TrialRecording trial;
      trial.data = chol[i] * z;
      trial.sample_rate_hz = spec.sample_rate_hz;
      trial.label = i + 1;
      trial.subject_id = "synthetic";
      char id[32];
      std::snprintf(id, sizeof(id), "class%d_trial%04lld", i + 1,
                    static_cast<long long>(trial_index));
      trial.trial_id = id;
      per_class[i].push_back(std::move(trial));
    }
  }

  std::vector<TrialRecording> out;
  out.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index trial_index = 0; trial_index < n; ++trial_index) {
    out.push_back(std::move(per_class[0][static_cast<std::size_t>(trial_index)]));
    out.push_back(std::move(per_class[1][static_cast<std::size_t>(trial_index)]));
  }
  return out;
}

}  // namespace corecsp
