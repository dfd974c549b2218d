#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "corecsp/errors.hpp"

namespace corecsp {

// The two motor-imagery classes carried through the whole pipeline.
inline constexpr int kClass1 = 1;
inline constexpr int kClass2 = 2;

inline bool is_valid_label(int label) { return label == kClass1 || label == kClass2; }

// One labeled multichannel EEG segment. Channels are rows, time samples are
// columns; values are microvolts. This channel-major layout is fixed
// project-wide.
struct TrialRecording {
  Eigen::MatrixXd data;  // d x t
  double sample_rate_hz = 0.0;
  int label = 0;  // 1 or 2
  std::string subject_id;
  std::string trial_id;

  Eigen::Index channels() const { return data.rows(); }
  Eigen::Index samples() const { return data.cols(); }
};

// No NaN/Inf, no empty axes, no unknown labels admitted past ingestion.
inline void validate_trial(const TrialRecording& trial) {
  if (trial.data.rows() < 1 || trial.data.cols() < 1) {
    throw dimension_error("trial '" + trial.trial_id +
                          "': needs at least one channel and one sample");
  }
  if (!trial.data.allFinite()) {
    throw value_error("trial '" + trial.trial_id + "': non-finite sample value");
  }
  if (!is_valid_label(trial.label)) {
    throw value_error("trial '" + trial.trial_id + "': label must be 1 or 2, got " +
                      std::to_string(trial.label));
  }
  if (!(trial.sample_rate_hz > 0.0)) {
    throw value_error("trial '" + trial.trial_id + "': sample rate must be positive");
  }
}

struct ManifestEntry {
  std::string path;
  int label = 0;
  std::string subject_id;
};

struct TrialManifest {
  double sample_rate_hz = 0.0;
  std::vector<ManifestEntry> entries;
};

inline void validate_manifest(const TrialManifest& manifest) {
  if (!(manifest.sample_rate_hz > 0.0)) {
    throw spec_error("manifest: sample_rate_hz must be positive");
  }
  for (const auto& entry : manifest.entries) {
    if (!is_valid_label(entry.label)) {
      throw spec_error("manifest entry '" + entry.path + "': label must be 1 or 2");
    }
    if (entry.path.empty()) throw spec_error("manifest entry with empty path");
  }
}

}  // namespace corecsp
