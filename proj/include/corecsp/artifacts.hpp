#pragma once

#include <string>
#include <utility>
#include <vector>

#include "corecsp/trial.hpp"

namespace corecsp {

// Amplitude/flatline screening. The rejection criteria are per-channel: a
// trial is dropped when any channel spikes past amplitude_limit_uv or stays
// within flatline_epsilon_uv of constant for the whole trial.
struct ArtifactPolicy {
  double amplitude_limit_uv = 100.0;
  double flatline_epsilon_uv = 1e-6;

  void validate() const {
    if (!(flatline_epsilon_uv >= 0.0))
      throw spec_error("artifact policy: flatline_epsilon_uv must be >= 0");
    if (!(amplitude_limit_uv > flatline_epsilon_uv))
      throw spec_error("artifact policy: amplitude_limit_uv must exceed flatline_epsilon_uv");
  }
};

struct ArtifactRejection {
  std::string trial_id;
  std::string reason;  // "amplitude" or "flatline"
};

struct ArtifactScreenResult {
  std::vector<TrialRecording> kept;  // input order preserved
  std::vector<ArtifactRejection> rejected;
};

inline ArtifactScreenResult reject_artifacts(std::vector<TrialRecording> trials,
                                             const ArtifactPolicy& policy) {
  policy.validate();
  if (trials.empty()) throw empty_input_error("reject_artifacts: no trials");

  ArtifactScreenResult result;
  for (auto& trial : trials) {
    const char* reason = nullptr;
    if (trial.data.cwiseAbs().maxCoeff() > policy.amplitude_limit_uv) {
      reason = "amplitude";
    } else {
      for (Eigen::Index c = 0; c < trial.channels() && reason == nullptr; ++c) {
        const double range = trial.data.row(c).maxCoeff() - trial.data.row(c).minCoeff();
        if (range <= policy.flatline_epsilon_uv) reason = "flatline";
      }
    }
    if (reason != nullptr) {
      result.rejected.push_back({trial.trial_id, reason});
    } else {
      result.kept.push_back(std::move(trial));
    }
  }
  return result;
}

}  // namespace corecsp
