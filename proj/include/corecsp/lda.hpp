#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <string>
#include <utility>
#include <vector>

#include "corecsp/trial.hpp"

namespace corecsp {

// Gaussian equal-covariance linear discriminant. The decision rule is the
// Bayes-optimal linear threshold under equal priors:
//   predict class 2 iff w.x > c,  w = Sigma^-1 (mu2 - mu1),
//   c = w.(mu1 + mu2) / 2.
struct LdaModel {
  Eigen::VectorXd weights;
  double threshold = 0.0;
  Eigen::VectorXd class_mean_1, class_mean_2;
  Eigen::MatrixXd pooled_covariance;  // after shrinkage; the matrix the solve used
  double shrinkage = 0.0;

  Eigen::Index dim() const { return weights.size(); }
};

// Pooled within-class covariance with the unbiased (n-2) denominator, shrunk
// as (1-gamma) Sigma + gamma (trace/p) I.
inline LdaModel lda_fit(const std::vector<Eigen::VectorXd>& features,
                        const std::vector<int>& labels, double shrinkage = 0.0) {
  if (features.size() != labels.size())
    throw dimension_error("lda_fit: feature/label count mismatch");
  if (shrinkage < 0.0 || shrinkage > 1.0)
    throw spec_error("lda_fit: shrinkage must lie in [0, 1]");
  if (features.empty()) throw empty_input_error("lda_fit: no samples");

  const Eigen::Index p = features.front().size();
  if (p < 1) throw dimension_error("lda_fit: empty feature vectors");

  Eigen::VectorXd sum1 = Eigen::VectorXd::Zero(p), sum2 = Eigen::VectorXd::Zero(p);
  std::int64_t n1 = 0, n2 = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& x = features[i];
    if (x.size() != p) throw dimension_error("lda_fit: inconsistent feature dimension");
    if (!x.allFinite()) throw value_error("lda_fit: non-finite feature");
    if (!is_valid_label(labels[i]))
      throw value_error("lda_fit: label must be 1 or 2, got " + std::to_string(labels[i]));
    if (labels[i] == kClass1) {
      sum1 += x;
      ++n1;
    } else {
      sum2 += x;
      ++n2;
    }
  }
  if (n1 < 2 || n2 < 2) {
    throw empty_input_error("lda_fit: insufficient data (class 1 has " + std::to_string(n1) +
                            ", class 2 has " + std::to_string(n2) +
                            " samples; each needs at least 2)");
  }

  LdaModel model;
  model.shrinkage = shrinkage;
  model.class_mean_1 = sum1 / static_cast<double>(n1);
  model.class_mean_2 = sum2 / static_cast<double>(n2);

  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Eigen::VectorXd centered =
        features[i] - (labels[i] == kClass1 ? model.class_mean_1 : model.class_mean_2);
    within.noalias() += centered * centered.transpose();
  }
  Eigen::MatrixXd sigma = within / static_cast<double>(n1 + n2 - 2);
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  if (shrinkage > 0.0) {
    sigma = ((1.0 - shrinkage) * sigma +
             shrinkage * (sigma.trace() / static_cast<double>(p)) *
                 Eigen::MatrixXd::Identity(p, p))
                .eval();
  }
  model.pooled_covariance = sigma;

  // LLT's pivot test can pass on an exactly singular matrix through rounding,
  // so gate on the spectrum as well.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  const bool singular = !(es.eigenvalues().minCoeff() > 1e-12 * sigma.trace());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (singular || llt.info() != Eigen::Success) {
    throw numeric_error(shrinkage == 0.0
                            ? "lda_fit: singular pooled covariance; consider shrinkage > 0"
                            : "lda_fit: pooled covariance not positive-definite");
  }
  model.weights = llt.solve(model.class_mean_2 - model.class_mean_1);
  model.threshold = model.weights.dot(model.class_mean_1 + model.class_mean_2) / 2.0;
  return model;
}

// Returns (class, score) with score = w.x - c; ties go to class 1.
inline std::pair<int, double> lda_predict(const LdaModel& model,
                                          const Eigen::Ref<const Eigen::VectorXd>& feature) {
  if (feature.size() != model.dim())
    throw dimension_error("lda_predict: feature dimension " + std::to_string(feature.size()) +
                          " does not match model dimension " + std::to_string(model.dim()));
  if (!feature.allFinite()) throw value_error("lda_predict: non-finite feature");
  const double score = model.weights.dot(feature) - model.threshold;
  return {score > 0.0 ? kClass2 : kClass1, score};
}

}  // namespace corecsp
