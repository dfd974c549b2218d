#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "corecsp/coreset.hpp"
#include "corecsp/detail/strings.hpp"
#include "corecsp/trial.hpp"

namespace corecsp {

// Pluggable sink for non-fatal diagnostics (auto-ridge escalation, skipped
// subjects). Defaults to stderr.
inline std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> handler = [](const std::string& message) {
    std::cerr << "[corecsp] warning: " << message << '\n';
  };
  return handler;
}

inline void warn(const std::string& message) {
  if (warning_handler()) warning_handler()(message);
}

// Generalized eigenpairs of the class-covariance pencil R1 v = lambda R2 v.
// Columns of `filters` are unit-norm spatial filters sorted by descending
// eigenvalue, sign fixed so each column's largest-magnitude entry is
// positive. The top column is the maximizer of the variance ratio
// ||w^T X1||^2 / ||w^T X2||^2 (per-class normalized).
struct SpatialFilterBank {
  Eigen::MatrixXd filters;      // d x d
  Eigen::VectorXd eigenvalues;  // length d, descending
  int selected_per_side = 2;    // m

  Eigen::Index channels() const { return filters.rows(); }

  // Indices of the m largest- and m smallest-eigenvalue columns.
  std::vector<Eigen::Index> selected_indices() const {
    std::vector<Eigen::Index> idx;
    const Eigen::Index d = channels();
    for (int i = 0; i < selected_per_side; ++i) idx.push_back(i);
    for (int i = selected_per_side; i >= 1; --i) idx.push_back(d - i);
    return idx;
  }

  Eigen::MatrixXd selected_filters() const {
    const auto idx = selected_indices();
    Eigen::MatrixXd sel(channels(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) sel.col(static_cast<Eigen::Index>(j)) = filters.col(idx[j]);
    return sel;
  }
};

enum class GevdStrategy {
  cholesky_whitening,  // default: whiten R2 via its Cholesky factor
  svd_diagonal,        // coreset fast path: whiten via U2 and the diagonal S2^-2
};

namespace detail {

inline void check_selected(Eigen::Index d, int m) {
  if (m < 1) throw spec_error("csp: selected components per side must be >= 1");
  if (2 * static_cast<Eigen::Index>(m) > d) {
    throw spec_error("csp: 2m = " + std::to_string(2 * m) + " exceeds channel count " +
                     std::to_string(d));
  }
}

inline Eigen::MatrixXd with_ridge(const Eigen::MatrixXd& r, double ridge) {
  if (ridge <= 0.0) return r;
  const Eigen::Index d = r.rows();
  return r + ridge * (r.trace() / static_cast<double>(d)) *
                 Eigen::MatrixXd::Identity(d, d);
}

// Ridge 0 is escalated to 1e-8 when R2 is numerically singular; band-passed
// real recordings routinely produce rank-deficient class covariances.
inline double effective_ridge(const Eigen::MatrixXd& r2, double ridge) {
  if (ridge < 0.0) throw spec_error("csp: ridge must be >= 0");
  if (ridge > 0.0) return ridge;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r2, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig <= 1e-12 * r2.trace()) {
    warn("csp: class-2 covariance near-singular (min eigenvalue " +
         corecsp::detail::format_g17(min_eig) + "); escalating ridge to 1e-8");
    return 1e-8;
  }
  return 0.0;
}

// Descending eigenvalue order (ties by ascending input position), unit-norm
// columns, dominant entry positive.
inline SpatialFilterBank finalize_bank(Eigen::MatrixXd raw_filters, Eigen::VectorXd raw_values,
                                       int m) {
  const Eigen::Index d = raw_filters.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return raw_values[a] > raw_values[b];
  });

  SpatialFilterBank bank;
  bank.filters.resize(d, d);
  bank.eigenvalues.resize(d);
  bank.selected_per_side = m;
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::VectorXd v = raw_filters.col(order[static_cast<std::size_t>(j)]);
    const double norm = v.norm();
    if (!(norm > 0.0)) throw numeric_error("csp: zero-norm eigenvector");
    v /= norm;
    Eigen::Index dominant = 0;
    v.cwiseAbs().maxCoeff(&dominant);
    if (v[dominant] < 0.0) v = -v;
    bank.filters.col(j) = v;
    bank.eigenvalues[j] = raw_values[order[static_cast<std::size_t>(j)]];
  }
  return bank;
}

inline SpatialFilterBank solve_whitened(const Eigen::MatrixXd& r1, const Eigen::MatrixXd& r2,
                                        int m) {
  const Eigen::Index d = r1.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(r2);
  if (llt.info() != Eigen::Success) {
    throw numeric_error(
        "csp: class-2 covariance is not positive-definite; supply a ridge > 0");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  const auto lower = l.triangularView<Eigen::Lower>();
  // M = L^-1 R1 L^-T is symmetric with the pencil's eigenvalues.
  Eigen::MatrixXd t = lower.solve(r1);
  Eigen::MatrixXd mmat = lower.solve(Eigen::MatrixXd(t.transpose()));
  mmat = 0.5 * (mmat + mmat.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mmat);
  if (es.info() != Eigen::Success) throw numeric_error("csp: eigensolver failed");
  Eigen::MatrixXd filters =
      l.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors());
  return finalize_bank(std::move(filters), es.eigenvalues(), m);
}

inline SpatialFilterBank solve_svd_diagonal(const ScatterCoreset& c1, const ScatterCoreset& c2,
                                            double ridge, int m) {
  const Eigen::Index d = c1.channels();
  const double t1 = static_cast<double>(c1.sample_count());
  const double t2 = static_cast<double>(c2.sample_count());

  Eigen::BDCSVD<Eigen::MatrixXd> svd(c2.basis(), Eigen::ComputeFullU);
  const Eigen::MatrixXd u2 = svd.matrixU();  // d x d orthogonal
  Eigen::VectorXd sigma_sq = Eigen::VectorXd::Zero(d);
  sigma_sq.head(svd.singularValues().size()) = svd.singularValues().array().square();

  // R2 = U2 diag(sigma^2/t2) U2^T; the ridge adds along the same diagonal.
  Eigen::VectorXd diag = sigma_sq / t2;
  const double ridge_add = ridge * (diag.sum() / static_cast<double>(d));
  diag.array() += ridge_add;
  if (!(diag.minCoeff() > 0.0)) {
    throw numeric_error(
        "csp: class-2 covariance is not positive-definite; supply a ridge > 0");
  }
  const Eigen::VectorXd inv_sqrt = diag.array().rsqrt();

  const Eigen::MatrixXd r1 = with_ridge(c1.scatter() / t1, ridge);
  Eigen::MatrixXd mmat =
      inv_sqrt.asDiagonal() * (u2.transpose() * r1 * u2) * inv_sqrt.asDiagonal();
  mmat = 0.5 * (mmat + mmat.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mmat);
  if (es.info() != Eigen::Success) throw numeric_error("csp: eigensolver failed");
  Eigen::MatrixXd filters = u2 * inv_sqrt.asDiagonal() * es.eigenvectors();
  return finalize_bank(std::move(filters), es.eigenvalues(), m);
}

}  // namespace detail

// Batch CSP: covariance estimates R_i = X_i X_i^T / t_i (plus optional ridge
// of relative strength ridge * trace/d), then the generalized symmetric-
// definite eigenproblem R1 v = lambda R2 v, solved by Cholesky whitening.
inline SpatialFilterBank csp_batch(const Eigen::Ref<const Eigen::MatrixXd>& x1,
                                   const Eigen::Ref<const Eigen::MatrixXd>& x2,
                                   double ridge = 0.0, int m = 2) {
  if (x1.rows() != x2.rows())
    throw dimension_error("csp_batch: class matrices disagree on channel count");
  if (x1.cols() < 1 || x2.cols() < 1)
    throw empty_input_error("csp_batch: each class needs at least one sample");
  if (!x1.allFinite() || !x2.allFinite())
    throw value_error("csp_batch: non-finite input");
  detail::check_selected(x1.rows(), m);

  const double t1 = static_cast<double>(x1.cols());
  const double t2 = static_cast<double>(x2.cols());
  Eigen::MatrixXd r1 = (x1 * x1.transpose()) / t1;
  Eigen::MatrixXd r2 = (x2 * x2.transpose()) / t2;
  r1 = 0.5 * (r1 + r1.transpose()).eval();
  r2 = 0.5 * (r2 + r2.transpose()).eval();

  const double rho = detail::effective_ridge(r2, ridge);
  return detail::solve_whitened(detail::with_ridge(r1, rho), detail::with_ridge(r2, rho), m);
}

// Coreset CSP: the identical eigenproblem with R_i read off the class
// coresets, either through the default whitening route or the diagonal
// fast path that reuses the coreset's own factorization.
inline SpatialFilterBank csp_from_coresets(const ScatterCoreset& c1, const ScatterCoreset& c2,
                                           double ridge = 0.0, int m = 2,
                                           GevdStrategy strategy = GevdStrategy::cholesky_whitening) {
  if (c1.channels() != c2.channels())
    throw dimension_error("csp_from_coresets: coresets disagree on channel count");
  if (c1.empty() || c2.empty())
    throw empty_input_error("csp_from_coresets: both class coresets must be nonempty");
  detail::check_selected(c1.channels(), m);

  const Eigen::MatrixXd r2 = c2.scatter() / static_cast<double>(c2.sample_count());
  const double rho = detail::effective_ridge(r2, ridge);
  if (strategy == GevdStrategy::svd_diagonal) {
    return detail::solve_svd_diagonal(c1, c2, rho, m);
  }
  const Eigen::MatrixXd r1 = c1.scatter() / static_cast<double>(c1.sample_count());
  return detail::solve_whitened(detail::with_ridge(r1, rho), detail::with_ridge(r2, rho), m);
}

// Streaming CSP state: one coreset per class, updated sample by sample; each
// update routes the sample by label, recomputes the filter bank from the two
// coresets and caches it.
class CspStreamState {
 public:
  CspStreamState(Eigen::Index channels, double ridge_epsilon = 0.0, int selected_per_side = 2)
      : c1_(channels), c2_(channels), ridge_(ridge_epsilon), m_(selected_per_side) {
    if (ridge_epsilon < 0.0) throw spec_error("csp stream: ridge must be >= 0");
    detail::check_selected(channels, selected_per_side);
  }

  // Appends x to its class coreset. Does not touch the cached filter bank.
  void append(const Eigen::Ref<const Eigen::VectorXd>& x, int label) {
    coreset_for(label).append_sample(x);
  }

  // Append plus filter recompute. The append persists even when the bank is
  // not computable yet (the other class still empty).
  const SpatialFilterBank& update(const Eigen::Ref<const Eigen::VectorXd>& x, int label) {
    append(x, label);
    if (c1_.empty() || c2_.empty()) {
      throw not_ready_error("csp stream: both classes must have samples before a filter request");
    }
    last_bank_ = csp_from_coresets(c1_, c2_, ridge_, m_);
    return *last_bank_;
  }

  const ScatterCoreset& class_coreset(int label) const {
    checked_label(label);
    return label == kClass1 ? c1_ : c2_;
  }

  const std::optional<SpatialFilterBank>& last_filter_bank() const { return last_bank_; }
  double ridge_epsilon() const { return ridge_; }

 private:
  static void checked_label(int label) {
    if (!is_valid_label(label)) {
      throw value_error("csp stream: label must be 1 or 2, got " + std::to_string(label));
    }
  }

  ScatterCoreset& coreset_for(int label) {
    checked_label(label);
    return label == kClass1 ? c1_ : c2_;
  }

  ScatterCoreset c1_, c2_;
  double ridge_;
  int m_;
  std::optional<SpatialFilterBank> last_bank_;
};

// Log-variance features over the selected filter columns:
// f_j = log(var(Z_j) / sum_k var(Z_k)) with Z = W_sel^T X and population
// variances of the projected rows. Scale-invariant by construction.
inline Eigen::VectorXd extract_features(const Eigen::Ref<const Eigen::MatrixXd>& trial,
                                        const SpatialFilterBank& bank) {
  if (trial.rows() != bank.channels())
    throw dimension_error("extract_features: trial channel count does not match bank");
  if (trial.cols() < 2)
    throw dimension_error("extract_features: need at least 2 samples");

  const Eigen::MatrixXd z = bank.selected_filters().transpose() * trial;
  const double t = static_cast<double>(z.cols());
  const Eigen::VectorXd mean = z.rowwise().mean();
  const Eigen::VectorXd variance =
      (z.colwise() - mean).array().square().rowwise().sum() / t;
  const double total = variance.sum();
  if (!(total > 0.0))
    throw numeric_error("extract_features: degenerate trial with zero total variance");
  return (variance / total).array().log();
}

// The raw variance-ratio objective ||w^T X1||^2 / ||w^T X2||^2.
inline double variance_ratio_objective(const Eigen::Ref<const Eigen::VectorXd>& w,
                                       const Eigen::Ref<const Eigen::MatrixXd>& x1,
                                       const Eigen::Ref<const Eigen::MatrixXd>& x2) {
  const double denom = (w.transpose() * x2).squaredNorm();
  if (!(denom > 0.0)) throw numeric_error("variance ratio: zero denominator");
  return (w.transpose() * x1).squaredNorm() / denom;
}

}  // namespace corecsp
