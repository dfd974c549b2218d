#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <cstdint>
#include <span>

#include "corecsp/errors.hpp"

namespace corecsp {

// Exact fixed-size summary of a d-channel signal: a d x k matrix B (k <= d
// after any reduction, d+1 transiently) whose self outer product B*B^T equals
// the scatter matrix of every absorbed sample. Appends adjoin raw columns;
// once the column count exceeds d, a thin SVD replaces the matrix by U*S,
// which preserves B*B^T exactly while capping the width at d. Zero singular
// values are kept, so rank-deficient streams stay exact.
//
// Storage is a preallocated d x (d+1) block, so the resident footprint is
// d*(d+1) scalars regardless of how many samples were absorbed.
class ScatterCoreset {
 public:
  explicit ScatterCoreset(Eigen::Index channels)
      : storage_(Eigen::MatrixXd::Zero(checked(channels), channels + 1)) {}

  // Rebuilds a coreset from serialized parts.
  static ScatterCoreset restored(Eigen::Index channels, const Eigen::MatrixXd& basis,
                                 std::int64_t sample_count) {
    ScatterCoreset c(channels);
    if (basis.rows() != channels || basis.cols() > channels + 1) {
      throw dimension_error("coreset restore: basis must be d x k with k <= d+1");
    }
    if (!basis.allFinite()) throw value_error("coreset restore: non-finite basis entry");
    if (sample_count < 0) throw value_error("coreset restore: negative sample count");
    c.storage_.leftCols(basis.cols()) = basis;
    c.columns_ = basis.cols();
    c.samples_ = sample_count;
    if (c.columns_ > channels) c.reduce_in_place();
    return c;
  }

  Eigen::Index channels() const { return storage_.rows(); }
  Eigen::Index column_count() const { return columns_; }
  std::int64_t sample_count() const { return samples_; }
  bool empty() const { return samples_ == 0; }

  // The current basis B with B*B^T equal to the absorbed scatter.
  Eigen::MatrixXd::ConstColsBlockXpr basis() const { return storage_.leftCols(columns_); }

  void append_sample(const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != channels()) {
      throw dimension_error("append_sample: vector length " + std::to_string(x.size()) +
                            " does not match channel count " + std::to_string(channels()));
    }
    if (!x.allFinite()) throw value_error("append_sample: non-finite entry");
    storage_.col(columns_) = x;
    ++columns_;
    ++samples_;
    if (columns_ > channels()) reduce_in_place();
  }

  // Absorbs m samples with a single reduction instead of m.
  void append_window(const Eigen::Ref<const Eigen::MatrixXd>& window) {
    if (window.rows() != channels()) {
      throw dimension_error("append_window: row count " + std::to_string(window.rows()) +
                            " does not match channel count " + std::to_string(channels()));
    }
    if (window.cols() < 1) throw dimension_error("append_window: window needs >= 1 column");
    if (!window.allFinite()) throw value_error("append_window: non-finite entry");
    absorb_columns(window);
    samples_ += window.cols();
  }

  // Absorbs another coreset; the scatters add, the sample counts add.
  void merge_with(const ScatterCoreset& other) {
    if (other.channels() != channels()) {
      throw dimension_error("merge: channel counts differ (" + std::to_string(channels()) +
                            " vs " + std::to_string(other.channels()) + ")");
    }
    if (other.columns_ > 0) absorb_columns(other.basis());
    samples_ += other.samples_;
  }

  static ScatterCoreset merged(const ScatterCoreset& a, const ScatterCoreset& b) {
    ScatterCoreset out = a;
    out.merge_with(b);
    return out;
  }

  // One concatenation and at most one SVD over any number of parts.
  static ScatterCoreset merged(std::span<const ScatterCoreset* const> parts) {
    if (parts.empty()) throw empty_input_error("merged: no coresets given");
    const Eigen::Index d = parts.front()->channels();
    Eigen::Index total_cols = 0;
    std::int64_t total_samples = 0;
    for (const auto* part : parts) {
      if (part->channels() != d) throw dimension_error("merged: channel counts differ");
      total_cols += part->columns_;
      total_samples += part->samples_;
    }
    ScatterCoreset out(d);
    Eigen::MatrixXd wide(d, total_cols);
    Eigen::Index at = 0;
    for (const auto* part : parts) {
      wide.middleCols(at, part->columns_) = part->basis();
      at += part->columns_;
    }
    if (total_cols > 0) out.absorb_columns(wide);
    out.samples_ = total_samples;
    return out;
  }

  // B*B^T, symmetrized.
  Eigen::MatrixXd scatter() const {
    Eigen::MatrixXd m = basis() * basis().transpose();
    return ((m + m.transpose()) * 0.5).eval();
  }

  // Exact element count of the live structure: the d x (d+1) storage block
  // plus the sample and column counters.
  std::int64_t resident_scalars() const {
    return static_cast<std::int64_t>(storage_.size()) + 2;
  }

 private:
  static Eigen::Index checked(Eigen::Index channels) {
    if (channels < 1) throw spec_error("coreset: channel count must be >= 1");
    return channels;
  }

  // Adjoins `cols` to the basis, reducing if the width would exceed d.
  void absorb_columns(const Eigen::Ref<const Eigen::MatrixXd>& cols) {
    const Eigen::Index d = channels();
    if (columns_ + cols.cols() <= d + 1) {
      storage_.middleCols(columns_, cols.cols()) = cols;
      columns_ += cols.cols();
      if (columns_ > d) reduce_in_place();
      return;
    }
    Eigen::MatrixXd wide(d, columns_ + cols.cols());
    wide.leftCols(columns_) = storage_.leftCols(columns_);
    wide.rightCols(cols.cols()) = cols;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(wide, Eigen::ComputeThinU);
    write_reduced(svd);
  }

  void reduce_in_place() {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(storage_.leftCols(columns_), Eigen::ComputeThinU);
    write_reduced(svd);
  }

  void write_reduced(const Eigen::BDCSVD<Eigen::MatrixXd>& svd) {
    const Eigen::Index r = svd.matrixU().cols();  // = d whenever cols > d
    storage_.leftCols(r) = svd.matrixU() * svd.singularValues().asDiagonal();
    columns_ = r;
  }

  Eigen::MatrixXd storage_;  // d x (d+1), fixed capacity
  Eigen::Index columns_ = 0;
  std::int64_t samples_ = 0;
};

}  // namespace corecsp
