#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <atomic>
#include <filesystem>
#include <random>
#include <string>

namespace testsup {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                     double lo = -1.0, double hi = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = uniform(rng, lo, hi);
  return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double lo = -1.0,
                                     double hi = 1.0) {
  return random_matrix(rng, n, 1, lo, hi);
}

inline Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, Eigen::Index d) {
  const Eigen::MatrixXd a = random_matrix(rng, d, d);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

// Q diag(spectrum) Q^T with eigenvalues log-spaced in [lo, hi].
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index d, double lo = 0.5,
                                  double hi = 4.0) {
  const Eigen::MatrixXd q = random_orthogonal(rng, d);
  Eigen::VectorXd spectrum(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double f = d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
    spectrum[i] = lo * std::pow(hi / lo, f) * uniform(rng, 0.9, 1.1);
  }
  const Eigen::MatrixXd m = q * spectrum.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

inline double rel_frobenius(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& expected) {
  const double denom = std::max(expected.norm(), 1e-300);
  return (actual - expected).norm() / denom;
}

// Fresh scratch directory under the system temp root; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("corecsp_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsup
