#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>

#include "corecsp/csp.hpp"
#include "corecsp/synthetic.hpp"
#include "test_support.hpp"

using namespace corecsp;

namespace {

ScatterCoreset stream_in(const Eigen::MatrixXd& x) {
  ScatterCoreset c(x.rows());
  for (Eigen::Index i = 0; i < x.cols(); ++i) c.append_sample(x.col(i));
  return c;
}

// Two-class data with prescribed diagonal covariances, drawn deterministically.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> two_class_data(std::uint64_t seed, Eigen::Index d,
                                                           Eigen::Index t,
                                                           const Eigen::VectorXd& diag1,
                                                           const Eigen::VectorXd& diag2) {
  GaussianStream gauss(seed);
  Eigen::MatrixXd x1(d, t), x2(d, t);
  for (Eigen::Index c = 0; c < t; ++c)
    for (Eigen::Index r = 0; r < d; ++r) x1(r, c) = gauss.next() * std::sqrt(diag1[r]);
  for (Eigen::Index c = 0; c < t; ++c)
    for (Eigen::Index r = 0; r < d; ++r) x2(r, c) = gauss.next() * std::sqrt(diag2[r]);
  return {x1, x2};
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("identical classes give all-unit eigenvalues", "[csp]") {
  std::mt19937_64 rng(71);
  const Eigen::MatrixXd x = testsup::random_matrix(rng, 4, 40);
  const SpatialFilterBank bank = csp_batch(x, x, 0.0, 2);
  for (Eigen::Index i = 0; i < 4; ++i)
    REQUIRE(bank.eigenvalues[i] == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("top filter matches a brute-force grid search in 2-D", "[csp]") {
  // Class 1 concentrates variance on e1, class 2 on e2; the grid search over
  // unit vectors is the independent argmax oracle for Eq-style objectives.
  const auto [x1, x2] = two_class_data(123, 2, 4000, Eigen::Vector2d(10.0, 0.1),
                                       Eigen::Vector2d(0.1, 10.0));
  const SpatialFilterBank bank = csp_batch(x1, x2, 0.0, 1);
  const Eigen::VectorXd top = bank.filters.col(0);

  double best_obj = -1.0;
  Eigen::Vector2d best_w;
  for (int i = 0; i < 3142; ++i) {
    const double theta = i * 1e-3;
    const Eigen::Vector2d w(std::cos(theta), std::sin(theta));
    const double obj = variance_ratio_objective(w, x1, x2);
    if (obj > best_obj) {
      best_obj = obj;
      best_w = w;
    }
  }
  REQUIRE(cosine(best_w, Eigen::Vector2d(1.0, 0.0)) >= 0.99);
  REQUIRE(cosine(top, Eigen::Vector2d(1.0, 0.0)) >= 0.99);
  // The eigen-route solution cannot lose to the grid.
  REQUIRE(variance_ratio_objective(top, x1, x2) >= best_obj - 1e-9 * best_obj);
}

TEST_CASE("objective at the top filter equals the top eigenvalue", "[csp]") {
  std::mt19937_64 rng(72);
  const Eigen::MatrixXd x1 = testsup::random_matrix(rng, 5, 230);
  const Eigen::MatrixXd x2 = testsup::random_matrix(rng, 5, 170);
  const SpatialFilterBank bank = csp_batch(x1, x2, 0.0, 2);
  const double raw = variance_ratio_objective(bank.filters.col(0), x1, x2);
  const double t1 = static_cast<double>(x1.cols());
  const double t2 = static_cast<double>(x2.cols());
  REQUIRE(raw * t2 / t1 == Catch::Approx(bank.eigenvalues[0]).epsilon(1e-9));
}

TEST_CASE("coreset CSP equals batch CSP on random instances", "[csp]") {
  std::mt19937_64 rng(73);
  for (int instance = 0; instance < 100; ++instance) {
    const Eigen::Index d = 8;
    const Eigen::Index t1 = d + 5 + static_cast<Eigen::Index>(rng() % 60);
    const Eigen::Index t2 = d + 5 + static_cast<Eigen::Index>(rng() % 60);
    const Eigen::MatrixXd x1 = testsup::random_matrix(rng, d, t1);
    const Eigen::MatrixXd x2 = testsup::random_matrix(rng, d, t2);

    const SpatialFilterBank batch = csp_batch(x1, x2, 0.0, 2);
    const SpatialFilterBank coreset = csp_from_coresets(stream_in(x1), stream_in(x2), 0.0, 2);

    for (Eigen::Index i = 0; i < d; ++i) {
      REQUIRE(coreset.eigenvalues[i] ==
              Catch::Approx(batch.eigenvalues[i]).epsilon(1e-9).margin(1e-12));
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      const double gap_prev =
          i == 0 ? 1.0 : std::abs(batch.eigenvalues[i - 1] - batch.eigenvalues[i]) /
                             std::abs(batch.eigenvalues[i]);
      const double gap_next =
          i == d - 1 ? 1.0 : std::abs(batch.eigenvalues[i] - batch.eigenvalues[i + 1]) /
                                 std::abs(batch.eigenvalues[i]);
      if (std::min(gap_prev, gap_next) >= 1e-6) {
        REQUIRE(cosine(batch.filters.col(i), coreset.filters.col(i)) >= 1.0 - 1e-8);
      }
    }
  }
}

TEST_CASE("identical coresets give unit eigenvalues", "[csp]") {
  std::mt19937_64 rng(74);
  const ScatterCoreset c = stream_in(testsup::random_matrix(rng, 4, 30));
  const SpatialFilterBank bank = csp_from_coresets(c, c, 0.0, 1);
  for (Eigen::Index i = 0; i < 4; ++i)
    REQUIRE(bank.eigenvalues[i] == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("svd_diagonal strategy matches cholesky whitening", "[csp]") {
  std::mt19937_64 rng(75);
  for (int instance = 0; instance < 20; ++instance) {
    const Eigen::Index d = 6;
    const ScatterCoreset c1 = stream_in(testsup::random_matrix(rng, d, 50));
    const ScatterCoreset c2 = stream_in(testsup::random_matrix(rng, d, 50));
    const SpatialFilterBank a =
        csp_from_coresets(c1, c2, 0.0, 2, GevdStrategy::cholesky_whitening);
    const SpatialFilterBank b = csp_from_coresets(c1, c2, 0.0, 2, GevdStrategy::svd_diagonal);
    for (Eigen::Index i = 0; i < d; ++i) {
      REQUIRE(b.eigenvalues[i] == Catch::Approx(a.eigenvalues[i]).epsilon(1e-9));
      REQUIRE(cosine(a.filters.col(i), b.filters.col(i)) >= 1.0 - 1e-8);
    }
  }
}

TEST_CASE("eigenvalue duality under class swap", "[csp]") {
  std::mt19937_64 rng(76);
  const Eigen::MatrixXd x1 = testsup::random_matrix(rng, 5, 80);
  const Eigen::MatrixXd x2 = testsup::random_matrix(rng, 5, 90);
  const SpatialFilterBank fwd = csp_batch(x1, x2, 0.0, 2);
  const SpatialFilterBank swp = csp_batch(x2, x1, 0.0, 2);
  for (Eigen::Index i = 0; i < 5; ++i) {
    REQUIRE(swp.eigenvalues[i] ==
            Catch::Approx(1.0 / fwd.eigenvalues[4 - i]).epsilon(1e-9));
  }
}

TEST_CASE("top filter beats random unit vectors", "[csp]") {
  std::mt19937_64 rng(77);
  const Eigen::MatrixXd x1 = testsup::random_matrix(rng, 6, 120);
  const Eigen::MatrixXd x2 = testsup::random_matrix(rng, 6, 140);
  const SpatialFilterBank bank = csp_batch(x1, x2, 0.0, 2);
  const double top = variance_ratio_objective(bank.filters.col(0), x1, x2);
  for (int i = 0; i < 10000; ++i) {
    Eigen::VectorXd w = testsup::random_vector(rng, 6);
    if (w.norm() == 0.0) continue;
    w.normalize();
    REQUIRE(variance_ratio_objective(w, x1, x2) <= top * (1.0 + 1e-12));
  }
}

TEST_CASE("filters are invariant to sample order and construction route", "[csp]") {
  std::mt19937_64 rng(78);
  const Eigen::Index d = 5;
  const Eigen::MatrixXd x1 = testsup::random_matrix(rng, d, 64);
  const Eigen::MatrixXd x2 = testsup::random_matrix(rng, d, 64);

  ScatterCoreset c1_perm(d);
  std::vector<Eigen::Index> order(64);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (const auto i : order) c1_perm.append_sample(x1.col(i));

  ScatterCoreset c1_window(d);
  c1_window.append_window(x1);

  const SpatialFilterBank a = csp_from_coresets(c1_perm, stream_in(x2), 0.0, 2);
  const SpatialFilterBank b = csp_from_coresets(c1_window, stream_in(x2), 0.0, 2);
  for (Eigen::Index i = 0; i < d; ++i) {
    REQUIRE(a.eigenvalues[i] == Catch::Approx(b.eigenvalues[i]).epsilon(1e-8));
    REQUIRE(cosine(a.filters.col(i), b.filters.col(i)) >= 1.0 - 1e-7);
  }
}

TEST_CASE("stream updates track the batch solution", "[csp]") {
  std::mt19937_64 rng(79);
  const Eigen::Index d = 4;
  CspStreamState state(d, 0.0, 1);
  Eigen::MatrixXd x1(d, 0), x2(d, 0);
  SpatialFilterBank last;
  for (int i = 0; i < 2 * d; ++i) {
    const Eigen::VectorXd x = testsup::random_vector(rng, d);
    const int label = (i % 2 == 0) ? 1 : 2;
    Eigen::MatrixXd& raw = label == 1 ? x1 : x2;
    raw.conservativeResize(d, raw.cols() + 1);
    raw.col(raw.cols() - 1) = x;
    if (i == 0) {
      REQUIRE_THROWS_AS(state.update(x, label), not_ready_error);
      REQUIRE(state.class_coreset(1).sample_count() == 1);  // append persisted
    } else {
      last = state.update(x, label);
    }
  }
  const SpatialFilterBank batch = csp_batch(x1, x2, 0.0, 1);
  for (Eigen::Index i = 0; i < d; ++i) {
    REQUIRE(last.eigenvalues[i] ==
            Catch::Approx(batch.eigenvalues[i]).epsilon(1e-9).margin(1e-12));
  }
}

TEST_CASE("stream routing leaves the other class bit-unchanged", "[csp]") {
  std::mt19937_64 rng(80);
  CspStreamState state(3, 0.0, 1);
  state.append(testsup::random_vector(rng, 3), 2);
  const Eigen::MatrixXd before = state.class_coreset(2).basis();
  state.append(testsup::random_vector(rng, 3), 1);
  state.append(testsup::random_vector(rng, 3), 1);
  const Eigen::MatrixXd after = state.class_coreset(2).basis();
  REQUIRE(before == after);
  REQUIRE(state.class_coreset(1).sample_count() == 2);
  REQUIRE_THROWS_AS(state.append(Eigen::Vector3d::Zero(), 3), value_error);
}

TEST_CASE("per-update cost does not grow with stream length", "[csp][timing]") {
  const Eigen::Index d = 16;
  std::mt19937_64 rng(81);
  CspStreamState state(d, 0.0, 2);
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(10200);
  for (int i = 0; i < 10200; ++i) samples.push_back(testsup::random_vector(rng, d));

  auto median_update_ns = [&](int from, int count) {
    std::vector<double> times;
    times.reserve(count);
    for (int i = from; i < from + count; ++i) {
      const auto start = std::chrono::steady_clock::now();
      state.update(samples[i], (i % 2 == 0) ? 1 : 2);
      times.push_back(static_cast<double>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(
              std::chrono::steady_clock::now() - start)
              .count()));
    }
    std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
    return times[times.size() / 2];
  };

  state.append(samples[10200 - 1], 1);
  state.append(samples[10200 - 2], 2);
  for (int i = 0; i < 800; ++i)
    state.update(samples[i], (i % 2 == 0) ? 1 : 2);  // warm-up, replaces the first 100 updates
  const double early = median_update_ns(800, 300);
  for (int i = 1100; i < 9800; ++i) state.update(samples[i], (i % 2 == 0) ? 1 : 2);
  const double late = median_update_ns(9800, 300);
  REQUIRE(late <= 1.5 * early);
}

TEST_CASE("log-variance features", "[csp]") {
  std::mt19937_64 rng(82);
  const Eigen::Index d = 6;
  const Eigen::MatrixXd x1 = testsup::random_matrix(rng, d, 100);
  const Eigen::MatrixXd x2 = testsup::random_matrix(rng, d, 100);
  const Eigen::MatrixXd trial = testsup::random_matrix(rng, d, 50);

  SECTION("deterministic and scale-invariant") {
    const SpatialFilterBank bank = csp_batch(x1, x2, 0.0, 2);
    const Eigen::VectorXd f1 = extract_features(trial, bank);
    const Eigen::VectorXd f2 = extract_features(trial, bank);
    REQUIRE(f1 == f2);
    const Eigen::VectorXd scaled = extract_features(5.0 * trial, bank);
    REQUIRE((f1 - scaled).cwiseAbs().maxCoeff() <= 1e-9);
    REQUIRE(f1.size() == 4);
  }
  SECTION("normalization: features exponentiate to a partition of one") {
    const SpatialFilterBank bank = csp_batch(x1, x2, 0.0, 3);  // 2m = d
    const Eigen::VectorXd f = extract_features(trial, bank);
    REQUIRE(f.size() == d);
    REQUIRE(f.array().exp().sum() == Catch::Approx(1.0).epsilon(1e-9));
  }
  SECTION("degenerate trial") {
    const SpatialFilterBank bank = csp_batch(x1, x2, 0.0, 2);
    REQUIRE_THROWS_AS(extract_features(Eigen::MatrixXd::Zero(d, 10), bank), numeric_error);
    REQUIRE_THROWS_AS(extract_features(Eigen::MatrixXd::Zero(d, 1), bank), dimension_error);
  }
}

TEST_CASE("ridge handling and singular covariances", "[csp]") {
  std::mt19937_64 rng(83);
  SECTION("auto-escalation warns and solves a rank-deficient class 2") {
    std::vector<std::string> warnings;
    auto previous = warning_handler();
    warning_handler() = [&](const std::string& w) { warnings.push_back(w); };
    const Eigen::MatrixXd x1 = testsup::random_matrix(rng, 6, 40);
    const Eigen::MatrixXd x2 = testsup::random_matrix(rng, 6, 3);  // rank 3 < d
    const SpatialFilterBank bank = csp_batch(x1, x2, 0.0, 2);
    warning_handler() = previous;
    REQUIRE(bank.eigenvalues.allFinite());
    REQUIRE_FALSE(warnings.empty());
    REQUIRE(warnings.front().find("ridge") != std::string::npos);
  }
  SECTION("all-zero class 2 cannot be regularized by a relative ridge") {
    const Eigen::MatrixXd x1 = testsup::random_matrix(rng, 4, 20);
    const Eigen::MatrixXd x2 = Eigen::MatrixXd::Zero(4, 20);
    REQUIRE_THROWS_AS(csp_batch(x1, x2, 0.0, 1), numeric_error);
  }
  SECTION("explicit ridge is honored") {
    const Eigen::MatrixXd x1 = testsup::random_matrix(rng, 4, 30);
    const Eigen::MatrixXd x2 = testsup::random_matrix(rng, 4, 2);
    const SpatialFilterBank bank = csp_batch(x1, x2, 1e-6, 1);
    REQUIRE(bank.eigenvalues.allFinite());
  }
}

TEST_CASE("csp input validation", "[csp]") {
  std::mt19937_64 rng(84);
  const Eigen::MatrixXd x1 = testsup::random_matrix(rng, 4, 10);
  REQUIRE_THROWS_AS(csp_batch(x1, testsup::random_matrix(rng, 3, 10), 0.0, 1),
                    dimension_error);
  REQUIRE_THROWS_AS(csp_batch(x1, Eigen::MatrixXd(4, 0), 0.0, 1), empty_input_error);
  REQUIRE_THROWS_AS(csp_batch(x1, x1, 0.0, 3), spec_error);  // 2m > d
  Eigen::MatrixXd bad = x1;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(csp_batch(bad, x1, 0.0, 1), value_error);
  REQUIRE_THROWS_AS(csp_from_coresets(ScatterCoreset(4), stream_in(x1), 0.0, 1),
                    empty_input_error);
}

TEST_CASE("filter bank selection picks top and bottom columns", "[csp]") {
  std::mt19937_64 rng(85);
  const Eigen::MatrixXd x1 = testsup::random_matrix(rng, 6, 80);
  const Eigen::MatrixXd x2 = testsup::random_matrix(rng, 6, 80);
  const SpatialFilterBank bank = csp_batch(x1, x2, 0.0, 2);
  const auto idx = bank.selected_indices();
  REQUIRE(idx == std::vector<Eigen::Index>{0, 1, 4, 5});
  const Eigen::MatrixXd sel = bank.selected_filters();
  REQUIRE(sel.cols() == 4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    REQUIRE(sel.col(j).norm() == Catch::Approx(1.0).epsilon(1e-12));
  }
  // descending eigenvalues
  for (Eigen::Index i = 1; i < 6; ++i)
    REQUIRE(bank.eigenvalues[i - 1] >= bank.eigenvalues[i]);
}
