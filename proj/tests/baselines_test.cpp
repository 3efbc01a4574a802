#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "selfcheck/baselines.hpp"
#include "selfcheck/ensemble.hpp"
#include "selfcheck/error.hpp"
#include "selfcheck/matrix.hpp"
#include "selfcheck/rng.hpp"

using namespace selfcheck;

TEST_CASE("confidence scores take the per-point maximum") {
  const Matrix probs =
      Matrix::from_rows({{0.2, 0.8}, {0.5, 0.5}, {0.9, 0.1}});
  CHECK(max_probabilities(probs) == std::vector<double>{0.8, 0.5, 0.9});
  CHECK(average_confidence(probs) ==
        doctest::Approx((0.8 + 0.5 + 0.9) / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(max_probabilities(Matrix()), RejectedInput);
}

TEST_CASE("ensemble confidence averages probabilities before the max") {
  // Two one-hot members that disagree on point 0 average to (0.5, 0.5)
  // there, so the ensemble's confidence is lower than either member's.
  const EnsemblePredictions predictions =
      EnsemblePredictions::from_labels({{0, 1}, {1, 1}}, 2);
  CHECK(ensemble_average_confidence(predictions) == 0.75);
  CHECK(average_confidence(predictions.probabilities[0]) == 1.0);
}

TEST_CASE("threshold calibration flags the smallest fraction at least rate") {
  const std::vector<double> scores = {0.95, 0.1, 0.9, 0.3, 0.2};

  SUBCASE("interior rate lands just above the k-th smallest") {
    const double threshold = calibrate_threshold(scores, 0.5);
    CHECK(threshold == 0.9);
    // Feeding the same scores back flags exactly the three lowest.
    std::size_t flagged = 0;
    for (double s : scores) {
      if (s < threshold) ++flagged;
    }
    CHECK(flagged == 3);
  }

  SUBCASE("rate zero flags nothing") {
    const double threshold = calibrate_threshold(scores, 0.0);
    CHECK(threshold == 0.1);
    for (double s : scores) CHECK(!(s < threshold));
  }

  SUBCASE("rate one flags everything via max plus one") {
    const double threshold = calibrate_threshold(scores, 1.0);
    CHECK(threshold == 0.95 + 1.0);
    for (double s : scores) CHECK(s < threshold);
  }

  SUBCASE("a tied block is flagged wholesale") {
    CHECK(calibrate_threshold({0.4, 0.4, 0.4}, 0.5) == 1.4);
    // k-th smallest sits inside a tie: the whole block goes.
    CHECK(calibrate_threshold({1.0, 2.0, 2.0, 3.0}, 0.5) == 3.0);
  }

  SUBCASE("small rates round the count up, never down to zero") {
    CHECK(calibrate_threshold({0.1, 0.2}, 0.25) == 0.2);
  }

  SUBCASE("malformed requests are rejected") {
    CHECK_THROWS_AS(calibrate_threshold({}, 0.5), RejectedInput);
    CHECK_THROWS_AS(calibrate_threshold(scores, -0.1), RejectedInput);
    CHECK_THROWS_AS(calibrate_threshold(scores, 1.1), RejectedInput);
    CHECK_THROWS_AS(
        calibrate_threshold(scores, std::numeric_limits<double>::quiet_NaN()),
        RejectedInput);
  }
}

TEST_CASE("confidence detection uses a strict comparison") {
  const Matrix probs = Matrix::from_rows({{0.6, 0.4}, {0.9, 0.1}});
  CHECK(msp_detect(probs, 0.6).empty());
  CHECK(msp_detect(probs, 0.61) == std::vector<std::size_t>{0});
  CHECK(msp_detect(probs, 0.95) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("trust ratios compare own-class and other-class neighbours") {
  // 1-D layout: class 0 lives at {0, 1}, class 1 at {10, 11}.
  const Matrix train = Matrix::from_rows({{0.0}, {1.0}, {10.0}, {11.0}});
  const std::vector<int> labels = {0, 0, 1, 1};

  SUBCASE("a point between the classes scores by distance ratio") {
    const Matrix test = Matrix::from_rows({{5.0}, {5.0}});
    const std::vector<int> predicted = {0, 1};
    const std::vector<double> scores =
        trust_scores(train, labels, test, predicted, 2, 1);
    CHECK(scores[0] == doctest::Approx(5.0 / 4.0).epsilon(1e-12));
    CHECK(scores[1] == doctest::Approx(4.0 / 5.0).epsilon(1e-12));
  }

  SUBCASE("zero own-distance hits the cap; zero both ways is neutral") {
    const Matrix test = Matrix::from_rows({{0.0}});
    CHECK(trust_scores(train, labels, test, {0}, 2, 1)[0] == 1e12);

    const Matrix coincident = Matrix::from_rows({{0.0}, {0.0}});
    CHECK(trust_scores(coincident, {0, 1}, test, {0}, 2, 1)[0] == 1.0);
  }

  SUBCASE("the neighbour count clamps to the class size") {
    const Matrix test = Matrix::from_rows({{0.0}});
    const std::vector<double> k2 =
        trust_scores(train, labels, test, {0}, 2, 2);
    const std::vector<double> k50 =
        trust_scores(train, labels, test, {0}, 2, 50);
    CHECK(k2[0] == doctest::Approx(11.0 / 1.0).epsilon(1e-12));
    CHECK(k50 == k2);
  }

  SUBCASE("malformed requests are rejected") {
    const Matrix test = Matrix::from_rows({{5.0}});
    CHECK_THROWS_AS(trust_scores(train, {0, 0, 1}, test, {0}, 2, 1),
                    RejectedInput);
    CHECK_THROWS_AS(trust_scores(train, labels, test, {0, 1}, 2, 1),
                    RejectedInput);
    CHECK_THROWS_AS(trust_scores(train, labels, test, {0}, 1, 1),
                    RejectedInput);
    CHECK_THROWS_AS(trust_scores(train, labels, test, {0}, 2, 0),
                    RejectedInput);
    CHECK_THROWS_AS(trust_scores(train, labels, test, {2}, 2, 1),
                    RejectedInput);
    CHECK_THROWS_AS(trust_scores(train, {0, 0, 0, 3}, test, {0}, 3, 1),
                    RejectedInput);
    // Predicted class with no training points.
    CHECK_THROWS_AS(trust_scores(train, {0, 0, 0, 0}, test, {1}, 2, 1),
                    RejectedInput);
    // No other class represented at all.
    CHECK_THROWS_AS(trust_scores(train, {0, 0, 0, 0}, test, {0}, 2, 1),
                    RejectedInput);
    const Matrix wide = Matrix::from_rows({{5.0, 1.0}});
    CHECK_THROWS_AS(trust_scores(train, labels, wide, {0}, 2, 1),
                    RejectedInput);
  }
}

TEST_CASE("trust ratios match a brute-force neighbour oracle") {
  Rng rng(404);
  const int num_classes = 3;
  const std::size_t train_n = 40, test_n = 15, dim = 2;

  std::vector<std::vector<double>> train_rows(train_n,
                                              std::vector<double>(dim));
  std::vector<int> train_labels(train_n);
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < train_n; ++i) {
    for (std::size_t c = 0; c < dim; ++c)
      train_rows[i][c] = rng.uniform(-3.0, 3.0);
    train_labels[i] = static_cast<int>(i % num_classes);
    by_class[i % num_classes].push_back(i);
  }
  std::vector<std::vector<double>> test_rows(test_n, std::vector<double>(dim));
  std::vector<int> predicted(test_n);
  for (std::size_t j = 0; j < test_n; ++j) {
    for (std::size_t c = 0; c < dim; ++c)
      test_rows[j][c] = rng.uniform(-3.0, 3.0);
    predicted[j] = static_cast<int>(rng.uniform_int(num_classes));
  }

  const std::vector<double> scores =
      trust_scores(Matrix::from_rows(train_rows), train_labels,
                   Matrix::from_rows(test_rows), predicted, num_classes, 3);

  for (std::size_t j = 0; j < test_n; ++j) {
    const int pred = predicted[j];
    const double d_own = oracle::kth_distance(
        train_rows, by_class[static_cast<std::size_t>(pred)], test_rows[j], 3);
    double d_other = std::numeric_limits<double>::infinity();
    for (int c = 0; c < num_classes; ++c) {
      if (c == pred) continue;
      d_other = std::min(
          d_other, oracle::kth_distance(
                       train_rows, by_class[static_cast<std::size_t>(c)],
                       test_rows[j], 3));
    }
    const double expected =
        d_own == 0.0 ? (d_other == 0.0 ? 1.0 : 1e12)
                     : std::min(d_other / d_own, 1e12);
    CHECK(scores[j] == doctest::Approx(expected).epsilon(1e-12));
  }
}
