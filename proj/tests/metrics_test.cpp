#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "oracles.hpp"
#include "selfcheck/bounds.hpp"
#include "selfcheck/error.hpp"
#include "selfcheck/metrics.hpp"
#include "selfcheck/rng.hpp"

using namespace selfcheck;

namespace {

Votes votes_from_rows(const std::vector<std::vector<double>>& rows,
                      int num_members = 0) {
  return Votes{Matrix::from_rows(rows), num_members};
}

std::vector<int> random_labels(Rng& rng, std::size_t n, int num_classes) {
  std::vector<int> out(n);
  for (int& l : out)
    l = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_classes)));
  return out;
}

std::vector<std::vector<int>> random_members(Rng& rng, std::size_t members,
                                             std::size_t n, int num_classes) {
  std::vector<std::vector<int>> out(members);
  for (auto& m : out) m = random_labels(rng, n, num_classes);
  return out;
}

Votes random_probability_votes(Rng& rng, std::size_t n, int num_classes) {
  Matrix dist(n, static_cast<std::size_t>(num_classes));
  for (std::size_t j = 0; j < n; ++j) {
    double total = 0.0;
    for (std::size_t k = 0; k < dist.cols(); ++k) {
      dist(j, k) = rng.uniform(0.01, 1.0);
      total += dist(j, k);
    }
    for (std::size_t k = 0; k < dist.cols(); ++k) dist(j, k) /= total;
  }
  return Votes{std::move(dist), 0};
}

}  // namespace

TEST_CASE("error-detection F1 matches a naive oracle and handles edges") {
  Rng rng(301);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> flagged, mistakes;
    for (std::size_t j = 0; j < 40; ++j) {
      if (rng.uniform() < 0.3) flagged.push_back(j);
      if (rng.uniform() < 0.3) mistakes.push_back(j);
    }
    const double got = f1_error_detection(flagged, mistakes);
    const double want = oracle::f1(flagged, mistakes);
    CHECK(got == doctest::Approx(want).epsilon(1e-15));
  }

  CHECK(f1_error_detection({}, {1, 2}) == 0.0);
  CHECK(f1_error_detection({1, 2}, {}) == 0.0);
  CHECK(f1_error_detection({1, 2}, {3, 4}) == 0.0);
  CHECK(f1_error_detection({1, 2}, {1, 2}) == 1.0);
  // Unsorted and duplicated inputs are normalized before scoring.
  CHECK(f1_error_detection({3, 1, 3}, {1, 3}) == 1.0);
}

TEST_CASE("accuracy bookkeeping: truth, error, and mistake indices") {
  const std::vector<int> f = {0, 1, 2, 0};
  const std::vector<int> y = {0, 2, 2, 1};
  CHECK(true_accuracy(f, y) == 0.5);
  CHECK(estimation_error(0.75, f, y) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(mistake_indices(f, y) == std::vector<std::size_t>{1, 3});
  CHECK_THROWS_AS(true_accuracy({0, 1}, {0}), RejectedInput);
  CHECK_THROWS_AS(true_accuracy({}, {}), RejectedInput);
}

TEST_CASE("ensemble error restricted to the classifier's correct points") {
  const Votes votes = votes_from_rows(
      {{0.9, 0.05, 0.05}, {0.3, 0.6, 0.1}, {0.2, 0.2, 0.6}});
  const std::vector<int> y = {0, 1, 2};
  const std::vector<int> f = {0, 1, 0};  // wrong at the last point
  const ErrorOnCorrect err = measure_error_on_correct(votes, f, y);
  CHECK(err.average == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(err.pointwise_max == doctest::Approx(0.4).epsilon(1e-15));

  const std::vector<int> all_wrong = {1, 0, 0};
  CHECK_THROWS_AS(measure_error_on_correct(votes, all_wrong, y),
                  UndefinedCondition);
}

TEST_CASE("agreement on the trained pseudo set, undefined when empty") {
  const Votes votes = votes_from_rows(
      {{0.9, 0.05, 0.05}, {0.3, 0.6, 0.1}, {0.2, 0.2, 0.6}});
  const std::vector<int> f = {0, 1, 0};

  const AgreementOnPseudo empty =
      measure_agreement_on_pseudo(votes, f, PseudoLabelSet{});
  CHECK(!empty.defined);
  CHECK(empty.value == 0.0);

  PseudoLabelSet set;
  set.entries = {{0, 1}, {2, 1}};
  const AgreementOnPseudo agr = measure_agreement_on_pseudo(votes, f, set);
  CHECK(agr.defined);
  CHECK(agr.value == doctest::Approx((0.9 + 0.2) / 2.0).epsilon(1e-15));
}

TEST_CASE("vote variance agrees with the naive oracle and respects its range") {
  Rng rng(302);
  for (int trial = 0; trial < 20; ++trial) {
    const int num_classes = 2 + static_cast<int>(rng.uniform_int(5));
    const Votes votes =
        EnsemblePredictions::from_labels(
            random_members(rng, 5, 30, num_classes), num_classes)
            .votes();
    const std::vector<double> want = oracle::vote_variance(votes);
    for (std::size_t j = 0; j < votes.num_points(); ++j) {
      const double got = vote_variance(votes, j);
      CHECK(got == doctest::Approx(want[j]).epsilon(1e-14));
      CHECK(got >= -1e-15);
      CHECK(got <= 1.0 - 1.0 / num_classes + 1e-15);
    }
  }

  const Votes plain = votes_from_rows({{0.5, 0.5}, {1.0, 0.0}, {0.25, 0.75}});
  CHECK(vote_variance(plain, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(vote_variance(plain, 1) == 0.0);
  CHECK(*mean_vote_variance(plain, {0, 1}) ==
        doctest::Approx(0.25).epsilon(1e-15));
  CHECK(!mean_vote_variance(plain, {}).has_value());
  CHECK_THROWS_AS(vote_variance(plain, 3), RejectedInput);
}

TEST_CASE("mistakes outside the flag set split into confident and diverse") {
  const Votes votes = votes_from_rows({{0.95, 0.05, 0.0},
                                       {0.9, 0.05, 0.05},
                                       {0.1, 0.3, 0.6},
                                       {0.2, 0.7, 0.1},
                                       {0.3, 0.2, 0.5}});
  const std::vector<int> y = {0, 0, 1, 1, 2};
  const std::vector<int> f = {1, 0, 2, 1, 0};  // wrong at 0, 2, 4
  PseudoLabelSet pseudo;
  pseudo.entries = {{2, 0}};

  // Slack 0.1: a mistake is "confident" when the ensemble puts >= 0.9 on the
  // true label. Point 0 has 0.95 on class 0; point 4 has only 0.5 on class 2.
  SUBCASE("tight slack") {
    const MistakePartition split =
        partition_mistakes(votes, f, y, pseudo, 0.1);
    CHECK(split.confident == std::vector<std::size_t>{0});
    CHECK(split.diverse == std::vector<std::size_t>{4});
  }
  SUBCASE("loose slack absorbs everything") {
    const MistakePartition split =
        partition_mistakes(votes, f, y, pseudo, 0.5);
    CHECK(split.confident == std::vector<std::size_t>{0, 4});
    CHECK(split.diverse.empty());
  }
  SUBCASE("boundary: probability exactly 1 - slack counts as confident") {
    const MistakePartition split =
        partition_mistakes(votes, f, y, pseudo, 0.05);
    CHECK(split.confident == std::vector<std::size_t>{0});
    CHECK(split.diverse == std::vector<std::size_t>{4});
  }
}

TEST_CASE("binary agreement decomposition is an identity") {
  Rng rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t members = 1 + rng.uniform_int(7);
    const std::size_t n = 200;
    const auto h = random_members(rng, members, n, 2);
    const auto f = random_labels(rng, n, 2);
    const auto y = random_labels(rng, n, 2);
    const DecompositionCheck check = decomposition_check(h, f, y, 2);
    CHECK(std::abs(check.lhs - check.rhs_binary) < 1e-12);
    CHECK(check.lower == check.rhs_binary);
    CHECK(check.lhs >= check.lower - 1e-12);
    CHECK(check.lhs <= check.upper + 1e-12);
  }
}

TEST_CASE("the four-point classroom table zeroes both sides") {
  const std::vector<int> y = {0, 0, 1, 1};
  const std::vector<int> f = {0, 1, 0, 1};
  const std::vector<std::vector<int>> h = {{0, 1, 1, 0}};
  const DecompositionCheck check = decomposition_check(h, f, y, 2);
  CHECK(check.accuracy_f == 0.5);
  CHECK(check.agreement_rate == 0.5);
  CHECK(check.ensemble_error == 0.5);
  CHECK(check.error_product_mean == 0.25);
  CHECK(check.covariance == 0.0);
  CHECK(check.lhs == 0.0);
  CHECK(check.rhs_binary == 0.0);
}

TEST_CASE("multiclass decomposition brackets the agreement gap") {
  Rng rng(304);
  for (int trial = 0; trial < 100; ++trial) {
    const int num_classes = 3 + static_cast<int>(rng.uniform_int(3));
    const std::size_t members = 1 + rng.uniform_int(5);
    const auto h = random_members(rng, members, 150, num_classes);
    const auto f = random_labels(rng, 150, num_classes);
    const auto y = random_labels(rng, 150, num_classes);
    const DecompositionCheck check = decomposition_check(h, f, y, num_classes);
    CHECK(check.lhs >= check.lower - 1e-12);
    CHECK(check.lhs <= check.upper + 1e-12);
  }
}

TEST_CASE("per-point agreement never exceeds the diversity cap") {
  Rng rng(305);
  for (int trial = 0; trial < 50; ++trial) {
    const int num_classes = 2 + static_cast<int>(rng.uniform_int(9));
    const Votes votes = trial % 2 == 0
                            ? EnsemblePredictions::from_labels(
                                  random_members(rng, 7, 40, num_classes),
                                  num_classes)
                                  .votes()
                            : random_probability_votes(rng, 40, num_classes);
    const auto f = random_labels(rng, 40, num_classes);
    const std::vector<double> ar = agreement_with_f(votes, f);
    for (std::size_t j = 0; j < votes.num_points(); ++j) {
      const double var = vote_variance(votes, j);
      CHECK(ar[j] <= std::sqrt(1.0 - var) + 1e-12);
      CHECK(var <= 1.0 - 1.0 / num_classes + 1e-12);
    }
  }
}

TEST_CASE("calibration gap is the distance between agreement and accuracy") {
  const Votes votes = votes_from_rows({{0.9, 0.1}, {0.4, 0.6}});
  const std::vector<int> f = {0, 1};
  const std::vector<int> y = {0, 0};
  CHECK(calibration_gap(votes, f, y) ==
        doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("idealized quantities tie out with the closed-form variance") {
  const Votes votes = votes_from_rows({{1.0, 0.0},
                                       {0.9, 0.1},
                                       {0.5, 0.5},
                                       {0.85, 0.15},
                                       {0.1, 0.9},
                                       {0.0, 1.0}});
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  const std::vector<int> f = {0, 0, 1, 0, 1, 1};  // wrong at 2 and 3
  PseudoLabelSet pseudo;
  pseudo.entries = {{2, 0}};

  const IdealizedQuantities q =
      idealized_quantities(votes, f, y, pseudo, 0.2);
  CHECK(q.pointwise_error_on_correct == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(q.confident_correct.empty());
  CHECK(q.pseudo_defined);
  CHECK(q.max_pseudo_disagreement == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(q.residual_fraction == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(q.sigma2_all == doctest::Approx(1.115 / 6.0).epsilon(1e-12));
  REQUIRE(q.b_defined);
  CHECK(q.diverse_mean_variance == doctest::Approx(0.165).epsilon(1e-12));
  CHECK(q.diverse_mean_variance ==
        doctest::Approx(diverse_group_variance(
                            q.sigma2_all, q.pointwise_error_on_correct,
                            q.residual_fraction))
            .epsilon(1e-15));

  // Flagging every mistake leaves no residual, so the derived variance is
  // undefined rather than a division by zero.
  PseudoLabelSet all_mistakes;
  all_mistakes.entries = {{2, 0}, {3, 1}};
  const IdealizedQuantities none =
      idealized_quantities(votes, f, y, all_mistakes, 0.2);
  CHECK(none.residual_fraction == 0.0);
  CHECK(!none.b_defined);

  CHECK_THROWS_AS(idealized_quantities(votes, f, y, pseudo, 1.0),
                  RejectedInput);
  CHECK_THROWS_AS(idealized_quantities(votes, f, y, pseudo, -0.1),
                  RejectedInput);
}

namespace {

class ScriptedTrainer final : public EnsembleTrainer {
 public:
  explicit ScriptedTrainer(std::vector<Votes> script)
      : script_(std::move(script)) {}
  Votes generate(const PseudoLabelSet&, int iteration) override {
    return script_.at(static_cast<std::size_t>(iteration - 1));
  }
  std::size_t num_points() const override {
    return script_.front().num_points();
  }
  int num_classes() const override {
    return static_cast<int>(script_.front().num_classes());
  }

 private:
  std::vector<Votes> script_;
};

}  // namespace

TEST_CASE("the condition tracker reproduces direct measurements per round") {
  const std::vector<int> y = {0, 0, 1, 1, 1};
  const std::vector<int> f = {0, 1, 1, 1, 0};  // wrong at 1 and 4
  const Votes round1 = votes_from_rows({{0.9, 0.1},
                                        {0.6, 0.4},
                                        {0.2, 0.8},
                                        {0.5, 0.5},
                                        {0.3, 0.7}});
  const Votes round2 = votes_from_rows({{0.95, 0.05},
                                        {0.7, 0.3},
                                        {0.1, 0.9},
                                        {0.4, 0.6},
                                        {0.2, 0.8}});
  ScriptedTrainer trainer({round1, round2});

  FrameworkConfig config;
  config.iterations = 2;
  config.mode = FrameworkConfig::Mode::kThreshold;
  config.tau = 0.45;
  config.seed = 17;

  ConditionTracker tracker(f, y);
  IterationObserver inner = tracker.observer();
  std::vector<Votes> seen_votes;
  std::vector<PseudoLabelSet> seen_in, seen_out;
  const RunResult result = run_self_training(
      trainer, f, config,
      [&](int iteration, const Votes& votes, const PseudoLabelSet& trained_on,
          const PseudoLabelSet& built) {
        seen_votes.push_back(votes);
        seen_in.push_back(trained_on);
        seen_out.push_back(built);
        inner(iteration, votes, trained_on, built);
      });

  const ConditionReport report = tracker.report();
  REQUIRE(report.rows.size() == 2);
  CHECK(report.accuracy_f == doctest::Approx(0.6).epsilon(1e-15));

  for (std::size_t i = 0; i < 2; ++i) {
    const ConditionRow& row = report.rows[i];
    CHECK(row.iteration == static_cast<int>(i) + 1);
    const ErrorOnCorrect err =
        measure_error_on_correct(seen_votes[i], f, y);
    CHECK(row.error_on_correct_avg == err.average);
    CHECK(row.error_on_correct_max == err.pointwise_max);
    const AgreementOnPseudo agr =
        measure_agreement_on_pseudo(seen_votes[i], f, seen_in[i]);
    CHECK(row.pseudo_agreement == agr.value);
    CHECK(row.pseudo_agreement_defined == agr.defined);
    const MistakePartition split =
        partition_mistakes(seen_votes[i], f, y, seen_in[i], err.average);
    CHECK(row.confident_size == split.confident.size());
    CHECK(row.diverse_size == split.diverse.size());
    CHECK(row.r_in_size == seen_in[i].size());
    CHECK(row.r_out_size == seen_out[i].size());
    CHECK(row.vote_variance == vote_variances(seen_votes[i]));
  }
  CHECK(!report.rows[0].pseudo_agreement_defined);
  CHECK(report.rows[1].pseudo_agreement_defined);

  // Aggregates are the worst case over the recorded rows.
  CHECK(report.max_error_on_correct ==
        std::max(report.rows[0].error_on_correct_avg,
                 report.rows[1].error_on_correct_avg));
  CHECK(report.max_error_on_correct_pointwise ==
        std::max(report.rows[0].error_on_correct_max,
                 report.rows[1].error_on_correct_max));
  CHECK(report.max_pseudo_agreement == report.rows[1].pseudo_agreement);
  CHECK(report.pseudo_agreement_defined);
  CHECK(report.min_diversity_all ==
        std::min(report.rows[0].diversity_all, report.rows[1].diversity_all));
  // Round 2 trains on every mistake, so only round 1 has a diverse group.
  CHECK(report.rows[0].diversity_diverse_defined);
  CHECK(!report.rows[1].diversity_diverse_defined);
  CHECK(report.diversity_defined);
  CHECK(report.min_diversity == report.rows[0].diversity_diverse);

  // The run itself is consistent with the tracker's bookkeeping.
  CHECK(result.iterations[0].r_size == report.rows[0].r_out_size);
  CHECK(result.iterations[1].r_size == report.rows[1].r_out_size);
}

TEST_CASE("condition reports serialize with percent forms and CSV rows") {
  const std::vector<int> y = {0, 1};
  const std::vector<int> f = {0, 0};
  const Votes only = votes_from_rows({{0.8, 0.2}, {0.4, 0.6}});
  ScriptedTrainer trainer({only});
  FrameworkConfig config;
  config.iterations = 1;
  ConditionTracker tracker(f, y);
  run_self_training(trainer, f, config, tracker.observer());
  const ConditionReport report = tracker.report();

  const std::string json = report.to_json();
  CHECK(json.find("max_pseudo_agreement_percent") != std::string::npos);
  CHECK(json.find("min_diversity_percent") != std::string::npos);
  CHECK(json.find("accuracy_f_percent") != std::string::npos);
  CHECK(json.find("\"rows\"") != std::string::npos);

  const std::string csv = report.to_csv();
  CHECK(csv.rfind("iteration,", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 2);  // header plus one recorded iteration
}
