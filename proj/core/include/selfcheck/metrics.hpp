#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selfcheck/ensemble.hpp"
#include "selfcheck/framework.hpp"

namespace selfcheck {

/// F1 of flagged indices against the true mistake set. Returns 0 whenever
/// either set is empty or they do not intersect.
double f1_error_detection(const std::vector<std::size_t>& flagged,
                          const std::vector<std::size_t>& mistakes);

/// True accuracy of the classifier's label vector.
double true_accuracy(const std::vector<int>& f_labels,
                     const std::vector<int>& true_labels);

/// |estimated - true| accuracy.
double estimation_error(double estimated_accuracy,
                        const std::vector<int>& f_labels,
                        const std::vector<int>& true_labels);

/// Indices where the classifier is wrong (the set the detector is after).
std::vector<std::size_t> mistake_indices(const std::vector<int>& f_labels,
                                         const std::vector<int>& true_labels);

/// Ensemble error restricted to points the classifier gets right:
/// per point 1 - Pr[member = true label], averaged and maximized over
/// {j : f_labels[j] == true_labels[j]}. Throws UndefinedCondition when the
/// classifier is wrong everywhere (the restriction set is empty).
struct ErrorOnCorrect {
  double average = 0.0;        // drives the estimation-error bounds
  double pointwise_max = 0.0;  // the stricter per-point variant
};
ErrorOnCorrect measure_error_on_correct(const Votes& votes,
                                        const std::vector<int>& f_labels,
                                        const std::vector<int>& true_labels);

/// Mean agreement with the classifier over the pseudo-labeled set the
/// ensemble was trained against. Small values mean the training pressure
/// "disagree with f on R" actually took. Undefined (value 0, defined=false)
/// when the set is empty.
struct AgreementOnPseudo {
  double value = 0.0;
  bool defined = false;
};
AgreementOnPseudo measure_agreement_on_pseudo(const Votes& votes,
                                              const std::vector<int>& f_labels,
                                              const PseudoLabelSet& pseudo);

/// Pairwise disagreement of two independently drawn members at point j:
/// 1 - sum_k share(j,k)^2. Ranges over [0, 1 - 1/K].
double vote_variance(const Votes& votes, std::size_t j);
std::vector<double> vote_variances(const Votes& votes);

/// Mean vote variance over a subset of points; nullopt when empty.
std::optional<double> mean_vote_variance(const Votes& votes,
                                         const std::vector<std::size_t>& subset);

/// Splits the classifier's mistakes outside the pseudo-label set into
///  - confident: ensemble right there with prob >= 1 - slack (easy to flag:
///    high probability mass off f's label), and
///  - diverse:   the rest, where only vote spread can expose the mistake.
struct MistakePartition {
  std::vector<std::size_t> confident;  // sorted
  std::vector<std::size_t> diverse;    // sorted
};
MistakePartition partition_mistakes(const Votes& votes,
                                    const std::vector<int>& f_labels,
                                    const std::vector<int>& true_labels,
                                    const PseudoLabelSet& pseudo,
                                    double slack);

/// Point-wise quantities for the idealized analysis: per-point error caps
/// instead of averages, plus the derived mean variance of the diverse group.
struct IdealizedQuantities {
  double pointwise_error_on_correct = 0.0;   // max over correct points
  std::vector<std::size_t> confident_correct; // mistakes the ensemble nails
                                               // with prob >= 1 - beta
  double max_pseudo_disagreement = 0.0;       // max over R of Pr[member != pseudo]
  bool pseudo_defined = false;
  double residual_fraction = 0.0;  // r = (|W| - |R| - |S|) / |U|
  double sigma2_all = 0.0;         // mean vote variance over every test point
  double diverse_mean_variance = 0.0;  // b = (sigma2_all - (2v - v^2)(1 - r)) / r
  bool b_defined = false;          // false when r == 0
};
IdealizedQuantities idealized_quantities(const Votes& votes,
                                         const std::vector<int>& f_labels,
                                         const std::vector<int>& true_labels,
                                         const PseudoLabelSet& pseudo,
                                         double beta);

/// The exact relationship between accuracy and ensemble agreement.
/// For binary problems, accuracy(f) - agreement(f, ensemble) equals
/// e_T (1 - 2 e_f) - 2 Cov(e_f, e_h) identically; for more classes the gap
/// is bracketed by [that expression, e_T (1 - e_f) - Cov].
struct DecompositionCheck {
  double accuracy_f = 0.0;
  double agreement_rate = 0.0;      // mean member agreement with f
  double ensemble_error = 0.0;      // e_T: mean member error
  double f_error = 0.0;             // e_f = 1 - accuracy_f
  double error_product_mean = 0.0;  // E[e_f(x) e_h(x)]
  double covariance = 0.0;          // E[e_f e_h] - e_f * e_T
  double lhs = 0.0;                 // accuracy_f - agreement_rate
  double rhs_binary = 0.0;          // exact for K = 2
  double lower = 0.0, upper = 0.0;  // bracket for K > 2
};
DecompositionCheck decomposition_check(
    const std::vector<std::vector<int>>& member_labels,
    const std::vector<int>& f_labels, const std::vector<int>& true_labels,
    int num_classes);

/// |mean agreement with f - true accuracy of f|: zero in expectation for a
/// perfectly calibrated ensemble, so the size of this gap is a practical
/// calibration probe.
double calibration_gap(const Votes& votes, const std::vector<int>& f_labels,
                       const std::vector<int>& true_labels);

/// One evaluated iteration of a self-training run.
struct ConditionRow {
  int iteration = 0;
  double error_on_correct_avg = 0.0;
  double error_on_correct_max = 0.0;
  double pseudo_agreement = 0.0;       // on the set the ensemble trained on
  bool pseudo_agreement_defined = false;
  double diversity_diverse = 0.0;      // mean vote variance over the diverse group
  bool diversity_diverse_defined = false;
  double diversity_all = 0.0;          // mean vote variance over all points
  std::vector<double> vote_variance;   // per point
  std::size_t confident_size = 0;
  std::size_t diverse_size = 0;
  std::size_t mistakes_in_r = 0;       // |W intersect R_in|
  std::size_t r_in_size = 0;
  std::size_t r_out_size = 0;
};

/// Everything the estimation-error bounds need, measured on a real run.
/// Aggregates take the worst case over iterations: the largest average error
/// on correct points, the largest pseudo-set agreement, the smallest
/// diversity. Diversity is aggregated both over the diverse mistake group
/// (the quantity the one-iteration guarantee uses) and over all test points
/// (the idealized-analysis average); the two are reported side by side
/// because published summaries do not always say which one they quote.
struct ConditionReport {
  std::vector<ConditionRow> rows;
  double max_error_on_correct = 0.0;      // worst per-iteration average
  double max_error_on_correct_pointwise = 0.0;
  double max_pseudo_agreement = 0.0;      // over iterations where defined
  bool pseudo_agreement_defined = false;
  double min_diversity = 0.0;             // diverse-group variant
  bool diversity_defined = false;
  double min_diversity_all = 0.0;         // all-points variant
  double accuracy_f = 0.0;                // needs true labels; evaluation only

  std::string to_json() const;  // fields in both fraction and percent form
  std::string to_csv() const;   // one row per iteration
};

/// Builds a ConditionReport while a self-training run executes, via the
/// framework's iteration observer. Requires true labels, so this only exists
/// in evaluation mode.
class ConditionTracker {
 public:
  ConditionTracker(std::vector<int> f_labels, std::vector<int> true_labels);

  /// Hook to pass to run_self_training.
  IterationObserver observer();

  /// Finalized report (aggregates computed here).
  ConditionReport report() const;

 private:
  std::vector<int> f_labels_;
  std::vector<int> true_labels_;
  std::vector<ConditionRow> rows_;
};

}  // namespace selfcheck
