#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "selfcheck/ensemble.hpp"
#include "selfcheck/framework.hpp"

namespace selfcheck {

/// How per-point ensemble behaviour is parameterized.
///
/// kIdealized pins point-wise caps: every correct point has exactly
/// `error_on_correct` probability mass off its true label, every flagged
/// point has exactly `pseudo_disagreement` mass off its pseudo-label.
///
/// kRelaxed pins averages instead: correct points are a half/half mix of
/// "sharp" (all mass on the true label) and "soft" (2 * error_on_correct
/// mass off it), so the average error is error_on_correct while the
/// point-wise worst case is twice that; flagged points put exactly
/// `pseudo_agreement` mass back on the classifier's label.
enum class SyntheticRegime { kIdealized, kRelaxed };

/// Fully deterministic generative model of an iterative self-training
/// ensemble, built so every quantity the one-iteration guarantee uses is
/// known by construction.
///
/// Point layout: true labels cycle through the classes; the classifier is
/// wrong on a seeded subset of `classifier_error * num_points` points, where
/// it predicts the next class. Each iteration, the mistakes outside the
/// current flag set split into
///   - a confident group (share `confident_share`): mass 1 - confident_slack
///     on the true label, so these are detectable by confidence alone;
///   - a diverse group: votes uniform over all classes (vote variance at the
///     class-count limit), always detectable through disagreement;
///   - a hidden group: all mass on the classifier's label, undetectable this
///     round.
/// The diverse count is chosen so the mean vote variance of
/// diverse + hidden is at least `diversity_target` AND at least a
/// `diversity_target` fraction of the remaining mistakes is detected each
/// iteration; the split is reshuffled every iteration so hidden points get
/// fresh chances, which is exactly what makes the undetected mass shrink
/// geometrically.
struct SyntheticSpec {
  std::size_t num_points = 1000;
  int num_classes = 2;
  double classifier_error = 0.5;  // fraction of points the classifier misses
  std::uint64_t seed = 1;
  int num_members = 0;  // 0: exact probability mode; >0: sample this many
                        // member votes per point
  SyntheticRegime regime = SyntheticRegime::kIdealized;
  double error_on_correct = 0.0;     // point-wise (idealized) or average
                                     // (relaxed) mass off the true label on
                                     // correct points
  double confident_slack = 0.0;      // mass off the true label on the
                                     // confident mistake group
  double pseudo_disagreement = 0.0;  // idealized: mass off the pseudo-label
                                     // on flagged points
  double pseudo_agreement = 0.0;     // relaxed: mass on the classifier's
                                     // label on flagged points
  double diversity_target = 0.5;     // lower bound on the diverse-group mean
                                     // vote variance and on the per-iteration
                                     // detection rate
  double confident_share = 0.0;      // fraction of remaining mistakes made
                                     // confident each iteration

  /// Throws RejectedInput naming the violated feasibility constraint.
  void validate() const;
};

/// EnsembleTrainer backed by the generative model above; plug it into
/// run_self_training like a real trainer.
class SyntheticProcess final : public EnsembleTrainer {
 public:
  explicit SyntheticProcess(SyntheticSpec spec);

  Votes generate(const PseudoLabelSet& pseudo, int iteration) override;
  std::size_t num_points() const override { return spec_.num_points; }
  int num_classes() const override { return spec_.num_classes; }

  const SyntheticSpec& spec() const { return spec_; }
  const std::vector<int>& true_labels() const { return true_labels_; }
  const std::vector<int>& f_labels() const { return f_labels_; }
  /// Sorted indices the classifier gets wrong.
  const std::vector<std::size_t>& mistake_set() const { return mistakes_; }

 private:
  SyntheticSpec spec_;
  std::vector<int> true_labels_;
  std::vector<int> f_labels_;
  std::vector<std::size_t> mistakes_;
  std::vector<bool> is_mistake_;
  std::vector<bool> correct_is_sharp_;  // relaxed regime only
};

/// One inequality of the flag-set growth guarantee, normalized to
/// "lhs <= rhs". Equality passes and is marked as a boundary case.
struct InequalityRecord {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  bool boundary = false;
};

/// Claimed values to use instead of the measured ones; lets a caller check
/// whether an instance satisfies the guarantee for *stated* conditions
/// (fault injection, external reports) rather than measured ones.
struct QuantityOverrides {
  std::optional<double> pointwise_error;    // mass off true label, correct pts
  std::optional<double> pseudo_agreement;   // agreement with f on the flag set
  std::optional<double> diverse_variance;   // mean vote variance, hard group
};

/// Result of checking all four inequalities for one iteration.
struct FlagGrowthCheck {
  std::vector<InequalityRecord> inequalities;  // always 4, fixed order
  double pointwise_error = 0.0;                // value used (post-override)
  double pseudo_agreement = 0.0;
  bool pseudo_agreement_defined = false;
  double diverse_variance = 0.0;
  bool diverse_variance_defined = false;
  double eta = 0.0;
  double tau = 0.0;
  std::vector<std::string> precondition_violations;

  bool all_pass() const;
  std::string to_json() const;
};

/// Checks the four guarantees the flag-set construction makes for a single
/// iteration: given the votes, the flag set the ensemble was trained against
/// (r_in) and the freshly built one (r_out = threshold construction at
/// tau = sqrt(1 - eta)), verify
///   1. correct-points-rarely-flagged:   |r_out on correct| <=
///        (v / (1 - tau)) * #correct
///   2. flagged-set-mostly-retained:     (1 - g / tau) * |r_in| <=
///        |r_in intersect r_out|
///   3. confident-mistakes-all-flagged:  |G| <= |G intersect r_out|
///   4. hard-mistakes-found-at-rate:     ((s - eta) / (1 - eta)) * |B| <=
///        |r_out intersect B|
/// where v, g, s are measured from the votes unless overridden, and G / B
/// split the unflagged mistakes by confidence slack v.
/// Preconditions "eta-below-diversity" and "eta-below-error-margin"
/// (eta < s and eta < 1 - v^2) are reported, not enforced.
FlagGrowthCheck check_flag_set_growth(const Votes& votes,
                                      const std::vector<int>& f_labels,
                                      const std::vector<int>& true_labels,
                                      const PseudoLabelSet& r_in,
                                      const PseudoLabelSet& r_out, double eta,
                                      const QuantityOverrides& overrides = {});

/// Whole-run verdict for the geometric-shrinkage guarantee: run the
/// synthetic process for `iterations` rounds at tau = sqrt(1 - eta) and
/// check that after every round t the undetected mistakes number at most
/// (1 - rate)^t * |mistakes|, with rate = the process's diversity target.
/// Also runs the four-inequality check on every round.
struct GeometricCheck {
  std::vector<std::size_t> residual_trace;  // undetected mistakes after t+1 rounds
  std::vector<double> bound_trace;          // (1 - rate)^(t+1) * |mistakes|
  bool bound_holds = false;
  std::vector<FlagGrowthCheck> iteration_checks;
  bool inequalities_hold = false;
  std::size_t mistakes = 0;
  double rate = 0.0;
  double estimated_accuracy = 0.0;  // from the final flag set
  double true_accuracy = 0.0;

  std::string to_json() const;
};

GeometricCheck verify_geometric_shrinkage(SyntheticProcess& process,
                                          double eta, int iterations,
                                          std::uint64_t seed);

}  // namespace selfcheck
