#pragma once

#include <string>
#include <vector>

namespace selfcheck {

/// Measured (or assumed) run conditions that feed the estimation-error
/// guarantees. All four live in [0, 1]; classifier_error must be positive
/// because the guarantee divides by it.
struct BoundInputs {
  double max_error_on_correct = 0.0;  // worst-iteration mean ensemble error
                                      // restricted to points the classifier
                                      // gets right
  double max_pseudo_agreement = 0.0;  // worst-iteration agreement with the
                                      // classifier on the flag set
  double min_diversity = 0.0;         // smallest diverse-group vote variance
  double classifier_error = 0.0;      // true (or assumed) error of f
};

/// Output of a bound evaluation. Preconditions are always checked but never
/// enforced: a violated one lands in `violated` and the numbers are still
/// reported, so a user can see how far out of range a run is.
struct BoundResult {
  double epsilon = 0.0;         // multiplicative slack on the flag-set size
  double accuracy_bound = 0.0;  // additive bound on |estimate - truth|
  double iterations = 0.0;      // iteration count that suffices (ceil applied)
  bool iterations_finite = true;
  double tau = 0.0;    // resolved disagreement threshold
  double eta = 0.0;    // resolved perturbation budget (tau = sqrt(1 - eta))
  double delta = 0.0;  // resolved per-iteration progress requirement
  std::vector<std::string> violated;  // names of failed preconditions

  std::string to_json() const;
};

/// General form of the estimation-error guarantee. The caller picks the
/// perturbation budget eta (tau = sqrt(1 - eta) follows) and the progress
/// requirement delta; the iteration count that suffices is ceil(1 / delta).
/// Preconditions (flagged, not enforced):
///   "progress-below-quarter-diversity":  0 < delta < min_diversity / 4
///   "perturbation-within-budget":        eta < 0.75 * min(min_diversity,
///                                              1 - max_error_on_correct^2)
BoundResult estimation_bound(const BoundInputs& in, double eta, double delta);

/// Same guarantee with the knobs pinned to the canonical choice
/// eta = 7/16 (tau = 3/4) and delta = 4/3 * max_pseudo_agreement, which
/// collapses epsilon to
///   (16 g / (3 s)) * (1 + 4 v (1 - e) / e)
/// with g = max_pseudo_agreement, s = min_diversity,
/// v = max_error_on_correct, e = classifier_error. The iteration count
/// becomes ceil(3 / (4 g)); it is infinite when g == 0.
BoundResult default_knob_bound(const BoundInputs& in);

/// Iterations sufficient to shrink the undetected-mistake mass below
/// `epsilon_target` when each pass removes at least a `diversity` fraction:
/// ceil(ln(1 / epsilon_target) / diversity). Requires both args in (0, 1).
double sufficient_iterations(double diversity, double epsilon_target);

/// Mean vote variance of the hard mistakes, recovered from the all-points
/// average: (sigma2_all - (2 v - v^2) (1 - r)) / r, where v is the pointwise
/// error on correct points and r the fraction of points left undetected.
/// Requires r > 0.
double diverse_group_variance(double sigma2_all, double pointwise_error,
                              double residual_fraction);

}  // namespace selfcheck
