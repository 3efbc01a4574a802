#pragma once

#include <vector>

#include "selfcheck/ensemble.hpp"
#include "selfcheck/matrix.hpp"

namespace selfcheck {

/// Highest predicted probability per point ("confidence").
std::vector<double> max_probabilities(const Matrix& probabilities);

/// Accuracy estimate of a single model as its mean confidence.
double average_confidence(const Matrix& probabilities);

/// Accuracy estimate of an ensemble: average the member probability vectors
/// per point first, then take the mean confidence of that average.
double ensemble_average_confidence(const EnsemblePredictions& predictions);

/// Threshold that flags (with a strict `score < threshold` test) the
/// smallest fraction of scores that is at least `rate`. With k =
/// ceil(rate * n): k == 0 yields the minimum score (nothing flagged);
/// otherwise the threshold is the smallest score strictly greater than the
/// k-th smallest, or max + 1 when no score exceeds it (everything up to and
/// including the tied block gets flagged).
double calibrate_threshold(std::vector<double> scores, double rate);

/// Indices whose confidence falls strictly below the threshold.
std::vector<std::size_t> msp_detect(const Matrix& probabilities,
                                    double threshold);

/// Nearest-neighbour trust ratio per test point: distance to the k-th
/// nearest training point of the closest *other* class, divided by the
/// distance to the k-th nearest training point of the predicted class.
/// Low values mean the point sits closer to a competing class than to its
/// own. k is clamped per class to the class size; ratios are capped at
/// 1e12 (a zero own-class distance with a positive other-class distance
/// returns the cap; 0/0 returns 1).
std::vector<double> trust_scores(const Matrix& train_features,
                                 const std::vector<int>& train_labels,
                                 const Matrix& test_features,
                                 const std::vector<int>& predicted_labels,
                                 int num_classes, int k);

}  // namespace selfcheck
