#pragma once

#include <string>
#include <vector>

#include "selfcheck/matrix.hpp"
#include "selfcheck/mlp.hpp"

namespace selfcheck {

/// Per-point distribution of ensemble member predictions: votes(j, k) is the
/// probability that a member labels point j as class k. For a real N-member
/// ensemble these are empirical vote fractions (multiples of 1/N, recorded in
/// num_members); num_members == 0 marks exact distributions coming from a
/// synthetic process (the infinite-ensemble limit). Every downstream
/// statistic - agreement, diversity, pseudo-label sets - reads this one
/// object, which is what lets simulated ensembles drive the same code paths
/// as trained ones.
struct Votes {
  Matrix distribution;  // num_points x num_classes, rows sum to 1
  int num_members = 0;  // 0: exact probabilities

  std::size_t num_points() const { return distribution.rows(); }
  std::size_t num_classes() const { return distribution.cols(); }

  /// Checks shapes, row sums (1e-9), and non-negativity.
  void validate() const;
};

/// Raw predictions of every ensemble member on every point.
struct EnsemblePredictions {
  int num_models = 0;
  int num_points = 0;
  int num_classes = 0;
  std::vector<std::vector<int>> labels;  // [model][point], argmax of probs
  std::vector<Matrix> probabilities;     // [model], num_points x num_classes

  void validate() const;

  /// Empirical label-vote fractions per point.
  Votes votes() const;

  /// Mean of the member probability vectors per point (used by the
  /// ensemble-confidence baseline).
  Matrix mean_probabilities() const;

  /// Builds predictions from bare member labels (probabilities become
  /// one-hot). Used by sampled synthetic ensembles and tests.
  static EnsemblePredictions from_labels(
      const std::vector<std::vector<int>>& labels, int num_classes);
};

/// Runs every member on the same features.
EnsemblePredictions predict_all(const std::vector<MlpModel>& members,
                                const Matrix& features);

/// Long-format CSV: model,point,label,p0,...,p{K-1}.
void save_predictions_csv(const EnsemblePredictions& predictions,
                          const std::string& path);

}  // namespace selfcheck
