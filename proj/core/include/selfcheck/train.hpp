#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "selfcheck/dataset.hpp"
#include "selfcheck/matrix.hpp"
#include "selfcheck/mlp.hpp"

namespace selfcheck {

/// Mini-batch SGD hyperparameters. learning_rate may be 0, in which case
/// sgd_fit is an exact no-op (useful for isolating pipeline stages in tests).
struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Optional distribution-alignment term added to the training objective:
/// weight * mmd2(encoder(source batch), encoder(target batch), bandwidth).
/// bandwidth <= 0 requests the median heuristic, recomputed at the start of
/// every epoch from the pooled representations of the two sides.
struct MmdTerm {
  Matrix target_features;  // unlabeled batch the representations align to
  double weight = 1.0;
  double bandwidth = 0.0;  // <= 0: median heuristic per epoch
};

/// Mean cross-entropy over the source batch plus pseudo_weight times the mean
/// cross-entropy over the pseudo-labeled batch. An empty pseudo batch
/// contributes exactly 0. Labels index softmax rows from forward().
double weighted_ce_loss(const Matrix& source_probs,
                        const std::vector<int>& source_labels,
                        const Matrix& pseudo_probs,
                        const std::vector<int>& pseudo_labels,
                        double pseudo_weight);

/// Full objective on given batches: weighted CE plus the optional MMD term
/// (with an explicit bandwidth; mmd.bandwidth must be > 0 here). This is the
/// scalar that backprop() differentiates and grad_check() probes.
double objective_value(const MlpModel& model, const Matrix& source_features,
                       const std::vector<int>& source_labels,
                       const Matrix& pseudo_features,
                       const std::vector<int>& pseudo_labels,
                       double pseudo_weight,
                       const std::optional<MmdTerm>& mmd);

/// Gradients with the same shapes as the model parameters.
struct MlpGradients {
  std::vector<Layer> encoder;    // activation fields unused
  std::vector<Layer> predictor;

  static MlpGradients zeros_like(const MlpModel& model);
  double max_abs() const;
};

/// Analytic gradients of objective_value() with respect to every weight and
/// bias. The MMD term differentiates through the encoder only (its value
/// depends on representations alone). Throws NumericalFailure with a layer
/// index if any intermediate is non-finite.
MlpGradients backprop(const MlpModel& model, const Matrix& source_features,
                      const std::vector<int>& source_labels,
                      const Matrix& pseudo_features,
                      const std::vector<int>& pseudo_labels,
                      double pseudo_weight,
                      const std::optional<MmdTerm>& mmd);

/// Central finite differences of objective_value() over every parameter;
/// the oracle grad_check() compares backprop against.
MlpGradients finite_difference_gradients(
    const MlpModel& model, const Matrix& source_features,
    const std::vector<int>& source_labels, const Matrix& pseudo_features,
    const std::vector<int>& pseudo_labels, double pseudo_weight,
    const std::optional<MmdTerm>& mmd, double step);

/// Largest relative disagreement between two gradient sets, with the usual
/// safe denominator max(|a|, |b|, 1e-8).
double max_relative_gradient_error(const MlpGradients& a,
                                   const MlpGradients& b);

/// Convenience: backprop vs central finite differences on the same batches.
/// step must lie in (1e-8, 1e-2).
double grad_check(const MlpModel& model, const Matrix& source_features,
                  const std::vector<int>& source_labels,
                  const Matrix& pseudo_features,
                  const std::vector<int>& pseudo_labels, double pseudo_weight,
                  const std::optional<MmdTerm>& mmd, double step = 1e-5);

/// Mini-batch SGD with classical momentum on the objective above.
///
/// Each epoch shuffles the union of source and pseudo points with a stream
/// derived from (config.seed, epoch); every mini-batch contributes
/// (mean CE over its source rows) + pseudo_weight * (mean CE over its pseudo
/// rows), matching weighted_ce_loss term-for-term. When `mmd` is set, each
/// step also aligns the source rows' representations with an equally sized
/// slice of the target features (cycled in shuffled order), and a bandwidth
/// <= 0 is replaced by the median heuristic at every epoch start.
///
/// Deterministic: identical inputs and seed give bit-identical parameters.
/// Throws NumericalFailure if the epoch loss becomes non-finite.
MlpModel sgd_fit(MlpModel model, const LabeledDataset& source,
                 const LabeledDataset& pseudo, double pseudo_weight,
                 const std::optional<MmdTerm>& mmd, const TrainConfig& config);

/// Plain supervised fit: no pseudo batch, no alignment term.
MlpModel sgd_fit(MlpModel model, const LabeledDataset& source,
                 const TrainConfig& config);

/// Fraction of points whose argmax probability matches `labels`.
double accuracy(const MlpModel& model, const LabeledDataset& data);

}  // namespace selfcheck
