#pragma once

#include <cstdint>
#include <vector>

#include "selfcheck/matrix.hpp"
#include "selfcheck/rng.hpp"

namespace selfcheck {

enum class Activation { kIdentity, kRelu };

/// One fully connected layer: y = act(W x + b), W is (output x input).
struct Layer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::kRelu;

  std::size_t input_dim() const { return weight.cols(); }
  std::size_t output_dim() const { return weight.rows(); }

  bool operator==(const Layer&) const = default;
};

/// A classifier split into an encoder (feature extractor) and a predictor
/// head. The split matters because the representation-matching objective and
/// the trust-score baseline both operate on the encoder output, not on the
/// raw inputs or the logits.
struct MlpModel {
  std::vector<Layer> encoder;
  std::vector<Layer> predictor;  // last layer emits num_classes logits
  int num_classes = 0;

  std::size_t input_dim() const {
    if (!encoder.empty()) return encoder.front().input_dim();
    return predictor.empty() ? 0 : predictor.front().input_dim();
  }
  std::size_t representation_dim() const {
    return encoder.empty() ? input_dim() : encoder.back().output_dim();
  }
  std::size_t layer_count() const { return encoder.size() + predictor.size(); }

  /// Throws RejectedInput unless layer shapes chain up and the final layer
  /// emits num_classes >= 2 logits.
  void validate() const;

  bool operator==(const MlpModel& other) const = default;
};

/// Shape description used to build fresh models. Encoder layers are ReLU;
/// predictor hidden layers are ReLU; the final logit layer is linear.
struct MlpArchitecture {
  int input_dim = 0;
  std::vector<int> encoder_widths;    // may be empty (encoder = identity)
  std::vector<int> predictor_hidden;  // widths before the logit layer
  int num_classes = 0;
};

/// Builds a model with Glorot-uniform weights (range +-sqrt(6/(fan_in+fan_out)))
/// and zero biases, drawing from `rng` in a fixed layer-by-layer order.
MlpModel make_mlp(const MlpArchitecture& arch, Rng& rng);

/// Encoder output and class probabilities for a batch (one row per point).
struct ForwardResult {
  Matrix representations;  // n x representation_dim
  Matrix probabilities;    // n x num_classes, rows sum to 1
};

/// Runs the model on a batch. Throws RejectedInput on a width mismatch and
/// NumericalFailure (with the layer index) if any intermediate is non-finite.
ForwardResult forward(const MlpModel& model, const Matrix& batch);

/// Encoder part only; the first half of forward().
Matrix encode(const MlpModel& model, const Matrix& batch);

/// Row-wise softmax with max-subtraction; rows of the result sum to 1.
Matrix softmax_rows(const Matrix& logits);

/// Argmax per row with ties broken toward the lowest index.
std::vector<int> argmax_rows(const Matrix& values);

}  // namespace selfcheck
