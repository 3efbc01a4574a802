#include "selfcheck/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selfcheck/error.hpp"

namespace selfcheck {

namespace {

void check_layer_shape(const Layer& layer, std::size_t expected_input,
                       const char* what) {
  if (layer.weight.rows() == 0 || layer.weight.cols() == 0)
    throw RejectedInput(std::string(what) + ": empty layer");
  if (layer.weight.cols() != expected_input)
    throw RejectedInput(std::string(what) + ": layer expects input width " +
                        std::to_string(layer.weight.cols()) + ", got " +
                        std::to_string(expected_input));
  if (layer.bias.size() != layer.weight.rows())
    throw RejectedInput(std::string(what) + ": bias size mismatch");
}

Layer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  Layer layer;
  layer.weight = Matrix(out, in);
  layer.bias.assign(out, 0.0);
  layer.activation = act;
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (std::size_t o = 0; o < out; ++o)
    for (std::size_t j = 0; j < in; ++j)
      layer.weight(o, j) = rng.uniform(-limit, limit);
  return layer;
}

}  // namespace

void MlpModel::validate() const {
  if (predictor.empty())
    throw RejectedInput("model: predictor must have at least one layer");
  if (num_classes < 2) throw RejectedInput("model: num_classes must be >= 2");
  std::size_t width = input_dim();
  for (const Layer& layer : encoder) {
    check_layer_shape(layer, width, "model encoder");
    width = layer.output_dim();
  }
  for (const Layer& layer : predictor) {
    check_layer_shape(layer, width, "model predictor");
    width = layer.output_dim();
  }
  if (width != static_cast<std::size_t>(num_classes))
    throw RejectedInput("model: final layer emits " + std::to_string(width) +
                        " logits for " + std::to_string(num_classes) +
                        " classes");
}

MlpModel make_mlp(const MlpArchitecture& arch, Rng& rng) {
  if (arch.input_dim < 1) throw RejectedInput("make_mlp: input_dim must be >= 1");
  if (arch.num_classes < 2)
    throw RejectedInput("make_mlp: num_classes must be >= 2");
  for (int w : arch.encoder_widths)
    if (w < 1) throw RejectedInput("make_mlp: encoder width must be >= 1");
  for (int w : arch.predictor_hidden)
    if (w < 1) throw RejectedInput("make_mlp: predictor width must be >= 1");

  MlpModel model;
  model.num_classes = arch.num_classes;
  std::size_t width = static_cast<std::size_t>(arch.input_dim);
  for (int w : arch.encoder_widths) {
    model.encoder.push_back(
        make_layer(width, static_cast<std::size_t>(w), Activation::kRelu, rng));
    width = static_cast<std::size_t>(w);
  }
  for (int w : arch.predictor_hidden) {
    model.predictor.push_back(
        make_layer(width, static_cast<std::size_t>(w), Activation::kRelu, rng));
    width = static_cast<std::size_t>(w);
  }
  model.predictor.push_back(make_layer(
      width, static_cast<std::size_t>(arch.num_classes), Activation::kIdentity,
      rng));
  model.validate();
  return model;
}

static Matrix apply_layers(const std::vector<Layer>& layers, Matrix input,
                           int layer_offset) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const int index = layer_offset + static_cast<int>(l);
    if (input.cols() != layer.input_dim())
      throw RejectedInput("forward: batch width " +
                          std::to_string(input.cols()) +
                          " does not match layer input width " +
                          std::to_string(layer.input_dim()));
    Matrix out(input.rows(), layer.output_dim());
    for (std::size_t i = 0; i < input.rows(); ++i) {
      const double* x = input.row(i);
      for (std::size_t o = 0; o < layer.output_dim(); ++o) {
        const double* w = layer.weight.row(o);
        double acc = layer.bias[o];
        for (std::size_t j = 0; j < layer.input_dim(); ++j) acc += w[j] * x[j];
        if (layer.activation == Activation::kRelu && acc < 0.0) acc = 0.0;
        if (!std::isfinite(acc))
          throw NumericalFailure("forward: non-finite activation", index);
        out(i, o) = acc;
      }
    }
    input = std::move(out);
  }
  return input;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double* l = logits.row(i);
    double top = l[0];
    for (std::size_t k = 1; k < logits.cols(); ++k) top = std::max(top, l[k]);
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.cols(); ++k) {
      probs(i, k) = std::exp(l[k] - top);
      sum += probs(i, k);
    }
    for (std::size_t k = 0; k < logits.cols(); ++k) probs(i, k) /= sum;
  }
  return probs;
}

std::vector<int> argmax_rows(const Matrix& values) {
  std::vector<int> out(values.rows());
  for (std::size_t i = 0; i < values.rows(); ++i) {
    const double* v = values.row(i);
    int best = 0;
    for (std::size_t k = 1; k < values.cols(); ++k)
      if (v[k] > v[best]) best = static_cast<int>(k);
    out[i] = best;
  }
  return out;
}

Matrix encode(const MlpModel& model, const Matrix& batch) {
  model.validate();
  return apply_layers(model.encoder, batch, 0);
}

ForwardResult forward(const MlpModel& model, const Matrix& batch) {
  model.validate();
  ForwardResult result;
  result.representations = apply_layers(model.encoder, batch, 0);
  Matrix logits = apply_layers(model.predictor, result.representations,
                               static_cast<int>(model.encoder.size()));
  result.probabilities = softmax_rows(logits);
  return result;
}

}  // namespace selfcheck
