#include "selfcheck/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "selfcheck/error.hpp"
#include "selfcheck/mmd.hpp"
#include "selfcheck/rng.hpp"

namespace selfcheck {

namespace {

// acts[0] = batch input, acts[l+1] = output of layers[l]. ReLU derivative is
// recovered from the stored outputs (output > 0 <=> derivative 1).
std::vector<Matrix> forward_stack(const std::vector<Layer>& layers,
                                  const Matrix& input, int layer_offset) {
  std::vector<Matrix> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(input);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const Matrix& in = acts.back();
    const int index = layer_offset + static_cast<int>(l);
    if (in.cols() != layer.input_dim())
      throw RejectedInput("backprop: batch width " + std::to_string(in.cols()) +
                          " does not match layer input width " +
                          std::to_string(layer.input_dim()));
    Matrix out(in.rows(), layer.output_dim());
    for (std::size_t i = 0; i < in.rows(); ++i) {
      const double* x = in.row(i);
      for (std::size_t o = 0; o < layer.output_dim(); ++o) {
        const double* w = layer.weight.row(o);
        double acc = layer.bias[o];
        for (std::size_t j = 0; j < layer.input_dim(); ++j) acc += w[j] * x[j];
        if (layer.activation == Activation::kRelu && acc < 0.0) acc = 0.0;
        if (!std::isfinite(acc))
          throw NumericalFailure("backprop: non-finite activation", index);
        out(i, o) = acc;
      }
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

// Propagates grad_out (w.r.t. acts.back()) down the stack, accumulating
// weight/bias gradients, and returns the gradient w.r.t. acts[0].
Matrix backward_stack(const std::vector<Layer>& layers,
                      const std::vector<Matrix>& acts, Matrix grad_out,
                      std::vector<Layer>& grads) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = layers[l];
    const Matrix& in = acts[l];
    const Matrix& out = acts[l + 1];
    if (layer.activation == Activation::kRelu) {
      for (std::size_t i = 0; i < grad_out.rows(); ++i)
        for (std::size_t o = 0; o < grad_out.cols(); ++o)
          if (!(out(i, o) > 0.0)) grad_out(i, o) = 0.0;
    }
    Layer& g = grads[l];
    for (std::size_t i = 0; i < in.rows(); ++i) {
      const double* gout = grad_out.row(i);
      const double* x = in.row(i);
      for (std::size_t o = 0; o < layer.output_dim(); ++o) {
        g.bias[o] += gout[o];
        double* gw = g.weight.row(o);
        for (std::size_t j = 0; j < layer.input_dim(); ++j)
          gw[j] += gout[o] * x[j];
      }
    }
    Matrix grad_in(in.rows(), layer.input_dim());
    for (std::size_t i = 0; i < in.rows(); ++i) {
      const double* gout = grad_out.row(i);
      double* gin = grad_in.row(i);
      for (std::size_t o = 0; o < layer.output_dim(); ++o) {
        const double* w = layer.weight.row(o);
        for (std::size_t j = 0; j < layer.input_dim(); ++j)
          gin[j] += gout[o] * w[j];
      }
    }
    grad_out = std::move(grad_in);
  }
  return grad_out;
}

void check_labels(const Matrix& features, const std::vector<int>& labels,
                  int num_classes, const char* what) {
  if (labels.size() != features.rows())
    throw RejectedInput(std::string(what) + ": label count mismatch");
  for (int label : labels)
    if (label < 0 || label >= num_classes)
      throw RejectedInput(std::string(what) + ": label outside [0, K)");
}

// Cross-entropy of one softmax row against a label.
double ce_row(const double* probs, int label) { return -std::log(probs[label]); }

// Gradient of MMD^2 w.r.t. the rows of A and B (V-statistic, Gaussian
// kernel). Both outputs are allocated by the caller and accumulated into
// with the multiplier `scale`.
void mmd2_gradients(const Matrix& a, const Matrix& b, double bandwidth,
                    double scale, Matrix& grad_a, Matrix& grad_b) {
  const double inv_bw2 = 1.0 / (bandwidth * bandwidth);
  const double inv = 0.5 * inv_bw2;  // exponent multiplier
  const double na = static_cast<double>(a.rows());
  const double nb = static_cast<double>(b.rows());
  const std::size_t d = a.cols();
  std::vector<double> diff(d);

  auto accumulate = [&](const Matrix& u, std::size_t i, const Matrix& v,
                        std::size_t j, double factor, Matrix& grad_u) {
    const double* ui = u.row(i);
    const double* vj = v.row(j);
    double d2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      diff[c] = vj[c] - ui[c];
      d2 += diff[c] * diff[c];
    }
    const double w = factor * std::exp(-d2 * inv) * inv_bw2;
    double* g = grad_u.row(i);
    for (std::size_t c = 0; c < d; ++c) g[c] += w * diff[c];
  };

  // d/dA_i of (1/na^2) sum k(A_i, A_j): the symmetric kernel doubles it.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.rows(); ++j)
      accumulate(a, i, a, j, scale * 2.0 / (na * na), grad_a);
    for (std::size_t j = 0; j < b.rows(); ++j)
      accumulate(a, i, b, j, -scale * 2.0 / (na * nb), grad_a);
  }
  for (std::size_t j = 0; j < b.rows(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i)
      accumulate(b, j, b, i, scale * 2.0 / (nb * nb), grad_b);
    for (std::size_t i = 0; i < a.rows(); ++i)
      accumulate(b, j, a, i, -scale * 2.0 / (na * nb), grad_b);
  }
}

void check_batches(const MlpModel& model, const Matrix& source_features,
                   const std::vector<int>& source_labels,
                   const Matrix& pseudo_features,
                   const std::vector<int>& pseudo_labels, double pseudo_weight,
                   const std::optional<MmdTerm>& mmd) {
  model.validate();
  check_labels(source_features, source_labels, model.num_classes, "source");
  check_labels(pseudo_features, pseudo_labels, model.num_classes, "pseudo");
  if (!std::isfinite(pseudo_weight) || pseudo_weight < 0.0)
    throw RejectedInput("pseudo_weight must be finite and >= 0");
  if (mmd) {
    if (!(mmd->bandwidth > 0.0))
      throw RejectedInput("mmd term: bandwidth must be > 0 here");
    if (!std::isfinite(mmd->weight) || mmd->weight < 0.0)
      throw RejectedInput("mmd term: weight must be finite and >= 0");
    if (mmd->target_features.rows() == 0)
      throw RejectedInput("mmd term: target batch is empty");
    if (source_features.rows() == 0)
      throw RejectedInput("mmd term: source batch is empty");
  }
}

// Shared CE+MMD reverse pass; returns the objective value and accumulates
// gradients. This is the one definition of the training objective's
// derivative; backprop() and sgd_fit() both call it.
double backprop_into(const MlpModel& model, const Matrix& source_features,
                     const std::vector<int>& source_labels,
                     const Matrix& pseudo_features,
                     const std::vector<int>& pseudo_labels,
                     double pseudo_weight, const std::optional<MmdTerm>& mmd,
                     MlpGradients& grads) {
  const int enc_count = static_cast<int>(model.encoder.size());
  double objective = 0.0;

  // Representation-level gradients to be pushed through the encoder last.
  Matrix grad_repr_source;
  std::vector<Matrix> enc_acts_source;

  auto ce_branch = [&](const Matrix& features, const std::vector<int>& labels,
                       double weight, Matrix* grad_repr_out,
                       std::vector<Matrix>* enc_acts_out) {
    std::vector<Matrix> enc_acts = forward_stack(model.encoder, features, 0);
    std::vector<Matrix> pred_acts =
        forward_stack(model.predictor, enc_acts.back(), enc_count);
    Matrix probs = softmax_rows(pred_acts.back());
    const double inv_n = 1.0 / static_cast<double>(features.rows());
    double loss = 0.0;
    Matrix grad_logits(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      loss += ce_row(probs.row(i), labels[i]);
      for (std::size_t k = 0; k < probs.cols(); ++k)
        grad_logits(i, k) = weight * inv_n * probs(i, k);
      grad_logits(i, static_cast<std::size_t>(labels[i])) -= weight * inv_n;
    }
    objective += weight * inv_n * loss;
    Matrix grad_repr = backward_stack(model.predictor, pred_acts,
                                      std::move(grad_logits), grads.predictor);
    if (grad_repr_out) {
      *grad_repr_out = std::move(grad_repr);
      *enc_acts_out = std::move(enc_acts);
    } else {
      backward_stack(model.encoder, enc_acts, std::move(grad_repr),
                     grads.encoder);
    }
  };

  if (source_features.rows() > 0)
    ce_branch(source_features, source_labels, 1.0, &grad_repr_source,
              &enc_acts_source);
  if (pseudo_features.rows() > 0 && pseudo_weight > 0.0)
    ce_branch(pseudo_features, pseudo_labels, pseudo_weight, nullptr, nullptr);

  if (mmd && mmd->weight > 0.0) {
    if (enc_acts_source.empty())
      enc_acts_source = forward_stack(model.encoder, source_features, 0);
    std::vector<Matrix> enc_acts_target =
        forward_stack(model.encoder, mmd->target_features, 0);
    const Matrix& repr_s = enc_acts_source.back();
    const Matrix& repr_t = enc_acts_target.back();
    objective += mmd->weight * mmd2(repr_s, repr_t, mmd->bandwidth);
    if (grad_repr_source.empty())
      grad_repr_source = Matrix(repr_s.rows(), repr_s.cols());
    Matrix grad_repr_target(repr_t.rows(), repr_t.cols());
    mmd2_gradients(repr_s, repr_t, mmd->bandwidth, mmd->weight,
                   grad_repr_source, grad_repr_target);
    backward_stack(model.encoder, enc_acts_target, std::move(grad_repr_target),
                   grads.encoder);
  }

  if (!enc_acts_source.empty())
    backward_stack(model.encoder, enc_acts_source, std::move(grad_repr_source),
                   grads.encoder);
  return objective;
}

}  // namespace

void TrainConfig::validate() const {
  if (!std::isfinite(learning_rate) || learning_rate < 0.0)
    throw RejectedInput("train config: learning_rate must be finite and >= 0");
  if (!std::isfinite(momentum) || momentum < 0.0 || momentum >= 1.0)
    throw RejectedInput("train config: momentum must lie in [0, 1)");
  if (epochs < 1) throw RejectedInput("train config: epochs must be >= 1");
  if (batch_size < 1)
    throw RejectedInput("train config: batch_size must be >= 1");
}

double weighted_ce_loss(const Matrix& source_probs,
                        const std::vector<int>& source_labels,
                        const Matrix& pseudo_probs,
                        const std::vector<int>& pseudo_labels,
                        double pseudo_weight) {
  if (source_labels.size() != source_probs.rows() ||
      pseudo_labels.size() != pseudo_probs.rows())
    throw RejectedInput("weighted_ce_loss: label count mismatch");
  double loss = 0.0;
  if (source_probs.rows() > 0) {
    double s = 0.0;
    for (std::size_t i = 0; i < source_probs.rows(); ++i)
      s += ce_row(source_probs.row(i), source_labels[i]);
    loss += s / static_cast<double>(source_probs.rows());
  }
  if (pseudo_probs.rows() > 0) {
    double s = 0.0;
    for (std::size_t i = 0; i < pseudo_probs.rows(); ++i)
      s += ce_row(pseudo_probs.row(i), pseudo_labels[i]);
    loss += pseudo_weight * s / static_cast<double>(pseudo_probs.rows());
  }
  return loss;
}

double objective_value(const MlpModel& model, const Matrix& source_features,
                       const std::vector<int>& source_labels,
                       const Matrix& pseudo_features,
                       const std::vector<int>& pseudo_labels,
                       double pseudo_weight,
                       const std::optional<MmdTerm>& mmd) {
  check_batches(model, source_features, source_labels, pseudo_features,
                pseudo_labels, pseudo_weight, mmd);
  double objective = 0.0;
  Matrix repr_source;
  if (source_features.rows() > 0) {
    ForwardResult fwd = forward(model, source_features);
    double s = 0.0;
    for (std::size_t i = 0; i < fwd.probabilities.rows(); ++i)
      s += ce_row(fwd.probabilities.row(i), source_labels[i]);
    objective += s / static_cast<double>(source_features.rows());
    repr_source = std::move(fwd.representations);
  }
  if (pseudo_features.rows() > 0) {
    ForwardResult fwd = forward(model, pseudo_features);
    double s = 0.0;
    for (std::size_t i = 0; i < fwd.probabilities.rows(); ++i)
      s += ce_row(fwd.probabilities.row(i), pseudo_labels[i]);
    objective +=
        pseudo_weight * s / static_cast<double>(pseudo_features.rows());
  }
  if (mmd && mmd->weight > 0.0) {
    Matrix repr_target = encode(model, mmd->target_features);
    objective +=
        mmd->weight * mmd2(repr_source, repr_target, mmd->bandwidth);
  }
  return objective;
}

MlpGradients MlpGradients::zeros_like(const MlpModel& model) {
  MlpGradients grads;
  auto zero_layers = [](const std::vector<Layer>& layers) {
    std::vector<Layer> out;
    out.reserve(layers.size());
    for (const Layer& layer : layers) {
      Layer g;
      g.weight = Matrix(layer.weight.rows(), layer.weight.cols());
      g.bias.assign(layer.bias.size(), 0.0);
      g.activation = layer.activation;
      out.push_back(std::move(g));
    }
    return out;
  };
  grads.encoder = zero_layers(model.encoder);
  grads.predictor = zero_layers(model.predictor);
  return grads;
}

double MlpGradients::max_abs() const {
  double m = 0.0;
  auto scan = [&m](const std::vector<Layer>& layers) {
    for (const Layer& layer : layers) {
      for (double v : layer.weight.data()) m = std::max(m, std::abs(v));
      for (double v : layer.bias) m = std::max(m, std::abs(v));
    }
  };
  scan(encoder);
  scan(predictor);
  return m;
}

MlpGradients backprop(const MlpModel& model, const Matrix& source_features,
                      const std::vector<int>& source_labels,
                      const Matrix& pseudo_features,
                      const std::vector<int>& pseudo_labels,
                      double pseudo_weight,
                      const std::optional<MmdTerm>& mmd) {
  check_batches(model, source_features, source_labels, pseudo_features,
                pseudo_labels, pseudo_weight, mmd);
  MlpGradients grads = MlpGradients::zeros_like(model);
  backprop_into(model, source_features, source_labels, pseudo_features,
                pseudo_labels, pseudo_weight, mmd, grads);
  return grads;
}

MlpGradients finite_difference_gradients(
    const MlpModel& model, const Matrix& source_features,
    const std::vector<int>& source_labels, const Matrix& pseudo_features,
    const std::vector<int>& pseudo_labels, double pseudo_weight,
    const std::optional<MmdTerm>& mmd, double step) {
  check_batches(model, source_features, source_labels, pseudo_features,
                pseudo_labels, pseudo_weight, mmd);
  if (!(step > 0.0))
    throw RejectedInput("finite_difference_gradients: step must be > 0");
  MlpModel probe = model;
  MlpGradients grads = MlpGradients::zeros_like(model);

  auto objective = [&]() {
    return objective_value(probe, source_features, source_labels,
                           pseudo_features, pseudo_labels, pseudo_weight, mmd);
  };
  auto probe_value = [&](double& param, double& grad_out) {
    const double saved = param;
    param = saved + step;
    const double up = objective();
    param = saved - step;
    const double down = objective();
    param = saved;
    grad_out = (up - down) / (2.0 * step);
  };
  auto walk = [&](std::vector<Layer>& layers, std::vector<Layer>& grad_layers) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t i = 0; i < layers[l].weight.size(); ++i)
        probe_value(layers[l].weight.data()[i], grad_layers[l].weight.data()[i]);
      for (std::size_t i = 0; i < layers[l].bias.size(); ++i)
        probe_value(layers[l].bias[i], grad_layers[l].bias[i]);
    }
  };
  walk(probe.encoder, grads.encoder);
  walk(probe.predictor, grads.predictor);
  return grads;
}

double max_relative_gradient_error(const MlpGradients& a,
                                   const MlpGradients& b) {
  double worst = 0.0;
  auto compare = [&worst](const std::vector<Layer>& la,
                          const std::vector<Layer>& lb) {
    if (la.size() != lb.size())
      throw RejectedInput("gradient comparison: layer count mismatch");
    for (std::size_t l = 0; l < la.size(); ++l) {
      if (la[l].weight.size() != lb[l].weight.size() ||
          la[l].bias.size() != lb[l].bias.size())
        throw RejectedInput("gradient comparison: shape mismatch");
      auto rel = [](double x, double y) {
        return std::abs(x - y) /
               std::max({std::abs(x), std::abs(y), 1e-8});
      };
      for (std::size_t i = 0; i < la[l].weight.size(); ++i)
        worst = std::max(worst,
                         rel(la[l].weight.data()[i], lb[l].weight.data()[i]));
      for (std::size_t i = 0; i < la[l].bias.size(); ++i)
        worst = std::max(worst, rel(la[l].bias[i], lb[l].bias[i]));
    }
  };
  compare(a.encoder, b.encoder);
  compare(a.predictor, b.predictor);
  return worst;
}

double grad_check(const MlpModel& model, const Matrix& source_features,
                  const std::vector<int>& source_labels,
                  const Matrix& pseudo_features,
                  const std::vector<int>& pseudo_labels, double pseudo_weight,
                  const std::optional<MmdTerm>& mmd, double step) {
  if (!(step > 1e-8 && step < 1e-2))
    throw RejectedInput("grad_check: step must lie in (1e-8, 1e-2)");
  const MlpGradients analytic =
      backprop(model, source_features, source_labels, pseudo_features,
               pseudo_labels, pseudo_weight, mmd);
  const MlpGradients numeric = finite_difference_gradients(
      model, source_features, source_labels, pseudo_features, pseudo_labels,
      pseudo_weight, mmd, step);
  return max_relative_gradient_error(analytic, numeric);
}

MlpModel sgd_fit(MlpModel model, const LabeledDataset& source,
                 const LabeledDataset& pseudo, double pseudo_weight,
                 const std::optional<MmdTerm>& mmd, const TrainConfig& config) {
  config.validate();
  model.validate();
  source.validate();
  if (!source.labeled() || source.size() == 0)
    throw RejectedInput("sgd_fit: source set must be labeled and non-empty");
  if (source.dim() != model.input_dim())
    throw RejectedInput("sgd_fit: source width does not match model input");
  if (pseudo.size() > 0) {
    pseudo.validate();
    if (!pseudo.labeled())
      throw RejectedInput("sgd_fit: pseudo set must carry labels");
    if (pseudo.dim() != model.input_dim())
      throw RejectedInput("sgd_fit: pseudo width does not match model input");
  }
  if (mmd && mmd->target_features.rows() == 0)
    throw RejectedInput("sgd_fit: mmd target is empty");
  if (mmd && mmd->target_features.cols() != model.input_dim())
    throw RejectedInput("sgd_fit: mmd target width does not match model input");

  if (config.learning_rate == 0.0) return model;  // documented exact no-op

  const std::size_t n_source = source.size();
  const std::size_t n_total = n_source + pseudo.size();
  MlpGradients velocity = MlpGradients::zeros_like(model);

  std::vector<std::size_t> order(n_total);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng = derive_rng(config.seed, "sgd-shuffle",
                                 static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double bandwidth = 0.0;
    std::vector<std::size_t> target_order;
    std::size_t target_pos = 0;
    if (mmd) {
      bandwidth = mmd->bandwidth > 0.0
                      ? mmd->bandwidth
                      : median_heuristic_bandwidth(
                            encode(model, source.features),
                            encode(model, mmd->target_features));
      target_order.resize(mmd->target_features.rows());
      std::iota(target_order.begin(), target_order.end(), 0);
      Rng target_rng = derive_rng(config.seed, "sgd-target",
                                  static_cast<std::uint64_t>(epoch));
      target_rng.shuffle(target_order);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_total;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(
          n_total, start + static_cast<std::size_t>(config.batch_size));
      std::vector<std::size_t> src_rows, pseudo_rows;
      for (std::size_t i = start; i < stop; ++i) {
        if (order[i] < n_source)
          src_rows.push_back(order[i]);
        else
          pseudo_rows.push_back(order[i] - n_source);
      }
      Matrix src_batch = take_rows(source.features, src_rows);
      std::vector<int> src_labels(src_rows.size());
      for (std::size_t i = 0; i < src_rows.size(); ++i)
        src_labels[i] = source.labels[src_rows[i]];
      Matrix pseudo_batch = take_rows(pseudo.features, pseudo_rows);
      std::vector<int> pseudo_labels(pseudo_rows.size());
      for (std::size_t i = 0; i < pseudo_rows.size(); ++i)
        pseudo_labels[i] = pseudo.labels[pseudo_rows[i]];

      std::optional<MmdTerm> step_mmd;
      if (mmd && mmd->weight > 0.0 && !src_rows.empty()) {
        std::vector<std::size_t> slice(src_rows.size());
        for (std::size_t i = 0; i < slice.size(); ++i) {
          slice[i] = target_order[target_pos];
          target_pos = (target_pos + 1) % target_order.size();
        }
        step_mmd = MmdTerm{take_rows(mmd->target_features, slice), mmd->weight,
                           bandwidth};
      }

      MlpGradients grads = MlpGradients::zeros_like(model);
      epoch_loss +=
          backprop_into(model, src_batch, src_labels, pseudo_batch,
                        pseudo_labels, pseudo_weight, step_mmd, grads);

      auto update = [&](std::vector<Layer>& params, std::vector<Layer>& vel,
                        const std::vector<Layer>& g) {
        for (std::size_t l = 0; l < params.size(); ++l) {
          for (std::size_t i = 0; i < params[l].weight.size(); ++i) {
            double& v = vel[l].weight.data()[i];
            v = config.momentum * v -
                config.learning_rate * g[l].weight.data()[i];
            params[l].weight.data()[i] += v;
          }
          for (std::size_t i = 0; i < params[l].bias.size(); ++i) {
            double& v = vel[l].bias[i];
            v = config.momentum * v - config.learning_rate * g[l].bias[i];
            params[l].bias[i] += v;
          }
        }
      };
      update(model.encoder, velocity.encoder, grads.encoder);
      update(model.predictor, velocity.predictor, grads.predictor);
    }
    if (!std::isfinite(epoch_loss))
      throw NumericalFailure("sgd_fit: loss diverged at epoch " +
                             std::to_string(epoch));
  }
  return model;
}

MlpModel sgd_fit(MlpModel model, const LabeledDataset& source,
                 const TrainConfig& config) {
  LabeledDataset empty_pseudo;
  empty_pseudo.num_classes = source.num_classes;
  empty_pseudo.features = Matrix(0, source.dim());
  return sgd_fit(std::move(model), source, empty_pseudo, 0.0, std::nullopt,
                 config);
}

double accuracy(const MlpModel& model, const LabeledDataset& data) {
  data.validate();
  if (!data.labeled()) throw RejectedInput("accuracy: dataset is unlabeled");
  if (data.size() == 0) throw RejectedInput("accuracy: dataset is empty");
  const ForwardResult fwd = forward(model, data.features);
  const std::vector<int> predicted = argmax_rows(fwd.probabilities);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == data.labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace selfcheck
