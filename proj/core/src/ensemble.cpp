#include "selfcheck/ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "selfcheck/error.hpp"

namespace selfcheck {

void Votes::validate() const {
  if (num_points() == 0 || num_classes() < 2)
    throw RejectedInput("votes: need at least one point and two classes");
  if (num_members < 0) throw RejectedInput("votes: negative member count");
  for (std::size_t j = 0; j < num_points(); ++j) {
    double sum = 0.0;
    for (std::size_t k = 0; k < num_classes(); ++k) {
      const double p = distribution(j, k);
      if (!(p >= 0.0) || !std::isfinite(p))
        throw RejectedInput("votes: vote shares must be finite and >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw RejectedInput("votes: row does not sum to 1");
  }
}

void EnsemblePredictions::validate() const {
  if (num_models < 1) throw RejectedInput("predictions: need >= 1 model");
  if (num_points < 1) throw RejectedInput("predictions: need >= 1 point");
  if (num_classes < 2) throw RejectedInput("predictions: need >= 2 classes");
  if (labels.size() != static_cast<std::size_t>(num_models) ||
      probabilities.size() != static_cast<std::size_t>(num_models))
    throw RejectedInput("predictions: member count mismatch");
  for (int i = 0; i < num_models; ++i) {
    const auto& member_labels = labels[static_cast<std::size_t>(i)];
    const Matrix& member_probs = probabilities[static_cast<std::size_t>(i)];
    if (member_labels.size() != static_cast<std::size_t>(num_points) ||
        member_probs.rows() != static_cast<std::size_t>(num_points) ||
        member_probs.cols() != static_cast<std::size_t>(num_classes))
      throw RejectedInput("predictions: shape mismatch");
    for (int label : member_labels)
      if (label < 0 || label >= num_classes)
        throw RejectedInput("predictions: label out of range");
  }
}

Votes EnsemblePredictions::votes() const {
  validate();
  Votes v;
  v.num_members = num_models;
  v.distribution = Matrix(static_cast<std::size_t>(num_points),
                          static_cast<std::size_t>(num_classes));
  for (const auto& member_labels : labels)
    for (int j = 0; j < num_points; ++j)
      v.distribution(static_cast<std::size_t>(j),
                     static_cast<std::size_t>(member_labels[j])) += 1.0;
  for (auto& share : v.distribution.data())
    share /= static_cast<double>(num_models);
  return v;
}

Matrix EnsemblePredictions::mean_probabilities() const {
  validate();
  Matrix mean(static_cast<std::size_t>(num_points),
              static_cast<std::size_t>(num_classes));
  for (const Matrix& member_probs : probabilities)
    for (std::size_t i = 0; i < mean.size(); ++i)
      mean.data()[i] += member_probs.data()[i];
  for (auto& value : mean.data()) value /= static_cast<double>(num_models);
  return mean;
}

EnsemblePredictions EnsemblePredictions::from_labels(
    const std::vector<std::vector<int>>& labels, int num_classes) {
  if (labels.empty() || labels.front().empty())
    throw RejectedInput("from_labels: empty label table");
  EnsemblePredictions predictions;
  predictions.num_models = static_cast<int>(labels.size());
  predictions.num_points = static_cast<int>(labels.front().size());
  predictions.num_classes = num_classes;
  predictions.labels = labels;
  predictions.probabilities.reserve(labels.size());
  for (const auto& member_labels : labels) {
    Matrix probs(static_cast<std::size_t>(predictions.num_points),
                 static_cast<std::size_t>(num_classes));
    for (std::size_t j = 0; j < member_labels.size(); ++j)
      probs(j, static_cast<std::size_t>(member_labels[j])) = 1.0;
    predictions.probabilities.push_back(std::move(probs));
  }
  predictions.validate();
  return predictions;
}

EnsemblePredictions predict_all(const std::vector<MlpModel>& members,
                                const Matrix& features) {
  if (members.empty()) throw RejectedInput("predict_all: no members");
  if (features.rows() == 0) throw RejectedInput("predict_all: no points");
  EnsemblePredictions predictions;
  predictions.num_models = static_cast<int>(members.size());
  predictions.num_points = static_cast<int>(features.rows());
  predictions.num_classes = members.front().num_classes;
  for (const MlpModel& member : members) {
    if (member.num_classes != predictions.num_classes)
      throw RejectedInput("predict_all: members disagree on class count");
    ForwardResult fwd = forward(member, features);
    predictions.labels.push_back(argmax_rows(fwd.probabilities));
    predictions.probabilities.push_back(std::move(fwd.probabilities));
  }
  predictions.validate();
  return predictions;
}

void save_predictions_csv(const EnsemblePredictions& predictions,
                          const std::string& path) {
  predictions.validate();
  std::ofstream out(path);
  if (!out) throw RejectedInput("predictions csv: cannot write '" + path + "'");
  out << "model,point,label";
  for (int k = 0; k < predictions.num_classes; ++k) out << ",p" << k;
  out << '\n';
  char buffer[64];
  for (int i = 0; i < predictions.num_models; ++i) {
    const auto& member_labels = predictions.labels[static_cast<std::size_t>(i)];
    const Matrix& probs = predictions.probabilities[static_cast<std::size_t>(i)];
    for (int j = 0; j < predictions.num_points; ++j) {
      out << i << ',' << j << ',' << member_labels[static_cast<std::size_t>(j)];
      for (int k = 0; k < predictions.num_classes; ++k) {
        std::snprintf(buffer, sizeof buffer, "%.17g",
                      probs(static_cast<std::size_t>(j),
                            static_cast<std::size_t>(k)));
        out << ',' << buffer;
      }
      out << '\n';
    }
  }
  if (!out) throw RejectedInput("predictions csv: write failed");
}

}  // namespace selfcheck
