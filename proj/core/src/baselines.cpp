#include "selfcheck/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "selfcheck/error.hpp"

namespace selfcheck {
namespace {

constexpr double kTrustCap = 1e12;

double row_max(const Matrix& m, std::size_t row) {
  double best = m(row, 0);
  for (std::size_t c = 1; c < m.cols(); ++c) best = std::max(best, m(row, c));
  return best;
}

}  // namespace

std::vector<double> max_probabilities(const Matrix& probabilities) {
  if (probabilities.rows() == 0 || probabilities.cols() == 0) {
    throw RejectedInput("probability matrix must be non-empty");
  }
  std::vector<double> out(probabilities.rows());
  for (std::size_t j = 0; j < probabilities.rows(); ++j) {
    out[j] = row_max(probabilities, j);
  }
  return out;
}

double average_confidence(const Matrix& probabilities) {
  const std::vector<double> conf = max_probabilities(probabilities);
  double sum = 0.0;
  for (double c : conf) sum += c;
  return sum / conf.size();
}

double ensemble_average_confidence(const EnsemblePredictions& predictions) {
  predictions.validate();
  return average_confidence(predictions.mean_probabilities());
}

double calibrate_threshold(std::vector<double> scores, double rate) {
  if (scores.empty()) {
    throw RejectedInput("cannot calibrate a threshold on zero scores");
  }
  if (!(rate >= 0.0) || rate > 1.0) {
    throw RejectedInput("rate must lie in [0, 1]");
  }
  std::sort(scores.begin(), scores.end());
  const std::size_t n = scores.size();
  const auto k = static_cast<std::size_t>(std::ceil(rate * n));
  if (k == 0) return scores.front();
  const double kth = scores[k - 1];
  const auto above = std::upper_bound(scores.begin(), scores.end(), kth);
  if (above == scores.end()) return scores.back() + 1.0;
  return *above;
}

std::vector<std::size_t> msp_detect(const Matrix& probabilities,
                                    double threshold) {
  const std::vector<double> conf = max_probabilities(probabilities);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < conf.size(); ++j) {
    if (conf[j] < threshold) out.push_back(j);
  }
  return out;
}

namespace {

double squared_distance(const Matrix& a, std::size_t i, const Matrix& b,
                        std::size_t j) {
  double sum = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    const double d = a(i, c) - b(j, c);
    sum += d * d;
  }
  return sum;
}

/// k-th smallest (1-based) of the squared distances from test point `j` to
/// every training point in `rows`; k is clamped to the class size.
double kth_neighbour_distance(const Matrix& train, const std::vector<std::size_t>& rows,
                              const Matrix& test, std::size_t j, int k) {
  std::vector<double> dists;
  dists.reserve(rows.size());
  for (std::size_t i : rows) {
    dists.push_back(squared_distance(test, j, train, i));
  }
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(k), dists.size()) - 1;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(idx),
                   dists.end());
  return std::sqrt(dists[idx]);
}

}  // namespace

std::vector<double> trust_scores(const Matrix& train_features,
                                 const std::vector<int>& train_labels,
                                 const Matrix& test_features,
                                 const std::vector<int>& predicted_labels,
                                 int num_classes, int k) {
  if (train_features.rows() != train_labels.size()) {
    throw RejectedInput("training features and labels differ in length");
  }
  if (test_features.rows() != predicted_labels.size()) {
    throw RejectedInput("test features and predicted labels differ in length");
  }
  if (train_features.cols() != test_features.cols()) {
    throw RejectedInput("training and test features differ in dimension");
  }
  if (num_classes < 2) {
    throw RejectedInput("trust scores need at least two classes");
  }
  if (k < 1) {
    throw RejectedInput("neighbour count k must be positive");
  }

  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < train_labels.size(); ++i) {
    const int label = train_labels[i];
    if (label < 0 || label >= num_classes) {
      throw RejectedInput("training label out of range");
    }
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }

  std::vector<double> out(test_features.rows());
  for (std::size_t j = 0; j < test_features.rows(); ++j) {
    const int pred = predicted_labels[j];
    if (pred < 0 || pred >= num_classes) {
      throw RejectedInput("predicted label out of range");
    }
    const auto& own_rows = by_class[static_cast<std::size_t>(pred)];
    if (own_rows.empty()) {
      throw RejectedInput(
          "no training points carry one of the predicted labels");
    }
    const double d_own =
        kth_neighbour_distance(train_features, own_rows, test_features, j, k);

    double d_other = std::numeric_limits<double>::infinity();
    bool seen_other = false;
    for (int c = 0; c < num_classes; ++c) {
      if (c == pred) continue;
      const auto& rows = by_class[static_cast<std::size_t>(c)];
      if (rows.empty()) continue;
      seen_other = true;
      d_other = std::min(d_other, kth_neighbour_distance(
                                      train_features, rows, test_features, j, k));
    }
    if (!seen_other) {
      throw RejectedInput(
          "trust scores need training points from at least one other class");
    }

    if (d_own == 0.0) {
      out[j] = d_other == 0.0 ? 1.0 : kTrustCap;
    } else {
      out[j] = std::min(d_other / d_own, kTrustCap);
    }
  }
  return out;
}

}  // namespace selfcheck
