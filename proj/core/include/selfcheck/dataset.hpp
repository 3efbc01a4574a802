#pragma once

#include <vector>

#include "selfcheck/error.hpp"
#include "selfcheck/matrix.hpp"

namespace selfcheck {

/// Feature matrix plus integer labels in [0, num_classes). `labels` may be
/// empty for unlabeled data (features-only loads); all other invariants are
/// checked by validate().
struct LabeledDataset {
  Matrix features;          // n x d
  std::vector<int> labels;  // size n, or empty when unlabeled
  int num_classes = 0;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  bool labeled() const { return !labels.empty(); }

  void validate() const {
    if (num_classes < 2) throw RejectedInput("dataset: num_classes must be >= 2");
    if (!labels.empty() && labels.size() != features.rows())
      throw RejectedInput("dataset: label count does not match row count");
    for (int label : labels)
      if (label < 0 || label >= num_classes)
        throw RejectedInput("dataset: label outside [0, num_classes)");
  }
};

/// Histogram of labels (size num_classes).
inline std::vector<std::size_t> class_counts(const LabeledDataset& data) {
  data.validate();
  if (!data.labeled())
    throw RejectedInput("class_counts: dataset is unlabeled");
  std::vector<std::size_t> counts(static_cast<std::size_t>(data.num_classes), 0);
  for (int label : data.labels) ++counts[static_cast<std::size_t>(label)];
  return counts;
}

}  // namespace selfcheck
