#pragma once

#include <string>

#include "selfcheck/dataset.hpp"

namespace selfcheck {

/// Writes `data` as CSV with header f0,...,f{d-1},label. Features are printed
/// with 17 significant digits, so a save/load round trip reproduces every
/// value exactly. Unlabeled datasets are written without the label column.
void save_csv(const LabeledDataset& data, const std::string& path);

/// Reads a CSV written by save_csv (or shaped like it). Malformed headers or
/// cells raise ParseError carrying the 1-based line number. When
/// `expected_classes` > 0 it becomes the dataset's num_classes and any label
/// outside [0, expected_classes) is a RejectedInput error; when 0, the class
/// count is inferred as max label + 1 (at least 2).
LabeledDataset load_csv(const std::string& path, int expected_classes = 0);

/// Reads only the feature columns of a CSV; the label column, if present, is
/// never parsed. This is the loader for unlabeled test sets in production
/// mode, where true labels must stay out of reach by construction.
/// num_classes on the result is `num_classes_hint` (the class count still has
/// to come from somewhere, typically the training set).
LabeledDataset load_csv_features(const std::string& path,
                                 int num_classes_hint);

}  // namespace selfcheck
