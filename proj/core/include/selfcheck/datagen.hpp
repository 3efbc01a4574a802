#pragma once

#include <cstdint>
#include <string>

#include "selfcheck/dataset.hpp"

namespace selfcheck {

/// K unit-variance Gaussian clusters, one per class, `per_class` points each
/// (class-major row order). Cluster centers sit on a circle in the first two
/// feature dimensions, sized so every pair of centers is at least
/// `separation` apart. Requires num_classes >= 2, dim >= 2, per_class >= 1,
/// separation >= 0.
LabeledDataset gen_gaussian_mixture(int num_classes, int dim, int per_class,
                                    double separation, std::uint64_t seed);

/// The classic two interleaved half-circles in 2-D with Gaussian coordinate
/// noise. Class 0 is the upper unit half-circle; with noise_sd = 0 its points
/// lie on that arc exactly. `per_class` points per class, class-major order.
LabeledDataset gen_two_moons(int per_class, double noise_sd,
                             std::uint64_t seed);

enum class ShiftKind { kMeanShift, kRotation, kLabelShift, kFeatureNoise };

/// A distribution shift applied to a dataset to fabricate a test domain:
///  - kMeanShift:    adds magnitude * (1,...,1)/sqrt(d) to every row;
///  - kRotation:     rotates the first two feature dimensions by `magnitude`
///                   radians (requires d >= 2);
///  - kLabelShift:   resamples rows (with replacement, per class) to class
///                   priors proportional to magnitude^k for class k;
///  - kFeatureNoise: adds i.i.d. Gaussian noise with sd `magnitude`.
/// Except for kLabelShift, rows keep their labels and order, and
/// magnitude = 0 returns the input unchanged.
struct ShiftSpec {
  ShiftKind kind = ShiftKind::kMeanShift;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

LabeledDataset apply_shift(const LabeledDataset& data, const ShiftSpec& spec);

ShiftKind shift_kind_from_string(const std::string& name);
std::string to_string(ShiftKind kind);

}  // namespace selfcheck
