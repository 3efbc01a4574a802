#include "selfcheck/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "selfcheck/error.hpp"
#include "selfcheck/rng.hpp"

namespace selfcheck {

LabeledDataset gen_gaussian_mixture(int num_classes, int dim, int per_class,
                                    double separation, std::uint64_t seed) {
  if (num_classes < 2)
    throw RejectedInput("gen_gaussian_mixture: num_classes must be >= 2");
  if (dim < 2) throw RejectedInput("gen_gaussian_mixture: dim must be >= 2");
  if (per_class < 1)
    throw RejectedInput("gen_gaussian_mixture: per_class must be >= 1");
  if (!(separation >= 0.0) || !std::isfinite(separation))
    throw RejectedInput("gen_gaussian_mixture: separation must be >= 0");

  // Centers on a circle in the first two dimensions. Adjacent centers are the
  // closest pair, at chord length 2 r sin(pi/K); pick r so that equals the
  // requested separation.
  const double radius =
      separation / (2.0 * std::sin(std::numbers::pi / num_classes));

  Rng rng = derive_rng(seed, "gaussian-mixture");
  LabeledDataset data;
  data.num_classes = num_classes;
  data.features = Matrix(static_cast<std::size_t>(num_classes) * per_class,
                         static_cast<std::size_t>(dim));
  data.labels.reserve(data.features.rows());
  std::size_t row = 0;
  for (int k = 0; k < num_classes; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / num_classes;
    const double cx = radius * std::cos(angle);
    const double cy = radius * std::sin(angle);
    for (int i = 0; i < per_class; ++i, ++row) {
      data.features(row, 0) = cx + rng.normal();
      data.features(row, 1) = cy + rng.normal();
      for (int j = 2; j < dim; ++j)
        data.features(row, static_cast<std::size_t>(j)) = rng.normal();
      data.labels.push_back(k);
    }
  }
  return data;
}

LabeledDataset gen_two_moons(int per_class, double noise_sd,
                             std::uint64_t seed) {
  if (per_class < 1)
    throw RejectedInput("gen_two_moons: per_class must be >= 1");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    throw RejectedInput("gen_two_moons: noise_sd must be >= 0");

  Rng rng = derive_rng(seed, "two-moons");
  LabeledDataset data;
  data.num_classes = 2;
  data.features = Matrix(2 * static_cast<std::size_t>(per_class), 2);
  data.labels.reserve(data.features.rows());
  auto angle_at = [per_class](int i) {
    return per_class == 1
               ? 0.0
               : std::numbers::pi * i / static_cast<double>(per_class - 1);
  };
  std::size_t row = 0;
  for (int i = 0; i < per_class; ++i, ++row) {
    const double t = angle_at(i);
    data.features(row, 0) = std::cos(t) + noise_sd * rng.normal();
    data.features(row, 1) = std::sin(t) + noise_sd * rng.normal();
    data.labels.push_back(0);
  }
  for (int i = 0; i < per_class; ++i, ++row) {
    const double t = angle_at(i);
    data.features(row, 0) = 1.0 - std::cos(t) + noise_sd * rng.normal();
    data.features(row, 1) = 0.5 - std::sin(t) + noise_sd * rng.normal();
    data.labels.push_back(1);
  }
  return data;
}

LabeledDataset apply_shift(const LabeledDataset& data, const ShiftSpec& spec) {
  data.validate();
  if (!std::isfinite(spec.magnitude))
    throw RejectedInput("apply_shift: magnitude must be finite");
  const std::size_t n = data.size();
  const std::size_t d = data.dim();

  switch (spec.kind) {
    case ShiftKind::kMeanShift: {
      if (spec.magnitude == 0.0) return data;
      LabeledDataset out = data;
      const double delta = spec.magnitude / std::sqrt(static_cast<double>(d));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out.features(i, j) += delta;
      return out;
    }
    case ShiftKind::kRotation: {
      if (d < 2)
        throw RejectedInput("apply_shift: rotation needs at least 2 features");
      if (spec.magnitude == 0.0) return data;
      LabeledDataset out = data;
      const double c = std::cos(spec.magnitude);
      const double s = std::sin(spec.magnitude);
      for (std::size_t i = 0; i < n; ++i) {
        const double x = data.features(i, 0);
        const double y = data.features(i, 1);
        out.features(i, 0) = c * x - s * y;
        out.features(i, 1) = s * x + c * y;
      }
      return out;
    }
    case ShiftKind::kFeatureNoise: {
      if (spec.magnitude < 0.0)
        throw RejectedInput("apply_shift: noise sd must be >= 0");
      if (spec.magnitude == 0.0) return data;
      LabeledDataset out = data;
      Rng rng = derive_rng(spec.seed, "shift-feature-noise");
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
          out.features(i, j) += spec.magnitude * rng.normal();
      return out;
    }
    case ShiftKind::kLabelShift: {
      if (!data.labeled())
        throw RejectedInput("apply_shift: label shift needs labels");
      if (spec.magnitude < 0.0)
        throw RejectedInput("apply_shift: label-shift ratio must be >= 0");
      const int num_classes = data.num_classes;
      // Rows of each class, in original order.
      std::vector<std::vector<std::size_t>> members(
          static_cast<std::size_t>(num_classes));
      for (std::size_t i = 0; i < n; ++i)
        members[static_cast<std::size_t>(data.labels[i])].push_back(i);
      for (int k = 0; k < num_classes; ++k)
        if (members[static_cast<std::size_t>(k)].empty())
          throw RejectedInput("apply_shift: label shift with an absent class");

      // Target priors p_k proportional to magnitude^k (0^0 = 1); convert to
      // integer counts summing to n by largest-remainder rounding.
      std::vector<double> weights(static_cast<std::size_t>(num_classes));
      double total = 0.0;
      for (int k = 0; k < num_classes; ++k) {
        weights[static_cast<std::size_t>(k)] =
            std::pow(spec.magnitude, static_cast<double>(k));
        total += weights[static_cast<std::size_t>(k)];
      }
      if (!(total > 0.0))
        throw RejectedInput("apply_shift: label-shift priors sum to 0");
      std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes));
      std::vector<std::pair<double, int>> remainders;
      std::size_t assigned = 0;
      for (int k = 0; k < num_classes; ++k) {
        const double exact = static_cast<double>(n) *
                             weights[static_cast<std::size_t>(k)] / total;
        counts[static_cast<std::size_t>(k)] =
            static_cast<std::size_t>(std::floor(exact));
        assigned += counts[static_cast<std::size_t>(k)];
        remainders.push_back({exact - std::floor(exact), k});
      }
      std::sort(remainders.begin(), remainders.end(), [](auto a, auto b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      for (std::size_t i = 0; assigned < n; ++i, ++assigned)
        ++counts[static_cast<std::size_t>(remainders[i % remainders.size()].second)];

      Rng rng = derive_rng(spec.seed, "shift-label");
      LabeledDataset out;
      out.num_classes = num_classes;
      out.features = Matrix(n, d);
      out.labels.reserve(n);
      std::size_t row = 0;
      for (int k = 0; k < num_classes; ++k) {
        const auto& pool = members[static_cast<std::size_t>(k)];
        for (std::size_t c = 0; c < counts[static_cast<std::size_t>(k)];
             ++c, ++row) {
          const std::size_t pick =
              pool[static_cast<std::size_t>(rng.uniform_int(pool.size()))];
          for (std::size_t j = 0; j < d; ++j)
            out.features(row, j) = data.features(pick, j);
          out.labels.push_back(k);
        }
      }
      return out;
    }
  }
  throw RejectedInput("apply_shift: unknown shift kind");
}

ShiftKind shift_kind_from_string(const std::string& name) {
  if (name == "mean_shift") return ShiftKind::kMeanShift;
  if (name == "rotation") return ShiftKind::kRotation;
  if (name == "label_shift") return ShiftKind::kLabelShift;
  if (name == "feature_noise") return ShiftKind::kFeatureNoise;
  throw RejectedInput("unknown shift kind: " + name);
}

std::string to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::kMeanShift: return "mean_shift";
    case ShiftKind::kRotation: return "rotation";
    case ShiftKind::kLabelShift: return "label_shift";
    case ShiftKind::kFeatureNoise: return "feature_noise";
  }
  return "unknown";
}

}  // namespace selfcheck
