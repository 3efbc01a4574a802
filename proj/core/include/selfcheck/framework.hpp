#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "selfcheck/ensemble.hpp"

namespace selfcheck {

/// One pseudo-labeled point: `index` into the unlabeled test set, plus the
/// label the next ensemble is trained to prefer there. By construction the
/// pseudo label always differs from the classifier-under-test's prediction.
struct PseudoEntry {
  std::size_t index = 0;
  int label = 0;

  bool operator==(const PseudoEntry&) const = default;
};

/// The set R of suspected mistakes with their pseudo labels, sorted by index
/// with no duplicates. Rebuilt from scratch every iteration (it is replaced,
/// never accumulated).
struct PseudoLabelSet {
  std::vector<PseudoEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  std::vector<std::size_t> indices() const;

  /// Sorted-by-index, unique, labels in [0, K).
  void validate(std::size_t num_points, int num_classes) const;

  /// The above plus label != f_labels[index] for every entry.
  void validate(std::size_t num_points, int num_classes,
                const std::vector<int>& f_labels) const;

  bool operator==(const PseudoLabelSet&) const = default;
};

/// Anything that can produce an ensemble's vote distribution given the
/// current pseudo-label set: trainers that actually fit models, and synthetic
/// processes that fabricate distributions for theory experiments.
class EnsembleTrainer {
 public:
  virtual ~EnsembleTrainer() = default;

  /// Ensemble for iteration `iteration` (1-based), trained or synthesized
  /// against the given pseudo-label set.
  virtual Votes generate(const PseudoLabelSet& pseudo, int iteration) = 0;

  virtual std::size_t num_points() const = 0;
  virtual int num_classes() const = 0;
};

/// Per-point agreement with the classifier under test:
/// ar[j] = Pr over members of predicting f_labels[j] at point j.
std::vector<double> agreement_with_f(const Votes& votes,
                                     const std::vector<int>& f_labels);

/// Majority label per point (argmax vote share, ties to the lowest index).
std::vector<int> majority_labels(const Votes& votes);

/// Flags every point whose agreement with f is strictly below tau. The
/// pseudo label is the majority vote when that already disagrees with f;
/// otherwise it is drawn uniformly from the other K-1 labels on a stream
/// derived from (seed, iteration, point index), so per-point draws are stable
/// under any processing order.
PseudoLabelSet construct_R_threshold(const Votes& votes,
                                     const std::vector<int>& f_labels,
                                     double tau, std::uint64_t seed,
                                     int iteration);

/// Flags every point whose majority vote disagrees with f; that majority
/// label is the pseudo label. No randomness involved.
PseudoLabelSet construct_R_majority(const Votes& votes,
                                    const std::vector<int>& f_labels);

/// How each iteration turns votes into the next pseudo-label set.
struct FrameworkConfig {
  enum class Mode { kMajority, kThreshold };

  int iterations = 5;           // T
  Mode mode = Mode::kMajority;
  double tau = 0.5;             // threshold mode only; must lie in (0, 1)
  std::uint64_t seed = 0;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;            // 1-based
  std::size_t r_size = 0;       // |R| built this iteration
  double mean_agreement = 0.0;  // mean over points of agreement with f
  PseudoLabelSet pseudo;        // the set built this iteration
};

struct RunResult {
  double estimated_accuracy = 0.0;  // 1 - |final R| / |U|, in that exact form
  std::size_t num_points = 0;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> iterations;

  const PseudoLabelSet& final_set() const { return iterations.back().pseudo; }

  /// Indices flagged as suspected mistakes by the final iteration.
  std::vector<std::size_t> flagged_indices() const;

  /// JSON text of the run: estimate, per-iteration sizes and flagged
  /// indices, seed. Contains nothing derived from true test labels.
  std::string to_json() const;
};

/// Called once per iteration with the ensemble's votes, the pseudo-label set
/// it was trained against (empty on iteration 1), and the set built from it.
/// This is the hook evaluation harnesses use to measure conditions without
/// the loop itself ever touching true labels.
using IterationObserver = std::function<void(
    int iteration, const Votes& votes, const PseudoLabelSet& trained_on,
    const PseudoLabelSet& built)>;

/// The iterative self-training loop: for t = 1..T, ask the trainer for an
/// ensemble given the current pseudo-label set, rebuild the set from the
/// ensemble's votes, repeat. The estimate is the unflagged fraction at the
/// end; flagged indices are the suspected mistakes.
RunResult run_self_training(EnsembleTrainer& trainer,
                            const std::vector<int>& f_labels,
                            const FrameworkConfig& config,
                            const IterationObserver& observer = {});

}  // namespace selfcheck
