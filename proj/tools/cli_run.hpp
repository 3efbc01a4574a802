#pragma once

// Execution layer of the selfcheck command-line driver: turns a validated
// configuration into datasets, a trained classifier, and a method result.
//
// Label isolation: in production mode (evaluation_mode = false) the test
// labels are unreachable by construction. CSV test sets are loaded with the
// features-only reader (the label column is never parsed); generated test
// sets have their labels moved out of the dataset object before any method
// code runs, and the labels are dropped rather than stored. Evaluation-only
// quantities therefore cannot leak into production reports.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cli_config.hpp"
#include "selfcheck/dataset.hpp"
#include "selfcheck/framework.hpp"
#include "selfcheck/matrix.hpp"
#include "selfcheck/metrics.hpp"
#include "selfcheck/mlp.hpp"

namespace selfcheck::cli {

/// Source-domain data plus the (possibly unlabeled) test set.
struct DataBundle {
  LabeledDataset train;    // labeled source data the classifier trains on
  LabeledDataset holdout;  // labeled source-domain split for score calibration
  LabeledDataset test;     // labels empty unless evaluation mode
  std::optional<std::vector<int>> test_labels;  // evaluation mode only
};

/// Builds the datasets described by the config. Throws ConfigError when the
/// config asks for something the chosen method cannot satisfy (for example a
/// CSV source without a holdout file for a score-calibrated method).
DataBundle build_data(const CliConfig& config);

/// Datasets for a benchmark cell: one generator recipe at one seed,
/// evaluation mode always on (benchmarks need the truth to score methods).
DataBundle build_bench_data(const GeneratorConfig& generator,
                            std::uint64_t seed);

/// Trains the classifier under test on the bundle's training split. All
/// random streams derive from `seed` with fixed purpose tags, so a rerun is
/// bit-identical.
MlpModel train_classifier(const CliConfig& config, const DataBundle& data,
                          std::uint64_t seed);

/// Everything a method run can produce. Estimation methods fill
/// `estimated_accuracy`; detection methods fill `flagged`; the ensemble
/// methods fill both plus the per-iteration trace.
struct MethodResult {
  std::string method;
  std::optional<double> estimated_accuracy;
  std::optional<std::vector<std::size_t>> flagged;  // sorted indices into U
  std::optional<double> threshold;  // score-calibrated methods only
  std::optional<RunResult> run;     // ensemble methods only
  std::optional<ConditionReport> conditions;  // evaluation + ensemble only
};

/// Runs the configured method against the bundle. `collect_conditions`
/// additionally measures the per-iteration run conditions (requires
/// evaluation mode and an ensemble method; silently skipped otherwise).
MethodResult run_method(const CliConfig& config, const DataBundle& data,
                        const MlpModel& classifier, std::uint64_t seed,
                        bool collect_conditions);

/// True if the method runs the iterative ensemble loop (as opposed to a
/// single-shot score or confidence rule).
bool is_ensemble_method(const std::string& name);

/// True if the method produces a flagged set usable by the detect command.
bool method_produces_flags(const std::string& name);

/// True if the method needs test labels even to run (reference stubs).
bool method_needs_truth(const std::string& name);

}  // namespace selfcheck::cli
