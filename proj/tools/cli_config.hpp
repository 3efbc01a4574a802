#pragma once

// Configuration layer of the selfcheck command-line driver.
//
// A run is described by one JSON file plus optional `--set key=value`
// overrides of dotted paths. The whole document is schema-checked before any
// work happens: unknown keys, wrong types, and out-of-range values are
// reported with their full field path (e.g. "dataset.generator.dim") so a
// typo never silently falls back to a default.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfcheck/bounds.hpp"
#include "selfcheck/train.hpp"

namespace selfcheck::cli {

/// A problem with the configuration document itself (as opposed to a compute
/// failure later). The message always starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Synthetic dataset recipe: a labeled source domain plus a shifted test
/// domain drawn from the same generator.
struct GeneratorConfig {
  std::string kind = "gaussian_mixture";  // "gaussian_mixture" | "two_moons"
  int num_classes = 3;                    // gaussian_mixture only
  int dim = 10;                           // gaussian_mixture only
  int train_per_class = 200;
  int holdout_per_class = 50;
  int test_per_class = 100;
  double separation = 3.0;   // gaussian_mixture: min center distance
  double noise_sd = 0.1;     // two_moons: coordinate noise
  std::string shift_kind = "mean_shift";
  double shift_magnitude = 0.0;
};

/// File-backed datasets. The test file's label column is parsed only in
/// evaluation mode; in production mode it is never even read.
struct CsvConfig {
  std::string train_path;
  std::string holdout_path;  // optional; needed by score-calibrated methods
  std::string test_path;
  int num_classes = 0;  // 0: infer from the training labels
};

struct DatasetConfig {
  std::string source = "generator";  // "generator" | "csv"
  GeneratorConfig generator;
  CsvConfig csv;
};

/// Architecture and training recipe of the classifier under test.
struct ModelConfig {
  std::vector<int> encoder_widths = {32};
  std::vector<int> predictor_hidden = {32};
  TrainConfig train;  // seed field is ignored; streams derive from the run seed
};

/// Which estimator/detector to run and its knobs. Trainer fields apply to the
/// ensemble methods; trust_neighbors applies to the nearest-neighbor scorer.
struct MethodConfig {
  std::string name = "ours-ri";
  int members = 5;
  double pseudo_weight = 0.1;
  double mmd_weight = 1.0;
  double finetune_learning_rate = 0.0;  // 0: trainer-kind default
  int iterations = 5;
  std::string mode = "majority";  // "majority" | "threshold"
  double tau = 0.5;               // threshold mode only
  int trust_neighbors = 5;
};

/// Closed-form guarantee evaluation ("bounds" mode).
struct TheoryBoundsConfig {
  BoundInputs inputs;
  std::optional<double> eta;    // both present: general form;
  std::optional<double> delta;  // both absent: canonical-knob form
  std::optional<double> observed_error;  // reference |estimate - truth|
};

/// Monte-Carlo sweep of the four flag-set growth inequalities ("sweep" mode).
struct TheorySweepConfig {
  int trials = 1000;
  int num_points = 5000;
  std::vector<int> num_classes = {2, 3, 10};
  int iterations = 2;
};

/// Geometric-shrinkage run on one synthetic process ("geometric" mode).
struct TheoryGeometricConfig {
  int num_points = 4000;
  int num_classes = 4;
  double classifier_error = 0.5;
  double diversity_target = 0.5;
  double error_on_correct = 0.0;
  double confident_slack = 0.0;
  double pseudo_disagreement = 0.0;
  double confident_share = 0.0;
  double eta = 0.2;
  int iterations = 10;
  double epsilon_target = 0.01;
};

struct TheoryConfig {
  std::string mode = "bounds";  // "bounds" | "sweep" | "geometric"
  TheoryBoundsConfig bounds;
  TheorySweepConfig sweep;
  TheoryGeometricConfig geometric;
};

/// One dataset pair of the benchmark grid: a named generator recipe.
struct BenchPair {
  std::string name;
  GeneratorConfig generator;
};

/// Benchmark grid (pairs x methods x seeds) plus ablation sweeps. Trainer
/// and framework knobs come from the `method` section; `methods` overrides
/// its name per cell. Ablations rerun the first method on the first pair
/// across all seeds with one knob varied.
struct BenchConfig {
  std::vector<BenchPair> pairs;
  std::vector<std::string> methods = {"ours-ri", "ours-rm"};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<int> ablate_members;
  std::vector<double> ablate_pseudo_weight;
};

/// Gradient cross-check: analytic derivatives vs central finite differences
/// on randomly drawn small models and batches.
struct GradcheckConfig {
  int trials = 20;
  double tolerance = 1e-4;
  double step = 1e-5;
  bool with_mmd = true;
};

/// The fully resolved run configuration.
struct CliConfig {
  std::uint64_t seed = 1;
  bool evaluation_mode = false;
  DatasetConfig dataset;
  ModelConfig model;
  MethodConfig method;
  TheoryConfig theory;
  BenchConfig bench;
  GradcheckConfig gradcheck;

  nlohmann::json echo;  // the document as given (post-override), for reports
};

/// Applies one "dotted.path=value" override in place. Values that parse as
/// JSON are stored typed (numbers, booleans, arrays); everything else is a
/// string. Throws ConfigError on a missing '=' or an empty path.
void apply_override(nlohmann::json& root, const std::string& assignment);

/// Parses and schema-checks a configuration document. Every unknown key,
/// type mismatch, and out-of-range value raises ConfigError naming the field
/// path. Sections irrelevant to the invoking command are still validated, so
/// a config file is either wholly good or rejected.
CliConfig parse_config(const nlohmann::json& root);

/// Reads the file, applies overrides and flag values in order, then parses.
/// `seed_flag` / `eval_flag` mirror the --seed / --eval command-line flags.
CliConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed_flag, bool eval_flag);

}  // namespace selfcheck::cli
