#include "cli_run.hpp"

#include <algorithm>
#include <memory>
#include <utility>

#include "selfcheck/baselines.hpp"
#include "selfcheck/csv.hpp"
#include "selfcheck/datagen.hpp"
#include "selfcheck/rng.hpp"
#include "selfcheck/train.hpp"
#include "selfcheck/trainers.hpp"

namespace selfcheck::cli {
namespace {

/// Fabricated ensemble that always votes the true label with certainty. The
/// loop run on it flags exactly the classifier's mistakes, so it pins the
/// best result any real trainer could reach. Evaluation mode only.
class TruthVoter final : public EnsembleTrainer {
 public:
  TruthVoter(std::vector<int> true_labels, int num_classes)
      : labels_(std::move(true_labels)), num_classes_(num_classes) {}

  Votes generate(const PseudoLabelSet&, int) override {
    Votes votes;
    votes.distribution = Matrix(labels_.size(),
                                static_cast<std::size_t>(num_classes_));
    for (std::size_t j = 0; j < labels_.size(); ++j)
      votes.distribution(j, static_cast<std::size_t>(labels_[j])) = 1.0;
    votes.num_members = 0;  // exact distribution
    return votes;
  }
  std::size_t num_points() const override { return labels_.size(); }
  int num_classes() const override { return num_classes_; }

 private:
  std::vector<int> labels_;
  int num_classes_;
};

/// Fabricated ensemble that copies the classifier's own predictions, so
/// nothing is ever flagged and the estimate saturates at 1. The floor any
/// useful trainer has to beat.
class EchoVoter final : public EnsembleTrainer {
 public:
  EchoVoter(std::vector<int> f_labels, int num_classes)
      : labels_(std::move(f_labels)), num_classes_(num_classes) {}

  Votes generate(const PseudoLabelSet&, int) override {
    Votes votes;
    votes.distribution = Matrix(labels_.size(),
                                static_cast<std::size_t>(num_classes_));
    for (std::size_t j = 0; j < labels_.size(); ++j)
      votes.distribution(j, static_cast<std::size_t>(labels_[j])) = 1.0;
    votes.num_members = 0;
    return votes;
  }
  std::size_t num_points() const override { return labels_.size(); }
  int num_classes() const override { return num_classes_; }

 private:
  std::vector<int> labels_;
  int num_classes_;
};

LabeledDataset generate_split(const GeneratorConfig& generator, int per_class,
                              std::uint64_t split_seed) {
  if (generator.kind == "two_moons")
    return gen_two_moons(per_class, generator.noise_sd, split_seed);
  return gen_gaussian_mixture(generator.num_classes, generator.dim, per_class,
                              generator.separation, split_seed);
}

DataBundle build_generated(const GeneratorConfig& generator,
                           std::uint64_t seed, bool evaluation_mode) {
  DataBundle out;
  out.train = generate_split(generator, generator.train_per_class,
                             derive_seed(seed, "source"));
  out.holdout = generate_split(generator, generator.holdout_per_class,
                               derive_seed(seed, "holdout"));
  LabeledDataset test = generate_split(generator, generator.test_per_class,
                                       derive_seed(seed, "test"));
  if (generator.shift_magnitude > 0.0) {
    ShiftSpec shift;
    shift.kind = shift_kind_from_string(generator.shift_kind);
    shift.magnitude = generator.shift_magnitude;
    shift.seed = derive_seed(seed, "shift");
    test = apply_shift(test, shift);
  }
  if (evaluation_mode) {
    out.test_labels = std::move(test.labels);
  }
  // Production mode drops the generated labels here; nothing downstream can
  // reach them. Evaluation mode keeps them in the side channel only.
  test.labels.clear();
  out.test = std::move(test);
  return out;
}

DataBundle build_from_csv(const CsvConfig& csv, bool evaluation_mode,
                          const std::string& method_name) {
  DataBundle out;
  out.train = load_csv(csv.train_path, csv.num_classes);
  const int num_classes = out.train.num_classes;
  if (!csv.holdout_path.empty()) {
    out.holdout = load_csv(csv.holdout_path, num_classes);
  } else if (method_name == "msp" || method_name == "trust-score") {
    throw ConfigError(
        "dataset.csv.holdout_path: required for score-calibrated methods "
        "(the flagging threshold is calibrated on held-out source data)");
  }
  if (evaluation_mode) {
    LabeledDataset test = load_csv(csv.test_path, num_classes);
    out.test_labels = std::move(test.labels);
    test.labels.clear();
    out.test = std::move(test);
  } else {
    // Features-only reader: the label column, if the file has one, is never
    // parsed. This is the production-mode isolation guarantee.
    out.test = load_csv_features(csv.test_path, num_classes);
  }
  return out;
}

int bundle_classes(const DataBundle& data) { return data.train.num_classes; }

MlpArchitecture architecture_for(const CliConfig& config,
                                 const DataBundle& data) {
  MlpArchitecture arch;
  arch.input_dim = static_cast<int>(data.train.dim());
  arch.encoder_widths = config.model.encoder_widths;
  arch.predictor_hidden = config.model.predictor_hidden;
  arch.num_classes = bundle_classes(data);
  return arch;
}

TrainerSpec trainer_spec_for(const CliConfig& config, const DataBundle& data) {
  TrainerSpec spec;
  spec.kind = config.method.name == "ours-rm" ? TrainerSpec::Kind::kRepMatch
                                              : TrainerSpec::Kind::kRandomInit;
  spec.members = config.method.members;
  spec.pseudo_weight = config.method.pseudo_weight;
  spec.mmd_weight = config.method.mmd_weight;
  spec.finetune_learning_rate = config.method.finetune_learning_rate;
  spec.architecture = architecture_for(config, data);
  spec.pretrain = config.model.train;
  return spec;
}

MethodResult run_ensemble_method(const CliConfig& config,
                                 const DataBundle& data,
                                 const MlpModel& classifier,
                                 std::uint64_t seed, bool collect_conditions) {
  const ForwardResult fwd = forward(classifier, data.test.features);
  const std::vector<int> f_labels = argmax_rows(fwd.probabilities);
  const int num_classes = bundle_classes(data);

  std::unique_ptr<EnsembleTrainer> trainer;
  if (config.method.name == "oracle") {
    trainer = std::make_unique<TruthVoter>(*data.test_labels, num_classes);
  } else if (config.method.name == "degenerate") {
    trainer = std::make_unique<EchoVoter>(f_labels, num_classes);
  } else if (config.method.name == "ours-rm") {
    TrainerSpec spec = trainer_spec_for(config, data);
    spec.pretrain.seed = derive_seed(seed, "pretrain");
    trainer = std::make_unique<RepMatchTrainer>(spec, data.train,
                                                data.test.features,
                                                derive_seed(seed, "trainer"));
  } else {
    TrainerSpec spec = trainer_spec_for(config, data);
    spec.pretrain.seed = derive_seed(seed, "pretrain");
    trainer = std::make_unique<RandomInitTrainer>(spec, data.train,
                                                  data.test.features,
                                                  derive_seed(seed, "trainer"));
  }

  FrameworkConfig loop;
  loop.iterations = config.method.iterations;
  loop.mode = config.method.mode == "threshold"
                  ? FrameworkConfig::Mode::kThreshold
                  : FrameworkConfig::Mode::kMajority;
  loop.tau = config.method.tau;
  loop.seed = derive_seed(seed, "loop");

  MethodResult result;
  result.method = config.method.name;
  if (collect_conditions && data.test_labels.has_value()) {
    ConditionTracker tracker(f_labels, *data.test_labels);
    result.run = run_self_training(*trainer, f_labels, loop,
                                   tracker.observer());
    result.conditions = tracker.report();
  } else {
    result.run = run_self_training(*trainer, f_labels, loop);
  }
  result.estimated_accuracy = result.run->estimated_accuracy;
  result.flagged = result.run->flagged_indices();
  return result;
}

MethodResult run_confidence_method(const CliConfig& config,
                                   const DataBundle& data,
                                   const MlpModel& classifier,
                                   std::uint64_t seed) {
  MethodResult result;
  result.method = config.method.name;
  if (config.method.name == "avg-conf") {
    const ForwardResult fwd = forward(classifier, data.test.features);
    result.estimated_accuracy = average_confidence(fwd.probabilities);
    return result;
  }
  // ens-avg-conf: an ensemble trained exactly like the classifier from
  // `members` different initializations; the estimate is the mean confidence
  // of the averaged probability vectors.
  const MlpArchitecture arch = architecture_for(config, data);
  std::vector<MlpModel> members;
  for (int i = 0; i < config.method.members; ++i) {
    const auto member = static_cast<std::uint64_t>(i);
    Rng init = derive_rng(seed, "confidence-ensemble-init", member);
    TrainConfig train = config.model.train;
    train.seed = derive_seed(seed, "confidence-ensemble-train", member);
    members.push_back(sgd_fit(make_mlp(arch, init), data.train, train));
  }
  const EnsemblePredictions predictions =
      predict_all(members, data.test.features);
  result.estimated_accuracy = ensemble_average_confidence(predictions);
  return result;
}

MethodResult run_score_method(const CliConfig& config, const DataBundle& data,
                              const MlpModel& classifier) {
  MethodResult result;
  result.method = config.method.name;

  // Both score rules calibrate their threshold on held-out source data so
  // that the flagged fraction there matches the classifier's source error.
  const double source_error = 1.0 - accuracy(classifier, data.holdout);

  if (config.method.name == "msp") {
    const ForwardResult holdout_fwd = forward(classifier, data.holdout.features);
    const ForwardResult test_fwd = forward(classifier, data.test.features);
    const double threshold = calibrate_threshold(
        max_probabilities(holdout_fwd.probabilities), source_error);
    result.threshold = threshold;
    result.flagged = msp_detect(test_fwd.probabilities, threshold);
  } else {  // trust-score
    const ForwardResult holdout_fwd = forward(classifier, data.holdout.features);
    const ForwardResult test_fwd = forward(classifier, data.test.features);
    const int num_classes = bundle_classes(data);
    const Matrix train_repr = encode(classifier, data.train.features);
    const std::vector<double> holdout_scores = trust_scores(
        train_repr, data.train.labels, encode(classifier, data.holdout.features),
        argmax_rows(holdout_fwd.probabilities), num_classes,
        config.method.trust_neighbors);
    const std::vector<double> test_scores = trust_scores(
        train_repr, data.train.labels, encode(classifier, data.test.features),
        argmax_rows(test_fwd.probabilities), num_classes,
        config.method.trust_neighbors);
    const double threshold = calibrate_threshold(holdout_scores, source_error);
    result.threshold = threshold;
    std::vector<std::size_t> flagged;
    for (std::size_t j = 0; j < test_scores.size(); ++j)
      if (test_scores[j] < threshold) flagged.push_back(j);
    result.flagged = std::move(flagged);
  }

  // A flagged set doubles as an estimate through the same unflagged-fraction
  // rule the ensemble methods use.
  result.estimated_accuracy =
      1.0 - static_cast<double>(result.flagged->size()) /
                static_cast<double>(data.test.size());
  return result;
}

}  // namespace

bool is_ensemble_method(const std::string& name) {
  return name == "ours-ri" || name == "ours-rm" || name == "oracle" ||
         name == "degenerate";
}

bool method_produces_flags(const std::string& name) {
  return is_ensemble_method(name) || name == "msp" || name == "trust-score";
}

bool method_needs_truth(const std::string& name) { return name == "oracle"; }

DataBundle build_data(const CliConfig& config) {
  if (config.dataset.source == "csv")
    return build_from_csv(config.dataset.csv, config.evaluation_mode,
                          config.method.name);
  return build_generated(config.dataset.generator, config.seed,
                         config.evaluation_mode);
}

DataBundle build_bench_data(const GeneratorConfig& generator,
                            std::uint64_t seed) {
  return build_generated(generator, seed, /*evaluation_mode=*/true);
}

MlpModel train_classifier(const CliConfig& config, const DataBundle& data,
                          std::uint64_t seed) {
  const MlpArchitecture arch = architecture_for(config, data);
  Rng init = derive_rng(seed, "classifier-init");
  TrainConfig train = config.model.train;
  train.seed = derive_seed(seed, "classifier-train");
  return sgd_fit(make_mlp(arch, init), data.train, train);
}

MethodResult run_method(const CliConfig& config, const DataBundle& data,
                        const MlpModel& classifier, std::uint64_t seed,
                        bool collect_conditions) {
  const std::string& name = config.method.name;
  if (method_needs_truth(name) && !data.test_labels.has_value())
    throw ConfigError(
        "method.name: \"oracle\" is a reference stub that votes the true "
        "labels; it requires evaluation_mode (pass --eval)");
  if (is_ensemble_method(name))
    return run_ensemble_method(config, data, classifier, seed,
                               collect_conditions);
  if (name == "avg-conf" || name == "ens-avg-conf")
    return run_confidence_method(config, data, classifier, seed);
  return run_score_method(config, data, classifier);
}

}  // namespace selfcheck::cli
