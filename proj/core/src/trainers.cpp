#include "selfcheck/trainers.hpp"

#include <utility>

#include "selfcheck/error.hpp"
#include "selfcheck/rng.hpp"

namespace selfcheck {

void TrainerSpec::validate() const {
  if (members < 1) throw RejectedInput("trainer spec: members must be >= 1");
  if (!(pseudo_weight >= 0.0))
    throw RejectedInput("trainer spec: pseudo_weight must be >= 0");
  if (!(mmd_weight >= 0.0))
    throw RejectedInput("trainer spec: mmd_weight must be >= 0");
  if (finetune_learning_rate < 0.0)
    throw RejectedInput("trainer spec: finetune_learning_rate must be >= 0");
  pretrain.validate();
}

double TrainerSpec::resolved_finetune_lr() const {
  if (finetune_learning_rate > 0.0) return finetune_learning_rate;
  return kind == Kind::kRandomInit ? pretrain.learning_rate
                                   : pretrain.learning_rate / 10.0;
}

LabeledDataset pseudo_dataset(const PseudoLabelSet& pseudo,
                              const Matrix& test_features, int num_classes) {
  LabeledDataset data;
  data.num_classes = num_classes;
  data.features = take_rows(test_features, pseudo.indices());
  data.labels.reserve(pseudo.size());
  for (const PseudoEntry& entry : pseudo.entries)
    data.labels.push_back(entry.label);
  return data;
}

namespace {

void check_trainer_inputs(const TrainerSpec& spec, const LabeledDataset& source,
                          const Matrix& test_features) {
  spec.validate();
  source.validate();
  if (!source.labeled() || source.size() == 0)
    throw RejectedInput("trainer: source set must be labeled and non-empty");
  if (source.num_classes != spec.architecture.num_classes)
    throw RejectedInput("trainer: source classes do not match architecture");
  if (source.dim() != static_cast<std::size_t>(spec.architecture.input_dim))
    throw RejectedInput("trainer: source width does not match architecture");
  if (test_features.rows() == 0)
    throw RejectedInput("trainer: test set is empty");
  if (test_features.cols() != source.dim())
    throw RejectedInput("trainer: test width does not match source width");
}

}  // namespace

RandomInitTrainer::RandomInitTrainer(TrainerSpec spec, LabeledDataset source,
                                     Matrix test_features, std::uint64_t seed)
    : spec_(std::move(spec)),
      source_(std::move(source)),
      test_features_(std::move(test_features)),
      seed_(seed) {
  if (spec_.kind != TrainerSpec::Kind::kRandomInit)
    throw RejectedInput("RandomInitTrainer: spec.kind mismatch");
  check_trainer_inputs(spec_, source_, test_features_);
  members_.reserve(static_cast<std::size_t>(spec_.members));
  for (int i = 0; i < spec_.members; ++i) {
    Rng init_rng =
        derive_rng(seed_, "ri-init", static_cast<std::uint64_t>(i));
    MlpModel model = make_mlp(spec_.architecture, init_rng);
    TrainConfig config = spec_.pretrain;
    config.seed = derive_seed(seed_, "ri-pretrain", static_cast<std::uint64_t>(i));
    members_.push_back(sgd_fit(std::move(model), source_, config));
  }
}

EnsemblePredictions RandomInitTrainer::predict_members(
    const PseudoLabelSet& pseudo, int iteration) {
  pseudo.validate(test_features_.rows(), spec_.architecture.num_classes);
  const LabeledDataset pseudo_data =
      pseudo_dataset(pseudo, test_features_, spec_.architecture.num_classes);
  std::vector<MlpModel> tuned;
  tuned.reserve(members_.size());
  for (std::size_t i = 0; i < members_.size(); ++i) {
    TrainConfig config = spec_.pretrain;
    config.epochs = 1;  // exactly one pass over source + pseudo labels
    config.learning_rate = spec_.resolved_finetune_lr();
    config.seed = derive_seed(seed_, "ri-finetune", i,
                              static_cast<std::uint64_t>(iteration));
    tuned.push_back(sgd_fit(members_[i], source_, pseudo_data,
                            spec_.pseudo_weight, std::nullopt, config));
  }
  return predict_all(tuned, test_features_);
}

Votes RandomInitTrainer::generate(const PseudoLabelSet& pseudo,
                                  int iteration) {
  return predict_members(pseudo, iteration).votes();
}

RepMatchTrainer::RepMatchTrainer(TrainerSpec spec, LabeledDataset source,
                                 Matrix test_features, std::uint64_t seed)
    : spec_(std::move(spec)),
      source_(std::move(source)),
      test_features_(std::move(test_features)),
      seed_(seed) {
  if (spec_.kind != TrainerSpec::Kind::kRepMatch)
    throw RejectedInput("RepMatchTrainer: spec.kind mismatch");
  check_trainer_inputs(spec_, source_, test_features_);
  Rng init_rng = derive_rng(seed_, "rm-init");
  MlpModel model = make_mlp(spec_.architecture, init_rng);
  TrainConfig config = spec_.pretrain;
  config.seed = derive_seed(seed_, "rm-pretrain");
  std::optional<MmdTerm> mmd;
  if (spec_.mmd_weight > 0.0)
    mmd = MmdTerm{test_features_, spec_.mmd_weight, 0.0};
  LabeledDataset no_pseudo;
  no_pseudo.num_classes = source_.num_classes;
  no_pseudo.features = Matrix(0, source_.dim());
  initial_ =
      sgd_fit(std::move(model), source_, no_pseudo, 0.0, mmd, config);
}

EnsemblePredictions RepMatchTrainer::predict_members(
    const PseudoLabelSet& pseudo, int iteration) {
  pseudo.validate(test_features_.rows(), spec_.architecture.num_classes);
  const LabeledDataset pseudo_data =
      pseudo_dataset(pseudo, test_features_, spec_.architecture.num_classes);
  std::optional<MmdTerm> mmd;
  if (spec_.mmd_weight > 0.0)
    mmd = MmdTerm{test_features_, spec_.mmd_weight, 0.0};

  std::vector<MlpModel> snapshots;
  snapshots.reserve(static_cast<std::size_t>(spec_.members));
  MlpModel model = initial_;
  for (int epoch = 0; epoch < spec_.members; ++epoch) {
    TrainConfig config = spec_.pretrain;
    config.epochs = 1;
    config.learning_rate = spec_.resolved_finetune_lr();
    config.seed = derive_seed(seed_, "rm-finetune",
                              static_cast<std::uint64_t>(iteration),
                              static_cast<std::uint64_t>(epoch));
    model = sgd_fit(std::move(model), source_, pseudo_data,
                    spec_.pseudo_weight, mmd, config);
    snapshots.push_back(model);  // state after this epoch is one member
  }
  return predict_all(snapshots, test_features_);
}

Votes RepMatchTrainer::generate(const PseudoLabelSet& pseudo, int iteration) {
  return predict_members(pseudo, iteration).votes();
}

}  // namespace selfcheck
