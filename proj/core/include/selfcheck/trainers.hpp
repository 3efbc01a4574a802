#pragma once

#include <cstdint>
#include <vector>

#include "selfcheck/dataset.hpp"
#include "selfcheck/framework.hpp"
#include "selfcheck/train.hpp"

namespace selfcheck {

/// Configuration shared by the two ensemble trainers.
///
/// finetune_learning_rate == 0 selects the kind's default: the pre-training
/// rate for kRandomInit, one tenth of it for kRepMatch (the alignment
/// objective is less stable, so its fine-tuning steps are smaller).
struct TrainerSpec {
  enum class Kind { kRandomInit, kRepMatch };

  Kind kind = Kind::kRandomInit;
  int members = 5;                     // N
  double pseudo_weight = 0.1;          // weight on the pseudo-labeled CE term
  double mmd_weight = 1.0;             // kRepMatch only
  MlpArchitecture architecture;
  TrainConfig pretrain;                // pre-training hyperparameters
  double finetune_learning_rate = 0.0; // 0: kind default (see above)

  void validate() const;
  double resolved_finetune_lr() const;
};

/// Ensembles from N random initializations. Each member is pre-trained once
/// on the labeled source set (seeded per member, cached for the lifetime of
/// the trainer), and each generate() call fine-tunes every pre-trained member
/// for exactly one epoch on source CE + pseudo_weight * pseudo CE. The cache
/// is sound because pre-training depends only on (source, spec, seed), never
/// on the pseudo-label set.
class RandomInitTrainer : public EnsembleTrainer {
 public:
  RandomInitTrainer(TrainerSpec spec, LabeledDataset source,
                    Matrix test_features, std::uint64_t seed);

  Votes generate(const PseudoLabelSet& pseudo, int iteration) override;
  std::size_t num_points() const override { return test_features_.rows(); }
  int num_classes() const override { return spec_.architecture.num_classes; }

  /// Full member predictions for the given pseudo-label set (generate() is
  /// this plus vote counting).
  EnsemblePredictions predict_members(const PseudoLabelSet& pseudo,
                                      int iteration);

  const std::vector<MlpModel>& pretrained_members() const { return members_; }

 private:
  TrainerSpec spec_;
  LabeledDataset source_;
  Matrix test_features_;
  std::uint64_t seed_;
  std::vector<MlpModel> members_;  // pre-trained once, reused per iteration
};

/// Ensembles from N fine-tuning checkpoints of a single model. The initial
/// model is pre-trained once on source CE plus an MMD term aligning source
/// and test representations; each generate() call restarts from it and
/// fine-tunes N epochs on source CE + pseudo CE + MMD, keeping the model
/// state after each epoch as one ensemble member.
class RepMatchTrainer : public EnsembleTrainer {
 public:
  RepMatchTrainer(TrainerSpec spec, LabeledDataset source,
                  Matrix test_features, std::uint64_t seed);

  Votes generate(const PseudoLabelSet& pseudo, int iteration) override;
  std::size_t num_points() const override { return test_features_.rows(); }
  int num_classes() const override { return spec_.architecture.num_classes; }

  EnsemblePredictions predict_members(const PseudoLabelSet& pseudo,
                                      int iteration);

  const MlpModel& initial_model() const { return initial_; }

 private:
  TrainerSpec spec_;
  LabeledDataset source_;
  Matrix test_features_;
  std::uint64_t seed_;
  MlpModel initial_;  // pre-trained once
};

/// Builds the pseudo-labeled dataset R for training: rows of test_features
/// selected by the set, labeled with the pseudo labels.
LabeledDataset pseudo_dataset(const PseudoLabelSet& pseudo,
                              const Matrix& test_features, int num_classes);

}  // namespace selfcheck
