#include "selfcheck/framework.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "selfcheck/error.hpp"
#include "selfcheck/rng.hpp"

#include <json.hpp>

namespace selfcheck {

std::vector<std::size_t> PseudoLabelSet::indices() const {
  std::vector<std::size_t> out;
  out.reserve(entries.size());
  for (const PseudoEntry& entry : entries) out.push_back(entry.index);
  return out;
}

void PseudoLabelSet::validate(std::size_t num_points, int num_classes) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const PseudoEntry& entry = entries[i];
    if (entry.index >= num_points)
      throw RejectedInput("pseudo set: index out of range");
    if (entry.label < 0 || entry.label >= num_classes)
      throw RejectedInput("pseudo set: label out of range");
    if (i > 0 && entries[i - 1].index >= entry.index)
      throw RejectedInput("pseudo set: entries must be sorted and unique");
  }
}

void PseudoLabelSet::validate(std::size_t num_points, int num_classes,
                              const std::vector<int>& f_labels) const {
  validate(num_points, num_classes);
  for (const PseudoEntry& entry : entries)
    if (entry.label == f_labels[entry.index])
      throw RejectedInput("pseudo set: pseudo label equals f's prediction");
}

namespace {

void check_votes_and_f(const Votes& votes, const std::vector<int>& f_labels) {
  votes.validate();
  if (f_labels.size() != votes.num_points())
    throw RejectedInput("f_labels size does not match vote matrix");
  for (int label : f_labels)
    if (label < 0 || static_cast<std::size_t>(label) >= votes.num_classes())
      throw RejectedInput("f_labels contains a label out of range");
}

}  // namespace

std::vector<double> agreement_with_f(const Votes& votes,
                                     const std::vector<int>& f_labels) {
  check_votes_and_f(votes, f_labels);
  std::vector<double> agreement(votes.num_points());
  for (std::size_t j = 0; j < votes.num_points(); ++j)
    agreement[j] =
        votes.distribution(j, static_cast<std::size_t>(f_labels[j]));
  return agreement;
}

std::vector<int> majority_labels(const Votes& votes) {
  votes.validate();
  return argmax_rows(votes.distribution);
}

PseudoLabelSet construct_R_threshold(const Votes& votes,
                                     const std::vector<int>& f_labels,
                                     double tau, std::uint64_t seed,
                                     int iteration) {
  check_votes_and_f(votes, f_labels);
  if (!(tau > 0.0 && tau < 1.0))
    throw RejectedInput("construct_R_threshold: tau must lie in (0, 1)");
  const std::vector<int> majority = majority_labels(votes);
  const int num_classes = static_cast<int>(votes.num_classes());
  PseudoLabelSet set;
  for (std::size_t j = 0; j < votes.num_points(); ++j) {
    const double ar =
        votes.distribution(j, static_cast<std::size_t>(f_labels[j]));
    if (!(ar < tau)) continue;
    int pseudo = majority[j];
    if (pseudo == f_labels[j]) {
      // Majority agrees with f even though agreement is below threshold;
      // draw one of the other K-1 labels on this point's own stream.
      Rng rng = derive_rng(seed, "pseudo-label",
                           static_cast<std::uint64_t>(iteration),
                           static_cast<std::uint64_t>(j));
      pseudo = static_cast<int>(
          rng.uniform_int(static_cast<std::uint64_t>(num_classes - 1)));
      if (pseudo >= f_labels[j]) ++pseudo;
    }
    set.entries.push_back({j, pseudo});
  }
  set.validate(votes.num_points(), num_classes, f_labels);
  return set;
}

PseudoLabelSet construct_R_majority(const Votes& votes,
                                    const std::vector<int>& f_labels) {
  check_votes_and_f(votes, f_labels);
  const std::vector<int> majority = majority_labels(votes);
  PseudoLabelSet set;
  for (std::size_t j = 0; j < votes.num_points(); ++j)
    if (majority[j] != f_labels[j]) set.entries.push_back({j, majority[j]});
  set.validate(votes.num_points(), static_cast<int>(votes.num_classes()),
               f_labels);
  return set;
}

void FrameworkConfig::validate() const {
  if (iterations < 1)
    throw RejectedInput("framework config: iterations must be >= 1");
  if (mode == Mode::kThreshold && !(tau > 0.0 && tau < 1.0))
    throw RejectedInput("framework config: tau must lie in (0, 1)");
}

std::vector<std::size_t> RunResult::flagged_indices() const {
  if (iterations.empty()) throw UndefinedCondition("run result: no iterations");
  return final_set().indices();
}

std::string RunResult::to_json() const {
  nlohmann::json doc;
  doc["estimated_accuracy"] = estimated_accuracy;
  doc["num_points"] = num_points;
  doc["seed"] = seed;
  doc["iterations"] = nlohmann::json::array();
  for (const IterationRecord& record : iterations) {
    nlohmann::json row;
    row["iteration"] = record.iteration;
    row["r_size"] = record.r_size;
    row["mean_agreement"] = record.mean_agreement;
    nlohmann::json entries = nlohmann::json::array();
    for (const PseudoEntry& entry : record.pseudo.entries)
      entries.push_back({{"index", entry.index}, {"label", entry.label}});
    row["pseudo"] = std::move(entries);
    doc["iterations"].push_back(std::move(row));
  }
  if (!iterations.empty()) {
    doc["flagged"] = flagged_indices();
  }
  return doc.dump(2);
}

RunResult run_self_training(EnsembleTrainer& trainer,
                            const std::vector<int>& f_labels,
                            const FrameworkConfig& config,
                            const IterationObserver& observer) {
  config.validate();
  const std::size_t num_points = trainer.num_points();
  const int num_classes = trainer.num_classes();
  if (num_points == 0) throw RejectedInput("run_self_training: no test points");
  if (num_classes < 2)
    throw RejectedInput("run_self_training: need at least two classes");
  if (f_labels.size() != num_points)
    throw RejectedInput("run_self_training: f_labels size mismatch");
  for (int label : f_labels)
    if (label < 0 || label >= num_classes)
      throw RejectedInput("run_self_training: f label out of range");

  RunResult result;
  result.num_points = num_points;
  result.seed = config.seed;

  PseudoLabelSet current;  // starts empty: iteration 1 sees no pseudo labels
  for (int t = 1; t <= config.iterations; ++t) {
    const Votes votes = trainer.generate(current, t);
    if (votes.num_points() != num_points ||
        votes.num_classes() != static_cast<std::size_t>(num_classes))
      throw RejectedInput("run_self_training: trainer returned wrong shape");

    PseudoLabelSet next =
        config.mode == FrameworkConfig::Mode::kMajority
            ? construct_R_majority(votes, f_labels)
            : construct_R_threshold(votes, f_labels, config.tau, config.seed,
                                    t);
    if (observer) observer(t, votes, current, next);

    IterationRecord record;
    record.iteration = t;
    record.r_size = next.size();
    const std::vector<double> agreement = agreement_with_f(votes, f_labels);
    double total = 0.0;
    for (double a : agreement) total += a;
    record.mean_agreement = total / static_cast<double>(num_points);
    record.pseudo = next;
    result.iterations.push_back(std::move(record));

    current = std::move(next);
  }

  result.estimated_accuracy = 1.0 - static_cast<double>(current.size()) /
                                        static_cast<double>(num_points);
  return result;
}

}  // namespace selfcheck
