#include "selfcheck/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

#include <json.hpp>

#include "selfcheck/error.hpp"

namespace selfcheck {
namespace {

void check_label_pair(const std::vector<int>& f_labels,
                      const std::vector<int>& true_labels) {
  if (f_labels.size() != true_labels.size()) {
    throw RejectedInput("classifier and true label vectors differ in length");
  }
  if (f_labels.empty()) {
    throw RejectedInput("label vectors must be non-empty");
  }
}

void check_votes_against(const Votes& votes, std::size_t num_points) {
  votes.validate();
  if (votes.num_points() != num_points) {
    throw RejectedInput("vote table and label vectors differ in length");
  }
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

double f1_error_detection(const std::vector<std::size_t>& flagged,
                          const std::vector<std::size_t>& mistakes) {
  const auto a = sorted_unique(flagged);
  const auto b = sorted_unique(mistakes);
  if (a.empty() || b.empty()) return 0.0;
  std::vector<std::size_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(both));
  if (both.empty()) return 0.0;
  const double precision = static_cast<double>(both.size()) / a.size();
  const double recall = static_cast<double>(both.size()) / b.size();
  return 2.0 * precision * recall / (precision + recall);
}

double true_accuracy(const std::vector<int>& f_labels,
                     const std::vector<int>& true_labels) {
  check_label_pair(f_labels, true_labels);
  std::size_t hits = 0;
  for (std::size_t j = 0; j < f_labels.size(); ++j) {
    if (f_labels[j] == true_labels[j]) ++hits;
  }
  return static_cast<double>(hits) / f_labels.size();
}

double estimation_error(double estimated_accuracy,
                        const std::vector<int>& f_labels,
                        const std::vector<int>& true_labels) {
  return std::abs(estimated_accuracy - true_accuracy(f_labels, true_labels));
}

std::vector<std::size_t> mistake_indices(const std::vector<int>& f_labels,
                                         const std::vector<int>& true_labels) {
  check_label_pair(f_labels, true_labels);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < f_labels.size(); ++j) {
    if (f_labels[j] != true_labels[j]) out.push_back(j);
  }
  return out;
}

ErrorOnCorrect measure_error_on_correct(const Votes& votes,
                                        const std::vector<int>& f_labels,
                                        const std::vector<int>& true_labels) {
  check_label_pair(f_labels, true_labels);
  check_votes_against(votes, f_labels.size());
  double sum = 0.0;
  double worst = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < f_labels.size(); ++j) {
    if (f_labels[j] != true_labels[j]) continue;
    const double err = 1.0 - votes.distribution(j, true_labels[j]);
    sum += err;
    worst = std::max(worst, err);
    ++count;
  }
  if (count == 0) {
    throw UndefinedCondition(
        "error on correct points is undefined: the classifier is wrong "
        "everywhere");
  }
  return {sum / count, worst};
}

AgreementOnPseudo measure_agreement_on_pseudo(const Votes& votes,
                                              const std::vector<int>& f_labels,
                                              const PseudoLabelSet& pseudo) {
  check_votes_against(votes, f_labels.size());
  if (pseudo.entries.empty()) return {0.0, false};
  double sum = 0.0;
  for (const PseudoEntry& e : pseudo.entries) {
    if (e.index >= f_labels.size()) {
      throw RejectedInput("pseudo-label index out of range");
    }
    sum += votes.distribution(e.index, f_labels[e.index]);
  }
  return {sum / pseudo.entries.size(), true};
}

double vote_variance(const Votes& votes, std::size_t j) {
  if (j >= votes.num_points()) {
    throw RejectedInput("vote variance index out of range");
  }
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < votes.num_classes(); ++k) {
    const double p = votes.distribution(j, k);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

std::vector<double> vote_variances(const Votes& votes) {
  votes.validate();
  std::vector<double> out(votes.num_points());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = vote_variance(votes, j);
  return out;
}

std::optional<double> mean_vote_variance(
    const Votes& votes, const std::vector<std::size_t>& subset) {
  if (subset.empty()) return std::nullopt;
  double sum = 0.0;
  for (std::size_t j : subset) sum += vote_variance(votes, j);
  return sum / subset.size();
}

MistakePartition partition_mistakes(const Votes& votes,
                                    const std::vector<int>& f_labels,
                                    const std::vector<int>& true_labels,
                                    const PseudoLabelSet& pseudo,
                                    double slack) {
  check_label_pair(f_labels, true_labels);
  check_votes_against(votes, f_labels.size());
  std::unordered_set<std::size_t> in_pseudo;
  for (const PseudoEntry& e : pseudo.entries) in_pseudo.insert(e.index);
  MistakePartition out;
  for (std::size_t j = 0; j < f_labels.size(); ++j) {
    if (f_labels[j] == true_labels[j]) continue;
    if (in_pseudo.count(j) != 0) continue;
    if (votes.distribution(j, true_labels[j]) >= 1.0 - slack) {
      out.confident.push_back(j);
    } else {
      out.diverse.push_back(j);
    }
  }
  return out;
}

IdealizedQuantities idealized_quantities(const Votes& votes,
                                         const std::vector<int>& f_labels,
                                         const std::vector<int>& true_labels,
                                         const PseudoLabelSet& pseudo,
                                         double beta) {
  check_label_pair(f_labels, true_labels);
  check_votes_against(votes, f_labels.size());
  if (beta < 0.0 || beta >= 1.0) {
    throw RejectedInput("confidence slack must lie in [0, 1)");
  }
  IdealizedQuantities out;

  std::size_t correct = 0;
  for (std::size_t j = 0; j < f_labels.size(); ++j) {
    if (f_labels[j] != true_labels[j]) continue;
    ++correct;
    out.pointwise_error_on_correct =
        std::max(out.pointwise_error_on_correct,
                 1.0 - votes.distribution(j, true_labels[j]));
  }
  if (correct == 0) {
    throw UndefinedCondition(
        "pointwise error on correct points is undefined: the classifier is "
        "wrong everywhere");
  }

  const MistakePartition split =
      partition_mistakes(votes, f_labels, true_labels, pseudo, beta);
  out.confident_correct = split.confident;

  for (const PseudoEntry& e : pseudo.entries) {
    if (e.index >= f_labels.size()) {
      throw RejectedInput("pseudo-label index out of range");
    }
    out.max_pseudo_disagreement =
        std::max(out.max_pseudo_disagreement,
                 1.0 - votes.distribution(e.index, e.label));
  }
  out.pseudo_defined = !pseudo.entries.empty();

  const std::size_t m = f_labels.size();
  const std::size_t mistakes = m - correct;
  out.residual_fraction =
      (static_cast<double>(mistakes) - static_cast<double>(pseudo.entries.size()) -
       static_cast<double>(out.confident_correct.size())) /
      static_cast<double>(m);

  double sum_var = 0.0;
  for (std::size_t j = 0; j < m; ++j) sum_var += vote_variance(votes, j);
  out.sigma2_all = sum_var / m;

  const double v = out.pointwise_error_on_correct;
  const double r = out.residual_fraction;
  if (r > 0.0) {
    out.diverse_mean_variance =
        (out.sigma2_all - (2.0 * v - v * v) * (1.0 - r)) / r;
    out.b_defined = true;
  }
  return out;
}

DecompositionCheck decomposition_check(
    const std::vector<std::vector<int>>& member_labels,
    const std::vector<int>& f_labels, const std::vector<int>& true_labels,
    int num_classes) {
  check_label_pair(f_labels, true_labels);
  if (member_labels.empty()) {
    throw RejectedInput("decomposition needs at least one ensemble member");
  }
  if (num_classes < 2) {
    throw RejectedInput("decomposition needs at least two classes");
  }
  const std::size_t m = f_labels.size();
  for (const auto& labels : member_labels) {
    if (labels.size() != m) {
      throw RejectedInput("member label vector has the wrong length");
    }
  }
  const std::size_t n = member_labels.size();

  DecompositionCheck out;
  out.accuracy_f = true_accuracy(f_labels, true_labels);
  out.f_error = 1.0 - out.accuracy_f;

  double agree = 0.0;
  double member_err = 0.0;
  double product = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double f_wrong = f_labels[j] != true_labels[j] ? 1.0 : 0.0;
    double h_wrong = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (member_labels[i][j] == f_labels[j]) agree += 1.0;
      if (member_labels[i][j] != true_labels[j]) h_wrong += 1.0;
    }
    h_wrong /= n;
    member_err += h_wrong;
    product += f_wrong * h_wrong;
  }
  out.agreement_rate = agree / (static_cast<double>(n) * m);
  out.ensemble_error = member_err / m;
  out.error_product_mean = product / m;
  out.covariance = out.error_product_mean - out.f_error * out.ensemble_error;

  out.lhs = out.accuracy_f - out.agreement_rate;
  out.rhs_binary = out.ensemble_error * (1.0 - 2.0 * out.f_error) -
                   2.0 * out.covariance;
  out.lower = out.rhs_binary;
  out.upper = out.ensemble_error * (1.0 - out.f_error) - out.covariance;
  return out;
}

double calibration_gap(const Votes& votes, const std::vector<int>& f_labels,
                       const std::vector<int>& true_labels) {
  check_label_pair(f_labels, true_labels);
  check_votes_against(votes, f_labels.size());
  double agree = 0.0;
  for (std::size_t j = 0; j < f_labels.size(); ++j) {
    agree += votes.distribution(j, f_labels[j]);
  }
  agree /= f_labels.size();
  return std::abs(agree - true_accuracy(f_labels, true_labels));
}

namespace {

nlohmann::json row_to_json(const ConditionRow& row) {
  nlohmann::json j;
  j["iteration"] = row.iteration;
  j["error_on_correct_avg"] = row.error_on_correct_avg;
  j["error_on_correct_max"] = row.error_on_correct_max;
  j["pseudo_agreement"] = row.pseudo_agreement;
  j["pseudo_agreement_defined"] = row.pseudo_agreement_defined;
  j["diversity_diverse"] = row.diversity_diverse;
  j["diversity_diverse_defined"] = row.diversity_diverse_defined;
  j["diversity_all"] = row.diversity_all;
  j["vote_variance"] = row.vote_variance;
  j["confident_size"] = row.confident_size;
  j["diverse_size"] = row.diverse_size;
  j["mistakes_in_r"] = row.mistakes_in_r;
  j["r_in_size"] = row.r_in_size;
  j["r_out_size"] = row.r_out_size;
  return j;
}

}  // namespace

std::string ConditionReport::to_json() const {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const ConditionRow& row : rows) j["rows"].push_back(row_to_json(row));
  j["max_error_on_correct"] = max_error_on_correct;
  j["max_error_on_correct_percent"] = 100.0 * max_error_on_correct;
  j["max_error_on_correct_pointwise"] = max_error_on_correct_pointwise;
  j["max_pseudo_agreement"] = max_pseudo_agreement;
  j["max_pseudo_agreement_percent"] = 100.0 * max_pseudo_agreement;
  j["pseudo_agreement_defined"] = pseudo_agreement_defined;
  j["min_diversity"] = min_diversity;
  j["min_diversity_percent"] = 100.0 * min_diversity;
  j["diversity_defined"] = diversity_defined;
  j["min_diversity_all"] = min_diversity_all;
  j["min_diversity_all_percent"] = 100.0 * min_diversity_all;
  j["accuracy_f"] = accuracy_f;
  j["accuracy_f_percent"] = 100.0 * accuracy_f;
  return j.dump(2);
}

std::string ConditionReport::to_csv() const {
  std::string out =
      "iteration,error_on_correct_avg,error_on_correct_max,pseudo_agreement,"
      "pseudo_agreement_defined,diversity_diverse,diversity_diverse_defined,"
      "diversity_all,confident_size,diverse_size,mistakes_in_r,r_in_size,"
      "r_out_size\n";
  char buf[512];
  for (const ConditionRow& row : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%d,%.17g,%d,%.17g,%zu,%zu,%zu,%zu,%zu\n",
                  row.iteration, row.error_on_correct_avg,
                  row.error_on_correct_max, row.pseudo_agreement,
                  row.pseudo_agreement_defined ? 1 : 0, row.diversity_diverse,
                  row.diversity_diverse_defined ? 1 : 0, row.diversity_all,
                  row.confident_size, row.diverse_size, row.mistakes_in_r,
                  row.r_in_size, row.r_out_size);
    out += buf;
  }
  return out;
}

ConditionTracker::ConditionTracker(std::vector<int> f_labels,
                                   std::vector<int> true_labels)
    : f_labels_(std::move(f_labels)), true_labels_(std::move(true_labels)) {
  check_label_pair(f_labels_, true_labels_);
}

IterationObserver ConditionTracker::observer() {
  return [this](int iteration, const Votes& votes,
                const PseudoLabelSet& trained_on, const PseudoLabelSet& built) {
    check_votes_against(votes, f_labels_.size());
    ConditionRow row;
    row.iteration = iteration;

    const ErrorOnCorrect err =
        measure_error_on_correct(votes, f_labels_, true_labels_);
    row.error_on_correct_avg = err.average;
    row.error_on_correct_max = err.pointwise_max;

    const AgreementOnPseudo agr =
        measure_agreement_on_pseudo(votes, f_labels_, trained_on);
    row.pseudo_agreement = agr.value;
    row.pseudo_agreement_defined = agr.defined;

    const MistakePartition split = partition_mistakes(
        votes, f_labels_, true_labels_, trained_on, err.average);
    row.confident_size = split.confident.size();
    row.diverse_size = split.diverse.size();
    if (const auto var = mean_vote_variance(votes, split.diverse)) {
      row.diversity_diverse = *var;
      row.diversity_diverse_defined = true;
    }

    row.vote_variance = vote_variances(votes);
    double sum = 0.0;
    for (double v : row.vote_variance) sum += v;
    row.diversity_all = sum / row.vote_variance.size();

    std::size_t overlap = 0;
    for (const PseudoEntry& e : trained_on.entries) {
      if (e.index < f_labels_.size() &&
          f_labels_[e.index] != true_labels_[e.index]) {
        ++overlap;
      }
    }
    row.mistakes_in_r = overlap;
    row.r_in_size = trained_on.entries.size();
    row.r_out_size = built.entries.size();
    rows_.push_back(std::move(row));
  };
}

ConditionReport ConditionTracker::report() const {
  ConditionReport out;
  out.rows = rows_;
  out.accuracy_f = true_accuracy(f_labels_, true_labels_);
  bool diversity_seen = false;
  for (const ConditionRow& row : rows_) {
    out.max_error_on_correct =
        std::max(out.max_error_on_correct, row.error_on_correct_avg);
    out.max_error_on_correct_pointwise =
        std::max(out.max_error_on_correct_pointwise, row.error_on_correct_max);
    if (row.pseudo_agreement_defined) {
      out.max_pseudo_agreement =
          std::max(out.max_pseudo_agreement, row.pseudo_agreement);
      out.pseudo_agreement_defined = true;
    }
    if (row.diversity_diverse_defined) {
      if (!diversity_seen || row.diversity_diverse < out.min_diversity) {
        out.min_diversity = row.diversity_diverse;
      }
      diversity_seen = true;
    }
  }
  out.diversity_defined = diversity_seen;
  if (!rows_.empty()) {
    out.min_diversity_all = rows_.front().diversity_all;
    for (const ConditionRow& row : rows_) {
      out.min_diversity_all = std::min(out.min_diversity_all, row.diversity_all);
    }
  }
  return out;
}

}  // namespace selfcheck
