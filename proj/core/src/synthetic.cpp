#include "selfcheck/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "selfcheck/error.hpp"
#include "selfcheck/metrics.hpp"
#include "selfcheck/rng.hpp"

namespace selfcheck {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw RejectedInput(what);
}

}  // namespace

void SyntheticSpec::validate() const {
  require(num_points >= 1, "num_points must be positive");
  require(num_classes >= 2, "num_classes must be at least 2");
  require(classifier_error >= 0.0 && classifier_error <= 1.0,
          "classifier_error must lie in [0, 1]");
  require(num_members >= 0, "num_members must be non-negative");
  if (regime == SyntheticRegime::kIdealized) {
    require(error_on_correct >= 0.0 && error_on_correct < 1.0,
            "idealized error_on_correct must lie in [0, 1)");
    require(pseudo_disagreement >= 0.0 && pseudo_disagreement <= 1.0,
            "pseudo_disagreement must lie in [0, 1]");
  } else {
    require(error_on_correct >= 0.0 && error_on_correct <= 0.5,
            "relaxed error_on_correct must lie in [0, 1/2]: the soft half "
            "carries twice the average");
    require(pseudo_agreement >= 0.0 && pseudo_agreement <= 1.0,
            "pseudo_agreement must lie in [0, 1]");
  }
  require(confident_slack >= 0.0 && confident_slack < 1.0,
          "confident_slack must lie in [0, 1)");
  const double ceiling = 1.0 - 1.0 / num_classes;
  require(diversity_target >= 0.0 && diversity_target <= ceiling,
          "diversity_target must not exceed 1 - 1/num_classes, the "
          "vote-variance ceiling");
  require(confident_share >= 0.0 && confident_share <= 1.0,
          "confident_share must lie in [0, 1]");
}

SyntheticProcess::SyntheticProcess(SyntheticSpec spec) : spec_(spec) {
  spec_.validate();
  const std::size_t m = spec_.num_points;
  const int k = spec_.num_classes;

  true_labels_.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    true_labels_[j] = static_cast<int>(j % static_cast<std::size_t>(k));
  }

  const auto w =
      static_cast<std::size_t>(std::llround(spec_.classifier_error * m));
  std::vector<std::size_t> order(m);
  for (std::size_t j = 0; j < m; ++j) order[j] = j;
  Rng pick = derive_rng(spec_.seed, "synthetic-mistakes");
  pick.shuffle(order);
  mistakes_.assign(order.begin(), order.begin() + w);
  std::sort(mistakes_.begin(), mistakes_.end());

  is_mistake_.assign(m, false);
  for (std::size_t j : mistakes_) is_mistake_[j] = true;

  f_labels_ = true_labels_;
  for (std::size_t j : mistakes_) f_labels_[j] = (true_labels_[j] + 1) % k;

  if (spec_.regime == SyntheticRegime::kRelaxed) {
    std::vector<std::size_t> correct;
    correct.reserve(m - w);
    for (std::size_t j = 0; j < m; ++j) {
      if (!is_mistake_[j]) correct.push_back(j);
    }
    Rng half = derive_rng(spec_.seed, "synthetic-sharp");
    half.shuffle(correct);
    correct_is_sharp_.assign(m, false);
    // Soft points get floor(half) so the measured average error never
    // exceeds the configured one.
    const std::size_t soft = correct.size() / 2;
    for (std::size_t i = soft; i < correct.size(); ++i) {
      correct_is_sharp_[correct[i]] = true;
    }
  }
}

Votes SyntheticProcess::generate(const PseudoLabelSet& pseudo, int iteration) {
  pseudo.validate(spec_.num_points, spec_.num_classes, f_labels_);
  const std::size_t m = spec_.num_points;
  const int k = spec_.num_classes;
  const double off_share = 1.0 / (k - 1);

  std::unordered_map<std::size_t, int> flagged;
  for (const PseudoEntry& e : pseudo.entries) flagged[e.index] = e.label;

  Matrix law(m, static_cast<std::size_t>(k));
  auto fill_concentrated = [&](std::size_t j, int center, double off_mass) {
    for (int c = 0; c < k; ++c) {
      law(j, static_cast<std::size_t>(c)) =
          c == center ? 1.0 - off_mass : off_mass * off_share;
    }
  };

  std::vector<std::size_t> remaining;
  for (std::size_t j = 0; j < m; ++j) {
    const auto it = flagged.find(j);
    if (it != flagged.end()) {
      if (spec_.regime == SyntheticRegime::kIdealized) {
        fill_concentrated(j, it->second, spec_.pseudo_disagreement);
      } else {
        law(j, static_cast<std::size_t>(it->second)) =
            1.0 - spec_.pseudo_agreement;
        law(j, static_cast<std::size_t>(f_labels_[j])) =
            spec_.pseudo_agreement;
      }
    } else if (!is_mistake_[j]) {
      if (spec_.regime == SyntheticRegime::kIdealized) {
        fill_concentrated(j, true_labels_[j], spec_.error_on_correct);
      } else if (correct_is_sharp_[j]) {
        law(j, static_cast<std::size_t>(true_labels_[j])) = 1.0;
      } else {
        fill_concentrated(j, true_labels_[j], 2.0 * spec_.error_on_correct);
      }
    } else {
      remaining.push_back(j);
    }
  }

  // Split the still-unflagged mistakes for this round. The reshuffle per
  // iteration is what lets previously hidden points surface later.
  Rng groups = derive_rng(spec_.seed, "synthetic-groups",
                          static_cast<std::uint64_t>(iteration));
  groups.shuffle(remaining);
  const std::size_t u = remaining.size();
  const auto n_conf =
      static_cast<std::size_t>(std::floor(spec_.confident_share * u));
  const std::size_t in_b = u - n_conf;
  const double lambda = spec_.diversity_target / (1.0 - 1.0 / k);
  auto n_div = static_cast<std::size_t>(std::ceil(lambda * in_b));
  const auto min_detected =
      static_cast<std::size_t>(std::ceil(spec_.diversity_target * u));
  if (n_conf + n_div < min_detected) n_div = min_detected - n_conf;
  n_div = std::min(n_div, in_b);

  for (std::size_t i = 0; i < u; ++i) {
    const std::size_t j = remaining[i];
    if (i < n_conf) {
      fill_concentrated(j, true_labels_[j], spec_.confident_slack);
    } else if (i < n_conf + n_div) {
      for (int c = 0; c < k; ++c) {
        law(j, static_cast<std::size_t>(c)) = 1.0 / k;
      }
    } else {
      law(j, static_cast<std::size_t>(f_labels_[j])) = 1.0;
    }
  }

  if (spec_.num_members == 0) {
    Votes votes{std::move(law), 0};
    votes.validate();
    return votes;
  }

  // Sampling mode: empirical vote shares from num_members independent draws
  // per point, each point on its own (seed, iteration, point) stream.
  Matrix counts(m, static_cast<std::size_t>(k));
  for (std::size_t j = 0; j < m; ++j) {
    Rng rng = derive_rng(spec_.seed, "synthetic-votes",
                         static_cast<std::uint64_t>(iteration), j);
    for (int i = 0; i < spec_.num_members; ++i) {
      const double roll = rng.uniform();
      double cum = 0.0;
      int drawn = k - 1;
      for (int c = 0; c < k; ++c) {
        cum += law(j, static_cast<std::size_t>(c));
        if (roll < cum) {
          drawn = c;
          break;
        }
      }
      counts(j, static_cast<std::size_t>(drawn)) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      counts(j, static_cast<std::size_t>(c)) /= spec_.num_members;
    }
  }
  Votes votes{std::move(counts), spec_.num_members};
  votes.validate();
  return votes;
}

bool FlagGrowthCheck::all_pass() const {
  return std::all_of(inequalities.begin(), inequalities.end(),
                     [](const InequalityRecord& r) { return r.pass; });
}

namespace {

InequalityRecord make_record(std::string name, double lhs, double rhs) {
  InequalityRecord rec;
  rec.name = std::move(name);
  rec.lhs = lhs;
  rec.rhs = rhs;
  rec.pass = lhs <= rhs;
  rec.boundary = lhs == rhs;
  return rec;
}

}  // namespace

FlagGrowthCheck check_flag_set_growth(const Votes& votes,
                                      const std::vector<int>& f_labels,
                                      const std::vector<int>& true_labels,
                                      const PseudoLabelSet& r_in,
                                      const PseudoLabelSet& r_out, double eta,
                                      const QuantityOverrides& overrides) {
  votes.validate();
  if (f_labels.size() != true_labels.size() ||
      f_labels.size() != votes.num_points()) {
    throw RejectedInput("votes and label vectors disagree on the point count");
  }
  if (!(eta > 0.0) || eta >= 1.0) {
    throw RejectedInput("eta must lie in (0, 1)");
  }
  r_in.validate(votes.num_points(), votes.num_classes());
  r_out.validate(votes.num_points(), votes.num_classes());

  FlagGrowthCheck out;
  out.eta = eta;
  out.tau = std::sqrt(1.0 - eta);

  // Point-wise error on correct points (0 when the classifier is wrong
  // everywhere: every claim about correct points is then vacuous).
  double nu = 0.0;
  std::size_t n_correct = 0;
  for (std::size_t j = 0; j < f_labels.size(); ++j) {
    if (f_labels[j] != true_labels[j]) continue;
    ++n_correct;
    nu = std::max(nu, 1.0 - votes.distribution(j, true_labels[j]));
  }
  if (overrides.pointwise_error) nu = *overrides.pointwise_error;
  out.pointwise_error = nu;

  const AgreementOnPseudo agr =
      measure_agreement_on_pseudo(votes, f_labels, r_in);
  double gamma = agr.value;
  out.pseudo_agreement_defined = agr.defined;
  if (overrides.pseudo_agreement) {
    gamma = *overrides.pseudo_agreement;
    out.pseudo_agreement_defined = true;
  }
  out.pseudo_agreement = gamma;

  const MistakePartition split =
      partition_mistakes(votes, f_labels, true_labels, r_in, nu);
  double sigma2 = 0.0;
  if (const auto var = mean_vote_variance(votes, split.diverse)) {
    sigma2 = *var;
    out.diverse_variance_defined = true;
  }
  if (overrides.diverse_variance) {
    sigma2 = *overrides.diverse_variance;
    out.diverse_variance_defined = true;
  }
  out.diverse_variance = sigma2;

  std::unordered_set<std::size_t> out_idx;
  for (const PseudoEntry& e : r_out.entries) out_idx.insert(e.index);

  std::size_t flagged_correct = 0;
  for (const PseudoEntry& e : r_out.entries) {
    if (f_labels[e.index] == true_labels[e.index]) ++flagged_correct;
  }
  out.inequalities.push_back(make_record(
      "correct-points-rarely-flagged", static_cast<double>(flagged_correct),
      nu / (1.0 - out.tau) * static_cast<double>(n_correct)));

  std::size_t retained = 0;
  for (const PseudoEntry& e : r_in.entries) {
    if (out_idx.count(e.index) != 0) ++retained;
  }
  out.inequalities.push_back(make_record(
      "flagged-set-mostly-retained",
      (1.0 - gamma / out.tau) * static_cast<double>(r_in.size()),
      static_cast<double>(retained)));

  std::size_t confident_flagged = 0;
  for (std::size_t j : split.confident) {
    if (out_idx.count(j) != 0) ++confident_flagged;
  }
  out.inequalities.push_back(make_record(
      "confident-mistakes-all-flagged",
      static_cast<double>(split.confident.size()),
      static_cast<double>(confident_flagged)));

  std::size_t diverse_flagged = 0;
  for (std::size_t j : split.diverse) {
    if (out_idx.count(j) != 0) ++diverse_flagged;
  }
  out.inequalities.push_back(make_record(
      "hard-mistakes-found-at-rate",
      (sigma2 - eta) / (1.0 - eta) * static_cast<double>(split.diverse.size()),
      static_cast<double>(diverse_flagged)));

  if (out.diverse_variance_defined && !(eta < sigma2)) {
    out.precondition_violations.push_back("eta-below-diversity");
  }
  if (!(eta < 1.0 - nu * nu)) {
    out.precondition_violations.push_back("eta-below-error-margin");
  }
  return out;
}

namespace {

nlohmann::json record_to_json(const InequalityRecord& rec) {
  nlohmann::json j;
  j["name"] = rec.name;
  j["lhs"] = rec.lhs;
  j["rhs"] = rec.rhs;
  j["pass"] = rec.pass;
  j["boundary"] = rec.boundary;
  return j;
}

nlohmann::json growth_to_json(const FlagGrowthCheck& check) {
  nlohmann::json j;
  j["inequalities"] = nlohmann::json::array();
  for (const InequalityRecord& rec : check.inequalities) {
    j["inequalities"].push_back(record_to_json(rec));
  }
  j["pointwise_error"] = check.pointwise_error;
  j["pseudo_agreement"] = check.pseudo_agreement;
  j["pseudo_agreement_defined"] = check.pseudo_agreement_defined;
  j["diverse_variance"] = check.diverse_variance;
  j["diverse_variance_defined"] = check.diverse_variance_defined;
  j["eta"] = check.eta;
  j["tau"] = check.tau;
  j["precondition_violations"] = check.precondition_violations;
  j["all_pass"] = check.all_pass();
  return j;
}

}  // namespace

std::string FlagGrowthCheck::to_json() const {
  return growth_to_json(*this).dump(2);
}

GeometricCheck verify_geometric_shrinkage(SyntheticProcess& process,
                                          double eta, int iterations,
                                          std::uint64_t seed) {
  if (!(eta > 0.0) || eta >= 1.0) {
    throw RejectedInput("eta must lie in (0, 1)");
  }
  FrameworkConfig config;
  config.iterations = iterations;
  config.mode = FrameworkConfig::Mode::kThreshold;
  config.tau = std::sqrt(1.0 - eta);
  config.seed = seed;

  GeometricCheck out;
  out.mistakes = process.mistake_set().size();
  out.rate = process.spec().diversity_target;

  const std::vector<int>& f_labels = process.f_labels();
  const std::vector<int>& true_labels = process.true_labels();
  const std::vector<std::size_t>& mistakes = process.mistake_set();

  IterationObserver observer = [&](int iteration, const Votes& votes,
                                   const PseudoLabelSet& trained_on,
                                   const PseudoLabelSet& built) {
    std::unordered_set<std::size_t> built_idx;
    for (const PseudoEntry& e : built.entries) built_idx.insert(e.index);
    std::size_t residual = 0;
    for (std::size_t j : mistakes) {
      if (built_idx.count(j) == 0) ++residual;
    }
    out.residual_trace.push_back(residual);
    out.bound_trace.push_back(std::pow(1.0 - out.rate, iteration) *
                              static_cast<double>(out.mistakes));
    out.iteration_checks.push_back(check_flag_set_growth(
        votes, f_labels, true_labels, trained_on, built, eta));
  };

  const RunResult result =
      run_self_training(process, f_labels, config, observer);

  out.bound_holds = true;
  for (std::size_t t = 0; t < out.residual_trace.size(); ++t) {
    if (static_cast<double>(out.residual_trace[t]) > out.bound_trace[t]) {
      out.bound_holds = false;
    }
  }
  out.inequalities_hold =
      std::all_of(out.iteration_checks.begin(), out.iteration_checks.end(),
                  [](const FlagGrowthCheck& c) { return c.all_pass(); });
  out.estimated_accuracy = result.estimated_accuracy;
  out.true_accuracy = true_accuracy(f_labels, true_labels);
  return out;
}

std::string GeometricCheck::to_json() const {
  nlohmann::json j;
  j["residual_trace"] = residual_trace;
  j["bound_trace"] = bound_trace;
  j["bound_holds"] = bound_holds;
  j["iteration_checks"] = nlohmann::json::array();
  for (const FlagGrowthCheck& check : iteration_checks) {
    j["iteration_checks"].push_back(
        nlohmann::json::parse(check.to_json()));
  }
  j["inequalities_hold"] = inequalities_hold;
  j["mistakes"] = mistakes;
  j["rate"] = rate;
  j["estimated_accuracy"] = estimated_accuracy;
  j["true_accuracy"] = true_accuracy;
  return j.dump(2);
}

}  // namespace selfcheck
