#include "selfcheck/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "selfcheck/error.hpp"

namespace selfcheck {
namespace {

void check_inputs(const BoundInputs& in) {
  if (!(in.max_error_on_correct >= 0.0) || in.max_error_on_correct > 1.0) {
    throw RejectedInput("max_error_on_correct must lie in [0, 1]");
  }
  if (!(in.max_pseudo_agreement >= 0.0) || in.max_pseudo_agreement > 1.0) {
    throw RejectedInput("max_pseudo_agreement must lie in [0, 1]");
  }
  if (!(in.min_diversity >= 0.0) || in.min_diversity > 1.0) {
    throw RejectedInput("min_diversity must lie in [0, 1]");
  }
  if (!(in.classifier_error > 0.0) || in.classifier_error > 1.0) {
    throw RejectedInput(
        "classifier_error must lie in (0, 1]: the guarantee divides by it");
  }
}

void check_preconditions(const BoundInputs& in, double eta, double delta,
                         std::vector<std::string>& violated) {
  if (!(delta > 0.0 && delta < in.min_diversity / 4.0)) {
    violated.push_back("progress-below-quarter-diversity");
  }
  const double budget =
      0.75 * std::min(in.min_diversity,
                      1.0 - in.max_error_on_correct * in.max_error_on_correct);
  if (!(eta < budget)) {
    violated.push_back("perturbation-within-budget");
  }
}

}  // namespace

BoundResult estimation_bound(const BoundInputs& in, double eta, double delta) {
  check_inputs(in);
  if (!(eta > 0.0) || eta >= 1.0) {
    throw RejectedInput("eta must lie in (0, 1)");
  }
  if (!(delta > 0.0)) {
    throw RejectedInput("delta must be positive");
  }

  BoundResult out;
  out.eta = eta;
  out.tau = std::sqrt(1.0 - eta);
  out.delta = delta;
  check_preconditions(in, eta, delta, out.violated);

  const double v = in.max_error_on_correct;
  const double g = in.max_pseudo_agreement;
  const double s = in.min_diversity;
  const double e = in.classifier_error;
  const double tau = out.tau;

  const double numerator =
      (g / tau) * (1.0 + (v / (1.0 - tau)) * ((1.0 - e) / e));
  const double denominator = s / 4.0 - delta + g / tau;
  out.epsilon = numerator / denominator;

  out.accuracy_bound =
      std::max((v / (1.0 - tau)) * (1.0 - e), out.epsilon * e);
  out.iterations = std::ceil(1.0 / delta);
  out.iterations_finite = std::isfinite(out.iterations);
  return out;
}

BoundResult default_knob_bound(const BoundInputs& in) {
  check_inputs(in);

  BoundResult out;
  out.eta = 7.0 / 16.0;
  out.tau = 0.75;
  out.delta = 4.0 * in.max_pseudo_agreement / 3.0;
  check_preconditions(in, out.eta, out.delta, out.violated);

  const double v = in.max_error_on_correct;
  const double g = in.max_pseudo_agreement;
  const double s = in.min_diversity;
  const double e = in.classifier_error;

  out.epsilon =
      (16.0 * g / (3.0 * s)) * (1.0 + 4.0 * v * (1.0 - e) / e);
  out.accuracy_bound = std::max(4.0 * v * (1.0 - e), out.epsilon * e);
  if (g > 0.0) {
    out.iterations = std::ceil(3.0 / (4.0 * g));
    out.iterations_finite = true;
  } else {
    out.iterations = std::numeric_limits<double>::infinity();
    out.iterations_finite = false;
  }
  return out;
}

std::string BoundResult::to_json() const {
  nlohmann::json j;
  j["epsilon"] = epsilon;
  j["accuracy_bound"] = accuracy_bound;
  j["accuracy_bound_percent"] = 100.0 * accuracy_bound;
  if (iterations_finite) {
    j["iterations"] = iterations;
  } else {
    j["iterations"] = nullptr;
  }
  j["iterations_finite"] = iterations_finite;
  j["tau"] = tau;
  j["eta"] = eta;
  j["delta"] = delta;
  j["violated_preconditions"] = violated;
  j["preconditions_hold"] = violated.empty();
  return j.dump(2);
}

double sufficient_iterations(double diversity, double epsilon_target) {
  if (!(diversity > 0.0) || diversity >= 1.0) {
    throw RejectedInput("diversity must lie in (0, 1)");
  }
  if (!(epsilon_target > 0.0) || epsilon_target >= 1.0) {
    throw RejectedInput("epsilon_target must lie in (0, 1)");
  }
  return std::ceil(std::log(1.0 / epsilon_target) / diversity);
}

double diverse_group_variance(double sigma2_all, double pointwise_error,
                              double residual_fraction) {
  if (!(sigma2_all >= 0.0) || sigma2_all > 1.0) {
    throw RejectedInput("sigma2_all must lie in [0, 1]");
  }
  if (!(pointwise_error >= 0.0) || pointwise_error > 1.0) {
    throw RejectedInput("pointwise_error must lie in [0, 1]");
  }
  if (!(residual_fraction > 0.0) || residual_fraction > 1.0) {
    throw RejectedInput("residual_fraction must lie in (0, 1]");
  }
  const double v = pointwise_error;
  return (sigma2_all - (2.0 * v - v * v) * (1.0 - residual_fraction)) /
         residual_fraction;
}

}  // namespace selfcheck
