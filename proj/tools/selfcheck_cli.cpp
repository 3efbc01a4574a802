// selfcheck: estimate a classifier's accuracy on an unlabeled test set and
// flag the points it probably got wrong, by iteratively training ensembles
// that are encouraged to disagree with it on suspected mistakes.
//
// Commands
//   estimate    accuracy estimate for the configured method
//   detect      suspected-mistake indices (plus F1 in evaluation mode)
//   conditions  per-iteration measurements of the guarantee's inputs
//   theory      closed-form bound evaluation and Monte-Carlo verification
//   bench       grid benchmark (dataset pair x method x seed) with ablations
//   gradcheck   analytic gradients vs central finite differences
//
// Every command reads one JSON config (--config), applies --set overrides,
// and writes report.json, table.csv, and summary.md into --out. Exit codes:
// 0 success, 1 compute failure, 2 configuration error, 4 a verified check
// or tolerance failed.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_config.hpp"
#include "cli_run.hpp"
#include "selfcheck/baselines.hpp"
#include "selfcheck/bounds.hpp"
#include "selfcheck/error.hpp"
#include "selfcheck/metrics.hpp"
#include "selfcheck/mlp.hpp"
#include "selfcheck/rng.hpp"
#include "selfcheck/synthetic.hpp"
#include "selfcheck/train.hpp"

namespace selfcheck::cli {
namespace {

using nlohmann::json;

std::string fmt(const char* format, ...) {
  char buffer[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof(buffer), format, args);
  va_end(args);
  return buffer;
}

/// Runs one pipeline stage, annotating any compute failure with the stage
/// name so the error message says where the run died. Config errors pass
/// through untouched (they already carry a field path).
template <typename F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& error) {
    throw std::runtime_error(std::string(name) + ": " + error.what());
  }
}

// --------------------------------------------------------------- output files

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool eval = false;
};

void attach_common_flags(CLI::App* command, CommonFlags& flags) {
  command->add_option("--config", flags.config_path,
                      "JSON run configuration")
      ->required();
  command->add_option("--set", flags.overrides,
                      "Override a config field by dotted path, e.g. "
                      "--set method.iterations=3 (repeatable)");
  command->add_option("--out", flags.out_dir,
                      "Directory for report.json, table.csv, summary.md");
  command->add_option("--seed", flags.seed, "Override the run seed");
  command->add_flag("--eval", flags.eval,
                    "Evaluation mode: load test labels and score the run "
                    "(production runs never read them)");
}

CliConfig load(const CommonFlags& flags) {
  return load_config(flags.config_path, flags.overrides, flags.seed,
                     flags.eval);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("short write to " + path.string());
}

/// Writes the three output files. The timestamp is the only field that may
/// differ between reruns with the same config and seed.
void write_outputs(const CommonFlags& flags, json report,
                   const std::string& table_csv, const std::string& summary_md,
                   const CliConfig& config) {
  report["generated_at_unix"] = static_cast<long long>(std::time(nullptr));
  report["seed"] = config.seed;
  report["config"] = config.echo;
  const std::filesystem::path dir(flags.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", report.dump(2) + "\n");
  write_file(dir / "table.csv", table_csv);
  write_file(dir / "summary.md", summary_md);
  std::cout << "wrote " << (dir / "report.json").string() << ", table.csv, "
            << "summary.md\n";
}

std::string format_double(double value) { return fmt("%.6f", value); }

// ------------------------------------------------- estimate/detect/conditions

struct PipelineOutcome {
  DataBundle data;
  MlpModel classifier;
  std::vector<int> f_labels;
  MethodResult method;
  // Evaluation-mode extras (never filled in production mode).
  std::optional<double> true_accuracy_f;
  std::optional<double> estimation_error_value;
  std::optional<double> f1;
  std::optional<std::size_t> num_mistakes;
};

PipelineOutcome execute_pipeline(const CliConfig& config,
                                 bool collect_conditions) {
  PipelineOutcome out;
  out.data = stage("building datasets", [&] { return build_data(config); });
  out.classifier = stage("training the classifier", [&] {
    return train_classifier(config, out.data, config.seed);
  });
  out.f_labels = stage("predicting on the test set", [&] {
    return argmax_rows(forward(out.classifier, out.data.test.features)
                           .probabilities);
  });
  out.method = stage("running the method", [&] {
    return run_method(config, out.data, out.classifier, config.seed,
                      collect_conditions);
  });

  if (out.data.test_labels.has_value()) {
    const std::vector<int>& truth = *out.data.test_labels;
    out.true_accuracy_f = true_accuracy(out.f_labels, truth);
    if (out.method.estimated_accuracy.has_value())
      out.estimation_error_value =
          std::abs(*out.method.estimated_accuracy - *out.true_accuracy_f);
    const std::vector<std::size_t> mistakes =
        mistake_indices(out.f_labels, truth);
    out.num_mistakes = mistakes.size();
    if (out.method.flagged.has_value())
      out.f1 = f1_error_detection(*out.method.flagged, mistakes);
  }
  return out;
}

json iteration_summaries(const RunResult& run) {
  json rows = json::array();
  const double n = static_cast<double>(run.num_points);
  for (const IterationRecord& record : run.iterations) {
    json row;
    row["iteration"] = record.iteration;
    row["num_flagged"] = record.r_size;
    row["mean_agreement"] = record.mean_agreement;
    row["estimate"] = 1.0 - static_cast<double>(record.r_size) / n;
    rows.push_back(std::move(row));
  }
  return rows;
}

json evaluation_block(const PipelineOutcome& outcome) {
  json block;
  block["true_accuracy"] = *outcome.true_accuracy_f;
  if (outcome.estimation_error_value.has_value())
    block["estimation_error"] = *outcome.estimation_error_value;
  block["num_mistakes"] = *outcome.num_mistakes;
  if (outcome.f1.has_value()) block["f1"] = *outcome.f1;
  if (outcome.method.conditions.has_value())
    block["conditions"] = json::parse(outcome.method.conditions->to_json());
  return block;
}

int cmd_estimate(const CommonFlags& flags) {
  const CliConfig config = load(flags);
  const PipelineOutcome outcome =
      execute_pipeline(config, /*collect_conditions=*/config.evaluation_mode);
  const MethodResult& method = outcome.method;

  json report;
  report["command"] = "estimate";
  report["evaluation_mode"] = config.evaluation_mode;
  report["method"] = method.method;
  report["num_test_points"] = outcome.data.test.size();
  report["estimated_accuracy"] = *method.estimated_accuracy;
  if (method.flagged.has_value())
    report["num_flagged"] = method.flagged->size();
  if (method.threshold.has_value()) report["threshold"] = *method.threshold;
  if (method.run.has_value())
    report["iterations"] = iteration_summaries(*method.run);
  if (config.evaluation_mode) report["evaluation"] = evaluation_block(outcome);

  std::ostringstream csv;
  std::ostringstream md;
  md << "# Accuracy estimate\n\n";
  md << "- method: `" << method.method << "`\n";
  md << "- test points: " << outcome.data.test.size() << "\n";
  md << "- estimated accuracy: **" << format_double(*method.estimated_accuracy)
     << "**\n";
  if (method.flagged.has_value())
    md << "- flagged as suspected mistakes: " << method.flagged->size()
       << "\n";
  if (config.evaluation_mode) {
    md << "- true accuracy: " << format_double(*outcome.true_accuracy_f)
       << "\n";
    md << "- estimation error: "
       << format_double(*outcome.estimation_error_value) << "\n";
    if (outcome.f1.has_value())
      md << "- mistake-detection F1: " << format_double(*outcome.f1) << "\n";
  }
  if (method.run.has_value()) {
    csv << "iteration,num_flagged,mean_agreement,estimate\n";
    md << "\n| iteration | flagged | mean agreement | estimate |\n";
    md << "|---|---|---|---|\n";
    const double n = static_cast<double>(method.run->num_points);
    for (const IterationRecord& record : method.run->iterations) {
      const double estimate =
          1.0 - static_cast<double>(record.r_size) / n;
      csv << record.iteration << "," << record.r_size << ","
          << format_double(record.mean_agreement) << ","
          << format_double(estimate) << "\n";
      md << "| " << record.iteration << " | " << record.r_size << " | "
         << format_double(record.mean_agreement) << " | "
         << format_double(estimate) << " |\n";
    }
  } else {
    csv << "method,estimated_accuracy\n";
    csv << method.method << "," << format_double(*method.estimated_accuracy)
        << "\n";
  }

  write_outputs(flags, std::move(report), csv.str(), md.str(), config);
  std::cout << fmt("estimated accuracy %.4f (method %s, %zu test points)\n",
                   *method.estimated_accuracy, method.method.c_str(),
                   outcome.data.test.size());
  return 0;
}

int cmd_detect(const CommonFlags& flags) {
  const CliConfig config = load(flags);
  if (!method_produces_flags(config.method.name))
    throw ConfigError("method.name: \"" + config.method.name +
                      "\" estimates accuracy only and cannot flag points; "
                      "pick an ensemble or score method for detect");
  const PipelineOutcome outcome =
      execute_pipeline(config, /*collect_conditions=*/false);
  const MethodResult& method = outcome.method;

  json report;
  report["command"] = "detect";
  report["evaluation_mode"] = config.evaluation_mode;
  report["method"] = method.method;
  report["num_test_points"] = outcome.data.test.size();
  report["num_flagged"] = method.flagged->size();
  report["flagged_indices"] = *method.flagged;
  if (method.threshold.has_value()) report["threshold"] = *method.threshold;
  if (method.run.has_value())
    report["iterations"] = iteration_summaries(*method.run);
  if (config.evaluation_mode) report["evaluation"] = evaluation_block(outcome);

  std::vector<bool> is_mistake;
  if (config.evaluation_mode) {
    is_mistake.assign(outcome.data.test.size(), false);
    for (std::size_t j :
         mistake_indices(outcome.f_labels, *outcome.data.test_labels))
      is_mistake[j] = true;
  }

  std::ostringstream csv;
  csv << (config.evaluation_mode ? "index,is_true_mistake\n" : "index\n");
  for (std::size_t index : *method.flagged) {
    csv << index;
    if (config.evaluation_mode) csv << "," << (is_mistake[index] ? 1 : 0);
    csv << "\n";
  }

  std::ostringstream md;
  md << "# Suspected mistakes\n\n";
  md << "- method: `" << method.method << "`\n";
  md << "- flagged " << method.flagged->size() << " of "
     << outcome.data.test.size() << " test points\n";
  if (config.evaluation_mode) {
    md << "- true mistakes: " << *outcome.num_mistakes << "\n";
    md << "- detection F1: " << format_double(*outcome.f1) << "\n";
  }

  write_outputs(flags, std::move(report), csv.str(), md.str(), config);
  std::cout << fmt("flagged %zu of %zu test points", method.flagged->size(),
                   outcome.data.test.size());
  if (outcome.f1.has_value()) std::cout << fmt(" (F1 %.4f)", *outcome.f1);
  std::cout << "\n";
  return 0;
}

int cmd_conditions(const CommonFlags& flags) {
  const CliConfig config = load(flags);
  if (!config.evaluation_mode)
    throw ConfigError(
        "evaluation_mode: measuring run conditions needs the true test "
        "labels; pass --eval or set evaluation_mode=true");
  if (!is_ensemble_method(config.method.name))
    throw ConfigError("method.name: conditions are defined for the ensemble "
                      "methods, not \"" +
                      config.method.name + "\"");
  const PipelineOutcome outcome =
      execute_pipeline(config, /*collect_conditions=*/true);
  const ConditionReport& conditions = *outcome.method.conditions;

  json report;
  report["command"] = "conditions";
  report["evaluation_mode"] = true;
  report["method"] = outcome.method.method;
  report["num_test_points"] = outcome.data.test.size();
  report["estimated_accuracy"] = *outcome.method.estimated_accuracy;
  report["evaluation"] = evaluation_block(outcome);

  std::ostringstream md;
  md << "# Run conditions\n\n";
  md << "Worst case over iterations of the quantities the estimation-error "
        "guarantee consumes.\n\n";
  md << "- method: `" << outcome.method.method << "`\n";
  md << "- classifier accuracy: " << format_double(conditions.accuracy_f)
     << "\n";
  md << "- max mean error on correct points: "
     << format_double(conditions.max_error_on_correct) << "\n";
  md << "- max pointwise error on correct points: "
     << format_double(conditions.max_error_on_correct_pointwise) << "\n";
  md << "- max agreement on the trained flag set: "
     << (conditions.pseudo_agreement_defined
             ? format_double(conditions.max_pseudo_agreement)
             : std::string("undefined (no iteration trained on a non-empty "
                           "set)"))
     << "\n";
  md << "- min diversity over the hard mistakes: "
     << (conditions.diversity_defined
             ? format_double(conditions.min_diversity)
             : std::string("undefined (no hard mistakes)"))
     << "\n";
  md << "- min diversity over all points: "
     << format_double(conditions.min_diversity_all) << "\n";
  md << "\nPer-iteration rows are in `table.csv`.\n";

  write_outputs(flags, std::move(report), conditions.to_csv(), md.str(),
                config);
  std::cout << fmt(
      "conditions over %d iterations: error-on-correct <= %.4f, "
      "flag-set agreement <= %.4f, diversity >= %.4f\n",
      static_cast<int>(conditions.rows.size()),
      conditions.max_error_on_correct, conditions.max_pseudo_agreement,
      conditions.min_diversity_all);
  return 0;
}

// --------------------------------------------------------------------- theory

int theory_bounds(const CommonFlags& flags, const CliConfig& config) {
  const TheoryBoundsConfig& spec = config.theory.bounds;
  const bool general = spec.eta.has_value();
  const BoundResult result = stage("evaluating the bound", [&] {
    return general ? estimation_bound(spec.inputs, *spec.eta, *spec.delta)
                   : default_knob_bound(spec.inputs);
  });

  json report;
  report["command"] = "theory";
  report["mode"] = "bounds";
  report["form"] = general ? "general" : "canonical-knobs";
  report["inputs"] = {
      {"max_error_on_correct", spec.inputs.max_error_on_correct},
      {"max_pseudo_agreement", spec.inputs.max_pseudo_agreement},
      {"min_diversity", spec.inputs.min_diversity},
      {"classifier_error", spec.inputs.classifier_error}};
  report["bound"] = json::parse(result.to_json());
  if (spec.observed_error.has_value()) {
    report["observed_error"] = *spec.observed_error;
    report["bound_exceeds_observed"] =
        result.accuracy_bound > *spec.observed_error;
  }

  std::ostringstream csv;
  csv << "quantity,value\n";
  csv << "epsilon," << fmt("%.17g", result.epsilon) << "\n";
  csv << "accuracy_bound," << fmt("%.17g", result.accuracy_bound) << "\n";
  csv << "iterations,"
      << (result.iterations_finite ? fmt("%.0f", result.iterations)
                                   : std::string("inf"))
      << "\n";
  csv << "tau," << fmt("%.17g", result.tau) << "\n";
  csv << "eta," << fmt("%.17g", result.eta) << "\n";
  csv << "delta," << fmt("%.17g", result.delta) << "\n";
  for (const std::string& name : result.violated)
    csv << "violated_precondition," << name << "\n";

  std::ostringstream md;
  md << "# Estimation-error guarantee\n\n";
  md << "- form: " << (general ? "general (explicit eta and delta)"
                               : "canonical knobs (eta = 7/16, delta = 4g/3)")
     << "\n";
  md << "- epsilon (flag-set slack): " << fmt("%.8f", result.epsilon) << "\n";
  md << "- accuracy-estimate bound: " << fmt("%.8f", result.accuracy_bound)
     << "\n";
  md << "- iterations that suffice: "
     << (result.iterations_finite ? fmt("%.0f", result.iterations)
                                  : std::string("unbounded"))
     << "\n";
  if (spec.observed_error.has_value())
    md << "- observed error " << fmt("%.6f", *spec.observed_error)
       << (result.accuracy_bound > *spec.observed_error
               ? " is covered by the bound\n"
               : " EXCEEDS the bound\n");
  if (result.violated.empty()) {
    md << "- all preconditions hold\n";
  } else {
    md << "- violated preconditions (numbers above are still reported):\n";
    for (const std::string& name : result.violated)
      md << "  - `" << name << "`\n";
  }

  write_outputs(flags, std::move(report), csv.str(), md.str(), config);
  std::cout << fmt("epsilon %.6f, accuracy bound %.6f", result.epsilon,
                   result.accuracy_bound);
  if (!result.violated.empty())
    std::cout << fmt(" [%zu precondition(s) violated]",
                     result.violated.size());
  std::cout << "\n";
  return result.violated.empty() ? 0 : 4;
}

int theory_sweep(const CommonFlags& flags, const CliConfig& config) {
  const TheorySweepConfig& spec = config.theory.sweep;
  // The grid covers both regimes, several classifier error levels, and
  // several (diversity target, pointwise error) pairs. The perturbation
  // budget eta is placed mid-window between its feasibility edges, so every
  // instance satisfies the preconditions by construction and any inequality
  // violation is a real defect.
  const std::vector<double> classifier_errors = {0.25, 0.5, 0.75};
  const std::vector<std::pair<double, double>> diversity_and_error = {
      {0.2, 0.0}, {0.2, 0.05}, {0.45, 0.0}, {0.45, 0.15}};
  const std::vector<double> pseudo_levels = {0.0, 0.05};
  const std::vector<double> confident_shares = {0.0, 0.3};

  std::size_t violations = 0;
  std::size_t precondition_failures = 0;
  std::size_t checks_run = 0;
  std::ostringstream csv;
  csv << "trial,num_classes,classifier_error,regime,diversity_target,"
         "pointwise_error,eta,inequalities_checked,violations\n";

  for (int i = 0; i < spec.trials; ++i) {
    const auto index = static_cast<std::size_t>(i);
    SyntheticSpec process_spec;
    process_spec.num_points = static_cast<std::size_t>(spec.num_points);
    process_spec.num_classes =
        spec.num_classes[index % spec.num_classes.size()];
    process_spec.classifier_error =
        classifier_errors[(index / 3) % classifier_errors.size()];
    const auto& [target, nu_pt] =
        diversity_and_error[(index / 9) % diversity_and_error.size()];
    process_spec.regime = (index / 144) % 2 == 0 ? SyntheticRegime::kIdealized
                                                 : SyntheticRegime::kRelaxed;
    process_spec.error_on_correct =
        process_spec.regime == SyntheticRegime::kIdealized ? nu_pt
                                                           : nu_pt / 2.0;
    process_spec.confident_slack = nu_pt / 2.0;
    if (process_spec.regime == SyntheticRegime::kIdealized) {
      process_spec.pseudo_disagreement =
          pseudo_levels[(index / 36) % pseudo_levels.size()];
    } else {
      process_spec.pseudo_agreement =
          pseudo_levels[(index / 36) % pseudo_levels.size()];
    }
    process_spec.diversity_target = target;
    process_spec.confident_share =
        confident_shares[(index / 72) % confident_shares.size()];
    process_spec.seed = derive_seed(config.seed, "sweep-instance",
                                    static_cast<std::uint64_t>(i));

    const double lower = 2.0 * nu_pt - nu_pt * nu_pt;
    const double upper = 0.9 * std::min(target, 1.0 - nu_pt * nu_pt);
    const double eta = 0.5 * (lower + upper);

    SyntheticProcess process(process_spec);
    FrameworkConfig loop;
    loop.iterations = spec.iterations;
    loop.mode = FrameworkConfig::Mode::kThreshold;
    loop.tau = std::sqrt(1.0 - eta);
    loop.seed = process_spec.seed;

    std::size_t trial_checks = 0;
    std::size_t trial_violations = 0;
    run_self_training(
        process, process.f_labels(), loop,
        [&](int, const Votes& votes, const PseudoLabelSet& r_in,
            const PseudoLabelSet& r_out) {
          const FlagGrowthCheck check =
              check_flag_set_growth(votes, process.f_labels(),
                                    process.true_labels(), r_in, r_out, eta);
          ++checks_run;
          trial_checks += check.inequalities.size();
          for (const InequalityRecord& record : check.inequalities)
            if (!record.pass) ++trial_violations;
          precondition_failures += check.precondition_violations.size();
        });
    violations += trial_violations;

    csv << i << "," << process_spec.num_classes << ","
        << format_double(process_spec.classifier_error) << ","
        << (process_spec.regime == SyntheticRegime::kIdealized ? "idealized"
                                                               : "relaxed")
        << "," << format_double(target) << "," << format_double(nu_pt) << ","
        << format_double(eta) << "," << trial_checks << "," << trial_violations
        << "\n";
  }

  const std::size_t inequality_evals = 4 * checks_run;
  json report;
  report["command"] = "theory";
  report["mode"] = "sweep";
  report["trials"] = spec.trials;
  report["num_points"] = spec.num_points;
  report["iterations_per_trial"] = spec.iterations;
  report["inequality_evaluations"] = inequality_evals;
  report["violations"] = violations;
  report["precondition_failures"] = precondition_failures;
  report["all_hold"] = violations == 0 && precondition_failures == 0;

  std::ostringstream md;
  md << "# Flag-set growth sweep\n\n";
  md << "- instances: " << spec.trials << " (" << spec.num_points
     << " points each)\n";
  md << "- inequality evaluations: " << inequality_evals << "\n";
  md << "- violations: " << violations << "\n";
  md << "- precondition failures: " << precondition_failures << "\n";
  md << "\nEvery instance is constructed to satisfy the guarantee's "
        "preconditions, with the perturbation budget placed mid-window; the "
        "four per-iteration inequalities must then hold exactly.\n";

  write_outputs(flags, std::move(report), csv.str(), md.str(), config);
  std::cout << fmt("%zu inequality evaluations over %d instances: %zu "
                   "violations, %zu precondition failures\n",
                   inequality_evals, spec.trials, violations,
                   precondition_failures);
  return violations == 0 && precondition_failures == 0 ? 0 : 4;
}

int theory_geometric(const CommonFlags& flags, const CliConfig& config) {
  const TheoryGeometricConfig& spec = config.theory.geometric;
  SyntheticSpec process_spec;
  process_spec.num_points = static_cast<std::size_t>(spec.num_points);
  process_spec.num_classes = spec.num_classes;
  process_spec.classifier_error = spec.classifier_error;
  process_spec.regime = SyntheticRegime::kIdealized;
  process_spec.error_on_correct = spec.error_on_correct;
  process_spec.confident_slack = spec.confident_slack;
  process_spec.pseudo_disagreement = spec.pseudo_disagreement;
  process_spec.confident_share = spec.confident_share;
  process_spec.diversity_target = spec.diversity_target;
  process_spec.seed = derive_seed(config.seed, "geometric-process");

  const GeometricCheck check = stage("running the synthetic process", [&] {
    SyntheticProcess process(process_spec);
    return verify_geometric_shrinkage(process, spec.eta, spec.iterations,
                                      derive_seed(config.seed,
                                                  "geometric-loop"));
  });

  const double iterations_needed = stage("computing sufficient iterations", [&] {
    return sufficient_iterations(spec.diversity_target, spec.epsilon_target);
  });
  const double final_share =
      check.mistakes == 0
          ? 0.0
          : static_cast<double>(check.residual_trace.back()) /
                static_cast<double>(check.mistakes);
  const bool target_applicable =
      static_cast<double>(spec.iterations) >= iterations_needed;
  const bool target_reached =
      !target_applicable || final_share <= spec.epsilon_target;
  const bool pass =
      check.bound_holds && check.inequalities_hold && target_reached;

  json report;
  report["command"] = "theory";
  report["mode"] = "geometric";
  report["check"] = json::parse(check.to_json());
  report["epsilon_target"] = spec.epsilon_target;
  report["iterations_needed_for_target"] = iterations_needed;
  report["target_applicable"] = target_applicable;
  report["final_residual_share"] = final_share;
  report["pass"] = pass;

  std::ostringstream csv;
  csv << "iteration,undetected_mistakes,allowed_by_bound\n";
  for (std::size_t t = 0; t < check.residual_trace.size(); ++t)
    csv << (t + 1) << "," << check.residual_trace[t] << ","
        << fmt("%.6f", check.bound_trace[t]) << "\n";

  std::ostringstream md;
  md << "# Geometric shrinkage of undetected mistakes\n\n";
  md << "- mistakes at the start: " << check.mistakes << "\n";
  md << "- per-iteration detection rate: " << format_double(check.rate)
     << "\n";
  md << "- decay bound holds every iteration: "
     << (check.bound_holds ? "yes" : "**no**") << "\n";
  md << "- per-iteration inequalities hold: "
     << (check.inequalities_hold ? "yes" : "**no**") << "\n";
  md << "- final undetected share: " << fmt("%.6f", final_share)
     << " (target " << fmt("%.6f", spec.epsilon_target) << " after "
     << fmt("%.0f", iterations_needed) << " iterations"
     << (target_applicable ? "" : "; run too short to apply") << ")\n";
  md << "- estimated accuracy " << format_double(check.estimated_accuracy)
     << " vs true " << format_double(check.true_accuracy) << "\n";

  write_outputs(flags, std::move(report), csv.str(), md.str(), config);
  std::cout << fmt("geometric decay %s over %d iterations; final residual "
                   "share %.6f\n",
                   pass ? "holds" : "VIOLATED", spec.iterations, final_share);
  return pass ? 0 : 4;
}

int cmd_theory(const CommonFlags& flags) {
  const CliConfig config = load(flags);
  if (config.theory.mode == "sweep") return theory_sweep(flags, config);
  if (config.theory.mode == "geometric")
    return theory_geometric(flags, config);
  return theory_bounds(flags, config);
}

// ---------------------------------------------------------------------- bench

struct BenchRow {
  std::string pair;
  std::string method;
  std::uint64_t seed = 0;
  double true_accuracy_f = 0.0;
  double estimate = 0.0;
  double estimation_error_value = 0.0;
  std::optional<double> f1;
  std::vector<double> error_by_iteration;  // ensemble methods only
};

BenchRow run_bench_cell(const CliConfig& base, const GeneratorConfig& generator,
                        const std::string& pair_name,
                        const std::string& method_name, std::uint64_t seed) {
  CliConfig cell = base;
  cell.method.name = method_name;
  cell.evaluation_mode = true;
  cell.seed = seed;

  const DataBundle data = build_bench_data(generator, seed);
  const MlpModel classifier = train_classifier(cell, data, seed);
  const std::vector<int> f_labels =
      argmax_rows(forward(classifier, data.test.features).probabilities);
  const MethodResult method =
      run_method(cell, data, classifier, seed, /*collect_conditions=*/false);

  BenchRow row;
  row.pair = pair_name;
  row.method = method_name;
  row.seed = seed;
  row.true_accuracy_f = true_accuracy(f_labels, *data.test_labels);
  row.estimate = *method.estimated_accuracy;
  row.estimation_error_value = std::abs(row.estimate - row.true_accuracy_f);
  if (method.flagged.has_value())
    row.f1 = f1_error_detection(*method.flagged,
                                mistake_indices(f_labels, *data.test_labels));
  if (method.run.has_value()) {
    const double n = static_cast<double>(method.run->num_points);
    for (const IterationRecord& record : method.run->iterations) {
      const double estimate_t =
          1.0 - static_cast<double>(record.r_size) / n;
      row.error_by_iteration.push_back(
          std::abs(estimate_t - row.true_accuracy_f));
    }
  }
  return row;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  int count = 0;
};

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.count = static_cast<int>(values.size());
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::string pm(const MeanStd& stat) {
  return fmt("%.4f±%.4f", stat.mean, stat.std);
}

int cmd_bench(const CommonFlags& flags) {
  const CliConfig config = load(flags);
  if (config.bench.pairs.empty())
    throw ConfigError("bench.pairs: the bench command needs at least one "
                      "dataset pair (add a \"bench\" section)");

  const int iterations = config.method.iterations;
  std::vector<BenchRow> rows;
  for (const BenchPair& pair : config.bench.pairs)
    for (const std::string& method : config.bench.methods)
      for (std::uint64_t seed : config.bench.seeds)
        rows.push_back(stage("running a grid cell", [&] {
          return run_bench_cell(config, pair.generator, pair.name, method,
                                seed);
        }));
  std::sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.pair, a.method, a.seed) <
           std::tie(b.pair, b.method, b.seed);
  });

  // Aggregates per (pair, method) across seeds.
  std::map<std::pair<std::string, std::string>,
           std::pair<std::vector<double>, std::vector<double>>>
      groups;  // -> (errors, f1s)
  for (const BenchRow& row : rows) {
    auto& group = groups[{row.pair, row.method}];
    group.first.push_back(row.estimation_error_value);
    if (row.f1.has_value()) group.second.push_back(*row.f1);
  }

  // Ablations rerun the first ensemble method on the first pair across all
  // seeds with one knob varied.
  std::string ablation_method;
  for (const std::string& name : config.bench.methods)
    if (is_ensemble_method(name)) {
      ablation_method = name;
      break;
    }
  if (ablation_method.empty()) ablation_method = "ours-ri";
  const BenchPair& first_pair = config.bench.pairs.front();

  json ablation_members = json::array();
  for (int members : config.bench.ablate_members) {
    CliConfig variant = config;
    variant.method.members = members;
    std::vector<double> errors;
    for (std::uint64_t seed : config.bench.seeds)
      errors.push_back(stage("running a members ablation cell", [&] {
        return run_bench_cell(variant, first_pair.generator, first_pair.name,
                              ablation_method, seed)
            .estimation_error_value;
      }));
    const MeanStd stat = mean_std(errors);
    ablation_members.push_back({{"members", members},
                                {"estimation_error_mean", stat.mean},
                                {"estimation_error_std", stat.std}});
  }

  json ablation_weight = json::array();
  for (double weight : config.bench.ablate_pseudo_weight) {
    CliConfig variant = config;
    variant.method.pseudo_weight = weight;
    std::vector<double> errors;
    for (std::uint64_t seed : config.bench.seeds)
      errors.push_back(stage("running a pseudo-weight ablation cell", [&] {
        return run_bench_cell(variant, first_pair.generator, first_pair.name,
                              ablation_method, seed)
            .estimation_error_value;
      }));
    const MeanStd stat = mean_std(errors);
    ablation_weight.push_back({{"pseudo_weight", weight},
                               {"estimation_error_mean", stat.mean},
                               {"estimation_error_std", stat.std}});
  }

  // ------------------------------------------------------------ serialization
  json report;
  report["command"] = "bench";
  report["grid"] = {{"pairs", config.bench.pairs.size()},
                    {"methods", config.bench.methods},
                    {"seeds", config.bench.seeds},
                    {"rows", rows.size()}};
  json row_array = json::array();
  for (const BenchRow& row : rows) {
    json entry;
    entry["pair"] = row.pair;
    entry["method"] = row.method;
    entry["seed"] = row.seed;
    entry["true_accuracy"] = row.true_accuracy_f;
    entry["estimated_accuracy"] = row.estimate;
    entry["estimation_error"] = row.estimation_error_value;
    if (row.f1.has_value()) entry["f1"] = *row.f1;
    if (!row.error_by_iteration.empty())
      entry["estimation_error_by_iteration"] = row.error_by_iteration;
    row_array.push_back(std::move(entry));
  }
  report["rows"] = std::move(row_array);
  json aggregate_array = json::array();
  for (const auto& [key, values] : groups) {
    const MeanStd err = mean_std(values.first);
    json entry;
    entry["pair"] = key.first;
    entry["method"] = key.second;
    entry["estimation_error_mean"] = err.mean;
    entry["estimation_error_std"] = err.std;
    if (!values.second.empty()) {
      const MeanStd f1 = mean_std(values.second);
      entry["f1_mean"] = f1.mean;
      entry["f1_std"] = f1.std;
    }
    aggregate_array.push_back(std::move(entry));
  }
  report["aggregates"] = std::move(aggregate_array);
  report["ablations"] = {{"members", std::move(ablation_members)},
                         {"pseudo_weight", std::move(ablation_weight)}};

  std::ostringstream csv;
  csv << "pair,method,seed,true_accuracy,estimated_accuracy,estimation_error,"
         "f1";
  for (int t = 1; t <= iterations; ++t) csv << ",err_T" << t;
  csv << "\n";
  for (const BenchRow& row : rows) {
    csv << row.pair << "," << row.method << "," << row.seed << ","
        << format_double(row.true_accuracy_f) << ","
        << format_double(row.estimate) << ","
        << format_double(row.estimation_error_value) << ","
        << (row.f1.has_value() ? format_double(*row.f1) : std::string());
    for (int t = 0; t < iterations; ++t) {
      csv << ",";
      if (t < static_cast<int>(row.error_by_iteration.size()))
        csv << format_double(row.error_by_iteration[static_cast<std::size_t>(t)]);
    }
    csv << "\n";
  }

  std::ostringstream md;
  md << "# Benchmark grid\n\n";
  md << "- " << config.bench.pairs.size() << " dataset pairs x "
     << config.bench.methods.size() << " methods x "
     << config.bench.seeds.size() << " seeds = " << rows.size() << " cells\n";
  md << "- per-cell rows: `table.csv`\n\n";
  md << "## Estimation error (mean±std over seeds)\n\n";
  md << "| pair | method | estimation error | F1 |\n|---|---|---|---|\n";
  for (const auto& [key, values] : groups) {
    md << "| " << key.first << " | " << key.second << " | "
       << pm(mean_std(values.first)) << " | "
       << (values.second.empty() ? std::string("—")
                                 : pm(mean_std(values.second)))
       << " |\n";
  }
  bool any_iteration_rows = false;
  for (const BenchRow& row : rows)
    any_iteration_rows |= !row.error_by_iteration.empty();
  if (any_iteration_rows) {
    md << "\n## Estimation error by iteration count (mean over seeds)\n\n";
    md << "| pair | method |";
    for (int t = 1; t <= iterations; ++t) md << " T=" << t << " |";
    md << "\n|---|---|";
    for (int t = 1; t <= iterations; ++t) md << "---|";
    md << "\n";
    for (const auto& [key, unused] : groups) {
      (void)unused;
      std::vector<std::vector<double>> per_iteration(
          static_cast<std::size_t>(iterations));
      for (const BenchRow& row : rows) {
        if (row.pair != key.first || row.method != key.second) continue;
        for (std::size_t t = 0; t < row.error_by_iteration.size(); ++t)
          per_iteration[t].push_back(row.error_by_iteration[t]);
      }
      if (per_iteration.front().empty()) continue;
      md << "| " << key.first << " | " << key.second << " |";
      for (const std::vector<double>& errors : per_iteration)
        md << " " << fmt("%.4f", mean_std(errors).mean) << " |";
      md << "\n";
    }
  }
  const json& members_ablation = report["ablations"]["members"];
  if (!members_ablation.empty()) {
    md << "\n## Ablation: ensemble size (" << ablation_method << ", "
       << first_pair.name << ")\n\n| members | estimation error |\n|---|---|\n";
    for (const json& entry : members_ablation)
      md << "| " << entry["members"].get<int>() << " | "
         << fmt("%.4f±%.4f", entry["estimation_error_mean"].get<double>(),
                entry["estimation_error_std"].get<double>())
         << " |\n";
  }
  const json& weight_ablation = report["ablations"]["pseudo_weight"];
  if (!weight_ablation.empty()) {
    md << "\n## Ablation: pseudo-label weight (" << ablation_method << ", "
       << first_pair.name
       << ")\n\n| pseudo_weight | estimation error |\n|---|---|\n";
    for (const json& entry : weight_ablation)
      md << "| " << entry["pseudo_weight"].get<double>() << " | "
         << fmt("%.4f±%.4f", entry["estimation_error_mean"].get<double>(),
                entry["estimation_error_std"].get<double>())
         << " |\n";
  }

  write_outputs(flags, std::move(report), csv.str(), md.str(), config);
  std::cout << fmt("bench grid complete: %zu cells (%zu pairs x %zu methods "
                   "x %zu seeds)\n",
                   rows.size(), config.bench.pairs.size(),
                   config.bench.methods.size(), config.bench.seeds.size());
  return 0;
}

// ------------------------------------------------------------------ gradcheck

int cmd_gradcheck(const CommonFlags& flags) {
  const CliConfig config = load(flags);
  const GradcheckConfig& spec = config.gradcheck;

  // Central finite differences are only a valid oracle away from activation
  // kinks, so each drawn instance is screened first: (a) no batch row may
  // produce an all-zero encoder output (zero-initialized biases then put
  // downstream pre-activations exactly on the kink, where one-sided slopes
  // disagree with any derivative convention), and (b) the numeric gradients
  // at two step sizes must agree (a step-dependent numeric gradient means a
  // kink sits inside the probe window). Neither screen looks at the analytic
  // gradients, so a genuine defect cannot be screened away.
  double max_error = 0.0;
  int redraws = 0;
  int failed_draws = 0;
  std::ostringstream csv;
  csv << "trial,max_relative_error,redraws\n";

  for (int trial = 0; trial < spec.trials; ++trial) {
    const auto trial_index = static_cast<std::uint64_t>(trial);
    Rng meta = derive_rng(config.seed, "gradcheck-shape", trial_index);
    MlpArchitecture arch;
    arch.input_dim = 2 + static_cast<int>(meta.uniform_int(3));
    if (meta.uniform() < 0.7)
      arch.encoder_widths = {3 + static_cast<int>(meta.uniform_int(3))};
    if (meta.uniform() < 0.4) arch.predictor_hidden = {3};
    arch.num_classes = 2 + static_cast<int>(meta.uniform_int(3));
    const std::size_t rows = 3 + meta.uniform_int(4);
    const std::size_t pseudo_rows = meta.uniform_int(3);
    const bool use_mmd = spec.with_mmd && trial % 2 == 0;
    const double pseudo_weight = pseudo_rows == 0 ? 0.0 : 0.3;

    int trial_redraws = 0;
    bool ok = false;
    for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
      const auto attempt_index = static_cast<std::uint64_t>(attempt);
      Rng init = derive_rng(config.seed, "gradcheck-init", trial_index,
                            attempt_index);
      Rng data = derive_rng(config.seed, "gradcheck-data", trial_index,
                            attempt_index);
      const MlpModel model = make_mlp(arch, init);

      Matrix features(rows, static_cast<std::size_t>(arch.input_dim));
      for (double& value : features.data()) value = data.normal();
      std::vector<int> labels(rows);
      for (int& label : labels)
        label = static_cast<int>(
            data.uniform_int(static_cast<std::uint64_t>(arch.num_classes)));
      Matrix pseudo_features(pseudo_rows,
                             static_cast<std::size_t>(arch.input_dim));
      for (double& value : pseudo_features.data()) value = data.normal();
      std::vector<int> pseudo_labels(pseudo_rows);
      for (int& label : pseudo_labels)
        label = static_cast<int>(
            data.uniform_int(static_cast<std::uint64_t>(arch.num_classes)));
      std::optional<MmdTerm> mmd;
      if (use_mmd) {
        MmdTerm term;
        term.target_features =
            Matrix(3 + data.uniform_int(3),
                   static_cast<std::size_t>(arch.input_dim));
        for (double& value : term.target_features.data())
          value = data.normal();
        term.weight = 0.5;
        term.bandwidth = 1.0;
        mmd = std::move(term);
      }

      const auto all_zero_row = [](const Matrix& representation) {
        for (std::size_t i = 0; i < representation.rows(); ++i) {
          bool zero = true;
          for (std::size_t j = 0; j < representation.cols(); ++j)
            zero &= representation(i, j) == 0.0;
          if (zero) return true;
        }
        return false;
      };
      bool dead = all_zero_row(encode(model, features));
      if (pseudo_weight > 0.0 && pseudo_rows > 0)
        dead = dead || all_zero_row(encode(model, pseudo_features));
      if (dead) {
        ++trial_redraws;
        continue;
      }

      const MlpGradients coarse = finite_difference_gradients(
          model, features, labels, pseudo_features, pseudo_labels,
          pseudo_weight, mmd, 1e-5);
      const MlpGradients fine = finite_difference_gradients(
          model, features, labels, pseudo_features, pseudo_labels,
          pseudo_weight, mmd, 2e-6);
      if (max_relative_gradient_error(coarse, fine) > 1e-4) {
        ++trial_redraws;
        continue;
      }

      const double error =
          grad_check(model, features, labels, pseudo_features, pseudo_labels,
                     pseudo_weight, mmd, spec.step);
      max_error = std::max(max_error, error);
      csv << trial << "," << fmt("%.3e", error) << "," << trial_redraws
          << "\n";
      ok = true;
    }
    redraws += trial_redraws;
    if (!ok) {
      ++failed_draws;
      csv << trial << ",no-valid-draw," << trial_redraws << "\n";
    }
  }

  const bool pass = failed_draws == 0 && max_error < spec.tolerance;
  json report;
  report["command"] = "gradcheck";
  report["trials"] = spec.trials;
  report["with_mmd"] = spec.with_mmd;
  report["step"] = spec.step;
  report["tolerance"] = spec.tolerance;
  report["max_relative_error"] = max_error;
  report["kink_redraws"] = redraws;
  report["trials_without_valid_draw"] = failed_draws;
  report["pass"] = pass;

  std::ostringstream md;
  md << "# Gradient cross-check\n\n";
  md << "- trials: " << spec.trials << " (alignment term active on half)\n";
  md << "- max relative error (analytic vs central differences): "
     << fmt("%.3e", max_error) << "\n";
  md << "- tolerance: " << fmt("%.1e", spec.tolerance) << "\n";
  md << "- redraws due to activation kinks in the probe window: " << redraws
     << "\n";
  md << "- verdict: " << (pass ? "PASS" : "**FAIL**") << "\n";

  write_outputs(flags, std::move(report), csv.str(), md.str(), config);
  std::cout << fmt("gradient check %s: max relative error %.3e over %d "
                   "trials (%d kink redraws)\n",
                   pass ? "passed" : "FAILED", max_error, spec.trials,
                   redraws);
  return pass ? 0 : 4;
}

}  // namespace
}  // namespace selfcheck::cli

int main(int argc, char** argv) {
  using namespace selfcheck::cli;

  CLI::App app{
      "selfcheck: estimate a classifier's accuracy on unlabeled test data "
      "and flag suspected mistakes via self-training ensembles"};
  app.require_subcommand(1);

  CommonFlags flags;
  int (*handler)(const CommonFlags&) = nullptr;

  const auto add = [&](const char* name, const char* description,
                       int (*command)(const CommonFlags&)) {
    CLI::App* sub = app.add_subcommand(name, description);
    attach_common_flags(sub, flags);
    sub->callback([&handler, command] { handler = command; });
    return sub;
  };

  add("estimate", "Estimate accuracy on the unlabeled test set",
      cmd_estimate);
  add("detect", "Flag test points the classifier probably got wrong",
      cmd_detect);
  add("conditions",
      "Measure the per-iteration quantities the guarantees consume "
      "(needs --eval)",
      cmd_conditions);
  add("theory",
      "Evaluate the closed-form guarantees or verify them by Monte-Carlo",
      cmd_theory);
  add("bench", "Run a benchmark grid over dataset pairs, methods, and seeds",
      cmd_bench);
  add("gradcheck",
      "Cross-check analytic gradients against finite differences",
      cmd_gradcheck);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    return app.exit(error);
  }

  try {
    return handler(flags);
  } catch (const ConfigError& error) {
    std::cerr << "config error at " << error.what() << "\n";
    return 2;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
}
