#include "cli_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string_view>

#include "selfcheck/datagen.hpp"
#include "selfcheck/error.hpp"

namespace selfcheck::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

std::string join(const std::string& path, std::string_view key) {
  if (path.empty()) return std::string(key);
  return path + "." + std::string(key);
}

std::string type_name(const json& value) {
  switch (value.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "integer";
    case json::value_t::number_float: return "number";
    case json::value_t::string: return "string";
    case json::value_t::array: return "array";
    case json::value_t::object: return "object";
    default: return "unsupported value";
  }
}

/// Rejects keys outside the allowed set, naming the full offending path.
void check_keys(const json& obj, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (std::string_view key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      std::string list;
      for (std::string_view key : allowed) {
        if (!list.empty()) list += ", ";
        list += key;
      }
      fail(join(path, item.key()), "unknown key (allowed here: " + list + ")");
    }
  }
}

const json* find(const json& obj, std::string_view key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require_object(const json& value, const std::string& path) {
  if (!value.is_object()) fail(path, "expected an object, got " + type_name(value));
  return value;
}

bool read_bool(const json& obj, const std::string& path, std::string_view key,
               bool fallback) {
  const json* value = find(obj, key);
  if (value == nullptr) return fallback;
  if (!value->is_boolean())
    fail(join(path, key), "expected a boolean, got " + type_name(*value));
  return value->get<bool>();
}

long long read_integer(const json& obj, const std::string& path,
                       std::string_view key, long long fallback, long long lo,
                       long long hi) {
  const json* value = find(obj, key);
  if (value == nullptr) return fallback;
  if (!value->is_number_integer() && !value->is_number_unsigned())
    fail(join(path, key), "expected an integer, got " + type_name(*value));
  const long long result = value->get<long long>();
  if (result < lo || result > hi)
    fail(join(path, key), "value " + std::to_string(result) +
                              " outside the allowed range [" +
                              std::to_string(lo) + ", " + std::to_string(hi) +
                              "]");
  return result;
}

std::uint64_t read_u64(const json& obj, const std::string& path,
                       std::string_view key, std::uint64_t fallback) {
  const json* value = find(obj, key);
  if (value == nullptr) return fallback;
  if (value->is_number_unsigned()) return value->get<std::uint64_t>();
  if (value->is_number_integer() && value->get<long long>() >= 0)
    return static_cast<std::uint64_t>(value->get<long long>());
  fail(join(path, key),
       "expected a non-negative integer, got " + type_name(*value));
}

double read_double(const json& obj, const std::string& path,
                   std::string_view key, double fallback, double lo,
                   double hi) {
  const json* value = find(obj, key);
  if (value == nullptr) return fallback;
  if (!value->is_number())
    fail(join(path, key), "expected a number, got " + type_name(*value));
  const double result = value->get<double>();
  if (!std::isfinite(result) || result < lo || result > hi) {
    std::ostringstream range;
    range << "value " << result << " outside the allowed range [" << lo << ", "
          << hi << "]";
    fail(join(path, key), range.str());
  }
  return result;
}

std::optional<double> read_optional_double(const json& obj,
                                           const std::string& path,
                                           std::string_view key, double lo,
                                           double hi) {
  if (find(obj, key) == nullptr) return std::nullopt;
  return read_double(obj, path, key, 0.0, lo, hi);
}

std::string read_string(const json& obj, const std::string& path,
                        std::string_view key, const std::string& fallback) {
  const json* value = find(obj, key);
  if (value == nullptr) return fallback;
  if (!value->is_string())
    fail(join(path, key), "expected a string, got " + type_name(*value));
  return value->get<std::string>();
}

std::string read_choice(const json& obj, const std::string& path,
                        std::string_view key, const std::string& fallback,
                        std::initializer_list<std::string_view> choices) {
  const std::string value = read_string(obj, path, key, fallback);
  for (std::string_view choice : choices)
    if (value == choice) return value;
  std::string list;
  for (std::string_view choice : choices) {
    if (!list.empty()) list += ", ";
    list += choice;
  }
  fail(join(path, key), "\"" + value + "\" is not one of: " + list);
}

std::vector<int> read_int_array(const json& obj, const std::string& path,
                                std::string_view key,
                                const std::vector<int>& fallback, int lo,
                                int hi, bool allow_empty) {
  const json* value = find(obj, key);
  if (value == nullptr) return fallback;
  if (!value->is_array())
    fail(join(path, key), "expected an array, got " + type_name(*value));
  std::vector<int> result;
  for (std::size_t i = 0; i < value->size(); ++i) {
    const json& element = (*value)[i];
    const std::string element_path =
        join(path, key) + "[" + std::to_string(i) + "]";
    if (!element.is_number_integer() && !element.is_number_unsigned())
      fail(element_path, "expected an integer, got " + type_name(element));
    const long long v = element.get<long long>();
    if (v < lo || v > hi)
      fail(element_path, "value " + std::to_string(v) +
                             " outside the allowed range [" +
                             std::to_string(lo) + ", " + std::to_string(hi) +
                             "]");
    result.push_back(static_cast<int>(v));
  }
  if (result.empty() && !allow_empty) fail(join(path, key), "must not be empty");
  return result;
}

std::vector<double> read_double_array(const json& obj, const std::string& path,
                                      std::string_view key, double lo,
                                      double hi) {
  const json* value = find(obj, key);
  if (value == nullptr) return {};
  if (!value->is_array())
    fail(join(path, key), "expected an array, got " + type_name(*value));
  std::vector<double> result;
  for (std::size_t i = 0; i < value->size(); ++i) {
    const json& element = (*value)[i];
    const std::string element_path =
        join(path, key) + "[" + std::to_string(i) + "]";
    if (!element.is_number())
      fail(element_path, "expected a number, got " + type_name(element));
    const double v = element.get<double>();
    if (!std::isfinite(v) || v < lo || v > hi) {
      std::ostringstream range;
      range << "value " << v << " outside the allowed range [" << lo << ", "
            << hi << "]";
      fail(element_path, range.str());
    }
    result.push_back(v);
  }
  return result;
}

std::vector<std::uint64_t> read_u64_array(
    const json& obj, const std::string& path, std::string_view key,
    const std::vector<std::uint64_t>& fallback) {
  const json* value = find(obj, key);
  if (value == nullptr) return fallback;
  if (!value->is_array())
    fail(join(path, key), "expected an array, got " + type_name(*value));
  std::vector<std::uint64_t> result;
  for (std::size_t i = 0; i < value->size(); ++i) {
    const json& element = (*value)[i];
    const std::string element_path =
        join(path, key) + "[" + std::to_string(i) + "]";
    if (element.is_number_unsigned()) {
      result.push_back(element.get<std::uint64_t>());
    } else if (element.is_number_integer() && element.get<long long>() >= 0) {
      result.push_back(static_cast<std::uint64_t>(element.get<long long>()));
    } else {
      fail(element_path,
           "expected a non-negative integer, got " + type_name(element));
    }
  }
  if (result.empty()) fail(join(path, key), "must not be empty");
  return result;
}

GeneratorConfig parse_generator(const json& obj, const std::string& path) {
  check_keys(obj, path,
             {"kind", "num_classes", "dim", "train_per_class",
              "holdout_per_class", "test_per_class", "separation", "noise_sd",
              "shift"});
  GeneratorConfig out;
  out.kind = read_choice(obj, path, "kind", out.kind,
                         {"gaussian_mixture", "two_moons"});
  out.num_classes = static_cast<int>(
      read_integer(obj, path, "num_classes", out.num_classes, 2, 1000));
  out.dim = static_cast<int>(read_integer(obj, path, "dim", out.dim, 2, 10000));
  out.train_per_class = static_cast<int>(read_integer(
      obj, path, "train_per_class", out.train_per_class, 1, 1000000));
  out.holdout_per_class = static_cast<int>(read_integer(
      obj, path, "holdout_per_class", out.holdout_per_class, 1, 1000000));
  out.test_per_class = static_cast<int>(read_integer(
      obj, path, "test_per_class", out.test_per_class, 1, 1000000));
  out.separation =
      read_double(obj, path, "separation", out.separation, 0.0, 1e6);
  out.noise_sd = read_double(obj, path, "noise_sd", out.noise_sd, 0.0, 1e6);
  if (const json* shift = find(obj, "shift")) {
    const std::string shift_path = join(path, "shift");
    require_object(*shift, shift_path);
    check_keys(*shift, shift_path, {"kind", "magnitude"});
    out.shift_kind = read_choice(
        *shift, shift_path, "kind", out.shift_kind,
        {"mean_shift", "rotation", "label_shift", "feature_noise"});
    out.shift_magnitude = read_double(*shift, shift_path, "magnitude",
                                      out.shift_magnitude, 0.0, 1e6);
  }
  return out;
}

CsvConfig parse_csv(const json& obj, const std::string& path) {
  check_keys(obj, path,
             {"train_path", "holdout_path", "test_path", "num_classes"});
  CsvConfig out;
  out.train_path = read_string(obj, path, "train_path", "");
  out.holdout_path = read_string(obj, path, "holdout_path", "");
  out.test_path = read_string(obj, path, "test_path", "");
  out.num_classes = static_cast<int>(
      read_integer(obj, path, "num_classes", out.num_classes, 0, 1000));
  if (out.train_path.empty()) fail(join(path, "train_path"), "must be set");
  if (out.test_path.empty()) fail(join(path, "test_path"), "must be set");
  return out;
}

DatasetConfig parse_dataset(const json& obj, const std::string& path) {
  check_keys(obj, path, {"source", "generator", "csv"});
  DatasetConfig out;
  out.source =
      read_choice(obj, path, "source", out.source, {"generator", "csv"});
  if (const json* generator = find(obj, "generator")) {
    const std::string sub = join(path, "generator");
    out.generator = parse_generator(require_object(*generator, sub), sub);
  }
  if (const json* csv = find(obj, "csv")) {
    const std::string sub = join(path, "csv");
    out.csv = parse_csv(require_object(*csv, sub), sub);
  } else if (out.source == "csv") {
    fail(join(path, "csv"), "required when dataset.source is \"csv\"");
  }
  return out;
}

TrainConfig parse_train(const json& obj, const std::string& path) {
  check_keys(obj, path,
             {"learning_rate", "momentum", "epochs", "batch_size"});
  TrainConfig out;
  out.learning_rate =
      read_double(obj, path, "learning_rate", 0.05, 0.0, 1000.0);
  out.momentum = read_double(obj, path, "momentum", out.momentum, 0.0, 1.0);
  out.epochs =
      static_cast<int>(read_integer(obj, path, "epochs", 40, 1, 1000000));
  out.batch_size = static_cast<int>(
      read_integer(obj, path, "batch_size", out.batch_size, 1, 1000000));
  return out;
}

ModelConfig parse_model(const json& obj, const std::string& path) {
  check_keys(obj, path, {"encoder_widths", "predictor_hidden", "train"});
  ModelConfig out;
  out.encoder_widths = read_int_array(obj, path, "encoder_widths",
                                      out.encoder_widths, 1, 100000, true);
  out.predictor_hidden = read_int_array(obj, path, "predictor_hidden",
                                        out.predictor_hidden, 1, 100000, true);
  if (const json* train = find(obj, "train")) {
    const std::string sub = join(path, "train");
    out.train = parse_train(require_object(*train, sub), sub);
  } else {
    out.train.learning_rate = 0.05;
    out.train.epochs = 40;
  }
  return out;
}

MethodConfig parse_method(const json& obj, const std::string& path) {
  check_keys(obj, path,
             {"name", "members", "pseudo_weight", "mmd_weight",
              "finetune_learning_rate", "iterations", "mode", "tau",
              "trust_neighbors"});
  MethodConfig out;
  out.name = read_choice(obj, path, "name", out.name,
                         {"ours-ri", "ours-rm", "avg-conf", "ens-avg-conf",
                          "msp", "trust-score", "oracle", "degenerate"});
  out.members =
      static_cast<int>(read_integer(obj, path, "members", out.members, 1, 1000));
  out.pseudo_weight =
      read_double(obj, path, "pseudo_weight", out.pseudo_weight, 0.0, 1e6);
  out.mmd_weight =
      read_double(obj, path, "mmd_weight", out.mmd_weight, 0.0, 1e6);
  out.finetune_learning_rate = read_double(
      obj, path, "finetune_learning_rate", out.finetune_learning_rate, 0.0,
      1000.0);
  out.iterations = static_cast<int>(
      read_integer(obj, path, "iterations", out.iterations, 1, 10000));
  out.mode =
      read_choice(obj, path, "mode", out.mode, {"majority", "threshold"});
  out.tau = read_double(obj, path, "tau", out.tau, 0.0, 1.0);
  if (out.mode == "threshold" && (out.tau <= 0.0 || out.tau >= 1.0))
    fail(join(path, "tau"), "threshold mode needs tau strictly inside (0, 1)");
  out.trust_neighbors = static_cast<int>(
      read_integer(obj, path, "trust_neighbors", out.trust_neighbors, 1, 1000));
  return out;
}

TheoryBoundsConfig parse_theory_bounds(const json& obj,
                                       const std::string& path) {
  check_keys(obj, path, {"inputs", "eta", "delta", "observed_error"});
  TheoryBoundsConfig out;
  if (const json* inputs = find(obj, "inputs")) {
    const std::string sub = join(path, "inputs");
    require_object(*inputs, sub);
    check_keys(*inputs, sub,
               {"max_error_on_correct", "max_pseudo_agreement",
                "min_diversity", "classifier_error"});
    out.inputs.max_error_on_correct =
        read_double(*inputs, sub, "max_error_on_correct", 0.0, 0.0, 1.0);
    out.inputs.max_pseudo_agreement =
        read_double(*inputs, sub, "max_pseudo_agreement", 0.0, 0.0, 1.0);
    out.inputs.min_diversity =
        read_double(*inputs, sub, "min_diversity", 0.0, 0.0, 1.0);
    out.inputs.classifier_error =
        read_double(*inputs, sub, "classifier_error", 0.0, 0.0, 1.0);
  } else {
    fail(join(path, "inputs"), "required in theory mode \"bounds\"");
  }
  out.eta = read_optional_double(obj, path, "eta", 0.0, 1.0);
  out.delta = read_optional_double(obj, path, "delta", 0.0, 1.0);
  if (out.eta.has_value() != out.delta.has_value())
    fail(path,
         "eta and delta must be given together (general form) or both "
         "omitted (canonical-knob form)");
  out.observed_error =
      read_optional_double(obj, path, "observed_error", 0.0, 1.0);
  return out;
}

TheorySweepConfig parse_theory_sweep(const json& obj, const std::string& path) {
  check_keys(obj, path, {"trials", "num_points", "num_classes", "iterations"});
  TheorySweepConfig out;
  out.trials =
      static_cast<int>(read_integer(obj, path, "trials", out.trials, 1, 100000));
  out.num_points = static_cast<int>(
      read_integer(obj, path, "num_points", out.num_points, 10, 10000000));
  out.num_classes = read_int_array(obj, path, "num_classes", out.num_classes,
                                   2, 1000, false);
  out.iterations = static_cast<int>(
      read_integer(obj, path, "iterations", out.iterations, 1, 100));
  return out;
}

TheoryGeometricConfig parse_theory_geometric(const json& obj,
                                             const std::string& path) {
  check_keys(obj, path,
             {"num_points", "num_classes", "classifier_error",
              "diversity_target", "error_on_correct", "confident_slack",
              "pseudo_disagreement", "confident_share", "eta", "iterations",
              "epsilon_target"});
  TheoryGeometricConfig out;
  out.num_points = static_cast<int>(
      read_integer(obj, path, "num_points", out.num_points, 10, 10000000));
  out.num_classes = static_cast<int>(
      read_integer(obj, path, "num_classes", out.num_classes, 2, 1000));
  out.classifier_error =
      read_double(obj, path, "classifier_error", out.classifier_error, 0.0, 1.0);
  out.diversity_target =
      read_double(obj, path, "diversity_target", out.diversity_target, 0.0, 1.0);
  out.error_on_correct =
      read_double(obj, path, "error_on_correct", out.error_on_correct, 0.0, 1.0);
  out.confident_slack =
      read_double(obj, path, "confident_slack", out.confident_slack, 0.0, 1.0);
  out.pseudo_disagreement = read_double(obj, path, "pseudo_disagreement",
                                        out.pseudo_disagreement, 0.0, 1.0);
  out.confident_share =
      read_double(obj, path, "confident_share", out.confident_share, 0.0, 1.0);
  out.eta = read_double(obj, path, "eta", out.eta, 0.0, 1.0);
  if (out.eta <= 0.0 || out.eta >= 1.0)
    fail(join(path, "eta"), "must lie strictly inside (0, 1)");
  out.iterations = static_cast<int>(
      read_integer(obj, path, "iterations", out.iterations, 1, 10000));
  out.epsilon_target =
      read_double(obj, path, "epsilon_target", out.epsilon_target, 0.0, 1.0);
  if (out.epsilon_target <= 0.0 || out.epsilon_target >= 1.0)
    fail(join(path, "epsilon_target"), "must lie strictly inside (0, 1)");
  return out;
}

TheoryConfig parse_theory(const json& obj, const std::string& path) {
  check_keys(obj, path, {"mode", "bounds", "sweep", "geometric"});
  TheoryConfig out;
  out.mode = read_choice(obj, path, "mode", out.mode,
                         {"bounds", "sweep", "geometric"});
  if (const json* bounds = find(obj, "bounds")) {
    const std::string sub = join(path, "bounds");
    out.bounds = parse_theory_bounds(require_object(*bounds, sub), sub);
  } else if (out.mode == "bounds") {
    fail(join(path, "bounds"), "required in theory mode \"bounds\"");
  }
  if (const json* sweep = find(obj, "sweep")) {
    const std::string sub = join(path, "sweep");
    out.sweep = parse_theory_sweep(require_object(*sweep, sub), sub);
  }
  if (const json* geometric = find(obj, "geometric")) {
    const std::string sub = join(path, "geometric");
    out.geometric =
        parse_theory_geometric(require_object(*geometric, sub), sub);
  }
  return out;
}

BenchConfig parse_bench(const json& obj, const std::string& path) {
  check_keys(obj, path,
             {"pairs", "methods", "seeds", "ablate_members",
              "ablate_pseudo_weight"});
  BenchConfig out;
  const json* pairs = find(obj, "pairs");
  if (pairs == nullptr) fail(join(path, "pairs"), "required for bench runs");
  if (!pairs->is_array() || pairs->empty())
    fail(join(path, "pairs"), "expected a non-empty array of dataset pairs");
  for (std::size_t i = 0; i < pairs->size(); ++i) {
    const std::string pair_path =
        join(path, "pairs") + "[" + std::to_string(i) + "]";
    const json& entry = require_object((*pairs)[i], pair_path);
    check_keys(entry, pair_path, {"name", "generator"});
    BenchPair pair;
    pair.name = read_string(entry, pair_path, "name", "");
    if (pair.name.empty()) fail(join(pair_path, "name"), "must be set");
    const json* generator = find(entry, "generator");
    if (generator == nullptr)
      fail(join(pair_path, "generator"), "required for every pair");
    const std::string sub = join(pair_path, "generator");
    pair.generator = parse_generator(require_object(*generator, sub), sub);
    out.pairs.push_back(std::move(pair));
  }

  if (const json* methods = find(obj, "methods")) {
    if (!methods->is_array() || methods->empty())
      fail(join(path, "methods"), "expected a non-empty array of method names");
    out.methods.clear();
    for (std::size_t i = 0; i < methods->size(); ++i) {
      const json& element = (*methods)[i];
      const std::string element_path =
          join(path, "methods") + "[" + std::to_string(i) + "]";
      if (!element.is_string())
        fail(element_path, "expected a string, got " + type_name(element));
      static constexpr std::string_view kAllowed[] = {
          "ours-ri", "ours-rm", "avg-conf", "ens-avg-conf",
          "msp",     "oracle",  "degenerate"};
      const std::string name = element.get<std::string>();
      bool known = false;
      for (std::string_view allowed : kAllowed) known |= name == allowed;
      if (!known)
        fail(element_path, "\"" + name + "\" is not a benchmarkable method");
      out.methods.push_back(name);
    }
  }
  out.seeds = read_u64_array(obj, path, "seeds", out.seeds);
  out.ablate_members = read_int_array(obj, path, "ablate_members",
                                      out.ablate_members, 1, 1000, true);
  out.ablate_pseudo_weight =
      read_double_array(obj, path, "ablate_pseudo_weight", 0.0, 1e6);
  return out;
}

GradcheckConfig parse_gradcheck(const json& obj, const std::string& path) {
  check_keys(obj, path, {"trials", "tolerance", "step", "with_mmd"});
  GradcheckConfig out;
  out.trials =
      static_cast<int>(read_integer(obj, path, "trials", out.trials, 1, 10000));
  out.tolerance =
      read_double(obj, path, "tolerance", out.tolerance, 1e-14, 1.0);
  out.step = read_double(obj, path, "step", out.step, 1e-8, 1e-2);
  if (out.step <= 1e-8 || out.step >= 1e-2)
    fail(join(path, "step"), "must lie strictly inside (1e-8, 1e-2)");
  out.with_mmd = read_bool(obj, path, "with_mmd", out.with_mmd);
  return out;
}

}  // namespace

void apply_override(json& root, const std::string& assignment) {
  const std::size_t equals = assignment.find('=');
  if (equals == std::string::npos)
    throw ConfigError("--set: expected key=value, got \"" + assignment + "\"");
  const std::string key = assignment.substr(0, equals);
  const std::string value = assignment.substr(equals + 1);
  if (key.empty())
    throw ConfigError("--set: empty key in \"" + assignment + "\"");

  std::string pointer;
  std::size_t start = 0;
  while (start <= key.size()) {
    const std::size_t dot = key.find('.', start);
    const std::string token = key.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (token.empty())
      throw ConfigError("--set: empty path segment in \"" + key + "\"");
    pointer += "/" + token;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }

  json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) parsed = value;  // keep unparseable text verbatim
  try {
    root[json::json_pointer(pointer)] = std::move(parsed);
  } catch (const json::exception& error) {
    throw ConfigError("--set " + key + ": " + error.what());
  }
}

CliConfig parse_config(const json& root) {
  const std::string top;
  require_object(root, "config");
  check_keys(root, top,
             {"seed", "evaluation_mode", "dataset", "model", "method",
              "theory", "bench", "gradcheck"});

  CliConfig out;
  out.seed = read_u64(root, top, "seed", out.seed);
  out.evaluation_mode =
      read_bool(root, top, "evaluation_mode", out.evaluation_mode);
  if (const json* dataset = find(root, "dataset"))
    out.dataset = parse_dataset(require_object(*dataset, "dataset"), "dataset");
  if (const json* model = find(root, "model"))
    out.model = parse_model(require_object(*model, "model"), "model");
  if (const json* method = find(root, "method"))
    out.method = parse_method(require_object(*method, "method"), "method");
  if (const json* theory = find(root, "theory"))
    out.theory = parse_theory(require_object(*theory, "theory"), "theory");
  if (const json* bench = find(root, "bench"))
    out.bench = parse_bench(require_object(*bench, "bench"), "bench");
  if (const json* gradcheck = find(root, "gradcheck"))
    out.gradcheck =
        parse_gradcheck(require_object(*gradcheck, "gradcheck"), "gradcheck");
  out.echo = root;
  return out;
}

CliConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed_flag, bool eval_flag) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file: cannot open \"" + path + "\"");
  json root = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded())
    throw ConfigError("config file: \"" + path + "\" is not valid JSON");

  for (const std::string& assignment : overrides)
    apply_override(root, assignment);
  if (seed_flag.has_value()) root["seed"] = *seed_flag;
  if (eval_flag) root["evaluation_mode"] = true;
  return parse_config(root);
}

}  // namespace selfcheck::cli
