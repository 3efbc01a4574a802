// Microbenchmarks for the hot paths: kernel alignment, forward/backward
// passes, one SGD epoch, flag-set construction, and the closed-form bound
// evaluator. Run the binary directly; it is not part of the test suite.

#include <cstdint>
#include <optional>
#include <vector>

#include <benchmark/benchmark.h>

#include "selfcheck/bounds.hpp"
#include "selfcheck/framework.hpp"
#include "selfcheck/matrix.hpp"
#include "selfcheck/mlp.hpp"
#include "selfcheck/mmd.hpp"
#include "selfcheck/rng.hpp"
#include "selfcheck/train.hpp"

namespace {

using namespace selfcheck;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix out(rows, cols);
  Rng rng(seed);
  for (double& value : out.data()) value = rng.normal();
  return out;
}

std::vector<int> random_labels(std::size_t n, int num_classes,
                               std::uint64_t seed) {
  std::vector<int> labels(n);
  Rng rng(seed);
  for (int& label : labels)
    label = static_cast<int>(
        rng.uniform_int(static_cast<std::uint64_t>(num_classes)));
  return labels;
}

MlpModel benchmark_model(int input_dim, int num_classes, std::uint64_t seed) {
  MlpArchitecture arch;
  arch.input_dim = input_dim;
  arch.encoder_widths = {32};
  arch.predictor_hidden = {32};
  arch.num_classes = num_classes;
  Rng rng(seed);
  return make_mlp(arch, rng);
}

void BM_Mmd2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(n, 16, 1);
  const Matrix y = random_matrix(n, 16, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mmd2(x, y, 1.0));
}
BENCHMARK(BM_Mmd2)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const MlpModel model = benchmark_model(10, 3, 3);
  const Matrix batch = random_matrix(n, 10, 4);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, batch));
}
BENCHMARK(BM_Forward)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Backprop(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const MlpModel model = benchmark_model(10, 3, 5);
  const Matrix features = random_matrix(n, 10, 6);
  const std::vector<int> labels = random_labels(n, 3, 7);
  const Matrix pseudo_features = random_matrix(n / 4, 10, 8);
  const std::vector<int> pseudo_labels = random_labels(n / 4, 3, 9);
  for (auto _ : state)
    benchmark::DoNotOptimize(backprop(model, features, labels, pseudo_features,
                                      pseudo_labels, 0.1, std::nullopt));
}
BENCHMARK(BM_Backprop)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_BackpropWithAlignment(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const MlpModel model = benchmark_model(10, 3, 5);
  const Matrix features = random_matrix(n, 10, 6);
  const std::vector<int> labels = random_labels(n, 3, 7);
  MmdTerm mmd;
  mmd.target_features = random_matrix(n, 10, 10);
  mmd.weight = 1.0;
  mmd.bandwidth = 1.0;
  const std::optional<MmdTerm> term = mmd;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        backprop(model, features, labels, Matrix(0, 10), {}, 0.0, term));
}
BENCHMARK(BM_BackpropWithAlignment)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SgdEpoch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  LabeledDataset source;
  source.features = random_matrix(n, 10, 11);
  source.labels = random_labels(n, 3, 12);
  TrainConfig config;
  config.learning_rate = 0.05;
  config.epochs = 1;
  config.seed = 13;
  const MlpModel model = benchmark_model(10, 3, 14);
  for (auto _ : state)
    benchmark::DoNotOptimize(sgd_fit(model, source, config));
}
BENCHMARK(BM_SgdEpoch)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_ConstructRThreshold(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Votes votes;
  votes.num_members = 0;
  votes.distribution = Matrix(n, 3);
  Rng rng(15);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      votes.distribution(i, k) = rng.uniform() + 1e-3;
      total += votes.distribution(i, k);
    }
    for (std::size_t k = 0; k < 3; ++k) votes.distribution(i, k) /= total;
  }
  const std::vector<int> f_labels = random_labels(n, 3, 16);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        construct_R_threshold(votes, f_labels, 0.75, 17, 1));
}
BENCHMARK(BM_ConstructRThreshold)
    ->Arg(10000)
    ->Unit(benchmark::kMillisecond);

void BM_BoundEvaluator(benchmark::State& state) {
  BoundInputs inputs;
  inputs.max_error_on_correct = 0.03;
  inputs.max_pseudo_agreement = 0.01;
  inputs.min_diversity = 0.6;
  inputs.classifier_error = 0.4;
  for (auto _ : state)
    benchmark::DoNotOptimize(estimation_bound(inputs, 0.16, 0.05));
}
BENCHMARK(BM_BoundEvaluator)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
