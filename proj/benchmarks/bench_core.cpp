#include <benchmark/benchmark.h>

#include "mat/data.hpp"
#include "mat/inference.hpp"
#include "mat/lstm.hpp"
#include "mat/matrix.hpp"
#include "mat/metrics.hpp"
#include "mat/model.hpp"
#include "mat/rng.hpp"

using namespace mat;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const std::size_t n = state.range(0);
  Rng rng(1);
  Matrix a = random_matrix(n, n, rng);
  Matrix b = random_matrix(n, n, rng);
  for (auto _ : state) {
    Matrix c = matmul(a, b);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_LstmStep(benchmark::State& state) {
  const std::size_t hidden = state.range(0);
  Rng rng(2);
  LstmParams params("cell", hidden, hidden);
  params.init_uniform(0.08, rng);
  Vector x = random_matrix(hidden, 1, rng);
  LstmState prev = zero_state(hidden);
  for (auto _ : state) {
    LstmState out = lstm_step(params, x, prev, ModulationMode::kSigmoid);
    benchmark::DoNotOptimize(out.h.data());
  }
}
BENCHMARK(BM_LstmStep)->Arg(64)->Arg(256)->Arg(512);

void BM_LstmStepBackward(benchmark::State& state) {
  const std::size_t hidden = state.range(0);
  Rng rng(3);
  LstmParams params("cell", hidden, hidden);
  params.init_uniform(0.08, rng);
  Vector x = random_matrix(hidden, 1, rng);
  LstmStepCache cache;
  lstm_step(params, x, zero_state(hidden), ModulationMode::kSigmoid, &cache);
  Vector dh = random_matrix(hidden, 1, rng);
  Vector dc = random_matrix(hidden, 1, rng);
  for (auto _ : state) {
    LstmStepGrads grads = lstm_step_backward(params, cache, ModulationMode::kSigmoid,
                                             dh, dc);
    benchmark::DoNotOptimize(grads.dx.data());
  }
}
BENCHMARK(BM_LstmStepBackward)->Arg(64)->Arg(256)->Arg(512);

void BM_Attend(benchmark::State& state) {
  const std::size_t hidden = 64;
  const std::size_t n = state.range(0);
  Rng rng(4);
  AttentionParams params("attn", hidden, 32);
  params.init_uniform(0.08, rng);
  std::vector<Vector> states;
  for (std::size_t i = 0; i < n; ++i) states.push_back(random_matrix(hidden, 1, rng));
  Vector d_prev = random_matrix(hidden, 1, rng);
  for (auto _ : state) {
    AttentionTrace trace = attend(params, states, d_prev);
    benchmark::DoNotOptimize(trace.context.data());
  }
}
BENCHMARK(BM_Attend)->Arg(2)->Arg(6)->Arg(8);

struct ForwardFixture {
  Model model;
  BatchExample example;

  ForwardFixture() {
    SyntheticSpec spec;
    Dataset data = generate_synthetic(spec, 8, 1);
    std::vector<std::vector<std::string>> caps;
    for (const auto& ex : data) caps.push_back(ex.caption);
    Vocabulary vocab = Vocabulary::build(caps, 1);
    ModelConfig config;
    config.hidden_dim = 64;
    config.feature_dim = spec.feature_dim;
    config.vocab_size = vocab.size();
    Model m(config);
    Rng rng(5);
    m.init_params(rng);
    model = std::move(m);
    example = prepare_example(data.front(), vocab, default_buckets());
  }
};

void BM_ForwardBackward(benchmark::State& state) {
  static ForwardFixture fixture;
  for (auto _ : state) {
    fixture.model.reset_grads();
    ForwardResult fr = fixture.model.forward(fixture.example);
    fixture.model.backward(fr);
    benchmark::DoNotOptimize(fr.loss);
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_BeamSearch(benchmark::State& state) {
  static ForwardFixture fixture;
  const std::size_t beam = state.range(0);
  for (auto _ : state) {
    BeamResult result = beam_search(fixture.model, fixture.example.objects, beam, 20);
    benchmark::DoNotOptimize(result.log_prob);
  }
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(5)->Arg(20);

void BM_MetricSuite(benchmark::State& state) {
  SyntheticSpec spec;
  Dataset data = generate_synthetic(spec, 200, 3);
  std::vector<EvalPair> corpus;
  for (const auto& ex : data) {
    EvalPair pair;
    pair.candidate = ex.caption;
    pair.references.push_back(ex.caption);
    corpus.push_back(std::move(pair));
  }
  for (auto _ : state) {
    MetricReport report = evaluate_all(corpus);
    benchmark::DoNotOptimize(report.cider);
  }
}
BENCHMARK(BM_MetricSuite);

}  // namespace

BENCHMARK_MAIN();
