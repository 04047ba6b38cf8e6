#include <benchmark/benchmark.h>

#include <random>

#include "relbn/bayes_net.hpp"
#include "relbn/inference.hpp"
#include "relbn/sampler.hpp"

using namespace relbn;

namespace {

SystemState random_state(const GridCase& grid, std::mt19937_64& rng, double p) {
  std::bernoulli_distribution down(p);
  auto s = base_state(grid);
  for (auto& b : s.gen_down) b = down(rng);
  for (auto& b : s.line_down) b = down(rng);
  return s;
}

const SampleSet& rbts_samples() {
  static const SampleSet set = [] {
    SamplerConfig c;
    c.seed = 42;
    c.max_samples = 100000;
    c.cov_threshold = 1e-12;
    c.proposal.distortion_factor = 10.0;
    return run_sampling(builtin_case("rbts"), c);
  }();
  return set;
}

}  // namespace

static void BM_Curtailment(benchmark::State& state, const char* name, double p) {
  const auto grid = builtin_case(name);
  std::mt19937_64 rng(1);
  std::vector<SystemState> states;
  for (int i = 0; i < 256; ++i) states.push_back(random_state(grid, rng, p));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_curtailment(grid, states[i++ % states.size()]));
}
BENCHMARK_CAPTURE(BM_Curtailment, rbts, "rbts", 0.1);
BENCHMARK_CAPTURE(BM_Curtailment, rts24, "ieee-rts-24", 0.05);

static void BM_Sampling(benchmark::State& state) {
  const auto grid = builtin_case("rbts");
  SamplerConfig c;
  c.max_samples = static_cast<std::size_t>(state.range(0));
  c.cov_threshold = 1e-12;
  c.proposal.distortion_factor = 10.0;
  for (auto _ : state) {
    ++c.seed;
    benchmark::DoNotOptimize(run_sampling(grid, c));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sampling)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_LearnStructure(benchmark::State& state) {
  const auto& set = rbts_samples();
  for (auto _ : state) benchmark::DoNotOptimize(fit_parameters(learn_structure(set, {}), set));
}
BENCHMARK(BM_LearnStructure)->Unit(benchmark::kMillisecond);

static void BM_RankLoadBuses(benchmark::State& state) {
  const auto& set = rbts_samples();
  const auto net = fit_parameters(learn_structure(set, {}), set);
  for (auto _ : state) benchmark::DoNotOptimize(rank_load_buses(net));
}
BENCHMARK(BM_RankLoadBuses);

static void BM_Posterior(benchmark::State& state) {
  // Dense layered network: 10 components feeding 4 buses, 4 parents each.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> prob(0.02, 0.98);
  BayesNet net;
  std::vector<NodeId> buses;
  for (int c = 1; c <= 10; ++c) {
    net.dag.nodes.push_back({NodeKind::G, c});
    net.dag.parents.push_back({});
    net.cpts.push_back({{prob(rng)}});
  }
  for (int b = 1; b <= 4; ++b) {
    buses.push_back({NodeKind::B, b});
    net.dag.nodes.push_back(buses.back());
    net.dag.parents.push_back({{NodeKind::G, b}, {NodeKind::G, b + 2}, {NodeKind::G, b + 4}, {NodeKind::G, b + 6}});
    Cpt t;
    for (int r = 0; r < 16; ++r) t.p_true.push_back(prob(rng));
    net.cpts.push_back(t);
  }
  net.dag.nodes.push_back({NodeKind::LOL, 0});
  net.dag.parents.push_back(buses);
  Cpt lol;
  for (int r = 0; r < 16; ++r) lol.p_true.push_back(r ? 1.0 : 0.0);
  net.cpts.push_back(lol);
  net.canonicalize();
  for (auto _ : state) benchmark::DoNotOptimize(posterior(net, {NodeKind::G, 5}, {{{NodeKind::LOL, 0}, 1}}));
}
BENCHMARK(BM_Posterior);

BENCHMARK_MAIN();
