#include <benchmark/benchmark.h>

#include "banditlab/harness.hpp"

using namespace banditlab;

namespace {

SymMat random_spd(int d, Rng& rng) {
    SymMat g(d);
    for (int k = 0; k < 2 * d; ++k) {
        Vec x(d);
        for (double& v : x) v = rng.next_normal();
        g.add_rank_one(x);
    }
    return g;
}

void BM_min_eigen_sym(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Rng rng(1);
    const SymMat m = random_spd(d, rng);
    for (auto _ : state) benchmark::DoNotOptimize(min_eigen_sym(m));
}
BENCHMARK(BM_min_eigen_sym)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_arm_update(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Rng rng(2);
    Vec init(d, 0.0);
    ArmState arm(d, init);
    Vec x(d);
    for (auto _ : state) {
        for (double& v : x) v = rng.next_normal();
        arm.update(x, rng.next_normal(), 1e-10 * std::max(1.0, arm.gram.trace()));
    }
}
BENCHMARK(BM_arm_update)->Arg(3)->Arg(10);

void BM_policy_step(benchmark::State& state) {
    const PolicyConfig::Kind kinds[] = {
        PolicyConfig::Kind::greedy,        PolicyConfig::Kind::greedy_first,
        PolicyConfig::Kind::ols_bandit,    PolicyConfig::Kind::oful,
        PolicyConfig::Kind::ts_prior_free, PolicyConfig::Kind::ts_prior_dependent,
    };
    PolicyConfig cfg;
    cfg.kind = kinds[state.range(0)];
    cfg.lambda0 = 0.03;

    Rng rng(3);
    ProblemInstance inst;
    inst.K = 2;
    inst.d = 3;
    inst.betas = {{0.5, -0.2, 0.1}, {-0.3, 0.4, 0.2}};
    inst.sigma = 0.5;
    inst.link = LinkFunction::make_identity();
    inst.bmax = 1.0;
    inst.xmax = std::sqrt(3.0);

    auto pol = make_policy(cfg, inst, 7);
    const ContextDistribution dist = diversity_preset(3);
    int t = 1;
    for (auto _ : state) {
        const Vec x = dist.sample(rng);
        const int a = pol->select(x, t);
        pol->update(x, a, dot(x, inst.betas[a]) + 0.5 * rng.next_normal(), t);
        ++t;
    }
    state.SetLabel(cfg.default_label());
}
BENCHMARK(BM_policy_step)->DenseRange(0, 5);

void BM_run_episode(benchmark::State& state) {
    ExperimentConfig cfg = replicate("fig1a");
    cfg.T = 2000;
    const ContextDistribution dist = cfg.context.build(cfg.d);
    const EpisodeStreams streams = make_episode_streams(cfg, dist, 0);
    PolicyConfig greedy;
    greedy.kind = PolicyConfig::Kind::greedy;
    for (auto _ : state) benchmark::DoNotOptimize(run_episode(streams, greedy, 0, cfg.T));
    state.SetItemsProcessed(state.iterations() * cfg.T);
}
BENCHMARK(BM_run_episode);

void BM_sample_context(benchmark::State& state) {
    const ContextDistribution dists[] = {
        diversity_preset(3),
        ContextDistribution::uniform_ball(3, 1.0),
        ContextDistribution::rademacher(3),
    };
    const ContextDistribution& dist = dists[state.range(0)];
    Rng rng(4);
    for (auto _ : state) benchmark::DoNotOptimize(dist.sample(rng));
    state.SetLabel(dist.describe());
}
BENCHMARK(BM_sample_context)->DenseRange(0, 2);

}  // namespace

BENCHMARK_MAIN();
