#include <cstdio>
#include <filesystem>
#include <fstream>

#include "banditlab/harness.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace banditlab;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.name = "tiny";
    cfg.K = 2;
    cfg.d = 2;
    cfg.T = 120;
    cfg.n_runs = 8;
    cfg.master_seed = 9001;
    cfg.prior.mode = PriorSpec::Mode::correct;
    cfg.sigma = SigmaRule{false, 0.5};
    PolicyConfig greedy;
    greedy.kind = PolicyConfig::Kind::greedy;
    PolicyConfig oracle;
    oracle.kind = PolicyConfig::Kind::oracle;
    PolicyConfig uni;
    uni.kind = PolicyConfig::Kind::uniform_random;
    cfg.policies = {greedy, oracle, uni};
    cfg.output_dir = "/tmp/banditlab_out";
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("episode streams are deterministic and policy independent") {
    const ExperimentConfig cfg = tiny_config();
    const ContextDistribution dist = cfg.context.build(cfg.d);
    const EpisodeStreams a = make_episode_streams(cfg, dist, 3);
    const EpisodeStreams b = make_episode_streams(cfg, dist, 3);
    CHECK(a.episode_seed == b.episode_seed);
    CHECK(a.contexts == b.contexts);
    CHECK(a.noise == b.noise);
    CHECK(a.instance.betas == b.instance.betas);

    const EpisodeStreams c = make_episode_streams(cfg, dist, 4);
    CHECK(a.contexts != c.contexts);

    CHECK(a.noise.size() == static_cast<size_t>(cfg.T));
    CHECK(a.noise[0].size() == static_cast<size_t>(cfg.K));
}

TEST_CASE("oracle policy has identically zero regret") {
    const ExperimentConfig cfg = tiny_config();
    const ContextDistribution dist = cfg.context.build(cfg.d);
    const EpisodeStreams streams = make_episode_streams(cfg, dist, 0);
    const Trajectory traj = run_episode(streams, cfg.policies[1], 1, cfg.T);
    CHECK(traj.final_regret == 0.0);
    for (const StepRecord& s : traj.steps) CHECK(s.regret == 0.0);
}

TEST_CASE("rewards follow the (t, arm) noise array") {
    const ExperimentConfig cfg = tiny_config();
    const ContextDistribution dist = cfg.context.build(cfg.d);
    const EpisodeStreams streams = make_episode_streams(cfg, dist, 1);
    const Trajectory traj = run_episode(streams, cfg.policies[0], 0, cfg.T);
    for (int t = 1; t <= cfg.T; ++t) {
        const StepRecord& s = traj.steps[t - 1];
        const double want = dot(s.context, streams.instance.betas[s.chosen]) +
                            streams.instance.sigma * streams.noise[t - 1][s.chosen];
        CHECK(s.reward == doctest::Approx(want).epsilon(1e-12));
        CHECK(s.regret >= 0.0);
    }
}

TEST_CASE("same seed gives identical trajectories") {
    const ExperimentConfig cfg = tiny_config();
    const ContextDistribution dist = cfg.context.build(cfg.d);
    const EpisodeStreams streams = make_episode_streams(cfg, dist, 2);
    const Trajectory a = run_episode(streams, cfg.policies[0], 0, cfg.T);
    const Trajectory b = run_episode(streams, cfg.policies[0], 0, cfg.T);
    REQUIRE(a.steps.size() == b.steps.size());
    for (size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].chosen == b.steps[i].chosen);
        CHECK(a.steps[i].reward == b.steps[i].reward);
        CHECK(a.steps[i].regret == b.steps[i].regret);
    }
}

TEST_CASE("adding a policy to the list never perturbs another policy") {
    ExperimentConfig one = tiny_config();
    one.policies = {one.policies[0]};  // greedy only
    const ExperimentConfig three = tiny_config();

    const BatchSummary a = run_batch(one, 2);
    const BatchSummary b = run_batch(three, 2);
    CHECK(a.policy("greedy").mean_regret == b.policy("greedy").mean_regret);
}

TEST_CASE("worker count does not change the aggregates") {
    const ExperimentConfig cfg = tiny_config();
    const BatchSummary s1 = run_batch(cfg, 1);
    const BatchSummary s4 = run_batch(cfg, 4);
    for (size_t p = 0; p < s1.policies.size(); ++p) {
        CHECK(s1.policies[p].mean_regret == s4.policies[p].mean_regret);
        CHECK(s1.policies[p].ci_half == s4.policies[p].ci_half);
        CHECK(s1.policies[p].final_regret == s4.policies[p].final_regret);
    }
}

TEST_CASE("batch aggregates: oracle zero, uniform positive, curves monotone") {
    const BatchSummary s = run_batch(tiny_config(), 0);
    CHECK(s.policy("oracle").mean_regret.back() == 0.0);
    CHECK(s.policy("uniform_random").mean_regret.back() > 0.0);
    for (const PolicySummary& p : s.policies) {
        double prev = 0.0;
        for (double v : p.mean_regret) {
            CHECK(v >= prev - 1e-12);
            prev = v;
        }
        for (double h : p.ci_half) CHECK(h >= 0.0);
        CHECK(p.switch_count <= s.n_runs);
    }
}

TEST_CASE("single run has zero-width confidence bands") {
    ExperimentConfig cfg = tiny_config();
    cfg.n_runs = 1;
    const BatchSummary s = run_batch(cfg, 1);
    for (double h : s.policy("greedy").ci_half) CHECK(h == 0.0);
}

TEST_CASE("noiseless fixed instance: greedy stops paying regret once identified") {
    ExperimentConfig cfg = tiny_config();
    cfg.prior.mode = PriorSpec::Mode::fixed;
    cfg.prior.fixed_betas = {{1.0, 0.4}, {-0.6, 0.8}};
    cfg.sigma = SigmaRule{false, 0.0};
    cfg.T = 200;
    cfg.n_runs = 4;
    cfg.policies = {cfg.policies[0]};  // greedy
    const BatchSummary s = run_batch(cfg, 1);
    const PolicySummary& g = s.policy("greedy");
    // cumulative regret is flat over the last three quarters of the horizon
    CHECK(g.mean_regret[cfg.T - 1] == doctest::Approx(g.mean_regret[cfg.T / 4]).epsilon(1e-12));
}

TEST_CASE("csv summary export round-trips and json echoes the seed") {
    namespace fs = std::filesystem;
    const ExperimentConfig cfg = tiny_config();
    fs::create_directories(cfg.output_dir);
    const BatchSummary s = run_batch_with_outputs(cfg, 0);

    const std::string csv_path = cfg.output_dir + "/" + cfg.name + "_summary.csv";
    const auto rows = read_summary_csv(csv_path);
    REQUIRE(rows.size() == s.policies.size() * static_cast<size_t>(s.T));
    size_t idx = 0;
    for (const PolicySummary& p : s.policies) {
        for (int t = 1; t <= s.T; ++t, ++idx) {
            const SummaryCsvRow& r = rows[idx];
            CHECK(r.policy == p.label);
            CHECK(r.t == t);
            CHECK(std::fabs(r.mean_regret - p.mean_regret[t - 1]) <= 1e-12);
            CHECK(std::fabs(r.ci_high - r.ci_low - 2.0 * p.ci_half[t - 1]) <= 1e-12);
        }
    }

    const std::string json_text = slurp(cfg.output_dir + "/" + cfg.name + "_summary.json");
    CHECK(json_text.find("\"master_seed\": 9001") != std::string::npos);
    CHECK(json_text.find("switch_histogram") != std::string::npos);

    // svg structure: xml header, one polyline per policy, axis labels
    const std::string svg = slurp(cfg.output_dir + "/" + cfg.name + "_curves.svg");
    CHECK(svg.rfind("<?xml", 0) == 0);
    size_t count = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++count;
        ++pos;
    }
    CHECK(count == s.policies.size());
    CHECK(svg.find("cumulative regret") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("re-running a config yields byte-identical csv output") {
    namespace fs = std::filesystem;
    ExperimentConfig cfg = tiny_config();
    cfg.output_dir = "/tmp/banditlab_det";
    run_batch_with_outputs(cfg, 3);
    const std::string a = slurp(cfg.output_dir + "/tiny_summary.csv");
    run_batch_with_outputs(cfg, 1);
    const std::string b = slurp(cfg.output_dir + "/tiny_summary.csv");
    CHECK(!a.empty());
    CHECK(a == b);
    // the preamble carries the provenance needed for an exact re-run
    CHECK(a.find("# master_seed: 9001") != std::string::npos);
    CHECK(a.find("# config: ") != std::string::npos);
    fs::remove_all("/tmp/banditlab_det");
}

TEST_CASE("config json round trip and strict key checking") {
    const ExperimentConfig cfg = replicate("fig1a");
    const std::string text = experiment_to_json(cfg);
    const ExperimentConfig back = parse_experiment_json(text);
    CHECK(back.K == cfg.K);
    CHECK(back.d == cfg.d);
    CHECK(back.master_seed == cfg.master_seed);
    CHECK(back.policies.size() == cfg.policies.size());
    CHECK(experiment_to_json(back) == text);

    CHECK_THROWS_AS(parse_experiment_json("{\"bogus\": 1}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_json("{\"policies\": [{\"kind\": \"nope\"}]}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_json("{\"policies\": [{\"kind\": \"greedy\", \"x\": 1}]}"),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment_json("{\"context\": {\"type\": \"csv\"}}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_json("not json"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_json("{\"sigma\": {\"rule\": \"weird\"}}"), ConfigError);
}

TEST_CASE("replicate presets encode the documented regimes") {
    const ExperimentConfig a = replicate("fig1a");
    CHECK(a.K == 2);
    CHECK(a.d == 3);
    CHECK_FALSE(a.intercept);
    CHECK(a.T == 2000);
    CHECK(a.n_runs == 200);
    bool found_gf = false;
    for (const PolicyConfig& p : a.policies) {
        if (p.kind == PolicyConfig::Kind::greedy_first) {
            found_gf = true;
            CHECK(p.t0 == 48);  // 8 K d
            CHECK(p.lambda0 < 0.0);  // resolved by the auditor at run time
            CHECK(p.h == 5.0);
            CHECK(p.q == 1);
        }
        if (p.kind == PolicyConfig::Kind::oful) {
            CHECK(p.ridge_lambda == 1.0);
            CHECK(p.delta == 0.01);
        }
    }
    CHECK(found_gf);

    const ExperimentConfig c = replicate("fig1c");
    CHECK(c.intercept);
    CHECK(c.d == 4);

    const ExperimentConfig b = replicate("fig1b");
    CHECK(b.prior.mode == PriorSpec::Mode::incorrect);
    for (const PolicyConfig& p : b.policies) {
        if (p.kind == PolicyConfig::Kind::ts_prior_dependent) {
            CHECK(p.ts_prior_var == 100.0);
            CHECK(p.estimate_noise);
        }
    }

    const ExperimentConfig f3 = replicate("fig3_k5_d7");
    CHECK(f3.K == 5);
    CHECK(f3.d == 7);
    CHECK(f3.sigma.scaled);
    CHECK(f3.sigma.sigma_for(7) == doctest::Approx(0.25 * std::sqrt(7.0)));

    const ExperimentConfig full = replicate("fig1a", true);
    CHECK(full.n_runs == 1000);
    CHECK(full.T == 10000);

    const ExperimentConfig scan = replicate("fig2_greedy_scan");
    CHECK(scan.variants.size() == 9);
    const auto expanded = expand_variants(scan);
    CHECK(expanded.size() == 9);
    CHECK(expanded[3].d == 5);
    CHECK(expanded[3].name == "fig2_greedy_scan_d5");

    CHECK_THROWS_AS(replicate("nope"), ConfigError);
}

TEST_CASE("variants override policy parameters") {
    ExperimentConfig cfg = replicate("fig4_sensitivity_t0");
    REQUIRE(cfg.variants.size() == 4);
    const auto expanded = expand_variants(cfg);
    CHECK(expanded[0].policies[0].t0 == 32);
    CHECK(expanded[3].policies[0].t0 == 256);

    const ExperimentConfig hs = replicate("fig4_sensitivity_h");
    const auto hx = expand_variants(hs);
    CHECK(hx[0].policies[0].h == 1.0);
    CHECK(hx[1].policies[0].h == 2.5);

    const ExperimentConfig qs = replicate("fig4_sensitivity_q");
    const auto qx = expand_variants(qs);
    CHECK(qx[2].policies[0].q == 4);
}

TEST_CASE("run_batch validates configuration") {
    ExperimentConfig cfg = tiny_config();
    cfg.policies.clear();
    CHECK_THROWS_AS(run_batch(cfg, 1), ConfigError);

    cfg = tiny_config();
    cfg.T = 0;
    CHECK_THROWS_AS(run_batch(cfg, 1), ConfigError);

    cfg = tiny_config();
    cfg.prior.mode = PriorSpec::Mode::fixed;
    cfg.prior.fixed_betas = {{1.0}};  // wrong K and d
    CHECK_THROWS_AS(run_batch(cfg, 1), ConfigError);
}

TEST_CASE("csv normalization parameters are persisted with results") {
    namespace fs = std::filesystem;
    {
        std::ofstream out("/tmp/banditlab_covs.csv");
        out << "a,b\n";
        for (int i = 0; i < 12; ++i) out << i << ',' << 10 - i << '\n';
    }
    ExperimentConfig cfg = tiny_config();
    cfg.name = "csvdemo";
    cfg.context.type = ContextSpec::Type::csv;
    cfg.context.csv_path = "/tmp/banditlab_covs.csv";
    cfg.context.csv_normalize = true;
    cfg.d = 2;
    cfg.T = 50;
    cfg.n_runs = 3;
    const BatchSummary s = run_batch_with_outputs(cfg, 1);
    CHECK_FALSE(s.csv_normalization_json.empty());
    const std::string json_text = slurp(cfg.output_dir + "/csvdemo_summary.json");
    CHECK(json_text.find("csv_normalization") != std::string::npos);
    CHECK(json_text.find("col_scale") != std::string::npos);
    std::remove("/tmp/banditlab_covs.csv");
    fs::remove_all(cfg.output_dir);
}

TEST_CASE("the switch step is flagged in the trajectory") {
    ExperimentConfig cfg = tiny_config();
    PolicyConfig gf;
    gf.kind = PolicyConfig::Kind::greedy_first;
    gf.lambda0 = 1e9;  // impossible threshold: switch at t0+1
    gf.t0 = 10;
    cfg.policies = {gf};
    const ContextDistribution dist = cfg.context.build(cfg.d);
    const EpisodeStreams streams = make_episode_streams(cfg, dist, 0);
    const Trajectory traj = run_episode(streams, gf, 0, cfg.T);
    CHECK(traj.switch_time == 11);
    int flagged = 0;
    for (const StepRecord& s : traj.steps)
        if (s.switched) {
            ++flagged;
            CHECK(s.t == 11);
        }
    CHECK(flagged == 1);
}

TEST_CASE("seed mixing separates streams") {
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
    // stable across calls
    CHECK(mix_seed(42, 7) == mix_seed(42, 7));
}
