#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "banditlab/harness.hpp"

namespace bl = banditlab;

namespace {

// --dist accepts a preset string or csv:PATH:
//   fig1[:d=N]          0.5*N(0,I_d) truncated at linf 1 (default d=3)
//   uniform_ball:d=N,r=R
//   rademacher:d=N
//   intercept:<inner>   wraps another preset with the constant coordinate
//   csv:PATH[,raw]      csv pool, normalized unless ",raw"
bl::ContextDistribution parse_dist(const std::string& spec) {
    auto get_param = [](const std::string& s, const std::string& key, double fallback) {
        const auto pos = s.find(key + "=");
        if (pos == std::string::npos) return fallback;
        return std::stod(s.substr(pos + key.size() + 1));
    };
    if (spec.rfind("csv:", 0) == 0) {
        std::string rest = spec.substr(4);
        bool normalize = true;
        if (rest.size() > 4 && rest.rfind(",raw") == rest.size() - 4) {
            normalize = false;
            rest = rest.substr(0, rest.size() - 4);
        }
        return bl::load_csv_covariates(rest, normalize);
    }
    if (spec.rfind("intercept:", 0) == 0)
        return bl::ContextDistribution::intercept_augmented(parse_dist(spec.substr(10)));
    if (spec.rfind("fig1", 0) == 0) return bl::diversity_preset(static_cast<int>(get_param(spec, "d", 3)));
    if (spec.rfind("uniform_ball", 0) == 0)
        return bl::ContextDistribution::uniform_ball(static_cast<int>(get_param(spec, "d", 3)),
                                                     get_param(spec, "r", 1.0));
    if (spec.rfind("rademacher", 0) == 0)
        return bl::ContextDistribution::rademacher(static_cast<int>(get_param(spec, "d", 2)));
    throw bl::ConfigError("unknown distribution spec \"" + spec + "\"");
}

void run_configs(const bl::ExperimentConfig& cfg, int workers) {
    for (const bl::ExperimentConfig& c : bl::expand_variants(cfg)) {
        std::cout << "running " << c.name << " (K=" << c.K << " d="
                  << (c.d > 0 ? std::to_string(c.d) : std::string("csv")) << " T=" << c.T
                  << " runs=" << c.n_runs << ")" << std::endl;
        const bl::BatchSummary s = bl::run_batch_with_outputs(c, workers);
        std::cout << "  wrote " << c.output_dir << "/" << c.name << "_{summary.csv,summary.json,"
                  << "curves.svg,runs.csv}" << std::endl;
        for (const bl::PolicySummary& p : s.policies) {
            std::printf("  %-24s final mean regret %10.3f", p.label.c_str(),
                        p.mean_regret.back());
            if (p.switch_count > 0) std::printf("  switches %d/%d", p.switch_count, s.n_runs);
            std::printf("\n");
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"banditlab - contextual bandit simulation and analysis toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run an experiment from a JSON config file");
    std::string config_path;
    bool full = false;
    int workers = 0;
    sim->add_option("--config", config_path, "experiment config (JSON)")->required();
    sim->add_flag("--full", full, "paper scale: n_runs=1000, T=10000");
    sim->add_option("--workers", workers, "worker threads (default: hardware)");

    // replicate
    auto* rep = app.add_subcommand("replicate", "run a named experiment preset");
    std::string preset;
    bool rep_full = false;
    int rep_workers = 0;
    std::string csv_override;
    rep->add_option("preset", preset, "preset name")->required();
    rep->add_flag("--full", rep_full, "paper scale: n_runs=1000, T=10000");
    rep->add_option("--workers", rep_workers, "worker threads (default: hardware)");
    rep->add_option("--csv", csv_override, "covariate csv for the fig5_csv preset");

    // diversity
    auto* div = app.add_subcommand("diversity", "estimate the covariate diversity constant");
    std::string dist_spec = "fig1";
    int n_samples = 20000;
    int n_directions = 200;
    uint64_t div_seed = 7;
    div->add_option("--dist", dist_spec, "distribution preset or csv:PATH")->required();
    div->add_option("--samples", n_samples, "Monte Carlo sample count");
    div->add_option("--directions", n_directions, "random unit directions");
    div->add_option("--seed", div_seed, "rng seed");

    // constants
    auto* con = app.add_subcommand("constants", "evaluate the regret-bound constants");
    double lambda0 = 0, xmax = 0, bmax = 0, c_sigma = 0, c0 = 1.0, t0 = 0;
    int c_d = 0;
    con->add_option("--lambda0", lambda0)->required();
    con->add_option("--xmax", xmax)->required();
    con->add_option("--bmax", bmax)->required();
    con->add_option("--sigma", c_sigma)->required();
    con->add_option("--d", c_d)->required();
    con->add_option("--c0", c0)->required();
    con->add_option("--t0", t0)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*sim) {
            bl::ExperimentConfig cfg = bl::load_experiment_config(config_path);
            if (full) {
                cfg.n_runs = 1000;
                cfg.T = 10000;
            }
            run_configs(cfg, workers);
        } else if (*rep) {
            bl::ExperimentConfig cfg = bl::replicate(preset, rep_full);
            if (!csv_override.empty()) cfg.context.csv_path = csv_override;
            run_configs(cfg, rep_workers);
        } else if (*div) {
            bl::Rng rng(div_seed);
            const bl::ContextDistribution dist = parse_dist(dist_spec);
            const bl::DiversityReport r = bl::estimate_lambda0(dist, n_samples, n_directions, rng);
            std::cout << bl::diversity_report_json(r) << std::endl;
        } else if (*con) {
            const bl::TheoryConstants c = bl::theory_constants(lambda0, xmax, bmax, c_sigma, c_d, c0, t0);
            std::cout << bl::theory_constants_json(c) << std::endl;
        }
    } catch (const bl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}
