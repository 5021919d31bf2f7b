#include "banditlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace banditlab {

ContextDistribution ContextSpec::build(int d) const {
    switch (type) {
        case Type::truncated_gaussian: {
            const auto mode = truncation == "l2" ? ContextDistribution::Truncation::l2
                                                 : ContextDistribution::Truncation::linf;
            if (truncation != "l2" && truncation != "linf")
                throw ConfigError("context: truncation must be \"l2\" or \"linf\"");
            return ContextDistribution::truncated_gaussian(d, scale, SymMat::identity(d), mode, bound);
        }
        case Type::uniform_ball:
            return ContextDistribution::uniform_ball(d, radius);
        case Type::gibbs: {
            Mat j(d, d);
            if (!J.empty()) {
                if (static_cast<int>(J.size()) != d)
                    throw ConfigError("context: Gibbs J must be d x d");
                for (int r = 0; r < d; ++r) {
                    if (static_cast<int>(J[r].size()) != d)
                        throw ConfigError("context: Gibbs J must be d x d");
                    for (int c = 0; c < d; ++c) j.at(r, c) = J[r][c];
                }
            }
            return ContextDistribution::gibbs_hypercube(j);
        }
        case Type::csv:
            return load_csv_covariates(csv_path, csv_normalize);
        case Type::alpha_margin: {
            if (!base) throw ConfigError("context: alpha_margin requires a base spec");
            return ContextDistribution::alpha_margin(alpha, direction, base->build(d));
        }
        case Type::gap: {
            if (!base) throw ConfigError("context: gap requires a base spec");
            return gap_filter(base->build(d), beta_diff, kappa0);
        }
    }
    throw ConfigError("context: unknown type");
}

ParameterPrior PriorSpec::build(bool intercept) const {
    ParameterPrior p;
    switch (mode) {
        case Mode::correct:
            p = ParameterPrior::scaled_gaussian(1.0);
            break;
        case Mode::incorrect:
            p = ParameterPrior::mixture({0.5, 0.5, 1.0}, {0.5, 0.5, -1.0});
            break;
        case Mode::fixed:
            p = ParameterPrior::scaled_gaussian(1.0);  // unused; fixed betas bypass sampling
            break;
    }
    if (intercept) p.intercept = InterceptSpec{};
    return p;
}

double SigmaRule::sigma_for(int d) const {
    return scaled ? value * std::sqrt(static_cast<double>(d)) : value;
}

LinkFunction ExperimentConfig::link_fn() const {
    if (link == "identity") return LinkFunction::make_identity();
    if (link == "exp") return LinkFunction::make_exp();
    if (link.rfind("cubic:", 0) == 0) return LinkFunction::make_cubic(std::stod(link.substr(6)));
    throw ConfigError("link: expected \"identity\", \"exp\" or \"cubic:<zmax>\", got \"" + link + "\"");
}

ExperimentConfig ExperimentConfig::with_variant(const Variant& v) const {
    ExperimentConfig out = *this;
    out.variants.clear();
    if (!v.label.empty()) out.name = name + "_" + v.label;
    if (v.d) out.d = *v.d;
    for (PolicyConfig& p : out.policies) {
        if (v.h) p.h = *v.h;
        if (v.q) p.q = *v.q;
        if (v.t0) p.t0 = *v.t0;
    }
    return out;
}

std::vector<ExperimentConfig> expand_variants(const ExperimentConfig& cfg) {
    if (cfg.variants.empty()) return {cfg};
    std::vector<ExperimentConfig> out;
    out.reserve(cfg.variants.size());
    for (const Variant& v : cfg.variants) out.push_back(cfg.with_variant(v));
    return out;
}

namespace {

int base_dim(const ExperimentConfig& cfg) { return cfg.intercept ? cfg.d - 1 : cfg.d; }

struct ResolvedContext {
    ContextDistribution base;      // pre-intercept covariates
    ContextDistribution instance;  // what episodes sample from
};

ResolvedContext resolve_context(const ExperimentConfig& cfg) {
    ContextDistribution base = cfg.context.build(base_dim(cfg));
    if (cfg.intercept)
        return {base, ContextDistribution::intercept_augmented(base)};
    return {base, base};
}

}  // namespace

EpisodeStreams make_episode_streams(const ExperimentConfig& cfg, const ContextDistribution& dist,
                                    int run_index) {
    EpisodeStreams s;
    s.episode_seed = mix_seed(cfg.master_seed, static_cast<uint64_t>(run_index));

    const int bd = base_dim(cfg);
    const double sigma = cfg.sigma.sigma_for(cfg.d);
    Rng inst_rng(mix_seed(s.episode_seed, stream_tag::instance));
    if (cfg.prior.mode == PriorSpec::Mode::fixed) {
        ProblemInstance inst;
        inst.K = cfg.K;
        inst.d = cfg.d;
        inst.betas = cfg.prior.fixed_betas;
        if (static_cast<int>(inst.betas.size()) != cfg.K)
            throw ConfigError("prior: fixed mode needs K beta vectors");
        for (const Vec& b : inst.betas)
            if (static_cast<int>(b.size()) != cfg.d)
                throw ConfigError("prior: fixed beta dimension must equal d");
        inst.sigma = sigma;
        inst.link = cfg.link_fn();
        double bmax = 0.0;
        for (const Vec& b : inst.betas) bmax = std::max(bmax, norm2(b));
        inst.bmax = bmax;
        s.instance = std::move(inst);
    } else {
        s.instance = sample_instance(cfg.prior.build(cfg.intercept), cfg.K, bd, sigma, cfg.link_fn(),
                                     inst_rng);
    }
    s.instance.xmax = dist.xmax();
    s.instance.context = std::make_shared<ContextDistribution>(dist);

    Rng ctx_rng(mix_seed(s.episode_seed, stream_tag::context));
    s.contexts.resize(cfg.T);
    for (Vec& x : s.contexts) x = dist.sample(ctx_rng);

    Rng noise_rng(mix_seed(s.episode_seed, stream_tag::noise));
    s.noise.assign(cfg.T, Vec(cfg.K));
    for (int t = 0; t < cfg.T; ++t)
        for (int k = 0; k < cfg.K; ++k) s.noise[t][k] = noise_rng.next_normal();
    return s;
}

Trajectory run_episode(const EpisodeStreams& streams, const PolicyConfig& policy, int policy_index,
                       int T) {
    const ProblemInstance& inst = streams.instance;
    auto pol = make_policy(policy, inst, streams.policy_seed(policy_index));

    Trajectory traj;
    traj.steps.reserve(T);
    double cum = 0.0;
    for (int t = 1; t <= T; ++t) {
        const Vec& x = streams.contexts[t - 1];
        const int a = pol->select(x, t);
        const double eps = inst.sigma * streams.noise[t - 1][a];
        const double y = inst.link.forward(dot(x, inst.betas[a]) + eps);
        pol->update(x, a, y, t);

        StepRecord rec;
        rec.t = t;
        rec.context = x;
        rec.chosen = a;
        rec.reward = y;
        rec.regret = instantaneous_regret(inst, x, a);
        rec.switched = pol->switch_time() == t;
        cum += rec.regret;
        traj.steps.push_back(std::move(rec));
    }
    traj.final_regret = cum;
    traj.switch_time = pol->switch_time();
    return traj;
}

namespace {

struct RunResult {
    // per policy: cumulative regret curve plus switch time
    std::vector<std::vector<double>> curves;
    std::vector<int> switch_times;
};

RunResult run_one(const ExperimentConfig& cfg, const ContextDistribution& dist, int run_index) {
    const EpisodeStreams streams = make_episode_streams(cfg, dist, run_index);
    RunResult rr;
    rr.curves.resize(cfg.policies.size());
    rr.switch_times.resize(cfg.policies.size(), 0);
    for (size_t p = 0; p < cfg.policies.size(); ++p) {
        const Trajectory traj = run_episode(streams, cfg.policies[p], static_cast<int>(p), cfg.T);
        std::vector<double> curve(cfg.T);
        double cum = 0.0;
        for (int t = 0; t < cfg.T; ++t) {
            cum += traj.steps[t].regret;
            curve[t] = cum;
        }
        rr.curves[p] = std::move(curve);
        rr.switch_times[p] = traj.switch_time;
    }
    return rr;
}

double audit_lambda0(const ExperimentConfig& cfg, const ContextDistribution& base) {
    Rng rng(mix_seed(cfg.master_seed, stream_tag::audit));
    const DiversityReport rep = estimate_lambda0(base, 20000, 200, rng);
    return rep.lambda0_hat;
}

}  // namespace

BatchSummary run_batch(const ExperimentConfig& cfg_in, int workers) {
    ExperimentConfig cfg = cfg_in;
    if (cfg.T < 1 || cfg.n_runs < 1) throw ConfigError("T and n_runs must be >= 1");
    if (cfg.policies.empty()) throw ConfigError("policy list is empty");
    if (cfg.intercept && cfg.d < 2) throw ConfigError("intercept regime needs d >= 2");
    if (cfg.prior.mode == PriorSpec::Mode::fixed) {
        if (static_cast<int>(cfg.prior.fixed_betas.size()) != cfg.K)
            throw ConfigError("prior: fixed mode needs K beta vectors");
        for (const Vec& b : cfg.prior.fixed_betas)
            if (static_cast<int>(b.size()) != cfg.d)
                throw ConfigError("prior: fixed beta dimension must equal d");
    }

    ResolvedContext rc = resolve_context(cfg);
    if (cfg.context.type == ContextSpec::Type::csv) {
        const int dd = rc.instance.dim();
        if (cfg.d != dd) {
            if (cfg.d != 0 && !cfg.intercept)
                throw ConfigError("d does not match the csv column count");
            cfg.d = dd;
        }
    }
    if (rc.instance.dim() != cfg.d) throw ConfigError("context dimension does not match d");

    BatchSummary out;
    // The auditor runs on the pre-intercept covariates: the constant
    // coordinate forces the audited constant to zero, which would disable
    // the monitor entirely. The audit is an upper estimate of lambda0, so
    // the monitor input is halved (the same safety factor the heuristic
    // initializer applies to its empirical eigenvalue estimate).
    for (PolicyConfig& p : cfg.policies) {
        if (p.kind == PolicyConfig::Kind::greedy_first && !(p.lambda0 > 0.0)) {
            if (out.audited_lambda0 < 0.0) {
                out.audited_lambda0 = audit_lambda0(cfg, rc.base);
                out.resolved_lambda0 = out.audited_lambda0 / 3.0;
            }
            p.lambda0 = out.resolved_lambda0;
        }
    }

    out.name = cfg.name;
    out.K = cfg.K;
    out.d = cfg.d;
    out.T = cfg.T;
    out.n_runs = cfg.n_runs;
    out.master_seed = cfg.master_seed;
    out.config_json = experiment_to_json(cfg);
    if (rc.base.kind() == ContextDistribution::Kind::csv_backed &&
        rc.base.csv_normalization().enabled)
        out.csv_normalization_json = csv_normalization_to_json(rc.base.csv_normalization());

    const size_t P = cfg.policies.size();
    out.policies.resize(P);
    std::vector<std::vector<double>> sum(P, std::vector<double>(cfg.T, 0.0));
    std::vector<std::vector<double>> sumsq(P, std::vector<double>(cfg.T, 0.0));
    for (size_t p = 0; p < P; ++p) {
        out.policies[p].label = cfg.policies[p].resolved_label();
        out.policies[p].final_regret.reserve(cfg.n_runs);
        out.policies[p].half_time_regret.reserve(cfg.n_runs);
        out.policies[p].switch_times.reserve(cfg.n_runs);
    }

    int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::max(1, std::min(n_workers, cfg.n_runs));
    const int block = std::max(4 * n_workers, 32);
    const int half_idx = cfg.T / 2 - 1;

    for (int lo = 0; lo < cfg.n_runs; lo += block) {
        const int hi = std::min(lo + block, cfg.n_runs);
        std::vector<RunResult> results(hi - lo);
        std::vector<std::exception_ptr> errors(hi - lo);
        std::atomic<int> next{lo};
        auto worker = [&]() {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= hi) return;
                try {
                    results[r - lo] = run_one(cfg, rc.instance, r);
                } catch (...) {
                    errors[r - lo] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        for (const std::exception_ptr& e : errors)
            if (e) std::rethrow_exception(e);

        // fixed-order reduction
        for (int r = lo; r < hi; ++r) {
            const RunResult& rr = results[r - lo];
            for (size_t p = 0; p < P; ++p) {
                const auto& curve = rr.curves[p];
                for (int t = 0; t < cfg.T; ++t) {
                    sum[p][t] += curve[t];
                    sumsq[p][t] += curve[t] * curve[t];
                }
                PolicySummary& ps = out.policies[p];
                ps.final_regret.push_back(curve[cfg.T - 1]);
                ps.half_time_regret.push_back(half_idx >= 0 ? curve[half_idx] : 0.0);
                ps.switch_times.push_back(rr.switch_times[p]);
                if (rr.switch_times[p] > 0) {
                    ps.switch_count += 1;
                    ps.switch_histogram[rr.switch_times[p]] += 1;
                }
            }
        }
    }

    const double n = cfg.n_runs;
    for (size_t p = 0; p < P; ++p) {
        PolicySummary& ps = out.policies[p];
        ps.mean_regret.resize(cfg.T);
        ps.ci_half.resize(cfg.T);
        for (int t = 0; t < cfg.T; ++t) {
            const double mean = sum[p][t] / n;
            ps.mean_regret[t] = mean;
            if (cfg.n_runs > 1) {
                const double var = std::max(0.0, (sumsq[p][t] - n * mean * mean) / (n - 1.0));
                ps.ci_half[t] = 1.96 * std::sqrt(var / n);
            } else {
                ps.ci_half[t] = 0.0;
            }
        }
    }
    return out;
}

const PolicySummary& BatchSummary::policy(const std::string& label) const {
    for (const PolicySummary& p : policies)
        if (p.label == label) return p;
    throw std::out_of_range("BatchSummary: no policy labelled " + label);
}

namespace {

std::vector<PolicyConfig> comparison_policies(bool incorrect_prior) {
    std::vector<PolicyConfig> ps;
    PolicyConfig greedy;
    greedy.kind = PolicyConfig::Kind::greedy;
    ps.push_back(greedy);

    PolicyConfig gf;
    gf.kind = PolicyConfig::Kind::greedy_first;
    gf.lambda0 = -1.0;  // auto via the diversity auditor
    ps.push_back(gf);

    PolicyConfig ols;
    ols.kind = PolicyConfig::Kind::ols_bandit;
    ps.push_back(ols);

    PolicyConfig oful;
    oful.kind = PolicyConfig::Kind::oful;
    oful.estimate_noise = incorrect_prior;
    ps.push_back(oful);

    PolicyConfig tsf;
    tsf.kind = PolicyConfig::Kind::ts_prior_free;
    tsf.estimate_noise = incorrect_prior;
    ps.push_back(tsf);

    PolicyConfig tsd;
    tsd.kind = PolicyConfig::Kind::ts_prior_dependent;
    tsd.ts_prior_var = incorrect_prior ? 100.0 : 1.0;
    tsd.estimate_noise = incorrect_prior;
    ps.push_back(tsd);

    PolicyConfig oracle;
    oracle.kind = PolicyConfig::Kind::oracle;
    ps.push_back(oracle);

    PolicyConfig unif;
    unif.kind = PolicyConfig::Kind::uniform_random;
    ps.push_back(unif);
    return ps;
}

ExperimentConfig fig1_base(bool incorrect_prior, bool intercept, uint64_t seed) {
    ExperimentConfig cfg;
    cfg.K = 2;
    cfg.d = intercept ? 4 : 3;
    cfg.T = 2000;
    cfg.n_runs = 200;
    cfg.master_seed = seed;
    cfg.context = ContextSpec{};  // 0.5 * N(0, I) truncated at linf 1
    cfg.prior.mode = incorrect_prior ? PriorSpec::Mode::incorrect : PriorSpec::Mode::correct;
    cfg.sigma = SigmaRule{false, 0.5};
    cfg.intercept = intercept;
    cfg.policies = comparison_policies(incorrect_prior);
    for (PolicyConfig& p : cfg.policies)
        if (p.kind == PolicyConfig::Kind::greedy_first) p.t0 = 8 * cfg.K * cfg.d;
    return cfg;
}

PolicyConfig greedy_first_only() {
    PolicyConfig gf;
    gf.kind = PolicyConfig::Kind::greedy_first;
    gf.lambda0 = -1.0;
    return gf;
}

}  // namespace

ExperimentConfig replicate(const std::string& preset_name, bool full) {
    ExperimentConfig cfg;
    if (preset_name == "fig1a") {
        cfg = fig1_base(false, false, 101);
    } else if (preset_name == "fig1b") {
        cfg = fig1_base(true, false, 102);
    } else if (preset_name == "fig1c") {
        cfg = fig1_base(false, true, 103);
    } else if (preset_name == "fig1d") {
        cfg = fig1_base(true, true, 104);
    } else if (preset_name == "fig2_greedy_scan") {
        cfg.K = 5;
        cfg.d = 2;
        cfg.master_seed = 201;
        cfg.prior.mode = PriorSpec::Mode::correct;
        cfg.sigma = SigmaRule{true, 0.25};
        PolicyConfig greedy;
        greedy.kind = PolicyConfig::Kind::greedy;
        cfg.policies = {greedy};
        for (int d = 2; d <= 10; ++d) {
            Variant v;
            v.label = "d" + std::to_string(d);
            v.d = d;
            cfg.variants.push_back(v);
        }
    } else if (preset_name == "fig3_k5_d3" || preset_name == "fig3_k5_d7") {
        const int d = preset_name == "fig3_k5_d3" ? 3 : 7;
        cfg = fig1_base(false, false, 300 + d);
        cfg.K = 5;
        cfg.d = d;
        cfg.sigma = SigmaRule{true, 0.25};
        for (PolicyConfig& p : cfg.policies)
            if (p.kind == PolicyConfig::Kind::greedy_first) p.t0 = 8 * cfg.K * cfg.d;
    } else if (preset_name == "fig4_sensitivity_h") {
        cfg = fig1_base(false, true, 401);
        cfg.policies = {greedy_first_only()};
        for (double h : {1.0, 2.5, 5.0, 10.0}) {
            Variant v;
            v.label = "h" + std::to_string(static_cast<int>(h * 10));
            v.h = h;
            cfg.variants.push_back(v);
        }
    } else if (preset_name == "fig4_sensitivity_q") {
        cfg = fig1_base(false, true, 402);
        cfg.policies = {greedy_first_only()};
        for (int q : {1, 2, 4}) {
            Variant v;
            v.label = "q" + std::to_string(q);
            v.q = q;
            cfg.variants.push_back(v);
        }
    } else if (preset_name == "fig4_sensitivity_t0") {
        cfg = fig1_base(false, true, 403);
        cfg.policies = {greedy_first_only()};
        for (int t0 : {32, 64, 128, 256}) {
            Variant v;
            v.label = "t0_" + std::to_string(t0);
            v.t0 = t0;
            cfg.variants.push_back(v);
        }
    } else if (preset_name == "fig5_csv") {
        cfg.K = 2;
        cfg.d = 0;  // derived from the csv column count
        cfg.master_seed = 501;
        cfg.context.type = ContextSpec::Type::csv;
        cfg.context.csv_path = "covariates.csv";
        cfg.context.csv_normalize = true;
        cfg.prior.mode = PriorSpec::Mode::correct;
        cfg.sigma = SigmaRule{false, 0.5};
        cfg.policies = comparison_policies(false);
    } else {
        throw ConfigError("unknown preset \"" + preset_name + "\"");
    }
    cfg.name = preset_name;
    if (full) {
        cfg.n_runs = 1000;
        cfg.T = 10000;
    }
    return cfg;
}

std::vector<std::string> preset_names() {
    return {"fig1a", "fig1b", "fig1c", "fig1d", "fig2_greedy_scan", "fig3_k5_d3", "fig3_k5_d7",
            "fig4_sensitivity_h", "fig4_sensitivity_q", "fig4_sensitivity_t0", "fig5_csv"};
}

}  // namespace banditlab
