#include <fstream>
#include <sstream>

#include "banditlab/harness.hpp"
#include "json.hpp"

namespace banditlab {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
    }
}

Vec parse_vec(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
    Vec v;
    v.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_number()) throw ConfigError(where + ": expected an array of numbers");
        v.push_back(e.get<double>());
    }
    return v;
}

ContextSpec parse_context(const json& j, const std::string& where);

ContextSpec parse_context(const json& j, const std::string& where) {
    check_keys(j,
               {"type", "scale", "truncation", "bound", "radius", "J", "path", "normalize", "alpha",
                "direction", "beta_diff", "kappa0", "base"},
               where);
    ContextSpec c;
    const std::string type = j.value("type", "truncated_gaussian");
    if (type == "truncated_gaussian") {
        c.type = ContextSpec::Type::truncated_gaussian;
        c.scale = j.value("scale", 0.5);
        c.truncation = j.value("truncation", "linf");
        c.bound = j.value("bound", 1.0);
    } else if (type == "uniform_ball") {
        c.type = ContextSpec::Type::uniform_ball;
        c.radius = j.value("radius", 1.0);
    } else if (type == "gibbs") {
        c.type = ContextSpec::Type::gibbs;
        if (j.contains("J"))
            for (const auto& row : j.at("J")) c.J.push_back(parse_vec(row, where + ".J"));
    } else if (type == "csv") {
        c.type = ContextSpec::Type::csv;
        if (!j.contains("path")) throw ConfigError(where + ": csv context needs \"path\"");
        c.csv_path = j.at("path").get<std::string>();
        c.csv_normalize = j.value("normalize", true);
    } else if (type == "alpha_margin") {
        c.type = ContextSpec::Type::alpha_margin;
        c.alpha = j.value("alpha", 1.0);
        if (j.contains("direction")) c.direction = parse_vec(j.at("direction"), where + ".direction");
        if (!j.contains("base")) throw ConfigError(where + ": alpha_margin needs \"base\"");
        c.base = std::make_shared<ContextSpec>(parse_context(j.at("base"), where + ".base"));
    } else if (type == "gap") {
        c.type = ContextSpec::Type::gap;
        c.kappa0 = j.value("kappa0", 0.5);
        if (j.contains("beta_diff")) c.beta_diff = parse_vec(j.at("beta_diff"), where + ".beta_diff");
        if (!j.contains("base")) throw ConfigError(where + ": gap needs \"base\"");
        c.base = std::make_shared<ContextSpec>(parse_context(j.at("base"), where + ".base"));
    } else {
        throw ConfigError(where + ": unknown context type \"" + type + "\"");
    }
    return c;
}

json context_to_json(const ContextSpec& c) {
    json j;
    switch (c.type) {
        case ContextSpec::Type::truncated_gaussian:
            j["type"] = "truncated_gaussian";
            j["scale"] = c.scale;
            j["truncation"] = c.truncation;
            j["bound"] = c.bound;
            break;
        case ContextSpec::Type::uniform_ball:
            j["type"] = "uniform_ball";
            j["radius"] = c.radius;
            break;
        case ContextSpec::Type::gibbs:
            j["type"] = "gibbs";
            if (!c.J.empty()) j["J"] = c.J;
            break;
        case ContextSpec::Type::csv:
            j["type"] = "csv";
            j["path"] = c.csv_path;
            j["normalize"] = c.csv_normalize;
            break;
        case ContextSpec::Type::alpha_margin:
            j["type"] = "alpha_margin";
            j["alpha"] = c.alpha;
            j["direction"] = c.direction;
            j["base"] = context_to_json(*c.base);
            break;
        case ContextSpec::Type::gap:
            j["type"] = "gap";
            j["kappa0"] = c.kappa0;
            j["beta_diff"] = c.beta_diff;
            j["base"] = context_to_json(*c.base);
            break;
    }
    return j;
}

PolicyConfig parse_policy(const json& j, const std::string& where) {
    check_keys(j,
               {"kind", "label", "lambda0", "t0", "normalize_by_t0", "h", "q", "ridge_lambda", "delta",
                "S", "prior_mean", "prior_var", "sigma", "estimate_noise", "link"},
               where);
    PolicyConfig p;
    const std::string kind = j.value("kind", "greedy");
    using K = PolicyConfig::Kind;
    if (kind == "greedy") p.kind = K::greedy;
    else if (kind == "modified_greedy") p.kind = K::modified_greedy;
    else if (kind == "greedy_first") p.kind = K::greedy_first;
    else if (kind == "heuristic_greedy_first") p.kind = K::heuristic_greedy_first;
    else if (kind == "ols_bandit") p.kind = K::ols_bandit;
    else if (kind == "oful") p.kind = K::oful;
    else if (kind == "ts_prior_free") p.kind = K::ts_prior_free;
    else if (kind == "ts_prior_dependent") p.kind = K::ts_prior_dependent;
    else if (kind == "oracle") p.kind = K::oracle;
    else if (kind == "uniform_random") p.kind = K::uniform_random;
    else throw ConfigError(where + ": unknown policy kind \"" + kind + "\"");

    p.label = j.value("label", std::string{});
    if (j.contains("lambda0")) {
        const auto& l = j.at("lambda0");
        if (l.is_string()) {
            if (l.get<std::string>() != "auto")
                throw ConfigError(where + ": lambda0 must be a number or \"auto\"");
            p.lambda0 = -1.0;
        } else {
            p.lambda0 = l.get<double>();
        }
    }
    p.t0 = j.value("t0", -1);
    p.normalize_by_t0 = j.value("normalize_by_t0", true);
    p.h = j.value("h", 5.0);
    p.q = j.value("q", 1);
    p.ridge_lambda = j.value("ridge_lambda", 1.0);
    p.delta = j.value("delta", 0.01);
    p.S_bound = j.value("S", -1.0);
    if (j.contains("prior_mean")) p.ts_prior_mean = parse_vec(j.at("prior_mean"), where + ".prior_mean");
    p.ts_prior_var = j.value("prior_var", 1.0);
    if (j.contains("sigma")) {
        const auto& s = j.at("sigma");
        if (s.is_string()) {
            if (s.get<std::string>() != "auto")
                throw ConfigError(where + ": sigma must be a number or \"auto\"");
            p.sigma_known = -1.0;
        } else {
            p.sigma_known = s.get<double>();
        }
    }
    p.estimate_noise = j.value("estimate_noise", false);
    if (j.contains("link")) {
        const std::string link = j.at("link").get<std::string>();
        if (link == "identity") p.link = LinkFunction::make_identity();
        else if (link == "exp") p.link = LinkFunction::make_exp();
        else if (link.rfind("cubic:", 0) == 0) p.link = LinkFunction::make_cubic(std::stod(link.substr(6)));
        else throw ConfigError(where + ": unknown link \"" + link + "\"");
    }
    return p;
}

std::string link_to_string(const LinkFunction& l) {
    switch (l.kind) {
        case LinkFunction::Kind::identity: return "identity";
        case LinkFunction::Kind::exp: return "exp";
        case LinkFunction::Kind::cubic: {
            std::ostringstream os;
            os << "cubic:" << l.domain_bound;
            return os.str();
        }
    }
    return "identity";
}

json policy_to_json(const PolicyConfig& p) {
    json j;
    j["kind"] = PolicyConfig{p}.default_label();
    if (!p.label.empty()) j["label"] = p.label;
    switch (p.kind) {
        case PolicyConfig::Kind::greedy_first:
            if (p.lambda0 > 0.0) j["lambda0"] = p.lambda0;
            else j["lambda0"] = "auto";
            j["t0"] = p.t0;
            j["h"] = p.h;
            j["q"] = p.q;
            break;
        case PolicyConfig::Kind::heuristic_greedy_first:
            j["t0"] = p.t0;
            j["normalize_by_t0"] = p.normalize_by_t0;
            j["h"] = p.h;
            j["q"] = p.q;
            break;
        case PolicyConfig::Kind::ols_bandit:
            j["h"] = p.h;
            j["q"] = p.q;
            break;
        case PolicyConfig::Kind::oful:
            j["ridge_lambda"] = p.ridge_lambda;
            j["delta"] = p.delta;
            j["S"] = p.S_bound;
            j["estimate_noise"] = p.estimate_noise;
            break;
        case PolicyConfig::Kind::ts_prior_free:
            j["ridge_lambda"] = p.ridge_lambda;
            j["delta"] = p.delta;
            j["estimate_noise"] = p.estimate_noise;
            break;
        case PolicyConfig::Kind::ts_prior_dependent:
            if (!p.ts_prior_mean.empty()) j["prior_mean"] = p.ts_prior_mean;
            j["prior_var"] = p.ts_prior_var;
            j["estimate_noise"] = p.estimate_noise;
            break;
        case PolicyConfig::Kind::modified_greedy:
            j["link"] = link_to_string(p.link);
            break;
        default:
            break;
    }
    if (p.sigma_known > 0.0) j["sigma"] = p.sigma_known;
    return j;
}

}  // namespace

ExperimentConfig parse_experiment_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j,
               {"name", "K", "d", "T", "n_runs", "master_seed", "link", "intercept", "context", "prior",
                "sigma", "policies", "output_dir", "variants"},
               "config");
    ExperimentConfig cfg;
    cfg.name = j.value("name", "experiment");
    cfg.K = j.value("K", 2);
    cfg.d = j.value("d", 3);
    cfg.T = j.value("T", 2000);
    cfg.n_runs = j.value("n_runs", 200);
    cfg.master_seed = j.value("master_seed", static_cast<uint64_t>(101));
    cfg.link = j.value("link", "identity");
    cfg.intercept = j.value("intercept", false);
    if (j.contains("context")) cfg.context = parse_context(j.at("context"), "context");
    if (j.contains("prior")) {
        const json& pj = j.at("prior");
        check_keys(pj, {"mode", "betas"}, "prior");
        const std::string mode = pj.value("mode", "correct");
        if (mode == "correct") cfg.prior.mode = PriorSpec::Mode::correct;
        else if (mode == "incorrect") cfg.prior.mode = PriorSpec::Mode::incorrect;
        else if (mode == "fixed") cfg.prior.mode = PriorSpec::Mode::fixed;
        else throw ConfigError("prior: unknown mode \"" + mode + "\"");
        if (pj.contains("betas"))
            for (const auto& row : pj.at("betas")) cfg.prior.fixed_betas.push_back(parse_vec(row, "prior.betas"));
        if (cfg.prior.mode == PriorSpec::Mode::fixed && cfg.prior.fixed_betas.empty())
            throw ConfigError("prior: fixed mode needs \"betas\"");
    }
    if (j.contains("sigma")) {
        const json& sj = j.at("sigma");
        check_keys(sj, {"rule", "value"}, "sigma");
        const std::string rule = sj.value("rule", "fixed");
        if (rule == "fixed") cfg.sigma.scaled = false;
        else if (rule == "scaled") cfg.sigma.scaled = true;
        else throw ConfigError("sigma: rule must be \"fixed\" or \"scaled\"");
        cfg.sigma.value = sj.value("value", 0.5);
    }
    if (j.contains("policies")) {
        if (!j.at("policies").is_array()) throw ConfigError("policies: expected an array");
        int i = 0;
        for (const auto& pj : j.at("policies"))
            cfg.policies.push_back(parse_policy(pj, "policies[" + std::to_string(i++) + "]"));
    }
    cfg.output_dir = j.value("output_dir", "out");
    if (j.contains("variants")) {
        for (const auto& vj : j.at("variants")) {
            check_keys(vj, {"label", "d", "h", "q", "t0"}, "variants[]");
            Variant v;
            v.label = vj.value("label", std::string{});
            if (vj.contains("d")) v.d = vj.at("d").get<int>();
            if (vj.contains("h")) v.h = vj.at("h").get<double>();
            if (vj.contains("q")) v.q = vj.at("q").get<int>();
            if (vj.contains("t0")) v.t0 = vj.at("t0").get<int>();
            cfg.variants.push_back(v);
        }
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_json(buf.str());
}

std::string experiment_to_json(const ExperimentConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["K"] = cfg.K;
    j["d"] = cfg.d;
    j["T"] = cfg.T;
    j["n_runs"] = cfg.n_runs;
    j["master_seed"] = cfg.master_seed;
    j["link"] = cfg.link;
    j["intercept"] = cfg.intercept;
    j["context"] = context_to_json(cfg.context);
    {
        json pj;
        switch (cfg.prior.mode) {
            case PriorSpec::Mode::correct: pj["mode"] = "correct"; break;
            case PriorSpec::Mode::incorrect: pj["mode"] = "incorrect"; break;
            case PriorSpec::Mode::fixed:
                pj["mode"] = "fixed";
                pj["betas"] = cfg.prior.fixed_betas;
                break;
        }
        j["prior"] = pj;
    }
    j["sigma"] = {{"rule", cfg.sigma.scaled ? "scaled" : "fixed"}, {"value", cfg.sigma.value}};
    json pol = json::array();
    for (const PolicyConfig& p : cfg.policies) pol.push_back(policy_to_json(p));
    j["policies"] = pol;
    j["output_dir"] = cfg.output_dir;
    if (!cfg.variants.empty()) {
        json vs = json::array();
        for (const Variant& v : cfg.variants) {
            json vj;
            vj["label"] = v.label;
            if (v.d) vj["d"] = *v.d;
            if (v.h) vj["h"] = *v.h;
            if (v.q) vj["q"] = *v.q;
            if (v.t0) vj["t0"] = *v.t0;
            vs.push_back(vj);
        }
        j["variants"] = vs;
    }
    return j.dump(2);
}

std::string csv_normalization_to_json(const ContextDistribution::CsvNormalization& n) {
    json j;
    j["col_mean"] = n.col_mean;
    j["col_scale"] = n.col_scale;
    j["global_scale"] = n.global_scale;
    return j.dump();
}

std::string diversity_report_json(const DiversityReport& r) {
    json j;
    j["lambda0_hat"] = r.lambda0_hat;
    j["worst_direction"] = r.worst_direction;
    j["n_samples"] = r.n_samples;
    j["n_directions"] = r.n_directions;
    j["mc_stderr"] = r.mc_stderr;
    j["lambda_min_full_moment"] = r.lambda_full;
    j["degenerate"] = r.degenerate;
    j["note"] = "upper estimate of lambda0: directions only probe the unit sphere";
    return j.dump(2);
}

std::string theory_constants_json(const TheoryConstants& c) {
    json j;
    j["C1"] = c.C1;
    j["lambda"] = c.lambda;
    j["C2"] = c.C2;
    j["Cbar"] = c.Cbar;
    j["C_GB"] = c.C_GB;
    j["switch_delta"] = c.switch_delta;
    j["inputs"] = {{"lambda0", c.lambda0}, {"xmax", c.xmax}, {"bmax", c.bmax},
                   {"sigma", c.sigma},     {"d", c.d},       {"C0", c.C0},
                   {"t0", c.t0}};
    return j.dump(2);
}

}  // namespace banditlab
