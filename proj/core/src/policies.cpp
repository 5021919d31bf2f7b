#include "banditlab/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace banditlab {

namespace {

Vec draw_init_estimate(int d, Rng& rng) {
    Vec v(d);
    for (double& x : v) x = rng.next_normal();
    return v;
}

std::vector<ArmState> make_arms(int K, int d, Rng& rng) {
    std::vector<ArmState> arms;
    arms.reserve(K);
    for (int i = 0; i < K; ++i) arms.emplace_back(d, draw_init_estimate(d, rng));
    return arms;
}

double identifiability_gate(const ArmState& arm, const Vec& x) {
    const double trace_after = arm.gram.trace() + dot(x, x);
    return std::max(kIdentifiabilityRel * trace_after, std::numeric_limits<double>::min());
}

void greedy_arm_update(std::vector<ArmState>& arms, int chosen, const Vec& x, double z) {
    arms[chosen].update(x, z, identifiability_gate(arms[chosen], x));
}

double min_arm_eigen(const std::vector<ArmState>& arms) {
    double m = arms[0].min_eig;
    for (const ArmState& a : arms) m = std::min(m, a.min_eig);
    return m;
}

}  // namespace

int argmax_with_ties(const Vec& scores, Rng& rng) {
    int best = 0;
    for (size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = static_cast<int>(i);
    int ties = 0;
    for (double s : scores)
        if (s == scores[best]) ++ties;
    if (ties <= 1) return best;
    int pick = rng.next_int(ties);
    for (size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] == scores[best] && pick-- == 0) return static_cast<int>(i);
    }
    return best;
}

bool greedy_first_should_switch(const std::vector<ArmState>& arms, double lambda0, int t, int t0) {
    if (t <= t0) return false;
    return min_arm_eigen(arms) < lambda0 * t / 4.0;
}

double heuristic_lambda_prime(const std::vector<ArmState>& arms, int t0, bool normalize_by_t0) {
    double lp = 0.5 * min_arm_eigen(arms);
    if (normalize_by_t0) lp /= t0;
    return lp;
}

std::optional<int> forced_arm_at(long step, int K, int q) {
    const long block = static_cast<long>(K) * q;
    for (int n = 0; n < 62; ++n) {
        const long lo = ((1L << n) - 1L) * block;
        if (step <= lo) return std::nullopt;
        if (step <= lo + block) {
            const long j = step - lo;  // 1..K*q
            return static_cast<int>((j - 1) / q);
        }
    }
    return std::nullopt;
}

namespace {

// Greedy Bandit; with a non-identity link it is the modified variant, which
// regresses on z = psi^-1(y). Selection works on the linear index directly
// since a strictly increasing psi keeps the argmax.
class GreedyPolicy final : public Policy {
public:
    GreedyPolicy(int K, int d, LinkFunction link, Rng rng)
        : link_(link), rng_(rng), arms_(make_arms(K, d, rng_)) {}

    int select(const Vec& x, int) override {
        Vec scores(arms_.size());
        for (size_t i = 0; i < arms_.size(); ++i) scores[i] = dot(x, arms_[i].estimate);
        return argmax_with_ties(scores, rng_);
    }

    void update(const Vec& x, int chosen, double y, int) override {
        greedy_arm_update(arms_, chosen, x, link_.inverse(y));
    }

    const ArmState* arm_state(int i) const override { return &arms_[i]; }

private:
    LinkFunction link_;
    Rng rng_;
    std::vector<ArmState> arms_;
};

// OLS bandit with the geometric forced-sampling schedule. Forced-sample
// estimates prefilter near-optimal arms (within h/2); all-sample estimates
// pick among them.
class OlsBanditPolicy final : public Policy {
public:
    OlsBanditPolicy(int K, int d, double h, int q, LinkFunction link, Rng rng)
        : K_(K), h_(h), q_(q), link_(link), rng_(rng) {
        all_ = make_arms(K, d, rng_);
        init_forced(d);
    }

    // post-switch constructor: inherits all-sample statistics, forced
    // statistics start fresh from the same initial estimates
    OlsBanditPolicy(int K, int d, double h, int q, LinkFunction link, std::vector<ArmState> all_sample,
                    Rng rng)
        : K_(K), h_(h), q_(q), link_(link), rng_(rng), all_(std::move(all_sample)) {
        init_forced(d);
    }

    int select(const Vec& x, int) override {
        ++steps_;
        pending_forced_ = forced_arm_at(steps_, K_, q_);
        if (pending_forced_) return *pending_forced_;

        double best_forced = -std::numeric_limits<double>::infinity();
        Vec forced_scores(K_);
        for (int i = 0; i < K_; ++i) {
            forced_scores[i] = dot(x, forced_[i].estimate);
            best_forced = std::max(best_forced, forced_scores[i]);
        }
        Vec scores(K_, -std::numeric_limits<double>::infinity());
        for (int i = 0; i < K_; ++i)
            if (forced_scores[i] >= best_forced - 0.5 * h_) scores[i] = dot(x, all_[i].estimate);
        return argmax_with_ties(scores, rng_);
    }

    void update(const Vec& x, int chosen, double y, int) override {
        const double z = link_.inverse(y);
        greedy_arm_update(all_, chosen, x, z);
        if (pending_forced_ && *pending_forced_ == chosen)
            forced_[chosen].update(x, z, identifiability_gate(forced_[chosen], x));
        pending_forced_.reset();
    }

    const ArmState* arm_state(int i) const override { return &all_[i]; }
    const ArmState& forced_state(int i) const { return forced_[i]; }

private:
    void init_forced(int d) {
        forced_.reserve(K_);
        for (int i = 0; i < K_; ++i) forced_.emplace_back(d, all_[i].init_estimate);
    }

    int K_;
    double h_;
    int q_;
    LinkFunction link_;
    Rng rng_;
    std::vector<ArmState> all_;
    std::vector<ArmState> forced_;
    long steps_ = 0;
    std::optional<int> pending_forced_;
};

// Greedy-First: greedy play plus the eigenvalue monitor; on the first
// violation after t0 it hands over to an OLS bandit permanently. The OLS
// phase inherits all-sample statistics and runs the forced schedule on its
// own step counter.
class GreedyFirstPolicy final : public Policy {
public:
    GreedyFirstPolicy(int K, int d, double lambda0, int t0, double h, int q, LinkFunction link, Rng rng)
        : K_(K), d_(d), lambda0_(lambda0), t0_(t0), h_(h), q_(q), link_(link), rng_(rng),
          arms_(make_arms(K, d, rng_)) {}

    int select(const Vec& x, int t) override {
        if (R_ != 0) return ols_->select(x, t);
        Vec scores(arms_.size());
        for (size_t i = 0; i < arms_.size(); ++i) scores[i] = dot(x, arms_[i].estimate);
        return argmax_with_ties(scores, rng_);
    }

    void update(const Vec& x, int chosen, double y, int t) override {
        if (R_ != 0) {
            ols_->update(x, chosen, y, t);
            return;
        }
        greedy_arm_update(arms_, chosen, x, link_.inverse(y));
        if (greedy_first_should_switch(arms_, lambda0_, t, t0_)) switch_to_ols(t);
    }

    int switch_time() const override { return R_; }
    const ArmState* arm_state(int i) const override {
        return R_ == 0 ? &arms_[i] : ols_->arm_state(i);
    }

private:
    void switch_to_ols(int t) {
        R_ = t;
        ols_ = std::make_unique<OlsBanditPolicy>(K_, d_, h_, q_, link_, arms_, rng_);
    }

    int K_, d_;
    double lambda0_;
    int t0_;
    double h_;
    int q_;
    LinkFunction link_;
    Rng rng_;
    std::vector<ArmState> arms_;
    int R_ = 0;
    std::unique_ptr<OlsBanditPolicy> ols_;
};

// Heuristic Greedy-First: plays greedy for t0 rounds, then estimates lambda0
// from the collected statistics; zero estimate means an arm was starved and
// the OLS bandit takes over immediately.
class HeuristicGreedyFirstPolicy final : public Policy {
public:
    HeuristicGreedyFirstPolicy(int K, int d, int t0, bool normalize, double h, int q, LinkFunction link,
                               Rng rng)
        : K_(K), d_(d), t0_(t0), normalize_(normalize), h_(h), q_(q), link_(link), rng_(rng),
          arms_(make_arms(K, d, rng_)) {}

    int select(const Vec& x, int t) override {
        if (R_ != 0) return ols_->select(x, t);
        Vec scores(arms_.size());
        for (size_t i = 0; i < arms_.size(); ++i) scores[i] = dot(x, arms_[i].estimate);
        return argmax_with_ties(scores, rng_);
    }

    void update(const Vec& x, int chosen, double y, int t) override {
        if (R_ != 0) {
            ols_->update(x, chosen, y, t);
            return;
        }
        greedy_arm_update(arms_, chosen, x, link_.inverse(y));
        if (t == t0_) {
            lambda0_ = heuristic_lambda_prime(arms_, t0_, normalize_);
            const double zero_tol = 1e-9 * std::max(1.0, arms_[0].gram.trace());
            if (lambda0_ <= zero_tol) switch_to_ols(t);
        } else if (t > t0_ && greedy_first_should_switch(arms_, lambda0_, t, t0_)) {
            switch_to_ols(t);
        }
    }

    int switch_time() const override { return R_; }
    const ArmState* arm_state(int i) const override {
        return R_ == 0 ? &arms_[i] : ols_->arm_state(i);
    }
    double lambda_prime() const { return lambda0_; }

private:
    void switch_to_ols(int t) {
        R_ = t;
        ols_ = std::make_unique<OlsBanditPolicy>(K_, d_, h_, q_, link_, arms_, rng_);
    }

    int K_, d_;
    int t0_;
    bool normalize_;
    double h_;
    int q_;
    LinkFunction link_;
    Rng rng_;
    std::vector<ArmState> arms_;
    double lambda0_ = 0.0;
    int R_ = 0;
    std::unique_ptr<OlsBanditPolicy> ols_;
};

// Shared ridge-regression state for OFUL and prior-free TS, with optional
// sequential noise estimation from pooled residuals.
struct RidgeArm {
    SymMat V;
    Vec moment;
    int n = 0;
    double sumsq = 0.0;

    RidgeArm(int d, double ridge) : V(d), moment(d, 0.0) {
        for (int i = 0; i < d; ++i) V.set(i, i, ridge);
    }

    void absorb(const Vec& x, double y) {
        V.add_rank_one(x);
        for (size_t i = 0; i < moment.size(); ++i) moment[i] += y * x[i];
        n += 1;
        sumsq += y * y;
    }
};

double pooled_sigma_estimate(const std::vector<RidgeArm>& arms, double ridge, int d) {
    double rss = 0.0;
    long n_total = 0;
    for (const RidgeArm& a : arms) {
        n_total += a.n;
        if (a.n == 0) continue;
        const Cholesky f = cholesky(a.V);
        const Vec beta = f.solve(a.moment);
        SymMat gram = a.V;
        for (int i = 0; i < d; ++i) gram.add(i, i, -ridge);
        rss += std::max(0.0, a.sumsq - 2.0 * dot(beta, a.moment) + dot(beta, gram.mul(beta)));
    }
    const long df = n_total - static_cast<long>(arms.size()) * d;
    if (df < 1) return 1.0;  // uninformed starting point
    return std::sqrt(std::max(rss / df, 1e-6));
}

class OfulPolicy final : public Policy {
public:
    OfulPolicy(int K, int d, double ridge, double delta, double S, double xmax, double sigma,
               bool estimate_noise, Rng rng)
        : d_(d), ridge_(ridge), delta_(delta), S_(S), xmax_(xmax), sigma_(sigma),
          estimate_noise_(estimate_noise), rng_(rng), arms_(static_cast<size_t>(K), RidgeArm(d, ridge)) {}

    int select(const Vec& x, int) override {
        const double sigma = estimate_noise_ ? sigma_hat_ : sigma_;
        Vec scores(arms_.size());
        for (size_t i = 0; i < arms_.size(); ++i) {
            const RidgeArm& a = arms_[i];
            const Cholesky f = cholesky(a.V);
            const Vec beta = f.solve(a.moment);
            const Vec w = f.solve(x);
            const double radius =
                sigma * std::sqrt(d_ * std::log((1.0 + a.n * xmax_ * xmax_ / ridge_) / delta_)) +
                std::sqrt(ridge_) * S_;
            scores[i] = dot(x, beta) + radius * std::sqrt(std::max(0.0, dot(x, w)));
        }
        return argmax_with_ties(scores, rng_);
    }

    void update(const Vec& x, int chosen, double y, int) override {
        arms_[chosen].absorb(x, y);
        if (estimate_noise_) sigma_hat_ = pooled_sigma_estimate(arms_, ridge_, d_);
    }

private:
    int d_;
    double ridge_, delta_, S_, xmax_, sigma_;
    bool estimate_noise_;
    Rng rng_;
    std::vector<RidgeArm> arms_;
    double sigma_hat_ = 1.0;
};

class TsPriorFreePolicy final : public Policy {
public:
    TsPriorFreePolicy(int K, int d, double ridge, double delta, double sigma, bool estimate_noise,
                      Rng rng)
        : d_(d), ridge_(ridge), delta_(delta), sigma_(sigma), estimate_noise_(estimate_noise),
          rng_(rng), arms_(static_cast<size_t>(K), RidgeArm(d, ridge)) {}

    int select(const Vec& x, int t) override {
        const double sigma = estimate_noise_ ? sigma_hat_ : sigma_;
        const double vt = sigma * std::sqrt(9.0 * d_ * std::log(std::max(t, 1) / delta_));
        Vec scores(arms_.size());
        for (size_t i = 0; i < arms_.size(); ++i) {
            const RidgeArm& a = arms_[i];
            const Cholesky f = cholesky(a.V);
            const Vec beta_hat = f.solve(a.moment);
            Vec z(d_);
            for (double& v : z) v = rng_.next_normal();
            const Vec w = f.solve_upper(z);  // cov = vt^2 V^-1
            double s = 0.0;
            for (int j = 0; j < d_; ++j) s += x[j] * (beta_hat[j] + vt * w[j]);
            scores[i] = s;
        }
        return argmax_with_ties(scores, rng_);
    }

    void update(const Vec& x, int chosen, double y, int) override {
        arms_[chosen].absorb(x, y);
        if (estimate_noise_) sigma_hat_ = pooled_sigma_estimate(arms_, ridge_, d_);
    }

private:
    int d_;
    double ridge_, delta_, sigma_;
    bool estimate_noise_;
    Rng rng_;
    std::vector<RidgeArm> arms_;
    double sigma_hat_ = 1.0;
};

// Conjugate Gaussian Thompson sampling: exact posterior under the configured
// prior N(mu0, Sigma0) and noise variance.
class TsPriorDependentPolicy final : public Policy {
public:
    TsPriorDependentPolicy(int K, int d, Vec prior_mean, const SymMat& prior_cov, double sigma,
                           bool estimate_noise, Rng rng)
        : d_(d), sigma_(sigma), estimate_noise_(estimate_noise), rng_(rng),
          arms_(static_cast<size_t>(K), RidgeArm(d, 0.0)) {
        const Cholesky f = cholesky(prior_cov, 1e-12 * std::max(prior_cov.trace(), 1.0));
        if (!f.ok) throw std::invalid_argument("ts_prior_dependent: prior covariance not PSD");
        prior_precision_ = SymMat(d);
        for (int j = 0; j < d; ++j) {
            Vec e(d, 0.0);
            e[j] = 1.0;
            const Vec col = f.solve(e);
            for (int i = 0; i < d; ++i) prior_precision_.set(i, j, col[i]);
        }
        precision_mean_ = prior_precision_.mul(prior_mean);
    }

    int select(const Vec& x, int) override {
        const double sigma = estimate_noise_ ? sigma_hat_ : sigma_;
        const double inv_var = 1.0 / (sigma * sigma);
        Vec scores(arms_.size());
        for (size_t i = 0; i < arms_.size(); ++i) {
            const auto [mean, chol] = posterior(arms_[i], inv_var);
            Vec z(d_);
            for (double& v : z) v = rng_.next_normal();
            const Vec w = chol.solve_upper(z);
            double s = 0.0;
            for (int j = 0; j < d_; ++j) s += x[j] * (mean[j] + w[j]);
            scores[i] = s;
        }
        return argmax_with_ties(scores, rng_);
    }

    void update(const Vec& x, int chosen, double y, int) override {
        arms_[chosen].absorb(x, y);
        if (estimate_noise_) sigma_hat_ = pooled_sigma_estimate(arms_, 0.0, d_);
    }

private:
    std::pair<Vec, Cholesky> posterior(const RidgeArm& a, double inv_var) const {
        SymMat precision = prior_precision_;
        precision.add_scaled(a.V, inv_var);
        Vec rhs = precision_mean_;
        for (int j = 0; j < d_; ++j) rhs[j] += inv_var * a.moment[j];
        Cholesky f = cholesky(precision);
        return {f.solve(rhs), std::move(f)};
    }

    int d_;
    double sigma_;
    bool estimate_noise_;
    Rng rng_;
    std::vector<RidgeArm> arms_;  // ridge 0: plain sufficient statistics
    SymMat prior_precision_;
    Vec precision_mean_;
    double sigma_hat_ = 1.0;
};

class OraclePolicy final : public Policy {
public:
    OraclePolicy(std::vector<Vec> betas, Rng rng) : betas_(std::move(betas)), rng_(rng) {}

    int select(const Vec& x, int) override {
        Vec scores(betas_.size());
        for (size_t i = 0; i < betas_.size(); ++i) scores[i] = dot(x, betas_[i]);
        return argmax_with_ties(scores, rng_);
    }

    void update(const Vec&, int, double, int) override {}

private:
    std::vector<Vec> betas_;
    Rng rng_;
};

class UniformRandomPolicy final : public Policy {
public:
    UniformRandomPolicy(int K, Rng rng) : K_(K), rng_(rng) {}
    int select(const Vec&, int) override { return rng_.next_int(K_); }
    void update(const Vec&, int, double, int) override {}

private:
    int K_;
    Rng rng_;
};

}  // namespace

std::pair<Vec, SymMat> gaussian_posterior(const Vec& prior_mean, const SymMat& prior_cov,
                                          const SymMat& gram, const Vec& moment, double sigma) {
    const int d = gram.dim();
    if (prior_cov.dim() != d || static_cast<int>(prior_mean.size()) != d ||
        static_cast<int>(moment.size()) != d)
        throw std::invalid_argument("gaussian_posterior: dimension mismatch");
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_posterior: sigma must be positive");

    const Cholesky prior_f = cholesky(prior_cov, 1e-12 * std::max(prior_cov.trace(), 1.0));
    if (!prior_f.ok) throw std::invalid_argument("gaussian_posterior: prior covariance not PSD");
    SymMat precision(d);
    Vec rhs(d, 0.0);
    const double inv_var = 1.0 / (sigma * sigma);
    for (int j = 0; j < d; ++j) {
        Vec e(d, 0.0);
        e[j] = 1.0;
        const Vec col = prior_f.solve(e);
        for (int i = 0; i < d; ++i) precision.set(i, j, col[i]);
    }
    rhs = precision.mul(prior_mean);
    precision.add_scaled(gram, inv_var);
    for (int j = 0; j < d; ++j) rhs[j] += inv_var * moment[j];

    const Cholesky post_f = cholesky(precision);
    Vec mean = post_f.solve(rhs);
    SymMat cov(d);
    for (int j = 0; j < d; ++j) {
        Vec e(d, 0.0);
        e[j] = 1.0;
        const Vec col = post_f.solve(e);
        for (int i = 0; i <= j; ++i) cov.set(i, j, col[i]);
    }
    return {std::move(mean), std::move(cov)};
}

std::string PolicyConfig::default_label() const {
    switch (kind) {
        case Kind::greedy: return "greedy";
        case Kind::modified_greedy: return "modified_greedy";
        case Kind::greedy_first: return "greedy_first";
        case Kind::heuristic_greedy_first: return "heuristic_greedy_first";
        case Kind::ols_bandit: return "ols_bandit";
        case Kind::oful: return "oful";
        case Kind::ts_prior_free: return "ts_prior_free";
        case Kind::ts_prior_dependent: return "ts_prior_dependent";
        case Kind::oracle: return "oracle";
        case Kind::uniform_random: return "uniform_random";
    }
    return "policy";
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, const ProblemInstance& inst,
                                    uint64_t seed) {
    using Kind = PolicyConfig::Kind;
    Rng rng(seed);
    const int K = inst.K;
    const int d = inst.d;
    const int t0 = cfg.t0 > 0 ? cfg.t0 : 8 * K * d;
    const double sigma = cfg.sigma_known >= 0.0 ? cfg.sigma_known : inst.sigma;
    const double xmax = inst.xmax > 0.0 ? inst.xmax : 1.0;
    const double S = cfg.S_bound >= 0.0 ? cfg.S_bound : (inst.bmax > 0.0 ? inst.bmax : 1.0);

    switch (cfg.kind) {
        case Kind::greedy:
            return std::make_unique<GreedyPolicy>(K, d, LinkFunction::make_identity(), rng);
        case Kind::modified_greedy:
            return std::make_unique<GreedyPolicy>(K, d, cfg.link, rng);
        case Kind::greedy_first: {
            if (!(cfg.lambda0 > 0.0))
                throw std::invalid_argument("greedy_first: lambda0 must be resolved to a positive value");
            return std::make_unique<GreedyFirstPolicy>(K, d, cfg.lambda0, t0, cfg.h, cfg.q,
                                                       LinkFunction::make_identity(), rng);
        }
        case Kind::heuristic_greedy_first:
            return std::make_unique<HeuristicGreedyFirstPolicy>(K, d, t0, cfg.normalize_by_t0, cfg.h,
                                                                cfg.q, LinkFunction::make_identity(), rng);
        case Kind::ols_bandit:
            return std::make_unique<OlsBanditPolicy>(K, d, cfg.h, cfg.q, LinkFunction::make_identity(),
                                                     rng);
        case Kind::oful:
            return std::make_unique<OfulPolicy>(K, d, cfg.ridge_lambda, cfg.delta, S, xmax, sigma,
                                                cfg.estimate_noise, rng);
        case Kind::ts_prior_free:
            return std::make_unique<TsPriorFreePolicy>(K, d, cfg.ridge_lambda, cfg.delta, sigma,
                                                       cfg.estimate_noise, rng);
        case Kind::ts_prior_dependent: {
            Vec mean = cfg.ts_prior_mean;
            if (mean.empty()) mean.assign(d, 0.0);
            if (static_cast<int>(mean.size()) != d)
                throw std::invalid_argument("ts_prior_dependent: prior mean dimension mismatch");
            SymMat cov = cfg.ts_prior_cov;
            if (cov.dim() == 0) {
                cov = SymMat::identity(d);
                cov.scale(cfg.ts_prior_var);
            }
            if (cov.dim() != d)
                throw std::invalid_argument("ts_prior_dependent: prior covariance dimension mismatch");
            return std::make_unique<TsPriorDependentPolicy>(K, d, std::move(mean), cov, sigma,
                                                            cfg.estimate_noise, rng);
        }
        case Kind::oracle:
            return std::make_unique<OraclePolicy>(inst.betas, rng);
        case Kind::uniform_random:
            return std::make_unique<UniformRandomPolicy>(K, rng);
    }
    throw std::logic_error("make_policy: unknown kind");
}

}  // namespace banditlab
