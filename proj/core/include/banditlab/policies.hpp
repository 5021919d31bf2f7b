#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "banditlab/model.hpp"

namespace banditlab {

struct PolicyConfig {
    enum class Kind {
        greedy,
        modified_greedy,
        greedy_first,
        heuristic_greedy_first,
        ols_bandit,
        oful,
        ts_prior_free,
        ts_prior_dependent,
        oracle,
        uniform_random,
    };

    Kind kind = Kind::greedy;
    std::string label;  // output name; defaults to the kind name

    LinkFunction link = LinkFunction::make_identity();  // modified_greedy

    double lambda0 = -1.0;  // greedy_first; < 0 means "resolve via the diversity auditor"
    int t0 = -1;            // greedy_first / heuristic; < 0 means 8*K*d
    bool normalize_by_t0 = true;

    double h = 5.0;  // ols_bandit near-optimality band
    int q = 1;       // forced plays per arm per epoch

    double ridge_lambda = 1.0;
    double delta = 0.01;     // oful and ts_prior_free
    double S_bound = -1.0;   // < 0 means the instance bmax (or 1 if unknown)

    Vec ts_prior_mean;           // empty means zeros
    double ts_prior_var = 1.0;   // prior covariance = var * I unless ts_prior_cov set
    SymMat ts_prior_cov;

    double sigma_known = -1.0;   // < 0 means the instance sigma
    bool estimate_noise = false; // estimate sigma from residuals instead

    std::string default_label() const;
    std::string resolved_label() const { return label.empty() ? default_label() : label; }
};

// Uniform select/update contract. One policy object is owned by exactly one
// episode; it carries its own rng stream.
class Policy {
public:
    virtual ~Policy() = default;

    virtual int select(const Vec& x, int t) = 0;
    virtual void update(const Vec& x, int chosen, double y, int t) = 0;

    // Greedy-First switch round R; 0 while purely greedy.
    virtual int switch_time() const { return 0; }

    // Per-arm statistics, where the policy keeps them (nullptr otherwise).
    virtual const ArmState* arm_state(int i) const { (void)i; return nullptr; }
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, const ProblemInstance& inst,
                                    uint64_t seed);

// Monitor condition of the Greedy-First bandit: switch when t > t0 and
// min_i lmin(Gram_i) < lambda0 * t / 4.
bool greedy_first_should_switch(const std::vector<ArmState>& arms, double lambda0, int t, int t0);

// Heuristic initialization after t0 greedy rounds:
// lambda' = 0.5 * min_i lmin(Gram_i at t0), divided by t0 when normalizing.
double heuristic_lambda_prime(const std::vector<ArmState>& arms, int t0, bool normalize_by_t0);

// Forced-sampling schedule of the OLS bandit: arm i (0-based) is forced at
// steps {(2^n - 1) K q + j : n >= 0, j in (i q, (i+1) q]}; steps are 1-based.
std::optional<int> forced_arm_at(long step, int K, int q);

// argmax with uniform tie-breaking among exact ties; consumes rng only when
// a tie actually occurs.
int argmax_with_ties(const Vec& scores, Rng& rng);

// Exact conjugate posterior of the Gaussian linear model: prior N(mean0, cov0)
// plus observations summarized by (gram, moment) under noise level sigma.
std::pair<Vec, SymMat> gaussian_posterior(const Vec& prior_mean, const SymMat& prior_cov,
                                          const SymMat& gram, const Vec& moment, double sigma);

}  // namespace banditlab
