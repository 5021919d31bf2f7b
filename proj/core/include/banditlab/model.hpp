#pragma once

#include <memory>
#include <string>
#include <vector>

#include "banditlab/linalg.hpp"

namespace banditlab {

class ContextDistribution;

// Reward transform applied on top of the linear index: y = psi(x.beta + eps).
// Each kind carries its exponential-Lipschitz certificate (gamma, theta);
// the cubic certificate is only valid on |z| <= domain_bound.
struct LinkFunction {
    enum class Kind { identity, exp, cubic };

    Kind kind = Kind::identity;
    double gamma = 1.0;
    double theta = 0.0;
    double domain_bound = 0.0;  // cubic only

    static LinkFunction make_identity();
    static LinkFunction make_exp();
    static LinkFunction make_cubic(double zmax);

    double forward(double z) const;
    double inverse(double y) const;

    std::string name() const;
};

// Ground truth for one bandit problem.
struct ProblemInstance {
    int K = 0;
    int d = 0;
    std::vector<Vec> betas;
    double sigma = 0.0;
    LinkFunction link;
    double bmax = 0.0;
    double xmax = 0.0;
    std::shared_ptr<const ContextDistribution> context;

    int best_arm(const Vec& x) const;  // argmax_i x.beta_i (lowest index on ties)
};

// Per-arm sufficient statistics. `estimate` is the OLS solution once the
// Gram matrix is safely invertible and stays at `init_estimate` before that.
struct ArmState {
    int n = 0;
    SymMat gram;
    Vec moment;
    Vec estimate;
    Vec init_estimate;
    double min_eig = 0.0;
    bool identifiable = false;

    ArmState() = default;
    ArmState(int d, Vec init);

    void update(const Vec& x, double z, double eps_inv);
};

// Identifiability gate relative to the Gram trace.
inline constexpr double kIdentifiabilityRel = 1e-10;

// Pure-value form of ArmState::update; eps_inv is the absolute gate passed
// to ols_solve.
ArmState arm_update(const ArmState& state, const Vec& x, double z, double eps_inv);

// One simulated step.
struct StepRecord {
    int t = 0;
    Vec context;
    int chosen = -1;
    double reward = 0.0;
    double regret = 0.0;
    bool switched = false;  // Greedy-First switch fired at this step
};

double link_forward(const LinkFunction& link, double z);
double link_inverse(const LinkFunction& link, double y);

// Expected per-step regret of playing `chosen` on context x, with the noise
// expectation taken under N(0, sigma^2). Linear links reduce to the plain
// index gap; the exp link uses the lognormal closed form; anything else goes
// through fixed 65-node Gauss-Hermite quadrature.
double instantaneous_regret(const ProblemInstance& inst, const Vec& x, int chosen);

// Gauss-Hermite rule for weight exp(-u^2); expectation() evaluates
// E[f(Z)] for Z ~ N(mu, sigma^2).
class GaussHermite {
public:
    explicit GaussHermite(int n);
    static const GaussHermite& rule65();

    template <typename F>
    double expectation(F&& f, double mu, double sigma) const {
        double s = 0.0;
        for (size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * f(mu + kSqrt2 * sigma * nodes_[i]);
        return s * kInvSqrtPi;
    }

    const Vec& nodes() const { return nodes_; }
    const Vec& weights() const { return weights_; }

private:
    static constexpr double kSqrt2 = 1.4142135623730951;
    static constexpr double kInvSqrtPi = 0.5641895835477563;
    Vec nodes_;
    Vec weights_;
};

}  // namespace banditlab
