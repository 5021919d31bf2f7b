#include "banditlab/model.hpp"

#include <cmath>
#include <stdexcept>

namespace banditlab {

LinkFunction LinkFunction::make_identity() { return LinkFunction{Kind::identity, 1.0, 0.0, 0.0}; }

LinkFunction LinkFunction::make_exp() { return LinkFunction{Kind::exp, 1.0, 1.0, 0.0}; }

LinkFunction LinkFunction::make_cubic(double zmax) {
    if (!(zmax > 0.0)) throw std::invalid_argument("cubic link: zmax must be positive");
    // psi'(z) = 3 z^2 <= 3 zmax^2 on |z| <= zmax, so (gamma, theta) = (3 zmax^2, 0)
    // holds only on the recorded domain.
    return LinkFunction{Kind::cubic, 3.0 * zmax * zmax, 0.0, zmax};
}

double LinkFunction::forward(double z) const {
    if (!std::isfinite(z)) throw std::invalid_argument("link forward: non-finite input");
    switch (kind) {
        case Kind::identity: return z;
        case Kind::exp: return std::exp(z);
        case Kind::cubic: return z * z * z;
    }
    return z;
}

double LinkFunction::inverse(double y) const {
    switch (kind) {
        case Kind::identity: return y;
        case Kind::exp:
            if (!(y > 0.0)) throw std::domain_error("exp link inverse: y must be positive");
            return std::log(y);
        case Kind::cubic: return std::cbrt(y);
    }
    return y;
}

std::string LinkFunction::name() const {
    switch (kind) {
        case Kind::identity: return "identity";
        case Kind::exp: return "exp";
        case Kind::cubic: return "cubic";
    }
    return "identity";
}

double link_forward(const LinkFunction& link, double z) { return link.forward(z); }
double link_inverse(const LinkFunction& link, double y) { return link.inverse(y); }

int ProblemInstance::best_arm(const Vec& x) const {
    int best = 0;
    double best_v = dot(x, betas[0]);
    for (int i = 1; i < K; ++i) {
        const double v = dot(x, betas[i]);
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    return best;
}

ArmState::ArmState(int d, Vec init)
    : gram(d), moment(d, 0.0), estimate(init), init_estimate(std::move(init)) {}

void ArmState::update(const Vec& x, double z, double eps_inv) {
    if (static_cast<int>(x.size()) != gram.dim()) throw std::invalid_argument("ArmState::update: dimension mismatch");
    if (!std::isfinite(z) || !all_finite(x)) throw std::invalid_argument("ArmState::update: non-finite input");
    n += 1;
    gram.add_rank_one(x);
    for (size_t i = 0; i < moment.size(); ++i) moment[i] += z * x[i];
    min_eig = min_eigen_sym(gram);
    if (auto beta = ols_solve(gram, moment, eps_inv, min_eig)) {
        estimate = std::move(*beta);
        identifiable = true;
    } else {
        estimate = init_estimate;
        identifiable = false;
    }
}

ArmState arm_update(const ArmState& state, const Vec& x, double z, double eps_inv) {
    ArmState out = state;
    out.update(x, z, eps_inv);
    return out;
}

double instantaneous_regret(const ProblemInstance& inst, const Vec& x, int chosen) {
    if (chosen < 0 || chosen >= inst.K) throw std::invalid_argument("instantaneous_regret: arm out of range");
    double best = dot(x, inst.betas[0]);
    for (int i = 1; i < inst.K; ++i) best = std::max(best, dot(x, inst.betas[i]));
    const double picked = dot(x, inst.betas[chosen]);

    double r = 0.0;
    switch (inst.link.kind) {
        case LinkFunction::Kind::identity:
            r = best - picked;
            break;
        case LinkFunction::Kind::exp:
            // E[e^(a+eps) - e^(b+eps)] = e^(sigma^2/2) (e^a - e^b) for Gaussian noise
            r = std::exp(0.5 * inst.sigma * inst.sigma) * (std::exp(best) - std::exp(picked));
            break;
        default: {
            const auto& gh = GaussHermite::rule65();
            const auto& link = inst.link;
            r = gh.expectation([&](double v) { return link.forward(v); }, best, inst.sigma) -
                gh.expectation([&](double v) { return link.forward(v); }, picked, inst.sigma);
            break;
        }
    }
    return std::max(r, 0.0);
}

GaussHermite::GaussHermite(int n) {
    nodes_.resize(n);
    weights_.resize(n);

    // Orthonormal Hermite recurrence wrt exp(-u^2):
    //   p_{k+1}(u) = (u p_k - sqrt(k/2) p_{k-1}) / sqrt((k+1)/2),  p_0 = pi^{-1/4}
    // Derivative at a root: p_n'(u) = sqrt(2n) p_{n-1}(u).
    auto eval = [n](double u, double& pn, double& pn1) {
        double pm1 = 0.0;
        double p = 0.7511255444649425;  // pi^{-1/4}
        for (int k = 0; k < n; ++k) {
            const double next = (u * p - std::sqrt(0.5 * k) * pm1) / std::sqrt(0.5 * (k + 1));
            pm1 = p;
            p = next;
        }
        pn = p;
        pn1 = pm1;
    };

    double z = 0.0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // initial guesses, largest root first
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * nodes_[n - 1];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * nodes_[n - 2];
        } else {
            z = 2.0 * z - nodes_[n - i + 1];
        }

        double pn = 0.0, pn1 = 0.0;
        for (int it = 0; it < 100; ++it) {
            eval(z, pn, pn1);
            const double dp = std::sqrt(2.0 * n) * pn1;
            const double dz = pn / dp;
            z -= dz;
            if (std::fabs(dz) < 1e-15 * std::max(1.0, std::fabs(z))) break;
        }
        eval(z, pn, pn1);

        // Gauss weight via the Christoffel function: w = 1 / sum_{k<n} p_k(z)^2
        double pm1 = 0.0;
        double p = 0.7511255444649425;
        double ssq = p * p;
        for (int k = 0; k + 1 < n; ++k) {
            const double next = (z * p - std::sqrt(0.5 * k) * pm1) / std::sqrt(0.5 * (k + 1));
            pm1 = p;
            p = next;
            ssq += p * p;
        }
        const double w = 1.0 / ssq;

        nodes_[n - 1 - i] = z;
        nodes_[i] = -z;
        weights_[n - 1 - i] = w;
        weights_[i] = w;
    }
    if (n % 2 == 1) nodes_[n / 2] = 0.0;
}

const GaussHermite& GaussHermite::rule65() {
    static const GaussHermite rule(65);
    return rule;
}

}  // namespace banditlab
