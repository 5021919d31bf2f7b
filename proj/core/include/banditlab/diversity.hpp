#pragma once

#include <optional>
#include <string>

#include "banditlab/environments.hpp"

namespace banditlab {

// Result of probing a context distribution for covariate diversity:
// lambda0_hat estimates min over directions u of
//   lmin( E[ x x^T 1{x.u >= 0} ] ).
// Random directions only probe the sphere, so this is an upper estimate of
// the true diversity constant; the +-coordinate axes are always included
// (they catch the intercept failure mode exactly). The worst direction and
// its minimizing eigenvector are selected on one half of the samples and the
// Rayleigh mean is evaluated on the other half, so lambda0_hat is unbiased
// for the chosen direction and mc_stderr has honest coverage.
struct DiversityReport {
    double lambda0_hat = 0.0;
    Vec worst_direction;
    int n_samples = 0;
    int n_directions = 0;
    double mc_stderr = 0.0;
    double lambda_full = 0.0;  // lmin of the indicator-free second moment, same sample pool
    bool degenerate = false;   // all samples equal
};

DiversityReport estimate_lambda0(const ContextDistribution& dist, int n_samples, int n_directions,
                                 Rng& rng);

// Sufficient-condition check: a symmetric set W with density ratio a/b and
// second-moment lower bound lambda implies a diversity constant of at least
// a*lambda/(2b). The (a, b, lambda) triple is derived analytically for the
// built-in families; moment_lb overrides lambda when supplied.
struct SufficientConditionReport {
    bool checkable = false;
    double a_over_b = 0.0;
    double lambda = 0.0;
    double implied_lambda0_lb = 0.0;
    bool cond_a = false;
    bool cond_b = false;
    bool cond_c = false;
    std::string note;
};

SufficientConditionReport check_sufficient_conditions(const ContextDistribution& dist, std::optional<double> moment_lb = {});

// Per-coordinate second moment of the uniform distribution on the radius-R
// ball: R^2/(d+2). The unnormalized variant multiplies by vol(B_R^d).
double ball_second_moment(int d, double R);
double ball_second_moment_unnormalized(int d, double R);
double ball_volume(int d, double R);

struct MarginEstimate {
    double p = 0.0;
    double stderr_ = 0.0;
};

// Monte Carlo estimate of P(0 < |x.beta_diff| <= kappa).
MarginEstimate margin_probability(const ContextDistribution& dist, const Vec& beta_diff, double kappa,
                                  int n_samples, Rng& rng);

struct TheoryConstants {
    double C1 = 0.0;
    double lambda = 0.0;
    double C2 = 0.0;
    double Cbar = 0.0;
    double C_GB = 0.0;
    double switch_delta = 0.0;
    // inputs echoed
    double lambda0 = 0.0, xmax = 0.0, bmax = 0.0, sigma = 0.0, C0 = 0.0, t0 = 0.0;
    int d = 0;
};

// dimension-dependent constant 1/3 + 7/2 (log d)^-1/2 + 38/3 (log d)^-1 + 67/4 (log d)^-3/2,
// defined for d >= 2; decreasing in d with limit 1/3
double cbar(int d);
double cbar_limit();

TheoryConstants theory_constants(double lambda0, double xmax, double bmax, double sigma, int d,
                                 double C0, double t0);

}  // namespace banditlab
