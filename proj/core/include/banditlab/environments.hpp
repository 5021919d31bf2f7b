#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "banditlab/model.hpp"

namespace banditlab {

// Tagged family of context samplers. Instances are immutable after
// construction; sampling only touches the caller's rng, so one distribution
// can be shared across threads.
class ContextDistribution {
public:
    enum class Kind {
        truncated_gaussian,
        uniform_ball,
        gibbs_hypercube,
        intercept_augmented,
        csv_backed,
        alpha_margin,
        gap_filtered,
    };
    enum class Truncation { l2, linf };

    struct CsvNormalization {
        bool enabled = false;
        Vec col_mean;
        Vec col_scale;
        double global_scale = 1.0;
    };

    Vec sample(Rng& rng) const;
    int dim() const;
    double xmax() const;  // every sample satisfies ||x||_2 <= xmax
    Kind kind() const;
    std::string describe() const;

    static ContextDistribution truncated_gaussian(int d, double scale, SymMat cov, Truncation mode,
                                                  double bound);
    static ContextDistribution uniform_ball(int d, double radius);
    static ContextDistribution gibbs_hypercube(const Mat& J);
    static ContextDistribution rademacher(int d);  // Gibbs with J = 0
    static ContextDistribution intercept_augmented(ContextDistribution base);
    static ContextDistribution alpha_margin(double alpha, Vec direction, ContextDistribution base);

    // analytics accessors (valid for the matching kind)
    const SymMat& gauss_cov() const;
    double gauss_scale() const;
    Truncation truncation_mode() const;
    double truncation_bound() const;
    double ball_radius() const;
    const std::vector<Vec>& gibbs_points() const;
    const Vec& gibbs_probs() const;
    ContextDistribution base() const;
    double margin_alpha() const;
    const Vec& margin_direction() const;
    const Vec& gap_beta_diff() const;
    double gap_kappa0() const;
    double gap_acceptance_estimate() const;
    size_t csv_rows() const;
    const CsvNormalization& csv_normalization() const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    explicit ContextDistribution(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

    friend ContextDistribution gap_filter(const ContextDistribution&, Vec, double);
    friend ContextDistribution load_csv_covariates(const std::string&, bool, double);
};

// Wrap a distribution with rejection until |x.beta_diff| > kappa0. The
// acceptance probability is estimated at construction from a fixed probe
// stream; below 1% the wrap is refused.
ContextDistribution gap_filter(const ContextDistribution& dist, Vec beta_diff, double kappa0);

// One draw whose component along `direction` has margin law
// P(0 < |x.direction| <= k) = k^alpha for k <= 1; orthogonal components
// come from `base` untouched.
Vec sample_alpha_margin_context(double alpha, const Vec& direction, const ContextDistribution& base,
                                Rng& rng);

// Numeric CSV with a header row; sampled uniformly with replacement.
// With normalize, columns are shifted/scaled to mean 0 and max-abs 1, then
// the rows are rescaled uniformly if any row norm exceeds target_xmax
// (target_xmax <= 0 keeps the observed norms).
ContextDistribution load_csv_covariates(const std::string& path, bool normalize,
                                        double target_xmax = -1.0);

// The two-arm simulation default: 0.5 * N(0, I_d) truncated to linf norm 1.
ContextDistribution diversity_preset(int d);

struct InterceptSpec {
    double mean = 0.1;
    double var = 0.01;  // arm 1 gets +b1, arm 2 gets -b2
};

struct ParameterPrior {
    enum class Kind { gaussian, scaled_gaussian, mixture };

    // beta = scale * (mean_fill * 1_d + N(0, I_d)) with probability `weight`
    struct MixtureComponent {
        double weight = 0.5;
        double scale = 1.0;
        double mean_fill = 0.0;
    };

    Kind kind = Kind::scaled_gaussian;
    Vec mean;
    SymMat cov;
    double factor = 1.0;
    std::vector<MixtureComponent> components;
    std::optional<InterceptSpec> intercept;

    static ParameterPrior gaussian(Vec mean, SymMat cov);
    static ParameterPrior scaled_gaussian(double factor);
    static ParameterPrior mixture(MixtureComponent a, MixtureComponent b);

    Vec sample_beta(int d, Rng& rng) const;
};

// Draw the K arm parameters (and the intercept terms when configured,
// which grows the dimension by one). bmax is set to the largest drawn norm.
ProblemInstance sample_instance(const ParameterPrior& prior, int K, int d, double sigma,
                                const LinkFunction& link, Rng& rng);

}  // namespace banditlab
