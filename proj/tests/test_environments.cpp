#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "banditlab/diversity.hpp"
#include "banditlab/environments.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace banditlab;

namespace {

struct TempCsv {
    std::string path;
    explicit TempCsv(const std::string& name, const std::string& content)
        : path("/tmp/banditlab_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempCsv() { std::remove(path.c_str()); }
};

SymMat empirical_second_moment(const ContextDistribution& dist, int n, Rng& rng) {
    SymMat m(dist.dim());
    for (int i = 0; i < n; ++i) m.add_rank_one(dist.sample(rng));
    m.scale(1.0 / n);
    return m;
}

}  // namespace

TEST_CASE("every built-in family respects its norm bound") {
    Rng rng(1);
    std::vector<ContextDistribution> dists;
    dists.push_back(diversity_preset(3));
    dists.push_back(ContextDistribution::truncated_gaussian(2, 1.0, SymMat::identity(2),
                                                            ContextDistribution::Truncation::l2, 1.5));
    dists.push_back(ContextDistribution::uniform_ball(3, 2.0));
    dists.push_back(ContextDistribution::rademacher(4));
    dists.push_back(ContextDistribution::intercept_augmented(diversity_preset(3)));
    dists.push_back(ContextDistribution::alpha_margin(1.5, {1.0, 0.0}, ContextDistribution::uniform_ball(2, 1.0)));
    for (const ContextDistribution& dist : dists) {
        double worst = 0.0;
        for (int i = 0; i < 1000000; ++i) worst = std::max(worst, norm2(dist.sample(rng)));
        CHECK(worst <= dist.xmax() * (1.0 + 1e-12));
    }
}

TEST_CASE("linf truncation bounds every coordinate") {
    Rng rng(2);
    const ContextDistribution dist = diversity_preset(3);
    for (int i = 0; i < 10000; ++i) {
        const Vec x = dist.sample(rng);
        for (double v : x) CHECK(std::fabs(v) <= 1.0);
    }
    CHECK(dist.xmax() == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("rademacher frequencies match exact enumeration") {
    Rng rng(3);
    const ContextDistribution dist = ContextDistribution::rademacher(2);
    std::map<std::pair<int, int>, int> counts;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const Vec x = dist.sample(rng);
        counts[{x[0] > 0, x[1] > 0}] += 1;
    }
    CHECK(counts.size() == 4);
    for (const auto& [key, c] : counts)
        CHECK(static_cast<double>(c) / n == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("gibbs sampler matches enumeration probabilities") {
    Rng rng(4);
    const int d = 3;
    Mat J(d, d);
    J.at(0, 1) = 0.3;
    J.at(1, 0) = 0.3;
    J.at(1, 2) = -0.2;
    J.at(2, 1) = -0.2;
    const ContextDistribution dist = ContextDistribution::gibbs_hypercube(J);
    const auto& points = dist.gibbs_points();
    const auto& probs = dist.gibbs_probs();

    const int n = 200000;
    std::vector<int> counts(points.size(), 0);
    for (int i = 0; i < n; ++i) {
        const Vec x = dist.sample(rng);
        size_t idx = 0;
        for (int b = 0; b < d; ++b)
            if (x[b] > 0) idx |= size_t{1} << b;
        counts[idx] += 1;
    }
    for (size_t m = 0; m < points.size(); ++m) {
        const double p = probs[m];
        const double se = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::fabs(static_cast<double>(counts[m]) / n - p) <= 3.0 * se + 1e-9);
    }
    CHECK_THROWS_AS(ContextDistribution::gibbs_hypercube(Mat(21, 21)), std::invalid_argument);
}

TEST_CASE("uniform ball second moment matches R^2/(d+2)") {
    Rng rng(5);
    const ContextDistribution dist = ContextDistribution::uniform_ball(3, 1.0);
    const SymMat m = empirical_second_moment(dist, 1000000, rng);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double want = i == j ? 0.2 : 0.0;
            CHECK(std::fabs(m(i, j) - want) <= 0.005);
        }
}

TEST_CASE("intercept augmentation pins the first coordinate") {
    Rng rng(6);
    const ContextDistribution dist = ContextDistribution::intercept_augmented(diversity_preset(2));
    CHECK(dist.dim() == 3);
    for (int i = 0; i < 2000; ++i) {
        const Vec x = dist.sample(rng);
        CHECK(x[0] == 1.0);
    }
}

TEST_CASE("sampling is deterministic per seed") {
    const ContextDistribution dists[] = {diversity_preset(3), ContextDistribution::uniform_ball(2, 1.0),
                                         ContextDistribution::rademacher(3)};
    for (const ContextDistribution& dist : dists) {
        Rng a(77), b(77);
        for (int i = 0; i < 100; ++i) CHECK(dist.sample(a) == dist.sample(b));
    }
}

TEST_CASE("gap_filter examples") {
    // uniform on [-1, 1]: the 1-ball in one dimension
    const ContextDistribution base = ContextDistribution::uniform_ball(1, 1.0);
    const ContextDistribution gapped = gap_filter(base, {1.0}, 0.5);

    Rng rng(8);
    for (int i = 0; i < 20000; ++i) CHECK(std::fabs(gapped.sample(rng)[0]) > 0.5);

    const MarginEstimate below = margin_probability(gapped, {1.0}, 0.4, 20000, rng);
    CHECK(below.p == 0.0);

    CHECK(gapped.gap_acceptance_estimate() == doctest::Approx(0.5).epsilon(0.04));

    // acceptance below 1% is refused with the estimate in the message
    CHECK_THROWS_AS(gap_filter(base, {1.0}, 0.999), std::invalid_argument);
}

TEST_CASE("alpha margin construction hits the kappa^alpha law") {
    Rng rng(9);
    const ContextDistribution base = ContextDistribution::uniform_ball(3, 1.0);
    const Vec u{1.0, 0.0, 0.0};

    for (double alpha : {1.0, 2.0}) {
        const ContextDistribution dist = ContextDistribution::alpha_margin(alpha, u, base);
        const int n = 100000;
        int hits = 0, pos = 0;
        for (int i = 0; i < n; ++i) {
            const double m = dot(dist.sample(rng), u);
            if (std::fabs(m) > 0.0 && std::fabs(m) <= 0.3) ++hits;
            if (m > 0.0) ++pos;
        }
        CHECK(static_cast<double>(hits) / n == doctest::Approx(std::pow(0.3, alpha)).epsilon(0.12));
        CHECK(static_cast<double>(pos) / n == doctest::Approx(0.5).epsilon(0.04));
    }

    // one-shot sampler agrees with the family
    const Vec one = sample_alpha_margin_context(1.0, u, base, rng);
    CHECK(std::fabs(dot(one, u)) <= 1.0);
    CHECK_THROWS_AS(ContextDistribution::alpha_margin(0.0, u, base), std::invalid_argument);
    CHECK_THROWS_AS(ContextDistribution::alpha_margin(1.0, {2.0, 0.0, 0.0}, base), std::invalid_argument);
}

TEST_CASE("csv covariates: resampling, normalization, round trip, errors") {
    TempCsv file("pool.csv", "a,b\n1,10\n2,20\n3,40\n");
    const ContextDistribution dist = load_csv_covariates(file.path, false);
    CHECK(dist.dim() == 2);
    CHECK(dist.csv_rows() == 3);

    Rng rng(10);
    std::map<double, int> counts;
    const int n = 100000;
    for (int i = 0; i < n; ++i) counts[dist.sample(rng)[0]] += 1;
    CHECK(counts.size() == 3);
    for (const auto& [v, c] : counts)
        CHECK(static_cast<double>(c) / n == doctest::Approx(1.0 / 3.0).epsilon(0.04));

    // normalization bounds every column by 1 in absolute value
    const ContextDistribution norm = load_csv_covariates(file.path, true);
    for (int i = 0; i < 1000; ++i) {
        const Vec x = norm.sample(rng);
        for (double v : x) CHECK(std::fabs(v) <= 1.0 + 1e-12);
    }

    TempCsv bad("bad.csv", "a,b\n1,2\nx,3\n4,5\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_csv_covariates(bad.path, false)),
                         doctest::Contains("row 3"), std::invalid_argument);
    TempCsv empty("empty.csv", "");
    CHECK_THROWS_AS(static_cast<void>(load_csv_covariates(empty.path, false)), std::invalid_argument);
    TempCsv short_file("short.csv", "a,b\n1,2\n");
    CHECK_THROWS_AS(static_cast<void>(load_csv_covariates(short_file.path, false)), std::invalid_argument);
}

TEST_CASE("csv sampled vectors survive a write/reload round trip") {
    TempCsv file("pool2.csv", "u,v\n0.123456789012345,-7\n2.5,3.25\n-1.125,9\n");
    const ContextDistribution dist = load_csv_covariates(file.path, false);
    Rng rng(11);
    std::vector<Vec> sampled;
    for (int i = 0; i < 8; ++i) sampled.push_back(dist.sample(rng));

    std::string tmp = "/tmp/banditlab_rt2.csv";
    {
        std::ofstream out(tmp);
        out << "u,v\n";
        out.precision(17);
        for (const Vec& x : sampled) out << x[0] << ',' << x[1] << '\n';
    }
    const ContextDistribution reloaded = load_csv_covariates(tmp, false);
    // the reloaded pool contains exactly the written vectors
    Rng probe(12);
    for (int i = 0; i < 100; ++i) {
        const Vec x = reloaded.sample(probe);
        bool found = false;
        for (const Vec& s : sampled) {
            if (s == x) {
                found = true;
                break;
            }
        }
        CHECK(found);
    }
    std::remove(tmp.c_str());
}

TEST_CASE("parameter priors") {
    Rng rng(13);

    // gaussian prior with explicit moments
    const ParameterPrior g = ParameterPrior::gaussian({1.0, 2.0}, SymMat::identity(2));
    const Vec b = g.sample_beta(2, rng);
    CHECK(b.size() == 2);

    // mixture weights must sum to one
    CHECK_THROWS_AS(ParameterPrior::mixture({0.5, 1.0, 1.0}, {0.3, 1.0, -1.0}), std::invalid_argument);

    // symmetric mixture has mean zero in every coordinate
    const ParameterPrior mix = ParameterPrior::mixture({0.5, 0.5, 1.0}, {0.5, 0.5, -1.0});
    double mean0 = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) mean0 += mix.sample_beta(3, rng)[0];
    CHECK(std::fabs(mean0 / n) <= 0.05);
}

TEST_CASE("sample_instance basics") {
    Rng rng(14);
    const ParameterPrior prior = ParameterPrior::gaussian({0.0, 0.0, 0.0}, SymMat::identity(3));
    const ProblemInstance inst =
        sample_instance(prior, 2, 3, 0.5, LinkFunction::make_identity(), rng);
    CHECK(inst.d == 3);
    CHECK(inst.K == 2);
    CHECK(inst.betas.size() == 2);
    for (const Vec& beta : inst.betas) {
        CHECK(all_finite(beta));
        CHECK(norm2(beta) <= inst.bmax + 1e-12);
    }
    CHECK_THROWS_AS(sample_instance(prior, 1, 3, 0.5, LinkFunction::make_identity(), rng),
                    std::invalid_argument);
}

TEST_CASE("intercept spec grows the dimension and signs the intercepts") {
    Rng rng(15);
    ParameterPrior prior = ParameterPrior::scaled_gaussian(1.0);
    prior.intercept = InterceptSpec{};

    const int trials = 3000;
    double mean1 = 0.0, mean2 = 0.0;
    for (int i = 0; i < trials; ++i) {
        const ProblemInstance inst =
            sample_instance(prior, 2, 3, 0.5, LinkFunction::make_identity(), rng);
        CHECK(inst.d == 4);
        mean1 += inst.betas[0][0];
        mean2 += inst.betas[1][0];
    }
    // arm 1 carries +b1 with mean 0.1, arm 2 carries -b2 with mean -0.1
    CHECK(mean1 / trials == doctest::Approx(0.1).epsilon(0.15));
    CHECK(mean2 / trials == doctest::Approx(-0.1).epsilon(0.15));

    CHECK_THROWS_AS(sample_instance(prior, 3, 3, 0.5, LinkFunction::make_identity(), rng),
                    std::invalid_argument);
}

TEST_CASE("truncated gaussian second moment dominates the analytic floors") {
    Rng rng(16);

    // half-covariance bound applies when the ball radius reaches M
    {
        const int d = 2;
        const double r = 3.0;  // M = sqrt(log2 * (2d+8) * 1) = 2.884
        const ContextDistribution dist = ContextDistribution::truncated_gaussian(
            d, 1.0, SymMat::identity(d), ContextDistribution::Truncation::l2, r);
        const SymMat m = empirical_second_moment(dist, 400000, rng);
        const SufficientConditionReport rep = check_sufficient_conditions(dist);
        CHECK(rep.checkable);
        CHECK(rep.lambda == doctest::Approx(0.5));  // lmin(Sigma)/2 wins at this radius
        CHECK(min_eigen_sym(m) >= rep.lambda - 0.01);
    }

    // uniform floor bound for a tight truncation, including scale != 1
    {
        const int d = 2;
        const ContextDistribution dist = ContextDistribution::truncated_gaussian(
            d, 0.5, SymMat::identity(d), ContextDistribution::Truncation::l2, 1.0);
        const SymMat m = empirical_second_moment(dist, 400000, rng);
        const SufficientConditionReport rep = check_sufficient_conditions(dist);
        CHECK(rep.checkable);
        CHECK(min_eigen_sym(m) >= rep.lambda - 0.01);
    }

    // one-dimensional sanity value: lambda_uni = e^-0.5 / sqrt(2 pi) * (1/3) * 2
    {
        const ContextDistribution dist = ContextDistribution::truncated_gaussian(
            1, 1.0, SymMat::identity(1), ContextDistribution::Truncation::l2, 1.0);
        const SufficientConditionReport rep = check_sufficient_conditions(dist);
        const double want = std::exp(-0.5) / std::sqrt(2.0 * M_PI) * (1.0 / 3.0) * 2.0;
        CHECK(rep.lambda == doctest::Approx(want).epsilon(1e-12));
        const SymMat m = empirical_second_moment(dist, 200000, rng);
        CHECK(m(0, 0) >= rep.lambda);
    }
}
