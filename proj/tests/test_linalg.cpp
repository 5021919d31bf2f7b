#include <cmath>

#include "banditlab/linalg.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace banditlab;

namespace {

SymMat sym_from(std::initializer_list<std::initializer_list<double>> rows) {
    SymMat m(static_cast<int>(rows.size()));
    int i = 0;
    for (const auto& row : rows) {
        int j = 0;
        for (double v : row) {
            if (j >= i) m.set(i, j, v);
            ++j;
        }
        ++i;
    }
    return m;
}

// random PSD gram accumulated from n >= d rank-one terms
SymMat random_gram(int d, int n, Rng& rng, Vec* moment_out = nullptr, double z_scale = 1.0) {
    SymMat g(d);
    if (moment_out) moment_out->assign(d, 0.0);
    for (int k = 0; k < n; ++k) {
        Vec x(d);
        for (double& v : x) v = rng.next_normal();
        g.add_rank_one(x);
        if (moment_out) {
            const double z = z_scale * rng.next_normal();
            for (int j = 0; j < d; ++j) (*moment_out)[j] += z * x[j];
        }
    }
    return g;
}

}  // namespace

TEST_CASE("ols_solve matches the stated examples") {
    // identity gram returns the moment unchanged
    auto beta = ols_solve(SymMat::identity(2), {3.0, 4.0}, 1e-10);
    REQUIRE(beta.has_value());
    CHECK((*beta)[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK((*beta)[1] == doctest::Approx(4.0).epsilon(1e-12));

    // normal equations accumulated from X0 = [[1],[1]], Y0 = (0, 2)
    SymMat gram(1);
    gram.set(0, 0, 2.0);
    beta = ols_solve(gram, {2.0}, 1e-10);
    REQUIRE(beta.has_value());
    CHECK((*beta)[0] == doctest::Approx(1.0).epsilon(1e-14));

    // rank-deficient gram is not identifiable
    CHECK_FALSE(ols_solve(sym_from({{1, 0}, {0, 0}}), {1.0, 1.0}, 1e-10).has_value());
}

TEST_CASE("ols_solve rejects bad input") {
    CHECK_THROWS_AS(ols_solve(SymMat::identity(2), {1.0}, 1e-10), std::invalid_argument);
    CHECK_THROWS_AS(ols_solve(SymMat::identity(1), {1.0}, 0.0), std::invalid_argument);
    SymMat bad(1);
    bad.set(0, 0, std::nan(""));
    CHECK_THROWS_AS(ols_solve(bad, {1.0}, 1e-10), std::invalid_argument);
}

TEST_CASE("ols_solve residual and oracle equivalence") {
    Rng rng(42);
    for (int trial = 0; trial < 400; ++trial) {
        const int d = 1 + rng.next_int(8);
        const int n = d + rng.next_int(43);
        Vec moment;
        const SymMat gram = random_gram(d, n, rng, &moment, 2.0);
        const double eps = 1e-10 * gram.trace();
        const auto beta = ols_solve(gram, moment, eps);
        if (!beta) continue;

        const Vec resid = gram.mul(*beta);
        double rnorm = 0.0;
        for (size_t i = 0; i < resid.size(); ++i) rnorm += (resid[i] - moment[i]) * (resid[i] - moment[i]);
        CHECK(std::sqrt(rnorm) <= 1e-8 * (1.0 + norm2(moment)));

        const Vec ref = oracles::solve_gaussian_elimination(gram, moment);
        for (int j = 0; j < d; ++j) CHECK((*beta)[j] == doctest::Approx(ref[j]).epsilon(1e-10));
    }
}

TEST_CASE("gram_rank_one_update examples and PSD preservation") {
    SymMat z2(2);
    SymMat r = gram_rank_one_update(z2, {1.0, 0.0});
    CHECK(r(0, 0) == 1.0);
    CHECK(r(0, 1) == 0.0);
    CHECK(r(1, 1) == 0.0);

    r = gram_rank_one_update(SymMat::identity(2), {0.0, 0.0});
    CHECK(r(0, 0) == 1.0);
    CHECK(r(1, 1) == 1.0);
    CHECK(r(0, 1) == 0.0);

    r = gram_rank_one_update(SymMat(2), {1.0, 1.0});
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(r(i, j) == 1.0);

    CHECK_THROWS_AS(gram_rank_one_update(SymMat(2), {1.0}), std::invalid_argument);

    // the smallest eigenvalue never decreases when adding x x^T
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + rng.next_int(5);
        const SymMat g = random_gram(d, d + rng.next_int(10), rng);
        Vec x(d);
        for (double& v : x) v = rng.next_normal();
        const SymMat g2 = gram_rank_one_update(g, x);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) CHECK(g2(i, j) == g2(j, i));
        CHECK(min_eigen_sym(g2) >= min_eigen_sym(g) - 1e-12 * std::max(1.0, g.frobenius()));
    }
}

TEST_CASE("min_eigen_sym examples") {
    CHECK(min_eigen_sym(SymMat::identity(3)) == doctest::Approx(1.0));
    CHECK(min_eigen_sym(SymMat::diagonal({2.0, 5.0})) == doctest::Approx(2.0));
    // characteristic polynomial roots {1, 3}
    CHECK(min_eigen_sym(sym_from({{2, 1}, {1, 2}})) == doctest::Approx(1.0).epsilon(1e-10));
    // exact for dim 1
    CHECK(min_eigen_sym(SymMat::diagonal({-3.5})) == -3.5);

    // eigenvector variant returns a matching unit eigenvector
    auto [lm, v] = min_eigen_pair(sym_from({{2, 1}, {1, 2}}));
    CHECK(lm == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(norm2(v) == doctest::Approx(1.0).epsilon(1e-12));
    const SymMat a = sym_from({{2, 1}, {1, 2}});
    const Vec av = a.mul(v);
    for (int i = 0; i < 2; ++i) CHECK(av[i] == doctest::Approx(lm * v[i]).epsilon(1e-8));

    SymMat bad(2);
    bad.set(0, 1, std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(min_eigen_sym(bad), std::invalid_argument);
}

TEST_CASE("min_eigen_sym against characteristic-polynomial roots") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        SymMat m2(2);
        for (int i = 0; i < 2; ++i)
            for (int j = i; j < 2; ++j) m2.set(i, j, 3.0 * rng.next_normal());
        CHECK(min_eigen_sym(m2) == doctest::Approx(oracles::min_eig_2x2(m2)).epsilon(1e-8));

        SymMat m3(3);
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) m3.set(i, j, 3.0 * rng.next_normal());
        CHECK(min_eigen_sym(m3) == doctest::Approx(oracles::min_eig_3x3(m3)).epsilon(1e-8));
    }
}

TEST_CASE("min_eigen_sym is a Rayleigh lower bound") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 2 + rng.next_int(6);
        SymMat m(d);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) m.set(i, j, rng.next_normal());
        const double lm = min_eigen_sym(m);
        for (int probe = 0; probe < 20; ++probe) {
            Vec v(d);
            for (double& x : v) x = rng.next_normal();
            const double quotient = dot(v, m.mul(v)) / dot(v, v);
            CHECK(lm <= quotient + 1e-9 * std::max(1.0, m.frobenius()));
        }
    }
}

TEST_CASE("gaussian_sample basics") {
    Rng rng(5);
    // zero covariance returns the mean exactly
    const Vec mean{1.5, -2.0};
    const Vec draw = gaussian_sample(mean, SymMat(2), rng);
    CHECK(draw[0] == 1.5);
    CHECK(draw[1] == -2.0);

    // fixed seed reproduces the draw
    Rng a(123), b(123);
    const Vec da = gaussian_sample({0.0, 0.0}, SymMat::identity(2), a);
    const Vec db = gaussian_sample({0.0, 0.0}, SymMat::identity(2), b);
    CHECK(da == db);

    SymMat not_psd = SymMat::diagonal({1.0, -0.5});
    CHECK_THROWS_AS(gaussian_sample({0.0, 0.0}, not_psd, rng), std::invalid_argument);
}

TEST_CASE("gaussian_sample sample-mean CLT bound and diagonal variances") {
    const int n = 100000;
    Rng rng(2024);
    Vec sum(2, 0.0), sumsq(2, 0.0);
    const SymMat cov = SymMat::diagonal({1.0, 4.0});
    for (int i = 0; i < n; ++i) {
        const Vec x = gaussian_sample({0.0, 0.0}, cov, rng);
        for (int j = 0; j < 2; ++j) {
            sum[j] += x[j];
            sumsq[j] += x[j] * x[j];
        }
    }
    for (int j = 0; j < 2; ++j) {
        const double sd = std::sqrt(cov(j, j));
        CHECK(std::fabs(sum[j] / n) <= 4.0 * sd / std::sqrt(static_cast<double>(n)));
        // var(x^2) = 2 sigma^4 for a Gaussian; allow 5 standard errors
        const double var_hat = sumsq[j] / n;
        const double se = std::sqrt(2.0 * cov(j, j) * cov(j, j) / n);
        CHECK(std::fabs(var_hat - cov(j, j)) <= 5.0 * se);
    }
}

TEST_CASE("gaussian_sample respects correlated covariance") {
    const int n = 200000;
    Rng rng(99);
    SymMat cov = sym_from({{2.0, 0.8}, {0.8, 1.0}});
    double sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec x = gaussian_sample({0.0, 0.0}, cov, rng);
        sxy += x[0] * x[1];
    }
    CHECK(sxy / n == doctest::Approx(0.8).epsilon(0.05));
}
