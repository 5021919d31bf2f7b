#include "banditlab/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace banditlab {

namespace {

Vec random_unit_direction(int d, Rng& rng) {
    Vec u(d);
    double n = 0.0;
    do {
        for (double& v : u) v = rng.next_normal();
        n = norm2(u);
    } while (n == 0.0);
    for (double& v : u) v /= n;
    return u;
}

SymMat masked_second_moment(const std::vector<Vec>& xs, const Vec& u, size_t lo, size_t hi) {
    const int d = static_cast<int>(u.size());
    SymMat s(d);
    for (size_t k = lo; k < hi; ++k) {
        if (dot(xs[k], u) >= 0.0) s.add_rank_one(xs[k]);
    }
    return s;
}

double max_eigen_sym(const SymMat& a) {
    SymMat neg = a;
    neg.scale(-1.0);
    return -min_eigen_sym(neg);
}

}  // namespace

DiversityReport estimate_lambda0(const ContextDistribution& dist, int n_samples, int n_directions,
                                 Rng& rng) {
    if (n_samples < 1000) throw std::invalid_argument("estimate_lambda0: n_samples must be >= 1000");
    if (n_directions < 100) throw std::invalid_argument("estimate_lambda0: n_directions must be >= 100");

    const int d = dist.dim();
    std::vector<Vec> xs(n_samples);
    for (Vec& x : xs) x = dist.sample(rng);

    DiversityReport rep;
    rep.n_samples = n_samples;

    bool degenerate = true;
    for (const Vec& x : xs) {
        if (x != xs.front()) {
            degenerate = false;
            break;
        }
    }
    if (degenerate) {
        rep.degenerate = true;
        rep.lambda0_hat = 0.0;
        rep.worst_direction = Vec(d, 0.0);
        if (d > 0) rep.worst_direction[0] = 1.0;
        rep.n_directions = 0;
        return rep;
    }

    std::vector<Vec> dirs;
    dirs.reserve(n_directions + 2 * d);
    for (int i = 0; i < n_directions; ++i) dirs.push_back(random_unit_direction(d, rng));
    for (int a = 0; a < d; ++a) {
        Vec e(d, 0.0);
        e[a] = 1.0;
        dirs.push_back(e);
        e[a] = -1.0;
        dirs.push_back(e);
    }
    rep.n_directions = static_cast<int>(dirs.size());

    // Sample splitting: the worst direction u and the minimizing eigenvector
    // v of its masked moment are chosen on the first half; the reported value
    // is the plain mean of (v.x)^2 1{x.u >= 0} over the held-out half. The
    // plug-in minimum over directions is biased low by its own selection
    // noise (and lmin of a noisy matrix is biased low once the spectrum is
    // nearly degenerate); the held-out Rayleigh mean is unbiased for the
    // chosen (u, v), so the jackknife standard error has honest coverage.
    const size_t n_sel = xs.size() / 2;
    int best_dir = -1;
    double best = 0.0;
    Vec best_vec;
    for (size_t di = 0; di < dirs.size(); ++di) {
        SymMat m = masked_second_moment(xs, dirs[di], 0, n_sel);
        m.scale(1.0 / static_cast<double>(n_sel));
        auto [lm, v] = min_eigen_pair(m);
        if (best_dir < 0 || lm < best) {
            best = lm;
            best_dir = static_cast<int>(di);
            best_vec = std::move(v);
        }
    }
    rep.worst_direction = dirs[best_dir];

    const size_t n_eval = xs.size() - n_sel;
    Vec rayleigh(n_eval, 0.0);
    for (size_t k = n_sel; k < xs.size(); ++k) {
        if (dot(xs[k], rep.worst_direction) >= 0.0) {
            const double proj = dot(xs[k], best_vec);
            rayleigh[k - n_sel] = proj * proj;
        }
    }
    double mean = 0.0;
    for (double v : rayleigh) mean += v;
    mean /= static_cast<double>(n_eval);
    rep.lambda0_hat = mean;

    {
        SymMat full(d);
        for (size_t k = n_sel; k < xs.size(); ++k) full.add_rank_one(xs[k]);
        full.scale(1.0 / static_cast<double>(n_eval));
        rep.lambda_full = min_eigen_sym(full);
    }

    // delete-a-block jackknife on the evaluation half
    const int blocks = 20;
    Vec theta(blocks, 0.0);
    double theta_bar = 0.0;
    double total = mean * static_cast<double>(n_eval);
    for (int b = 0; b < blocks; ++b) {
        const size_t lo = n_eval * static_cast<size_t>(b) / blocks;
        const size_t hi = n_eval * static_cast<size_t>(b + 1) / blocks;
        double blk = 0.0;
        for (size_t k = lo; k < hi; ++k) blk += rayleigh[k];
        theta[b] = (total - blk) / static_cast<double>(n_eval - (hi - lo));
        theta_bar += theta[b];
    }
    theta_bar /= blocks;
    double ss = 0.0;
    for (double th : theta) ss += (th - theta_bar) * (th - theta_bar);
    rep.mc_stderr = std::sqrt(ss * (blocks - 1.0) / blocks);
    return rep;
}

double ball_volume(int d, double R) {
    if (d < 1 || R < 0.0) throw std::invalid_argument("ball_volume: bad parameters");
    return std::pow(M_PI, 0.5 * d) * std::pow(R, d) / std::tgamma(0.5 * d + 1.0);
}

double ball_second_moment(int d, double R) {
    if (d < 1 || R < 0.0) throw std::invalid_argument("ball_second_moment: bad parameters");
    return R * R / (d + 2.0);
}

double ball_second_moment_unnormalized(int d, double R) {
    return ball_second_moment(d, R) * ball_volume(d, R);
}

namespace {

SufficientConditionReport condition_report(double a_over_b, double lambda, bool a, bool b, bool c, std::string note) {
    SufficientConditionReport rep;
    rep.checkable = true;
    rep.a_over_b = a_over_b;
    rep.lambda = lambda;
    rep.implied_lambda0_lb = 0.5 * a_over_b * lambda;
    rep.cond_a = a;
    rep.cond_b = b;
    rep.cond_c = c;
    rep.note = std::move(note);
    return rep;
}

}  // namespace

SufficientConditionReport check_sufficient_conditions(const ContextDistribution& dist, std::optional<double> moment_lb) {
    using Kind = ContextDistribution::Kind;
    switch (dist.kind()) {
        case Kind::uniform_ball: {
            const int d = dist.dim();
            const double R = dist.ball_radius();
            const double xm = dist.xmax();
            double lambda = std::pow(R, d + 2) / ((d + 2.0) * std::pow(xm, d));
            if (moment_lb) lambda = *moment_lb;
            return condition_report(1.0, lambda, true, true, lambda > 0.0, "uniform on the ball");
        }
        case Kind::gibbs_hypercube: {
            const auto& pts = dist.gibbs_points();
            const auto& pr = dist.gibbs_probs();
            SymMat m(dist.dim());
            for (size_t i = 0; i < pts.size(); ++i) {
                for (int r = 0; r < dist.dim(); ++r)
                    for (int c = r; c < dist.dim(); ++c) m.add(r, c, pr[i] * pts[i][r] * pts[i][c]);
            }
            double lambda = min_eigen_sym(m);
            if (moment_lb) lambda = *moment_lb;
            return condition_report(1.0, lambda, true, true, lambda > 0.0,
                               "Gibbs hypercube, exact second moment");
        }
        case Kind::truncated_gaussian: {
            const int d = dist.dim();
            SymMat cov_eff = dist.gauss_cov();
            cov_eff.scale(dist.gauss_scale() * dist.gauss_scale());
            const double lmin = min_eigen_sym(cov_eff);
            const double lmax = max_eigen_sym(cov_eff);
            // inner ball radius contained in the truncation set
            const double r = dist.truncation_bound();

            const Cholesky f = cholesky(cov_eff, 1e-12 * std::max(cov_eff.trace(), 1.0));
            double det = 1.0;
            for (int i = 0; i < d; ++i) det *= f.at(i, i) * f.at(i, i);
            const double density_floor =
                std::exp(-r * r / (2.0 * lmin)) / (std::pow(2.0 * M_PI, 0.5 * d) * std::sqrt(det));
            const double lambda_uni = density_floor * ball_second_moment_unnormalized(d, r);

            const double big_m = std::sqrt(4.0 * std::log(2.0) * lmax * (0.5 * d + 2.0));
            double lambda = lambda_uni;
            std::string note = "truncated Gaussian, uniform floor bound";
            if (r >= big_m) {
                if (0.5 * lmin > lambda) {
                    lambda = 0.5 * lmin;
                    note = "truncated Gaussian, half-covariance bound";
                }
            }
            if (moment_lb) lambda = *moment_lb;
            return condition_report(1.0, lambda, true, true, lambda > 0.0, note);
        }
        case Kind::gap_filtered:
        case Kind::alpha_margin:
        case Kind::csv_backed:
        case Kind::intercept_augmented: {
            if (moment_lb) {
                // symmetry of W cannot be certified for these kinds
                SufficientConditionReport rep = condition_report(1.0, *moment_lb, false, false, *moment_lb > 0.0,
                                               "caller-supplied moment bound; symmetry not certified");
                return rep;
            }
            SufficientConditionReport rep;
            rep.checkable = false;
            rep.note = "not checkable for this family";
            return rep;
        }
    }
    SufficientConditionReport rep;
    rep.note = "not checkable";
    return rep;
}

MarginEstimate margin_probability(const ContextDistribution& dist, const Vec& beta_diff, double kappa,
                                  int n_samples, Rng& rng) {
    if (!(kappa > 0.0)) throw std::invalid_argument("margin_probability: kappa must be positive");
    if (static_cast<int>(beta_diff.size()) != dist.dim())
        throw std::invalid_argument("margin_probability: dimension mismatch");
    long hits = 0;
    for (int i = 0; i < n_samples; ++i) {
        const double m = std::fabs(dot(dist.sample(rng), beta_diff));
        if (m > 0.0 && m <= kappa) ++hits;
    }
    MarginEstimate est;
    est.p = static_cast<double>(hits) / n_samples;
    est.stderr_ = std::sqrt(est.p * (1.0 - est.p) / n_samples);
    return est;
}

double cbar(int d) {
    if (d < 2) throw std::invalid_argument("cbar: defined for d >= 2");
    const double ld = std::log(static_cast<double>(d));
    return 1.0 / 3.0 + 3.5 / std::sqrt(ld) + (38.0 / 3.0) / ld + 16.75 / (ld * std::sqrt(ld));
}

double cbar_limit() { return 1.0 / 3.0; }

TheoryConstants theory_constants(double lambda0, double xmax, double bmax, double sigma, int d,
                                 double C0, double t0) {
    if (!(lambda0 > 0.0 && xmax > 0.0 && bmax > 0.0 && sigma > 0.0 && C0 > 0.0 && t0 > 0.0))
        throw std::invalid_argument("theory_constants: all inputs must be positive");
    if (d < 2) throw std::invalid_argument("theory_constants: d must be >= 2 (log d terms)");

    TheoryConstants c;
    c.lambda0 = lambda0;
    c.xmax = xmax;
    c.bmax = bmax;
    c.sigma = sigma;
    c.C0 = C0;
    c.t0 = t0;
    c.d = d;

    c.C1 = 0.1 * lambda0 / (4.0 * xmax * xmax);
    c.lambda = lambda0 / 4.0;
    c.C2 = c.lambda * c.lambda / (2.0 * d * sigma * sigma * xmax * xmax);
    c.Cbar = cbar(d);

    const double log_d_32 = std::pow(std::log(static_cast<double>(d)), 1.5);
    const double log_coef = 128.0 * C0 * c.Cbar * std::pow(xmax, 4) * sigma * sigma * d * log_d_32 /
                            (lambda0 * lambda0);
    const double const_term = log_coef + 160.0 * bmax * std::pow(xmax, 3) * d / lambda0;
    c.C_GB = log_coef + const_term;

    c.switch_delta = (d / c.C1) * std::exp(-t0 * c.C1);
    return c;
}

}  // namespace banditlab
