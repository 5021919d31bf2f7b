#include "banditlab/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace banditlab {

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

bool all_finite(const Vec& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

SymMat SymMat::identity(int dim) {
    SymMat m(dim);
    for (int i = 0; i < dim; ++i) m.set(i, i, 1.0);
    return m;
}

SymMat SymMat::diagonal(const Vec& d) {
    SymMat m(static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) m.set(static_cast<int>(i), static_cast<int>(i), d[i]);
    return m;
}

void SymMat::add_rank_one(const Vec& x) {
    if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("add_rank_one: dimension mismatch");
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) a_[static_cast<size_t>(i) * dim_ + j] += x[i] * x[j];
}

void SymMat::add_scaled(const SymMat& b, double s) {
    if (b.dim_ != dim_) throw std::invalid_argument("add_scaled: dimension mismatch");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += s * b.a_[i];
}

void SymMat::scale(double s) {
    for (double& v : a_) v *= s;
}

double SymMat::trace() const {
    double t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

double SymMat::frobenius() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

Vec SymMat::mul(const Vec& x) const {
    if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("SymMat::mul: dimension mismatch");
    Vec y(dim_, 0.0);
    for (int i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

bool SymMat::finite() const {
    for (double v : a_)
        if (!std::isfinite(v)) return false;
    return true;
}

Vec Cholesky::solve_lower(const Vec& b) const {
    Vec y(dim, 0.0);
    for (int i = 0; i < dim; ++i) {
        double s = b[i];
        for (int j = 0; j < i; ++j) s -= at(i, j) * y[j];
        y[i] = at(i, i) > 0.0 ? s / at(i, i) : 0.0;
    }
    return y;
}

Vec Cholesky::solve_upper(const Vec& b) const {
    Vec x(dim, 0.0);
    for (int i = dim - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < dim; ++j) s -= at(j, i) * x[j];
        x[i] = at(i, i) > 0.0 ? s / at(i, i) : 0.0;
    }
    return x;
}

Vec Cholesky::solve(const Vec& b) const { return solve_upper(solve_lower(b)); }

Vec Cholesky::mul_lower(const Vec& z) const {
    Vec y(dim, 0.0);
    for (int i = 0; i < dim; ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += at(i, j) * z[j];
        y[i] = s;
    }
    return y;
}

Cholesky cholesky(const SymMat& a, double psd_slack) {
    const int n = a.dim();
    Cholesky f;
    f.dim = n;
    f.l.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= f.at(i, k) * f.at(j, k);
            if (i == j) {
                if (s < -psd_slack) return f;  // not PSD within slack
                f.l[static_cast<size_t>(i) * n + i] = s > psd_slack ? std::sqrt(s) : 0.0;
            } else {
                const double ljj = f.at(j, j);
                f.l[static_cast<size_t>(i) * n + j] = ljj > 0.0 ? s / ljj : 0.0;
            }
        }
    }
    f.ok = true;
    return f;
}

SymMat gram_rank_one_update(const SymMat& gram, const Vec& x) {
    if (gram.dim() != static_cast<int>(x.size()))
        throw std::invalid_argument("gram_rank_one_update: dimension mismatch");
    SymMat out = gram;
    out.add_rank_one(x);
    return out;
}

namespace {

double jacobi_min_eigen(const SymMat& a, double tol, std::vector<double>* rot) {
    const int n = a.dim();
    SymMat w = a;
    const double threshold = tol * std::max(1.0, a.frobenius());

    auto off_mass = [&]() {
        double s = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) s += w(p, q) * w(p, q);
        return std::sqrt(2.0 * s);
    };

    for (int sweep = 0; sweep < 100 && off_mass() > threshold; ++sweep) {
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = w(p, q);
                if (apq == 0.0) continue;
                const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
                const double t =
                    (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                const double app = w(p, p), aqq = w(q, q);
                w.set(p, p, app - t * apq);
                w.set(q, q, aqq + t * apq);
                w.set(p, q, 0.0);
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = w(k, p), akq = w(k, q);
                    w.set(k, p, c * akp - s * akq);
                    w.set(k, q, s * akp + c * akq);
                }
                if (rot) {
                    for (int k = 0; k < n; ++k) {
                        double& vkp = (*rot)[static_cast<size_t>(k) * n + p];
                        double& vkq = (*rot)[static_cast<size_t>(k) * n + q];
                        const double np = c * vkp - s * vkq;
                        const double nq = s * vkp + c * vkq;
                        vkp = np;
                        vkq = nq;
                    }
                }
            }
        }
    }

    double mn = w(0, 0);
    int arg = 0;
    for (int i = 1; i < n; ++i) {
        if (w(i, i) < mn) {
            mn = w(i, i);
            arg = i;
        }
    }
    if (rot) {
        // move the minimizing column to the front
        if (arg != 0)
            for (int k = 0; k < n; ++k)
                std::swap((*rot)[static_cast<size_t>(k) * n], (*rot)[static_cast<size_t>(k) * n + arg]);
    }
    return mn;
}

}  // namespace

double min_eigen_sym(const SymMat& a, double tol) {
    if (!a.finite()) throw std::invalid_argument("min_eigen_sym: non-finite entries");
    const int n = a.dim();
    if (n == 0) throw std::invalid_argument("min_eigen_sym: empty matrix");
    if (n == 1) return a(0, 0);
    return jacobi_min_eigen(a, tol, nullptr);
}

std::pair<double, Vec> min_eigen_pair(const SymMat& a, double tol) {
    if (!a.finite()) throw std::invalid_argument("min_eigen_pair: non-finite entries");
    const int n = a.dim();
    if (n == 0) throw std::invalid_argument("min_eigen_pair: empty matrix");
    if (n == 1) return {a(0, 0), Vec{1.0}};
    std::vector<double> rot(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) rot[static_cast<size_t>(i) * n + i] = 1.0;
    const double mn = jacobi_min_eigen(a, tol, &rot);
    Vec v(n);
    for (int k = 0; k < n; ++k) v[k] = rot[static_cast<size_t>(k) * n];
    const double nv = norm2(v);
    if (nv > 0.0)
        for (double& x : v) x /= nv;
    return {mn, v};
}

std::optional<Vec> ols_solve(const SymMat& gram, const Vec& moment, double eps_inv) {
    if (gram.dim() != static_cast<int>(moment.size()))
        throw std::invalid_argument("ols_solve: dimension mismatch");
    if (!gram.finite() || !all_finite(moment)) throw std::invalid_argument("ols_solve: non-finite input");
    return ols_solve(gram, moment, eps_inv, min_eigen_sym(gram, 1e-13));
}

std::optional<Vec> ols_solve(const SymMat& gram, const Vec& moment, double eps_inv, double min_eig) {
    if (gram.dim() != static_cast<int>(moment.size()))
        throw std::invalid_argument("ols_solve: dimension mismatch");
    if (!(eps_inv > 0.0)) throw std::invalid_argument("ols_solve: eps_inv must be positive");
    if (!gram.finite() || !all_finite(moment)) throw std::invalid_argument("ols_solve: non-finite input");

    if (min_eig <= eps_inv) return std::nullopt;

    const Cholesky f = cholesky(gram);
    if (!f.ok) return std::nullopt;
    Vec x = f.solve(moment);

    // one step of iterative refinement keeps the residual small even near
    // the identifiability threshold
    Vec r = gram.mul(x);
    for (size_t i = 0; i < r.size(); ++i) r[i] = moment[i] - r[i];
    const Vec dx = f.solve(r);
    for (size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
    return x;
}

Vec gaussian_sample(const Vec& mean, const SymMat& cov, Rng& rng) {
    if (cov.dim() != static_cast<int>(mean.size()))
        throw std::invalid_argument("gaussian_sample: dimension mismatch");
    const double slack = 1e-12 * std::max(cov.trace(), 1.0);
    Cholesky f = cholesky(cov, slack);
    if (!f.ok) {
        SymMat jittered = cov;
        for (int i = 0; i < cov.dim(); ++i) jittered.add(i, i, slack);
        f = cholesky(jittered, slack);
        if (!f.ok) throw std::invalid_argument("gaussian_sample: covariance not PSD within jitter");
    }
    Vec z(mean.size());
    for (double& v : z) v = rng.next_normal();
    Vec x = f.mul_lower(z);
    for (size_t i = 0; i < x.size(); ++i) x[i] += mean[i];
    return x;
}

}  // namespace banditlab
