#pragma once

#include <optional>
#include <string>
#include <vector>

#include "banditlab/rng.hpp"

namespace banditlab {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
bool all_finite(const Vec& a);

// Dense row-major matrix. Only what the toolkit needs: design matrices in
// test oracles and the Gibbs interaction matrix J.
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& at(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double at(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

// Symmetric matrix, full row-major storage; symmetry is maintained by
// construction (every mutation writes both triangles).
class SymMat {
public:
    SymMat() = default;
    explicit SymMat(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim, 0.0) {}

    static SymMat identity(int dim);
    static SymMat diagonal(const Vec& d);

    int dim() const { return dim_; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * dim_ + j]; }
    void set(int i, int j, double v) {
        a_[static_cast<size_t>(i) * dim_ + j] = v;
        a_[static_cast<size_t>(j) * dim_ + i] = v;
    }
    void add(int i, int j, double v) {
        a_[static_cast<size_t>(i) * dim_ + j] += v;
        if (i != j) a_[static_cast<size_t>(j) * dim_ + i] += v;
    }

    void add_rank_one(const Vec& x);        // A += x x^T
    void add_scaled(const SymMat& b, double s);
    void scale(double s);

    double trace() const;
    double frobenius() const;
    Vec mul(const Vec& x) const;
    bool finite() const;

private:
    int dim_ = 0;
    std::vector<double> a_;
};

// Lower-triangular Cholesky factor of a PSD matrix (zero pivots allowed).
struct Cholesky {
    int dim = 0;
    std::vector<double> l;  // row-major, lower triangle used
    bool ok = false;

    double at(int i, int j) const { return l[static_cast<size_t>(i) * dim + j]; }

    Vec solve(const Vec& b) const;        // (L L^T) x = b
    Vec solve_lower(const Vec& b) const;  // L y = b
    Vec solve_upper(const Vec& b) const;  // L^T x = b
    Vec mul_lower(const Vec& z) const;    // L z
};

// Factor a symmetric PSD matrix. Pivots below `psd_slack` in magnitude are
// flushed to zero; pivots below -psd_slack fail the factorization.
Cholesky cholesky(const SymMat& a, double psd_slack = 0.0);

// A + x x^T as a new value; preserves symmetry exactly and never lowers the
// smallest eigenvalue.
SymMat gram_rank_one_update(const SymMat& gram, const Vec& x);

// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
// Converges when the off-diagonal Frobenius mass drops below
// tol * max(1, ||a||_F); exact for dim 1. min_eigen_pair also returns a unit
// eigenvector for the smallest eigenvalue.
double min_eigen_sym(const SymMat& a, double tol = 1e-12);
std::pair<double, Vec> min_eigen_pair(const SymMat& a, double tol = 1e-12);

// Solve gram * beta = moment when gram is safely invertible
// (min eigenvalue > eps_inv); "not identifiable" otherwise. The second form
// reuses a caller-computed minimum eigenvalue.
std::optional<Vec> ols_solve(const SymMat& gram, const Vec& moment, double eps_inv);
std::optional<Vec> ols_solve(const SymMat& gram, const Vec& moment, double eps_inv, double min_eig);

// Draw from N(mean, cov). cov must be PSD up to a diagonal jitter of
// 1e-12 * trace(cov); throws otherwise. cov = 0 returns mean exactly.
Vec gaussian_sample(const Vec& mean, const SymMat& cov, Rng& rng);

}  // namespace banditlab
