#include "banditlab/environments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace banditlab {

struct ContextDistribution::Impl {
    Kind kind;
    int dim = 0;
    double xmax = 0.0;

    // truncated_gaussian
    double scale = 1.0;
    SymMat cov;
    Cholesky cov_chol;
    Truncation trunc_mode = Truncation::linf;
    double trunc_bound = 1.0;

    // uniform_ball
    double radius = 1.0;

    // gibbs
    std::vector<Vec> points;
    Vec probs;
    Vec cum_probs;

    // wrappers
    std::shared_ptr<const Impl> base;

    // alpha_margin
    double alpha = 1.0;
    Vec direction;

    // gap_filtered
    Vec beta_diff;
    double kappa0 = 0.0;
    double acceptance = 1.0;

    // csv
    std::vector<Vec> rows;
    CsvNormalization norm;

    Vec sample(Rng& rng) const;
};

namespace {

constexpr uint64_t kGapProbeSeed = 0x6A09E667F3BCC908ULL;
constexpr long kMaxRejections = 20'000'000L;

Vec standard_normal_vec(int d, Rng& rng) {
    Vec z(d);
    for (double& v : z) v = rng.next_normal();
    return z;
}

}  // namespace

Vec ContextDistribution::Impl::sample(Rng& rng) const {
    switch (kind) {
        case Kind::truncated_gaussian: {
            for (long tries = 0; tries < kMaxRejections; ++tries) {
                Vec x = cov_chol.mul_lower(standard_normal_vec(dim, rng));
                for (double& v : x) v *= scale;
                bool ok;
                if (trunc_mode == Truncation::l2) {
                    ok = norm2(x) <= trunc_bound;
                } else {
                    ok = true;
                    for (double v : x)
                        if (std::fabs(v) > trunc_bound) {
                            ok = false;
                            break;
                        }
                }
                if (ok) return x;
            }
            throw std::runtime_error("truncated_gaussian: rejection sampler failed to accept");
        }
        case Kind::uniform_ball: {
            Vec z = standard_normal_vec(dim, rng);
            double nz = norm2(z);
            while (nz == 0.0) {
                z = standard_normal_vec(dim, rng);
                nz = norm2(z);
            }
            const double r = radius * std::pow(rng.next_unit_pos(), 1.0 / dim);
            for (double& v : z) v *= r / nz;
            return z;
        }
        case Kind::gibbs_hypercube: {
            const double u = rng.next_unit();
            const auto it = std::upper_bound(cum_probs.begin(), cum_probs.end(), u);
            const size_t idx = std::min<size_t>(it - cum_probs.begin(), points.size() - 1);
            return points[idx];
        }
        case Kind::intercept_augmented: {
            const Vec inner = base->sample(rng);
            Vec x(dim);
            x[0] = 1.0;
            std::copy(inner.begin(), inner.end(), x.begin() + 1);
            return x;
        }
        case Kind::csv_backed: {
            return rows[static_cast<size_t>(rng.next_int(static_cast<int>(rows.size())))];
        }
        case Kind::alpha_margin: {
            Vec x = base->sample(rng);
            const double m = dot(x, direction);
            const double mag = std::pow(rng.next_unit_pos(), 1.0 / alpha);
            const double s = rng.next_bool() ? 1.0 : -1.0;
            for (size_t i = 0; i < x.size(); ++i) x[i] += (s * mag - m) * direction[i];
            return x;
        }
        case Kind::gap_filtered: {
            for (long tries = 0; tries < kMaxRejections; ++tries) {
                Vec x = base->sample(rng);
                if (std::fabs(dot(x, beta_diff)) > kappa0) return x;
            }
            throw std::runtime_error("gap_filter: rejection sampler failed to accept");
        }
    }
    throw std::logic_error("ContextDistribution: unknown kind");
}

Vec ContextDistribution::sample(Rng& rng) const { return impl_->sample(rng); }
int ContextDistribution::dim() const { return impl_->dim; }
double ContextDistribution::xmax() const { return impl_->xmax; }
ContextDistribution::Kind ContextDistribution::kind() const { return impl_->kind; }

std::string ContextDistribution::describe() const {
    switch (impl_->kind) {
        case Kind::truncated_gaussian: {
            std::ostringstream os;
            os << impl_->scale << "*N(0,Sigma) d=" << impl_->dim
               << (impl_->trunc_mode == Truncation::l2 ? " |x|2<=" : " |x|inf<=") << impl_->trunc_bound;
            return os.str();
        }
        case Kind::uniform_ball: {
            std::ostringstream os;
            os << "uniform ball d=" << impl_->dim << " R=" << impl_->radius;
            return os.str();
        }
        case Kind::gibbs_hypercube: {
            std::ostringstream os;
            os << "gibbs hypercube d=" << impl_->dim;
            return os.str();
        }
        case Kind::intercept_augmented: return "intercept + " + base().describe();
        case Kind::csv_backed: {
            std::ostringstream os;
            os << "csv pool (" << impl_->rows.size() << " rows)";
            return os.str();
        }
        case Kind::alpha_margin: {
            std::ostringstream os;
            os << "alpha-margin a=" << impl_->alpha << " over " << base().describe();
            return os.str();
        }
        case Kind::gap_filtered: {
            std::ostringstream os;
            os << "gap kappa0=" << impl_->kappa0 << " over " << base().describe();
            return os.str();
        }
    }
    return "?";
}

ContextDistribution ContextDistribution::truncated_gaussian(int d, double scale, SymMat cov,
                                                            Truncation mode, double bound) {
    if (d < 1) throw std::invalid_argument("truncated_gaussian: d must be >= 1");
    if (cov.dim() != d) throw std::invalid_argument("truncated_gaussian: covariance dimension mismatch");
    if (!(bound > 0.0) || !(scale > 0.0)) throw std::invalid_argument("truncated_gaussian: bad parameters");
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::truncated_gaussian;
    impl->dim = d;
    impl->scale = scale;
    impl->cov = std::move(cov);
    impl->cov_chol = cholesky(impl->cov, 1e-12 * std::max(impl->cov.trace(), 1.0));
    if (!impl->cov_chol.ok) throw std::invalid_argument("truncated_gaussian: covariance not PSD");
    impl->trunc_mode = mode;
    impl->trunc_bound = bound;
    impl->xmax = mode == Truncation::l2 ? bound : bound * std::sqrt(static_cast<double>(d));
    return ContextDistribution(std::move(impl));
}

ContextDistribution ContextDistribution::uniform_ball(int d, double radius) {
    if (d < 1 || !(radius > 0.0)) throw std::invalid_argument("uniform_ball: bad parameters");
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::uniform_ball;
    impl->dim = d;
    impl->radius = radius;
    impl->xmax = radius;
    return ContextDistribution(std::move(impl));
}

ContextDistribution ContextDistribution::gibbs_hypercube(const Mat& J) {
    const int d = J.rows();
    if (d < 1 || J.cols() != d) throw std::invalid_argument("gibbs_hypercube: J must be square");
    if (d > 20) throw std::invalid_argument("gibbs_hypercube: exact enumeration requires d <= 20");
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::gibbs_hypercube;
    impl->dim = d;
    impl->xmax = std::sqrt(static_cast<double>(d));

    const size_t count = size_t{1} << d;
    impl->points.resize(count);
    Vec energy(count);
    double max_e = -1e300;
    for (size_t m = 0; m < count; ++m) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = (m >> i) & 1 ? 1.0 : -1.0;
        double e = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) e += J.at(i, j) * x[i] * x[j];
        energy[m] = e;
        max_e = std::max(max_e, e);
        impl->points[m] = std::move(x);
    }
    impl->probs.resize(count);
    double z = 0.0;
    for (size_t m = 0; m < count; ++m) {
        impl->probs[m] = std::exp(energy[m] - max_e);
        z += impl->probs[m];
    }
    impl->cum_probs.resize(count);
    double acc = 0.0;
    for (size_t m = 0; m < count; ++m) {
        impl->probs[m] /= z;
        acc += impl->probs[m];
        impl->cum_probs[m] = acc;
    }
    impl->cum_probs.back() = 1.0;
    return ContextDistribution(std::move(impl));
}

ContextDistribution ContextDistribution::rademacher(int d) { return gibbs_hypercube(Mat(d, d)); }

ContextDistribution ContextDistribution::intercept_augmented(ContextDistribution base) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::intercept_augmented;
    impl->dim = base.dim() + 1;
    impl->xmax = std::sqrt(1.0 + base.xmax() * base.xmax());
    impl->base = base.impl_;
    return ContextDistribution(std::move(impl));
}

ContextDistribution ContextDistribution::alpha_margin(double alpha, Vec direction,
                                                      ContextDistribution base) {
    if (!(alpha > 0.0) || alpha > 4.0) throw std::invalid_argument("alpha_margin: alpha must lie in (0, 4]");
    if (static_cast<int>(direction.size()) != base.dim())
        throw std::invalid_argument("alpha_margin: direction dimension mismatch");
    const double n = norm2(direction);
    if (std::fabs(n - 1.0) > 1e-8) throw std::invalid_argument("alpha_margin: direction must be unit norm");
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::alpha_margin;
    impl->dim = base.dim();
    impl->xmax = std::sqrt(base.xmax() * base.xmax() + 1.0);
    impl->alpha = alpha;
    impl->direction = std::move(direction);
    impl->base = base.impl_;
    return ContextDistribution(std::move(impl));
}

const SymMat& ContextDistribution::gauss_cov() const { return impl_->cov; }
double ContextDistribution::gauss_scale() const { return impl_->scale; }
ContextDistribution::Truncation ContextDistribution::truncation_mode() const { return impl_->trunc_mode; }
double ContextDistribution::truncation_bound() const { return impl_->trunc_bound; }
double ContextDistribution::ball_radius() const { return impl_->radius; }
const std::vector<Vec>& ContextDistribution::gibbs_points() const { return impl_->points; }
const Vec& ContextDistribution::gibbs_probs() const { return impl_->probs; }
ContextDistribution ContextDistribution::base() const {
    if (!impl_->base) throw std::logic_error("ContextDistribution::base: not a wrapper kind");
    return ContextDistribution(impl_->base);
}
double ContextDistribution::margin_alpha() const { return impl_->alpha; }
const Vec& ContextDistribution::margin_direction() const { return impl_->direction; }
const Vec& ContextDistribution::gap_beta_diff() const { return impl_->beta_diff; }
double ContextDistribution::gap_kappa0() const { return impl_->kappa0; }
double ContextDistribution::gap_acceptance_estimate() const { return impl_->acceptance; }
size_t ContextDistribution::csv_rows() const { return impl_->rows.size(); }
const ContextDistribution::CsvNormalization& ContextDistribution::csv_normalization() const {
    return impl_->norm;
}

ContextDistribution gap_filter(const ContextDistribution& dist, Vec beta_diff, double kappa0) {
    if (!(kappa0 > 0.0)) throw std::invalid_argument("gap_filter: kappa0 must be positive");
    if (static_cast<int>(beta_diff.size()) != dist.dim())
        throw std::invalid_argument("gap_filter: beta_diff dimension mismatch");

    Rng probe(kGapProbeSeed);
    const int n_probe = 20000;
    int accepted = 0;
    for (int i = 0; i < n_probe; ++i)
        if (std::fabs(dot(dist.sample(probe), beta_diff)) > kappa0) ++accepted;
    const double acc = static_cast<double>(accepted) / n_probe;
    if (acc < 0.01) {
        std::ostringstream os;
        os << "gap_filter: estimated acceptance probability " << acc << " is below 0.01";
        throw std::invalid_argument(os.str());
    }

    auto impl = std::make_shared<ContextDistribution::Impl>();
    impl->kind = ContextDistribution::Kind::gap_filtered;
    impl->dim = dist.dim();
    impl->xmax = dist.xmax();
    impl->base = dist.impl_;
    impl->beta_diff = std::move(beta_diff);
    impl->kappa0 = kappa0;
    impl->acceptance = acc;
    return ContextDistribution(std::move(impl));
}

Vec sample_alpha_margin_context(double alpha, const Vec& direction, const ContextDistribution& base,
                                Rng& rng) {
    return ContextDistribution::alpha_margin(alpha, direction, base).sample(rng);
}

namespace {

double parse_cell(const std::string& cell, size_t row, size_t col) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    // allow trailing whitespace only
    while (pos < cell.size() && (cell[pos] == ' ' || cell[pos] == '\t' || cell[pos] == '\r')) ++pos;
    if (pos != cell.size() || cell.empty()) {
        std::ostringstream os;
        os << "csv parse error: non-numeric cell at row " << row << ", column " << col + 1;
        throw std::invalid_argument(os.str());
    }
    return v;
}

}  // namespace

ContextDistribution load_csv_covariates(const std::string& path, bool normalize, double target_xmax) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_csv_covariates: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("load_csv_covariates: empty file " + path);
    // header row: count columns
    size_t cols = std::count(line.begin(), line.end(), ',') + 1;

    std::vector<Vec> rows;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        Vec row;
        row.reserve(cols);
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, lineno, row.size()));
        if (row.size() != cols) {
            std::ostringstream os;
            os << "csv parse error: row " << lineno << " has " << row.size() << " cells, expected " << cols;
            throw std::invalid_argument(os.str());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("load_csv_covariates: no data rows in " + path);
    if (rows.size() < cols + 1) {
        std::ostringstream os;
        os << "load_csv_covariates: need at least d+1 = " << cols + 1 << " rows, got " << rows.size();
        throw std::invalid_argument(os.str());
    }

    ContextDistribution::CsvNormalization norm;
    norm.enabled = normalize;
    if (normalize) {
        const size_t n = rows.size();
        norm.col_mean.assign(cols, 0.0);
        norm.col_scale.assign(cols, 1.0);
        for (const Vec& r : rows)
            for (size_t j = 0; j < cols; ++j) norm.col_mean[j] += r[j];
        for (size_t j = 0; j < cols; ++j) norm.col_mean[j] /= static_cast<double>(n);
        for (size_t j = 0; j < cols; ++j) {
            double mx = 0.0;
            for (const Vec& r : rows) mx = std::max(mx, std::fabs(r[j] - norm.col_mean[j]));
            norm.col_scale[j] = mx > 0.0 ? mx : 1.0;
        }
        for (Vec& r : rows)
            for (size_t j = 0; j < cols; ++j) r[j] = (r[j] - norm.col_mean[j]) / norm.col_scale[j];
    }
    double max_norm = 0.0;
    for (const Vec& r : rows) max_norm = std::max(max_norm, norm2(r));
    if (normalize && target_xmax > 0.0 && max_norm > target_xmax) {
        norm.global_scale = target_xmax / max_norm;
        for (Vec& r : rows)
            for (double& v : r) v *= norm.global_scale;
        max_norm = target_xmax;
    }

    auto impl = std::make_shared<ContextDistribution::Impl>();
    impl->kind = ContextDistribution::Kind::csv_backed;
    impl->dim = static_cast<int>(cols);
    impl->xmax = max_norm;
    impl->rows = std::move(rows);
    impl->norm = std::move(norm);
    return ContextDistribution(std::move(impl));
}

ContextDistribution diversity_preset(int d) {
    return ContextDistribution::truncated_gaussian(d, 0.5, SymMat::identity(d),
                                                   ContextDistribution::Truncation::linf, 1.0);
}

ParameterPrior ParameterPrior::gaussian(Vec mean, SymMat cov) {
    if (cov.dim() != static_cast<int>(mean.size()))
        throw std::invalid_argument("ParameterPrior::gaussian: dimension mismatch");
    ParameterPrior p;
    p.kind = Kind::gaussian;
    p.mean = std::move(mean);
    p.cov = std::move(cov);
    return p;
}

ParameterPrior ParameterPrior::scaled_gaussian(double factor) {
    ParameterPrior p;
    p.kind = Kind::scaled_gaussian;
    p.factor = factor;
    return p;
}

ParameterPrior ParameterPrior::mixture(MixtureComponent a, MixtureComponent b) {
    if (std::fabs(a.weight + b.weight - 1.0) > 1e-12)
        throw std::invalid_argument("ParameterPrior::mixture: weights must sum to 1");
    ParameterPrior p;
    p.kind = Kind::mixture;
    p.components = {a, b};
    return p;
}

Vec ParameterPrior::sample_beta(int d, Rng& rng) const {
    switch (kind) {
        case Kind::gaussian: {
            if (static_cast<int>(mean.size()) != d)
                throw std::invalid_argument("ParameterPrior: prior dimension does not match d");
            return gaussian_sample(mean, cov, rng);
        }
        case Kind::scaled_gaussian: {
            Vec b(d);
            for (double& v : b) v = factor * rng.next_normal();
            return b;
        }
        case Kind::mixture: {
            const double u = rng.next_unit();
            const MixtureComponent& c = u < components[0].weight ? components[0] : components[1];
            Vec b(d);
            for (double& v : b) v = c.scale * (c.mean_fill + rng.next_normal());
            return b;
        }
    }
    throw std::logic_error("ParameterPrior: unknown kind");
}

ProblemInstance sample_instance(const ParameterPrior& prior, int K, int d, double sigma,
                                const LinkFunction& link, Rng& rng) {
    if (K < 2) throw std::invalid_argument("sample_instance: K must be >= 2");
    if (d < 1) throw std::invalid_argument("sample_instance: d must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("sample_instance: sigma must be positive");
    if (prior.intercept && K != 2)
        throw std::invalid_argument("sample_instance: intercept spec is defined for two arms only");

    ProblemInstance inst;
    inst.K = K;
    inst.sigma = sigma;
    inst.link = link;
    inst.betas.reserve(K);
    for (int i = 0; i < K; ++i) inst.betas.push_back(prior.sample_beta(d, rng));

    if (prior.intercept) {
        const double sd = std::sqrt(prior.intercept->var);
        const double b1 = prior.intercept->mean + sd * rng.next_normal();
        const double b2 = prior.intercept->mean + sd * rng.next_normal();
        // intercept coefficient occupies the leading slot, matching the
        // constant first coordinate emitted by intercept_augmented contexts
        for (int i = 0; i < K; ++i) {
            Vec aug(d + 1);
            aug[0] = i == 0 ? b1 : -b2;
            std::copy(inst.betas[i].begin(), inst.betas[i].end(), aug.begin() + 1);
            inst.betas[i] = std::move(aug);
        }
        d += 1;
    }
    inst.d = d;

    double bmax = 0.0;
    for (const Vec& b : inst.betas) bmax = std::max(bmax, norm2(b));
    inst.bmax = bmax;
    return inst;
}

}  // namespace banditlab
