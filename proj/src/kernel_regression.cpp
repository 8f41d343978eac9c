#include "krrdp/kernel_regression.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace krrdp {

namespace {

void check_points(const PointMatrix& xs, const char* what) {
    if (xs.rows() < 1) throw InvalidInput(std::string(what) + ": need at least one point");
}

// Cholesky solve with one step of iterative refinement.
std::optional<Vector> spd_solve(const Eigen::MatrixXd& a, const Vector& b) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Vector x = llt.solve(b);
    const Vector residual = b - a * x;
    x += llt.solve(residual);
    if (!x.allFinite()) return std::nullopt;
    return x;
}

}  // namespace

void KernelSpec::validate() const {
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
        throw InvalidInput("kernel lengthscale must be positive, got " + std::to_string(lengthscale));
}

double rbf_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                  const KernelSpec& spec) {
    if (x.size() != y.size())
        throw InvalidInput("rbf_kernel: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                           std::to_string(y.size()) + ")");
    const double sq = (x - y).squaredNorm();
    return std::exp(-sq / (2.0 * spec.lengthscale * spec.lengthscale));
}

Eigen::MatrixXd gram_matrix(const PointMatrix& xs, const PointMatrix& ys, const KernelSpec& spec) {
    spec.validate();
    if (xs.cols() != ys.cols()) throw InvalidInput("gram_matrix: dimension mismatch");
    const double scale = -1.0 / (2.0 * spec.lengthscale * spec.lengthscale);
    Eigen::MatrixXd g(xs.rows(), ys.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
        for (Eigen::Index j = 0; j < ys.rows(); ++j) {
            g(i, j) = std::exp(scale * (xs.row(i) - ys.row(j)).squaredNorm());
        }
    }
    return g;
}

KrrModel::KrrModel(PointMatrix centers, Vector coefficients, KernelSpec kernel, double lambda,
                   std::optional<double> clip_bound, double offset)
    : centers_(std::move(centers)),
      coefficients_(std::move(coefficients)),
      kernel_(kernel),
      lambda_(lambda),
      clip_bound_(clip_bound),
      offset_(offset) {
    kernel_.validate();
    if (centers_.rows() != coefficients_.size())
        throw InvalidInput("KrrModel: coefficient count must equal center count");
    if (clip_bound_ && !(*clip_bound_ >= 0.0)) throw InvalidInput("KrrModel: clip bound must be nonnegative");
}

KrrModel KrrModel::constant(int dim, double value, KernelSpec kernel, double lambda,
                            std::optional<double> clip_bound) {
    return KrrModel(PointMatrix(0, dim), Vector(0), kernel, lambda, clip_bound, value);
}

double KrrModel::predict(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != centers_.cols())
        throw InvalidInput("predict: state dimension " + std::to_string(x.size()) +
                           " does not match model dimension " + std::to_string(centers_.cols()));
    const double scale = -1.0 / (2.0 * kernel_.lengthscale * kernel_.lengthscale);
    const Eigen::Index d = centers_.cols();
    const double* c = centers_.data();
    const double* px = x.data();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < centers_.rows(); ++i, c += d) {
        double sq = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const double diff = c[k] - px[k];
            sq += diff * diff;
        }
        sum += coefficients_[i] * std::exp(scale * sq);
    }
    return sum + offset_;
}

double KrrModel::clipped_predict(const Eigen::Ref<const Vector>& x) const {
    if (!clip_bound_) throw InvalidInput("clipped_predict: model has no clip bound");
    return clip(predict(x), *clip_bound_);
}

KrrModel KrrModel::with_clip_bound(std::optional<double> bound) const {
    return KrrModel(centers_, coefficients_, kernel_, lambda_, bound, offset_);
}

double clip(double value, double bound) { return std::min(std::max(value, -bound), bound); }

KrrModel krr_fit(const PointMatrix& xs, const Vector& ys, double lambda, const KernelSpec& spec) {
    check_points(xs, "krr_fit");
    spec.validate();
    if (ys.size() != xs.rows()) throw InvalidInput("krr_fit: target count must equal point count");
    if (!(lambda >= 0.0)) throw InvalidInput("krr_fit: lambda must be nonnegative");

    const auto n = static_cast<double>(xs.rows());
    const Eigen::MatrixXd g = gram_matrix(xs, xs, spec);

    Eigen::MatrixXd a = g;
    a.diagonal().array() += lambda * n;
    auto alpha = spd_solve(a, ys);
    if (!alpha) {
        const double lambda_eff = lambda + 1e-10 * g.trace() / n;
        a = g;
        a.diagonal().array() += lambda_eff * n;
        alpha = spd_solve(a, ys);
        if (!alpha)
            throw FactorizationError("krr_fit: kernel system is singular at lambda=" +
                                     std::to_string(lambda) + "; raise lambda");
        lambda = lambda_eff;
    }
    return KrrModel(xs, std::move(*alpha), spec, lambda);
}

KrrModel nystrom_fit(const PointMatrix& xs, const Vector& ys, double lambda,
                     const KernelSpec& spec, int m, Stream& rng) {
    check_points(xs, "nystrom_fit");
    spec.validate();
    const auto n = static_cast<int>(xs.rows());
    if (ys.size() != n) throw InvalidInput("nystrom_fit: target count must equal point count");
    if (m < 1 || m > n)
        throw InvalidInput("nystrom_fit: center count must lie in [1, " + std::to_string(n) + "]");
    if (!(lambda >= 0.0)) throw InvalidInput("nystrom_fit: lambda must be nonnegative");

    // partial Fisher-Yates
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < m; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    std::sort(idx.begin(), idx.begin() + m);

    PointMatrix centers(m, xs.cols());
    for (int i = 0; i < m; ++i) centers.row(i) = xs.row(idx[i]);

    const Eigen::MatrixXd knm = gram_matrix(xs, centers, spec);
    const Eigen::MatrixXd kmm = gram_matrix(centers, centers, spec);

    // Same normal equations, solved in the eigenbasis of Kmm: with
    // Kmm = U S U^T and features phi = Knm U S^{-1/2}, alpha = U S^{-1/2} w where
    // (phi^T phi + lambda n I) w = phi^T y. Directions with negligible S are
    // dropped (pseudo-inverse), which avoids squaring the Gram condition number.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kmm);
    if (eig.info() != Eigen::Success) throw FactorizationError("nystrom_fit: eigensolver failed; raise lambda");
    const Vector& s = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(s.maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cutoff) keep.push_back(i);
    if (keep.empty()) throw FactorizationError("nystrom_fit: center Gram matrix is zero; raise lambda");

    const auto r = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd whiten(m, r);
    for (Eigen::Index k = 0; k < r; ++k) whiten.col(k) = eig.eigenvectors().col(keep[k]) / std::sqrt(s[keep[k]]);
    const Eigen::MatrixXd phi = knm * whiten;

    Eigen::MatrixXd a = phi.transpose() * phi;
    a.diagonal().array() += lambda * n;
    auto w = spd_solve(a, phi.transpose() * ys);
    if (!w) {
        a.diagonal().array() += 1e-10 * a.trace() / r;
        w = spd_solve(a, phi.transpose() * ys);
        if (!w) throw FactorizationError("nystrom_fit: normal equations are singular; raise lambda");
    }
    std::optional<Vector> alpha = Vector(whiten * *w);
    return KrrModel(std::move(centers), std::move(*alpha), spec, lambda);
}

double cross_validation_error(const PointMatrix& xs, const Vector& ys, double lambda,
                              const KernelSpec& spec, int folds, Stream& rng) {
    const auto n = static_cast<int>(xs.rows());
    if (folds < 2 || folds > n) throw InvalidInput("cross_validation_error: need 2 <= folds <= n");

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);

    double sse = 0.0;
    for (int f = 0; f < folds; ++f) {
        std::vector<int> train, test;
        for (int i = 0; i < n; ++i) (i % folds == f ? test : train).push_back(perm[i]);
        PointMatrix xt(static_cast<Eigen::Index>(train.size()), xs.cols());
        Vector yt(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
            xt.row(i) = xs.row(train[i]);
            yt[i] = ys[train[i]];
        }
        const KrrModel model = krr_fit(xt, yt, lambda, spec);
        for (int i : test) {
            const double e = model.predict(xs.row(i).transpose()) - ys[i];
            sse += e * e;
        }
    }
    return sse / n;
}

}  // namespace krrdp
