#pragma once

#include "krrdp/rng.hpp"
#include "krrdp/types.hpp"

#include <optional>
#include <span>

namespace krrdp {

enum class KernelKind { Rbf };

struct KernelSpec {
    KernelKind kind = KernelKind::Rbf;
    double lengthscale = 40.0;

    void validate() const;
};

// k(x, y) = exp(-|x - y|^2 / (2 l^2)); k(x, x) = 1.
double rbf_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                  const KernelSpec& spec);

Eigen::MatrixXd gram_matrix(const PointMatrix& xs, const PointMatrix& ys, const KernelSpec& spec);

// Fitted regressor f(x) = sum_i coefficients_i k(centers_i, x).
// Immutable after fit; safe to share across threads.
class KrrModel {
public:
    KrrModel() = default;
    // `offset` is added to the kernel expansion; it is nonzero only for
    // constant stage models, which carry no centers.
    KrrModel(PointMatrix centers, Vector coefficients, KernelSpec kernel, double lambda,
             std::optional<double> clip_bound = std::nullopt, double offset = 0.0);

    // Model that predicts `value` everywhere, without centers.
    static KrrModel constant(int dim, double value, KernelSpec kernel, double lambda,
                             std::optional<double> clip_bound = std::nullopt);

    double predict(const Eigen::Ref<const Vector>& x) const;
    // min(max(predict(x), -B), B); requires a clip bound.
    double clipped_predict(const Eigen::Ref<const Vector>& x) const;

    KrrModel with_clip_bound(std::optional<double> bound) const;

    const PointMatrix& centers() const { return centers_; }
    const Vector& coefficients() const { return coefficients_; }
    const KernelSpec& kernel() const { return kernel_; }
    double lambda() const { return lambda_; }
    std::optional<double> clip_bound() const { return clip_bound_; }
    double offset() const { return offset_; }
    int dim() const { return static_cast<int>(centers_.cols()); }

private:
    PointMatrix centers_;
    Vector coefficients_;
    KernelSpec kernel_;
    double lambda_ = 0.0;
    std::optional<double> clip_bound_;
    double offset_ = 0.0;
};

double clip(double value, double bound);

// Exact KRR: solves (G + lambda n I) alpha = y by Cholesky.
KrrModel krr_fit(const PointMatrix& xs, const Vector& ys, double lambda, const KernelSpec& spec);

// Nystrom KRR on m centers sampled uniformly without replacement:
// (Knm^T Knm + lambda n Kmm) alpha = Knm^T y.
KrrModel nystrom_fit(const PointMatrix& xs, const Vector& ys, double lambda,
                     const KernelSpec& spec, int m, Stream& rng);

// k-fold cross-validated mean squared error of exact KRR.
double cross_validation_error(const PointMatrix& xs, const Vector& ys, double lambda,
                              const KernelSpec& spec, int folds, Stream& rng);

}  // namespace krrdp
