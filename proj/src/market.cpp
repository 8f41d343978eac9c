#include "krrdp/market.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace krrdp {

GbmParams::GbmParams(double r, Vector sigma, Eigen::MatrixXd rho, Vector x0, double dt)
    : r_(r), sigma_(std::move(sigma)), rho_(std::move(rho)), x0_(std::move(x0)), dt_(dt) {
    const auto d = sigma_.size();
    if (d < 1) throw InvalidInput("GbmParams: need at least one asset");
    if (!std::isfinite(r_)) throw InvalidInput("GbmParams: rate must be finite");
    if (x0_.size() != d) throw InvalidInput("GbmParams: x0 length must equal asset count");
    if (rho_.rows() != d || rho_.cols() != d) throw InvalidInput("GbmParams: rho must be d x d");
    if (!(dt_ >= 0.0) || !std::isfinite(dt_)) throw InvalidInput("GbmParams: dt must be nonnegative");
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(sigma_[i] > 0.0)) throw InvalidInput("GbmParams: sigma[" + std::to_string(i) + "] must be positive");
        if (!(x0_[i] > 0.0)) throw InvalidInput("GbmParams: x0[" + std::to_string(i) + "] must be positive");
        if (std::abs(rho_(i, i) - 1.0) > 1e-12) throw InvalidInput("GbmParams: rho must have unit diagonal");
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::abs(rho_(i, j) - rho_(j, i)) > 1e-12) throw InvalidInput("GbmParams: rho must be symmetric");
            if (std::abs(rho_(i, j)) > 1.0) throw InvalidInput("GbmParams: |rho_ij| must not exceed 1");
        }
    }

    Eigen::LLT<Eigen::MatrixXd> llt(rho_);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd jittered = rho_;
        jittered.diagonal().array() += 1e-10;
        llt.compute(jittered);
        if (llt.info() != Eigen::Success)
            throw InvalidInput("GbmParams: rho is not positive semidefinite");
    }
    corr_root_ = llt.matrixL();

    discount_ = std::exp(-r_ * dt_);
    log_drift_ = ((r_ - 0.5 * sigma_.array().square()) * dt_).matrix();
    log_vol_ = (sigma_.array() * std::sqrt(dt_)).matrix();
}

Eigen::MatrixXd constant_correlation(int d, double rho) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(d, d, rho);
    m.diagonal().setOnes();
    return m;
}

const Vector& State::prices() const {
    if (!prices_) throw InvalidInput("State: cemetery state has no prices");
    return *prices_;
}

Vector correlate(const Eigen::Ref<const Vector>& z, const GbmParams& params) {
    if (z.size() != params.dim()) throw InvalidInput("correlate: noise dimension mismatch");
    return params.corr_root().triangularView<Eigen::Lower>() * z;
}

void gbm_step(const double* x, const GbmParams& params, const double* z, double* out) {
    const int d = params.dim();
    const double* root = params.corr_root().data();  // column-major
    for (int i = 0; i < d; ++i) {
        double w = 0.0;
        for (int k = 0; k <= i; ++k) w += root[i + k * d] * z[k];
        out[i] = x[i] * std::exp(params.log_drift()[i] + params.log_vol()[i] * w);
    }
}

Vector gbm_step(const Eigen::Ref<const Vector>& x, const GbmParams& params,
                const Eigen::Ref<const Vector>& z) {
    if (x.size() != params.dim() || z.size() != params.dim())
        throw InvalidInput("gbm_step: dimension mismatch");
    Vector out(params.dim());
    const Vector xc = x;
    const Vector zc = z;
    gbm_step(xc.data(), params, zc.data(), out.data());
    return out;
}

State transition(const State& x, Control u, const GbmParams& params,
                 const Eigen::Ref<const Vector>& z) {
    if (u != kExercise && u != kHold) throw InvalidInput("transition: control must be 0 or 1");
    if (x.is_cemetery() || u == kExercise) return State::cemetery();
    return State(gbm_step(x.prices(), params, z));
}

PointMatrix sample_mu_t(const GbmParams& params, int t, int n, std::uint64_t seed) {
    if (t < 0) throw InvalidInput("sample_mu_t: stage must be nonnegative");
    if (n < 1) throw InvalidInput("sample_mu_t: need n >= 1");
    const int d = params.dim();
    PointMatrix out(n, d);
#pragma omp parallel
    {
        std::vector<double> z(d), cur(d), next(d);
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) {
            Stream rng(seed, {Purpose::OuterSample, static_cast<std::uint32_t>(t),
                              static_cast<std::uint64_t>(i)});
            for (int k = 0; k < d; ++k) cur[k] = params.x0()[k];
            for (int s = 0; s < t; ++s) {
                rng.fill_normal(z);
                gbm_step(cur.data(), params, z.data(), next.data());
                cur.swap(next);
            }
            for (int k = 0; k < d; ++k) out(i, k) = cur[k];
        }
    }
    return out;
}

}  // namespace krrdp
