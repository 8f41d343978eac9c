#pragma once

#include "krrdp/rng.hpp"
#include "krrdp/types.hpp"

#include <optional>

namespace krrdp {

// Correlated multi-asset geometric Brownian motion on a fixed time grid.
class GbmParams {
public:
    GbmParams(double r, Vector sigma, Eigen::MatrixXd rho, Vector x0, double dt);

    int dim() const { return static_cast<int>(sigma_.size()); }
    double rate() const { return r_; }
    const Vector& sigma() const { return sigma_; }
    const Eigen::MatrixXd& rho() const { return rho_; }
    const Vector& x0() const { return x0_; }
    double dt() const { return dt_; }
    // Lower-triangular L with L L^T = rho (up to a 1e-10 diagonal jitter).
    const Eigen::MatrixXd& corr_root() const { return corr_root_; }
    double discount() const { return discount_; }
    // Per-asset log drift (r - sigma_i^2 / 2) dt and diffusion sigma_i sqrt(dt).
    const Vector& log_drift() const { return log_drift_; }
    const Vector& log_vol() const { return log_vol_; }

private:
    double r_;
    Vector sigma_;
    Eigen::MatrixXd rho_;
    Vector x0_;
    double dt_;
    Eigen::MatrixXd corr_root_;
    double discount_;
    Vector log_drift_;
    Vector log_vol_;
};

// Equicorrelation matrix with unit diagonal.
Eigen::MatrixXd constant_correlation(int d, double rho);

// Either a positive price vector or the absorbing cemetery state.
class State {
public:
    explicit State(Vector prices) : prices_(std::move(prices)) {}
    static State cemetery() { return State(); }

    bool is_cemetery() const { return !prices_.has_value(); }
    const Vector& prices() const;

    friend bool operator==(const State&, const State&) = default;

private:
    State() = default;
    std::optional<Vector> prices_;
};

using Control = int;
inline constexpr Control kExercise = 0;
inline constexpr Control kHold = 1;

Vector correlate(const Eigen::Ref<const Vector>& z, const GbmParams& params);

Vector gbm_step(const Eigen::Ref<const Vector>& x, const GbmParams& params,
                const Eigen::Ref<const Vector>& z);
// Allocation-free form: writes the next state into `out` (size d).
void gbm_step(const double* x, const GbmParams& params, const double* z, double* out);

// Exercise (u = 0) or a cemetery input absorbs; hold (u = 1) advances the GBM.
State transition(const State& x, Control u, const GbmParams& params,
                 const Eigen::Ref<const Vector>& z);

// n i.i.d. draws from mu_t: t hold-steps forward from x0. Draw i uses the
// substream (seed, OuterSample, t, i), so the result is thread-count independent.
PointMatrix sample_mu_t(const GbmParams& params, int t, int n, std::uint64_t seed);

}  // namespace krrdp
