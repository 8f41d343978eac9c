#pragma once

#include "krrdp/config.hpp"
#include "krrdp/market.hpp"

#include <cmath>

namespace krrdp::testing {

inline GbmParams one_asset(double r = 0.05, double sigma = 0.2, double x0 = 100.0, double dt = 1.0) {
    return GbmParams(r, Vector::Constant(1, sigma), Eigen::MatrixXd::Identity(1, 1),
                     Vector::Constant(1, x0), dt);
}

inline GbmParams basket(int d, double rho = 0.2, double dt = 1.0 / 9.0) {
    return GbmParams(0.05, Vector::Constant(d, 0.2), constant_correlation(d, rho),
                     Vector::Constant(d, 100.0), dt);
}

// Single-period at-the-money call: d = 1, maturity 1, one step.
inline RunConfig one_step_call() {
    RunConfig cfg = default_run_config(1, PayoffKind::MaxCall);
    cfg.steps = 1;
    cfg.maturity = 1.0;
    return cfg;
}

// Closed-form Black-Scholes call, written out independently of the library.
inline double bs_call(double s, double k, double r, double sigma, double t) {
    const auto n = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    const double d1 = (std::log(s / k) + (r + 0.5 * sigma * sigma) * t) / (sigma * std::sqrt(t));
    const double d2 = d1 - sigma * std::sqrt(t);
    return s * n(d1) - k * std::exp(-r * t) * n(d2);
}

}  // namespace krrdp::testing
