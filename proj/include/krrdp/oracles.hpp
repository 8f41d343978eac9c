#pragma once

#include "krrdp/market.hpp"
#include "krrdp/payoffs.hpp"

#include <string>
#include <vector>

namespace krrdp {

// One-dimensional GBM followed by the geometric mean of a correlated basket.
struct Reduced1d {
    double s0 = 0.0;
    double sigma_hat = 0.0;
    // dividend-like drift deficit
    double q = 0.0;
    double r = 0.0;
    double maturity = 0.0;
    // number of exercise dates after t = 0
    int steps = 1;
};

// sigma_hat^2 = sigma^T rho sigma / d^2, q = sum(sigma_i^2) / (2d) - sigma_hat^2 / 2.
Reduced1d geometric_reduction(const GbmParams& params, int steps);

enum class OptionType { Call, Put };
enum class ExerciseStyle { European, Bermudan };

double black_scholes(double s0, double strike, double r, double q, double sigma, double maturity,
                     OptionType type);

// CRR recombining tree. Bermudan exercise is checked only on levels that fall
// on one of the `steps` exercise dates (and at t = 0), so tree_steps must be a
// positive multiple of red.steps.
double crr_binomial(const Reduced1d& red, double strike, OptionType type, ExerciseStyle style,
                    int tree_steps);

// Bermudan price via the reduced tree, for payoffs with an exact 1-d reduction
// (geometric put in any d; max-call when d = 1).
double reduced_oracle_price(const GbmParams& params, const PayoffSpec& payoff, int steps,
                            int tree_steps);
bool has_reduced_oracle(const GbmParams& params, const PayoffSpec& payoff);

struct LsmcResult {
    double price = 0.0;
    double std_error = 0.0;
    int degree_used = 0;
    std::vector<std::string> warnings;
};

// Longstaff-Schwartz regression on in-the-money paths. Basis: powers of the
// payoff statistic (geometric mean or max, scaled by K) up to `basis_degree`,
// plus the raw scaled coordinates (and their squares) when d <= 5.
LsmcResult longstaff_schwartz(const GbmParams& params, const PayoffSpec& payoff, int steps,
                              int paths, int basis_degree, std::uint64_t seed);

}  // namespace krrdp
