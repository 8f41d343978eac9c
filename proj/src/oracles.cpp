#include "krrdp/oracles.hpp"

#include "krrdp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace krrdp {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double intrinsic(double s, double strike, OptionType type) {
    return type == OptionType::Call ? std::max(s - strike, 0.0) : std::max(strike - s, 0.0);
}

double payoff_statistic(const double* x, int d, PayoffKind kind) {
    if (kind == PayoffKind::MaxCall) return *std::max_element(x, x + d);
    double log_sum = 0.0;
    for (int i = 0; i < d; ++i) log_sum += std::log(x[i]);
    return std::exp(log_sum / d);
}

int basis_size(int d, PayoffKind kind, int degree) {
    int k = degree + 1;
    if (d <= 5 && degree >= 1) {
        const int coords = kind == PayoffKind::MaxCall ? d - 1 : d;
        k += coords * (degree >= 2 ? 2 : 1);
        if (kind == PayoffKind::MaxCall && d >= 2 && degree >= 2) ++k;
    }
    return k;
}

// Coordinates enter sorted in decreasing order, which keeps the basis
// invariant under permutations of the (exchangeable) assets. For the max-call
// the largest coordinate is the statistic itself and is not repeated.
void fill_basis(const double* x, int d, const PayoffSpec& payoff, int degree, double* row) {
    const double s = payoff_statistic(x, d, payoff.kind) / payoff.strike;
    double p = 1.0;
    int k = 0;
    for (int j = 0; j <= degree; ++j, p *= s) row[k++] = p;
    if (d <= 5 && degree >= 1) {
        double sorted[5];
        for (int i = 0; i < d; ++i) sorted[i] = x[i] / payoff.strike;
        std::sort(sorted, sorted + d, std::greater<>());
        const int first = payoff.kind == PayoffKind::MaxCall ? 1 : 0;
        for (int i = first; i < d; ++i) row[k++] = sorted[i];
        if (degree >= 2) {
            for (int i = first; i < d; ++i) row[k++] = sorted[i] * sorted[i];
            if (payoff.kind == PayoffKind::MaxCall && d >= 2) row[k++] = sorted[0] * sorted[1];
        }
    }
}

}  // namespace

Reduced1d geometric_reduction(const GbmParams& params, int steps) {
    if (steps < 1) throw InvalidInput("geometric_reduction: need steps >= 1");
    const int d = params.dim();
    const Vector& sigma = params.sigma();
    const double var = sigma.dot(params.rho() * sigma) / (static_cast<double>(d) * d);
    Reduced1d red;
    red.s0 = std::exp(params.x0().array().log().sum() / d);
    red.sigma_hat = std::sqrt(var);
    red.q = sigma.squaredNorm() / (2.0 * d) - 0.5 * var;
    red.r = params.rate();
    red.maturity = params.dt() * steps;
    red.steps = steps;
    return red;
}

double black_scholes(double s0, double strike, double r, double q, double sigma, double maturity,
                     OptionType type) {
    if (maturity <= 0.0) return intrinsic(s0, strike, type);
    const double fwd = s0 * std::exp((r - q) * maturity);
    const double df = std::exp(-r * maturity);
    if (sigma <= 0.0) return df * intrinsic(fwd, strike, type);
    const double vs = sigma * std::sqrt(maturity);
    const double d1 = (std::log(fwd / strike) + 0.5 * vs * vs) / vs;
    const double d2 = d1 - vs;
    if (type == OptionType::Call) return df * (fwd * norm_cdf(d1) - strike * norm_cdf(d2));
    return df * (strike * norm_cdf(-d2) - fwd * norm_cdf(-d1));
}

double crr_binomial(const Reduced1d& red, double strike, OptionType type, ExerciseStyle style,
                    int tree_steps) {
    if (red.steps < 1 || tree_steps < red.steps || tree_steps % red.steps != 0)
        throw InvalidInput("crr_binomial: tree_steps must be a positive multiple of the exercise-date count");
    if (!(red.s0 > 0.0) || !(strike > 0.0)) throw InvalidInput("crr_binomial: s0 and strike must be positive");

    const double h = red.maturity / tree_steps;
    const double disc = std::exp(-red.r * h);

    if (red.sigma_hat <= 0.0 || h <= 0.0) {
        // deterministic path: pick the best exercise date
        double best = intrinsic(red.s0, strike, type);
        const int per = tree_steps / red.steps;
        for (int i = per; i <= tree_steps; i += per) {
            if (style == ExerciseStyle::European && i != tree_steps) continue;
            const double s = red.s0 * std::exp((red.r - red.q) * h * i);
            best = std::max(best, std::pow(disc, i) * intrinsic(s, strike, type));
        }
        return style == ExerciseStyle::European
                   ? std::pow(disc, tree_steps) *
                         intrinsic(red.s0 * std::exp((red.r - red.q) * red.maturity), strike, type)
                   : best;
    }

    const double up = std::exp(red.sigma_hat * std::sqrt(h));
    const double down = 1.0 / up;
    const double p = (std::exp((red.r - red.q) * h) - down) / (up - down);
    if (!(p > 0.0 && p < 1.0))
        throw InvalidInput("crr_binomial: risk-neutral probability " + std::to_string(p) +
                           " outside (0, 1); use more tree steps");

    const int per = tree_steps / red.steps;
    std::vector<double> v(static_cast<std::size_t>(tree_steps) + 1);
    for (int j = 0; j <= tree_steps; ++j)
        v[j] = intrinsic(red.s0 * std::pow(up, tree_steps - 2 * j), strike, type);

    for (int i = tree_steps - 1; i >= 0; --i) {
        const bool exercise_date = style == ExerciseStyle::Bermudan && i % per == 0;
        for (int j = 0; j <= i; ++j) {
            v[j] = disc * (p * v[j] + (1.0 - p) * v[j + 1]);
            if (exercise_date) v[j] = std::max(v[j], intrinsic(red.s0 * std::pow(up, i - 2 * j), strike, type));
        }
    }
    return v[0];
}

bool has_reduced_oracle(const GbmParams& params, const PayoffSpec& payoff) {
    return payoff.kind == PayoffKind::GeometricBasketPut || params.dim() == 1;
}

double reduced_oracle_price(const GbmParams& params, const PayoffSpec& payoff, int steps,
                            int tree_steps) {
    if (!has_reduced_oracle(params, payoff))
        throw InvalidInput("no one-dimensional reduction for this payoff");
    const OptionType type = payoff.kind == PayoffKind::MaxCall ? OptionType::Call : OptionType::Put;
    return crr_binomial(geometric_reduction(params, steps), payoff.strike, type,
                        ExerciseStyle::Bermudan, tree_steps);
}

LsmcResult longstaff_schwartz(const GbmParams& params, const PayoffSpec& payoff, int steps,
                              int paths, int basis_degree, std::uint64_t seed) {
    const int d = params.dim();
    if (steps < 1) throw InvalidInput("longstaff_schwartz: need steps >= 1");
    if (basis_degree < 0) throw InvalidInput("longstaff_schwartz: basis degree must be nonnegative");
    if (paths < 10 * basis_size(d, payoff.kind, basis_degree))
        throw InvalidInput("longstaff_schwartz: need at least 10 paths per basis function");

    // states[t] is paths x d
    std::vector<PointMatrix> states(static_cast<std::size_t>(steps) + 1, PointMatrix(paths, d));
#pragma omp parallel
    {
        Vector z(d), cur(d), next(d);
#pragma omp for schedule(static)
        for (int p = 0; p < paths; ++p) {
            Stream rng(seed, {Purpose::Lsmc, 0, static_cast<std::uint64_t>(p)});
            cur = params.x0();
            states[0].row(p) = cur.transpose();
            for (int t = 1; t <= steps; ++t) {
                rng.fill_normal({z.data(), static_cast<std::size_t>(d)});
                gbm_step(cur.data(), params, z.data(), next.data());
                cur.swap(next);
                states[static_cast<std::size_t>(t)].row(p) = cur.transpose();
            }
        }
    }

    LsmcResult result;
    result.degree_used = basis_degree;
    const double disc = params.discount();

    // cashflow valued at the current stage
    Vector cash(paths);
    for (int p = 0; p < paths; ++p) cash[p] = payoff(states.back().row(p).data(), d);

    for (int t = steps - 1; t >= 1; --t) {
        cash *= disc;
        const PointMatrix& xs = states[static_cast<std::size_t>(t)];
        std::vector<int> itm;
        std::vector<double> exercise(static_cast<std::size_t>(paths));
        for (int p = 0; p < paths; ++p) {
            exercise[p] = payoff(xs.row(p).data(), d);
            if (exercise[p] > 0.0) itm.push_back(p);
        }
        if (itm.empty()) continue;

        Vector coef;
        int degree = result.degree_used;
        for (;;) {
            const int k = basis_size(d, payoff.kind, degree);
            if (static_cast<int>(itm.size()) < k && degree > 0) {
                --degree;
                continue;
            }
            Eigen::MatrixXd design(static_cast<Eigen::Index>(itm.size()), k);
            Vector b(static_cast<Eigen::Index>(itm.size()));
            std::vector<double> row(static_cast<std::size_t>(k));
            for (std::size_t i = 0; i < itm.size(); ++i) {
                fill_basis(xs.row(itm[i]).data(), d, payoff, degree, row.data());
                for (int c = 0; c < k; ++c) design(static_cast<Eigen::Index>(i), c) = row[c];
                b[static_cast<Eigen::Index>(i)] = cash[itm[i]];
            }
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
            if (qr.rank() < k && degree > 0) {
                result.warnings.push_back("stage " + std::to_string(t) +
                                          ": rank-deficient regression, basis degree reduced to " +
                                          std::to_string(degree - 1));
                --degree;
                continue;
            }
            coef = qr.solve(b);
            break;
        }
        result.degree_used = std::min(result.degree_used, degree);

        std::vector<double> row(static_cast<std::size_t>(coef.size()));
        for (int p : itm) {
            fill_basis(xs.row(p).data(), d, payoff, degree, row.data());
            double continuation = 0.0;
            for (Eigen::Index c = 0; c < coef.size(); ++c) continuation += coef[c] * row[c];
            if (exercise[p] >= continuation) cash[p] = exercise[p];
        }
    }
    cash *= disc;

    const double mean = cash.mean();
    const double var = paths > 1 ? (cash.array() - mean).square().sum() / (paths - 1) : 0.0;
    const double exercise_now = payoff(params.x0());
    if (exercise_now >= mean) {
        result.price = exercise_now;
        result.std_error = 0.0;
    } else {
        result.price = mean;
        result.std_error = std::sqrt(var / paths);
    }
    return result;
}

}  // namespace krrdp
