#pragma once

#include "krrdp/bellman.hpp"
#include "krrdp/config.hpp"
#include "krrdp/oracles.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace krrdp {

// Sets the OpenMP team size for subsequent parallel regions; n <= 0 is a no-op.
void set_thread_count(int n);

struct PricingResult {
    int d = 0;
    PayoffKind payoff = PayoffKind::GeometricBasketPut;
    double price_mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    // Sample standard deviation of the per-repetition prices divided by sqrt(R).
    double std_error = 0.0;
    std::vector<double> per_rep_prices;
    // W_0(x0) read off the fitted stage-0 model, per repetition.
    std::vector<double> per_rep_fitted;
    std::vector<double> selected_lengthscales;
    std::optional<Estimate> lower_bound;
    std::optional<double> oracle_price;
    std::optional<LsmcResult> lsmc;
    // Mean seconds per stage across repetitions (backward pass only).
    std::vector<double> stage_timings;
    double seconds = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;
    bool valid = true;
    std::vector<std::string> failures;
};

PricingResult run_benchmark(const RunConfig& cfg);

struct ConvergenceRow {
    int n = 0;
    double lambda = 0.0;
    int M = 0;
    double mean_price = 0.0;
    double mean_abs_error = 0.0;
    double error_std_error = 0.0;
};

struct ConvergenceTable {
    double reference = 0.0;
    std::string reference_kind;  // "binomial" or "lsmc"
    std::vector<ConvergenceRow> rows;
    // Spearman rank correlation of (n, error); NaN with fewer than two rows.
    double spearman = 0.0;
};

// Runs every n in the grid with the hyperparameter schedule switched on and
// compares the repetition prices with the binomial oracle (or LSMC when no
// exact reduction exists).
ConvergenceTable convergence_study(const RunConfig& cfg, const std::vector<int>& n_grid);

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b);

// RMS over the points of the gap between continuation estimates with M_small
// and M_large inner draws. The small estimate averages the first M_small draws
// of the same inner stream, so equal counts give exactly zero.
double mc_gap(const PointMatrix& xs, const StageFunction& next_value, int m_small, int m_large,
              const GbmParams& params, std::uint64_t seed);

// mc_gap at stage T-1 (next value = payoff) on n_{T-1} points drawn from mu_{T-1}.
double mc_error_diagnostic(const RunConfig& cfg, int m_small, int m_large);

enum class ResultFormat { Csv, Markdown };

inline constexpr const char* kResultColumns[] = {"d",      "payoff",      "price",   "ci_low", "ci_high",
                                                 "oracle", "lower_bound", "seconds", "seed",   "config_hash"};

std::string format_results(const std::vector<PricingResult>& results, ResultFormat format);
void emit_results(const std::vector<PricingResult>& results, ResultFormat format,
                  const std::filesystem::path& path);

// Reads back the CSV produced by format_results (price columns only).
std::vector<PricingResult> parse_results_csv(const std::string& text);

}  // namespace krrdp
