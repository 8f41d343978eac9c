#pragma once

#include "krrdp/kernel_regression.hpp"
#include "krrdp/market.hpp"
#include "krrdp/payoffs.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace krrdp {

struct StageConfig {
    int n = 200;
    int M = 50;
    double lambda = 1e-6;
    KernelSpec kernel{};
    // Smoothness knob; read only by the hyperparameter schedule.
    double beta = 1.0;
    std::optional<int> nystrom_m;
    std::optional<double> clip_override;

    void validate() const;
};

// lambda = c_lambda n^(-1/(beta+1)), M = ceil(c_M n^(beta/(beta+1))).
// The default constants put (n=200, beta=1) at lambda = 1e-6, M = 50.
struct Schedule {
    bool enabled = false;
    double c_lambda = 1.4142135623730951e-05;
    double c_M = 3.5355339059327378;
};

struct RunConfig {
    // market
    double r = 0.05;
    Vector sigma;
    Eigen::MatrixXd rho;
    Vector x0;

    // contract
    PayoffSpec payoff{};
    double maturity = 1.0;
    int steps = 9;

    // per-stage settings: one shared entry, or one per stage t = 0..steps-1
    std::vector<StageConfig> stages{StageConfig{}};
    // When it has more than one entry, the lengthscale is picked by k-fold CV
    // on the stage-(T-1) data and then used for every stage.
    std::vector<double> lengthscale_grid{40.0, 80.0};
    int cv_folds = 5;
    Schedule schedule{};
    int nystrom_threshold = 2000;
    int nystrom_default_m = 1000;

    std::uint64_t seed = 20250101;
    int repetitions = 10;
    int eval_M = 100000;
    // 0 keeps the OpenMP default
    int threads = 0;

    // oracle / cross-check toggles
    bool oracle = false;
    int tree_steps = 0;  // 0: 450 levels per exercise date
    bool lower_bound = false;
    int lb_paths = 10000;
    int lb_inner_M = 0;  // 0: use the stage M
    bool lsmc = false;
    int lsmc_paths = 100000;
    int lsmc_degree = 2;

    int dim() const { return static_cast<int>(sigma.size()); }
    double dt() const { return maturity / steps; }
    GbmParams market() const;
    // Effective settings for stage t, after the schedule and Nystrom rules.
    StageConfig stage(int t) const;
    void validate() const;
};

// Table-1/3 style defaults for dimension d: K = 100, r = 0.05, sigma = 0.2,
// rho_ij = 0.2, x0 = 100, maturity 1 over 9 steps. Sample sizes interpolate
// linearly between (d=2: n=200, M=50) and (d=20: n=800, M=100).
RunConfig default_run_config(int d, PayoffKind kind);
int default_sample_count(int d);
int default_inner_count(int d);

class ConfigError : public InvalidInput {
public:
    ConfigError(const std::string& message, int line = 0);
    int line() const { return line_; }

private:
    int line_;
};

// Flat "key = value" text with dotted sections; '#' starts a comment.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical text form of every field that affects results.
std::string canonical_form(const RunConfig& cfg);
// FNV-1a 64 of canonical_form, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace krrdp
