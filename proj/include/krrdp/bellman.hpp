#pragma once

#include "krrdp/config.hpp"
#include "krrdp/kernel_regression.hpp"
#include "krrdp/market.hpp"
#include "krrdp/payoffs.hpp"
#include "krrdp/rng.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace krrdp {

// A value function on price vectors (the cemetery is handled by callers: every
// value function is 0 there).
using StageFunction = std::function<double(const Eigen::Ref<const Vector>&)>;

// Fitted approximants W_t for t = 0..T-1 plus the known terminal payoff.
class ValueFunctionStack {
public:
    ValueFunctionStack(PayoffSpec payoff, GbmParams params, std::vector<KrrModel> models,
                       std::vector<double> stage_seconds = {});

    int horizon() const { return static_cast<int>(models_.size()); }
    const PayoffSpec& payoff() const { return payoff_; }
    const GbmParams& params() const { return params_; }
    // Indexed by stage t.
    const KrrModel& model(int t) const;
    const std::vector<KrrModel>& models() const { return models_; }
    const std::vector<double>& stage_seconds() const { return stage_seconds_; }
    double total_seconds() const;

    // Clipped W_t(x) for t < T, payoff for t = T; 0 at the cemetery.
    double value(int t, const State& x) const;
    double value(int t, const Eigen::Ref<const Vector>& x) const;
    StageFunction stage_function(int t) const;

private:
    PayoffSpec payoff_;
    GbmParams params_;
    std::vector<KrrModel> models_;
    std::vector<double> stage_seconds_;
};

// e^{-r dt} (1/M) sum_j next_value(gbm_step(x, z_j)).
double continuation_value(const Eigen::Ref<const Vector>& x, const StageFunction& next_value,
                          int M, const GbmParams& params, Stream& rng);

using RewardFunction = std::function<double(const State&, Control)>;
using TransitionFunction =
    std::function<State(const State&, Control, const Eigen::Ref<const Vector>& z)>;

// max_{u in controls} { reward(x, u) + discount (1/M) sum_j f(transition(x, u, z_j)) }
// over a finite control set. The same M noise draws are shared by every control.
double empirical_bellman(const State& x, std::span<const Control> controls,
                         const RewardFunction& reward, const TransitionFunction& transition,
                         const StageFunction& f_next, int M, int noise_dim, double discount,
                         Stream& rng);

// Optimal-stopping specialization with controls {exercise, hold}.
double empirical_bellman(const State& x, int t, const StageFunction& f_next,
                         const PayoffSpec& payoff, int M, const GbmParams& params, Stream& rng);

struct StageData {
    PointMatrix xs;
    Vector ys;
};

// x_i ~ mu_t, y_i = max(C_t(x_i), continuation_value(x_i, next, M)). Point i's
// inner MC uses substream (seed, InnerMc, t, i).
StageData generate_stage_data(int t, const StageConfig& cfg, const StageFunction& next_value,
                              const GbmParams& params, const PayoffSpec& payoff,
                              std::uint64_t seed);

class StageFailure : public FactorizationError {
public:
    StageFailure(int stage, const std::string& what);
    int stage() const { return stage_; }

private:
    int stage_;
};

struct BackwardPassInfo {
    double selected_lengthscale = 0.0;
    std::vector<double> cv_errors;  // aligned with the lengthscale grid
};

ValueFunctionStack backward_pass(const RunConfig& run, std::uint64_t seed,
                                 BackwardPassInfo* info = nullptr);
ValueFunctionStack backward_pass(const RunConfig& run);

// max(C_0(x0), continuation of the stage-1 approximant at x0 with eval_M fresh draws).
double price_at_origin(const ValueFunctionStack& stack, int eval_M, std::uint64_t seed);

struct Estimate {
    double price = 0.0;
    double std_error = 0.0;
};

// Value of the stopping rule "exercise at the first t with C_t(x) >= an inner
// MC continuation estimate built from the stack", on fresh paths. Any such
// rule is feasible, so this is a low-biased estimate of V_0.
Estimate policy_lower_bound(const ValueFunctionStack& stack, int paths, int inner_M,
                            std::uint64_t seed);

struct Hyperparams {
    double lambda = 0.0;
    int M = 0;
};

Hyperparams schedule_hyperparams(int n, double beta, double c_lambda = 1.0, double c_M = 1.0);

struct ContractionResult {
    double lhs = 0.0;
    double rhs = 0.0;
};

// Empirical L2(mu_t) distance between the empirical Bellman images of f and g
// (lhs) against e^{-r dt} times the L2 distance of f and g over the shared
// inner samples (rhs).
ContractionResult contraction_check(const StageFunction& f, const StageFunction& g, int t,
                                    int n_eval, int M, const GbmParams& params,
                                    const PayoffSpec& payoff, std::uint64_t seed);

}  // namespace krrdp
