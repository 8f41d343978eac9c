#include "krrdp/bellman.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace krrdp {

namespace {

using Clock = std::chrono::steady_clock;

Stream inner_stream(std::uint64_t seed, Purpose purpose, int t, std::uint64_t i) {
    return Stream(seed, {purpose, static_cast<std::uint32_t>(t), i});
}

}  // namespace

ValueFunctionStack::ValueFunctionStack(PayoffSpec payoff, GbmParams params,
                                       std::vector<KrrModel> models,
                                       std::vector<double> stage_seconds)
    : payoff_(payoff),
      params_(std::move(params)),
      models_(std::move(models)),
      stage_seconds_(std::move(stage_seconds)) {
    if (models_.empty()) throw InvalidInput("ValueFunctionStack: need at least one stage model");
    for (const auto& m : models_) {
        if (m.dim() != params_.dim()) throw InvalidInput("ValueFunctionStack: model dimension mismatch");
        if (!m.clip_bound()) throw InvalidInput("ValueFunctionStack: every stage model needs a clip bound");
    }
    if (stage_seconds_.empty()) stage_seconds_.assign(models_.size(), 0.0);
}

const KrrModel& ValueFunctionStack::model(int t) const {
    if (t < 0 || t >= horizon()) throw InvalidInput("ValueFunctionStack: stage out of range");
    return models_[static_cast<std::size_t>(t)];
}

double ValueFunctionStack::total_seconds() const {
    double s = 0.0;
    for (double v : stage_seconds_) s += v;
    return s;
}

double ValueFunctionStack::value(int t, const Eigen::Ref<const Vector>& x) const {
    if (t == horizon()) return payoff_(x);
    return model(t).clipped_predict(x);
}

double ValueFunctionStack::value(int t, const State& x) const {
    if (x.is_cemetery()) return 0.0;
    return value(t, x.prices());
}

StageFunction ValueFunctionStack::stage_function(int t) const {
    if (t < 0 || t > horizon()) throw InvalidInput("ValueFunctionStack: stage out of range");
    if (t == horizon()) {
        return [payoff = payoff_](const Eigen::Ref<const Vector>& x) { return payoff(x); };
    }
    const KrrModel* m = &models_[static_cast<std::size_t>(t)];
    return [m](const Eigen::Ref<const Vector>& x) { return m->clipped_predict(x); };
}

double continuation_value(const Eigen::Ref<const Vector>& x, const StageFunction& next_value,
                          int M, const GbmParams& params, Stream& rng) {
    if (M < 1) throw InvalidInput("continuation_value: need M >= 1");
    const int d = params.dim();
    if (x.size() != d) throw InvalidInput("continuation_value: state dimension mismatch");
    const Vector xc = x;
    Vector z(d), next(d);
    double sum = 0.0;
    for (int j = 0; j < M; ++j) {
        rng.fill_normal({z.data(), static_cast<std::size_t>(d)});
        gbm_step(xc.data(), params, z.data(), next.data());
        sum += next_value(next);
    }
    return params.discount() * sum / M;
}

double empirical_bellman(const State& x, std::span<const Control> controls,
                         const RewardFunction& reward, const TransitionFunction& transition,
                         const StageFunction& f_next, int M, int noise_dim, double discount,
                         Stream& rng) {
    if (controls.empty()) throw InvalidInput("empirical_bellman: empty control set");
    if (M < 1) throw InvalidInput("empirical_bellman: need M >= 1");
    if (x.is_cemetery()) return 0.0;

    Eigen::MatrixXd noise(noise_dim, M);
    for (int j = 0; j < M; ++j)
        rng.fill_normal({noise.col(j).data(), static_cast<std::size_t>(noise_dim)});

    double best = -std::numeric_limits<double>::infinity();
    for (Control u : controls) {
        double sum = 0.0;
        for (int j = 0; j < M; ++j) {
            const State next = transition(x, u, noise.col(j));
            if (!next.is_cemetery()) sum += f_next(next.prices());
        }
        best = std::max(best, reward(x, u) + discount * sum / M);
    }
    return best;
}

double empirical_bellman(const State& x, int t, const StageFunction& f_next,
                         const PayoffSpec& payoff, int M, const GbmParams& params, Stream& rng) {
    static constexpr Control kControls[] = {kExercise, kHold};
    return empirical_bellman(
        x, kControls,
        [&](const State& s, Control u) { return stage_reward(s, u, t, payoff); },
        [&](const State& s, Control u, const Eigen::Ref<const Vector>& z) {
            return transition(s, u, params, z);
        },
        f_next, M, params.dim(), params.discount(), rng);
}

StageData generate_stage_data(int t, const StageConfig& cfg, const StageFunction& next_value,
                              const GbmParams& params, const PayoffSpec& payoff,
                              std::uint64_t seed) {
    cfg.validate();
    StageData data{sample_mu_t(params, t, cfg.n, seed), Vector(cfg.n)};
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < cfg.n; ++i) {
        Stream rng = inner_stream(seed, Purpose::InnerMc, t, static_cast<std::uint64_t>(i));
        const Vector x = data.xs.row(i).transpose();
        const double q = continuation_value(x, next_value, cfg.M, params, rng);
        data.ys[i] = std::max(payoff(x), q);
    }
    return data;
}

StageFailure::StageFailure(int stage, const std::string& what)
    : FactorizationError("stage " + std::to_string(stage) + ": " + what), stage_(stage) {}

ValueFunctionStack backward_pass(const RunConfig& run, std::uint64_t seed, BackwardPassInfo* info) {
    run.validate();
    const GbmParams params = run.market();
    const int horizon = run.steps;

    std::vector<KrrModel> models(static_cast<std::size_t>(horizon));
    std::vector<double> seconds(static_cast<std::size_t>(horizon), 0.0);
    std::optional<double> selected_lengthscale;
    BackwardPassInfo local_info;

    for (int t = horizon - 1; t >= 0; --t) {
        const auto start = Clock::now();
        StageConfig cfg = run.stage(t);
        if (selected_lengthscale) cfg.kernel.lengthscale = *selected_lengthscale;

        StageFunction next;
        if (t + 1 == horizon) {
            next = [payoff = run.payoff](const Eigen::Ref<const Vector>& x) { return payoff(x); };
        } else {
            const KrrModel* m = &models[static_cast<std::size_t>(t + 1)];
            next = [m](const Eigen::Ref<const Vector>& x) { return m->clipped_predict(x); };
        }

        const StageData data = generate_stage_data(t, cfg, next, params, run.payoff, seed);

        if (t + 1 == horizon && run.lengthscale_grid.size() > 1 && cfg.n >= run.cv_folds) {
            double best = std::numeric_limits<double>::infinity();
            for (double ell : run.lengthscale_grid) {
                Stream rng = inner_stream(seed, Purpose::CrossValidation, t, 0);
                KernelSpec spec = cfg.kernel;
                spec.lengthscale = ell;
                double err;
                try {
                    err = cross_validation_error(data.xs, data.ys, cfg.lambda, spec, run.cv_folds, rng);
                } catch (const FactorizationError&) {
                    err = std::numeric_limits<double>::infinity();
                }
                local_info.cv_errors.push_back(err);
                if (err < best) {
                    best = err;
                    selected_lengthscale = ell;
                }
            }
            if (!selected_lengthscale) selected_lengthscale = run.lengthscale_grid.front();
            cfg.kernel.lengthscale = *selected_lengthscale;
        }

        const double clip_bound = cfg.clip_override ? *cfg.clip_override : data.ys.cwiseAbs().maxCoeff();
        const bool constant_targets = (data.ys.array() == data.ys[0]).all();

        KrrModel model;
        try {
            if (constant_targets) {
                model = KrrModel::constant(params.dim(), data.ys[0], cfg.kernel, cfg.lambda);
            } else if (cfg.nystrom_m) {
                Stream rng = inner_stream(seed, Purpose::NystromCenters, t, 0);
                model = nystrom_fit(data.xs, data.ys, cfg.lambda, cfg.kernel, *cfg.nystrom_m, rng);
            } else {
                model = krr_fit(data.xs, data.ys, cfg.lambda, cfg.kernel);
            }
        } catch (const FactorizationError& e) {
            throw StageFailure(t, e.what());
        }
        models[static_cast<std::size_t>(t)] = model.with_clip_bound(clip_bound);
        seconds[static_cast<std::size_t>(t)] =
            std::chrono::duration<double>(Clock::now() - start).count();
    }

    local_info.selected_lengthscale =
        selected_lengthscale ? *selected_lengthscale : run.stage(0).kernel.lengthscale;
    if (info) *info = local_info;
    return ValueFunctionStack(run.payoff, params, std::move(models), std::move(seconds));
}

ValueFunctionStack backward_pass(const RunConfig& run) { return backward_pass(run, run.seed); }

double price_at_origin(const ValueFunctionStack& stack, int eval_M, std::uint64_t seed) {
    const Vector& x0 = stack.params().x0();
    Stream rng = inner_stream(seed, Purpose::OriginEval, 0, 0);
    const double q = continuation_value(x0, stack.stage_function(1), eval_M, stack.params(), rng);
    return std::max(stack.payoff()(x0), q);
}

Estimate policy_lower_bound(const ValueFunctionStack& stack, int paths, int inner_M,
                            std::uint64_t seed) {
    if (paths < 1) throw InvalidInput("policy_lower_bound: need paths >= 1");
    if (inner_M < 1) throw InvalidInput("policy_lower_bound: need inner_M >= 1");
    const GbmParams& params = stack.params();
    const int d = params.dim();
    const int horizon = stack.horizon();

    std::vector<double> value(static_cast<std::size_t>(paths));
#pragma omp parallel
    {
        Vector x(d), next(d), z(d);
#pragma omp for schedule(dynamic, 16)
        for (int p = 0; p < paths; ++p) {
            Stream path_rng = inner_stream(seed, Purpose::PolicyPath, 0, static_cast<std::uint64_t>(p));
            x = params.x0();
            double discount = 1.0;
            double realized = -1.0;
            for (int t = 0; t < horizon; ++t) {
                const double exercise = stack.payoff()(x.data(), d);
                if (exercise > 0.0) {
                    Stream rng = inner_stream(seed, Purpose::PolicyInner, t, static_cast<std::uint64_t>(p));
                    const double hold = continuation_value(x, stack.stage_function(t + 1), inner_M, params, rng);
                    if (exercise >= hold) {
                        realized = discount * exercise;
                        break;
                    }
                }
                path_rng.fill_normal({z.data(), static_cast<std::size_t>(d)});
                gbm_step(x.data(), params, z.data(), next.data());
                x.swap(next);
                discount *= params.discount();
            }
            if (realized < 0.0) realized = discount * stack.payoff()(x.data(), d);
            value[static_cast<std::size_t>(p)] = realized;
        }
    }

    double mean = 0.0;
    for (double v : value) mean += v;
    mean /= paths;
    double var = 0.0;
    for (double v : value) var += (v - mean) * (v - mean);
    var = paths > 1 ? var / (paths - 1) : 0.0;
    return {mean, std::sqrt(var / paths)};
}

Hyperparams schedule_hyperparams(int n, double beta, double c_lambda, double c_M) {
    if (n < 1) throw InvalidInput("schedule_hyperparams: need n >= 1");
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidInput("schedule_hyperparams: beta must lie in (0, 1]");
    if (!(c_lambda > 0.0) || !(c_M > 0.0)) throw InvalidInput("schedule_hyperparams: constants must be positive");
    const double nn = n;
    const double lambda = c_lambda * std::pow(nn, -1.0 / (beta + 1.0));
    // guard against pow round-off pushing an exact integer past the ceiling
    const double raw_m = c_M * std::pow(nn, beta / (beta + 1.0));
    const double rounded = std::round(raw_m);
    const double m = std::abs(raw_m - rounded) < 1e-9 * std::max(1.0, raw_m) ? rounded : std::ceil(raw_m);
    return {lambda, std::max(1, static_cast<int>(m))};
}

ContractionResult contraction_check(const StageFunction& f, const StageFunction& g, int t,
                                    int n_eval, int M, const GbmParams& params,
                                    const PayoffSpec& payoff, std::uint64_t seed) {
    if (n_eval < 1 || M < 1) throw InvalidInput("contraction_check: need n_eval >= 1 and M >= 1");
    const int d = params.dim();
    const PointMatrix xs = sample_mu_t(params, t, n_eval, seed);
    const double disc = params.discount();

    std::vector<double> image_sq(static_cast<std::size_t>(n_eval));
    std::vector<double> next_sq(static_cast<std::size_t>(n_eval));
#pragma omp parallel
    {
        Vector x(d), z(d), next(d);
#pragma omp for schedule(static)
        for (int i = 0; i < n_eval; ++i) {
            Stream rng = inner_stream(seed, Purpose::InnerMc, t, static_cast<std::uint64_t>(i));
            x = xs.row(i).transpose();
            double sum_f = 0.0, sum_g = 0.0, sq = 0.0;
            for (int j = 0; j < M; ++j) {
                rng.fill_normal({z.data(), static_cast<std::size_t>(d)});
                gbm_step(x.data(), params, z.data(), next.data());
                const double fv = f(next);
                const double gv = g(next);
                sum_f += fv;
                sum_g += gv;
                sq += (fv - gv) * (fv - gv);
            }
            const double exercise = payoff(x.data(), d);
            const double tf = std::max(exercise, disc * sum_f / M);
            const double tg = std::max(exercise, disc * sum_g / M);
            image_sq[static_cast<std::size_t>(i)] = (tf - tg) * (tf - tg);
            next_sq[static_cast<std::size_t>(i)] = sq / M;
        }
    }
    double lhs = 0.0, rhs = 0.0;
    for (int i = 0; i < n_eval; ++i) {
        lhs += image_sq[static_cast<std::size_t>(i)];
        rhs += next_sq[static_cast<std::size_t>(i)];
    }
    return {std::sqrt(lhs / n_eval), disc * std::sqrt(rhs / n_eval)};
}

}  // namespace krrdp
