#include "krrdp/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace krrdp {

namespace {

constexpr std::uint64_t kLowerBoundSalt = 0x10B0;
constexpr std::uint64_t kLsmcSalt = 0x15AC;

std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // ties share the mean rank
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

void set_thread_count(int n) {
    if (n > 0) omp_set_num_threads(n);
}

PricingResult run_benchmark(const RunConfig& cfg) {
    cfg.validate();
    set_thread_count(cfg.threads);
    const GbmParams params = cfg.market();

    PricingResult res;
    res.d = cfg.dim();
    res.payoff = cfg.payoff.kind;
    res.seed = cfg.seed;
    res.config_hash = config_hash(cfg);
    res.stage_timings.assign(static_cast<std::size_t>(cfg.steps), 0.0);

    std::optional<ValueFunctionStack> first_stack;
    std::uint64_t first_seed = 0;
    double total_seconds = 0.0;
    int succeeded = 0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
        try {
            BackwardPassInfo info;
            ValueFunctionStack stack = backward_pass(cfg, rep_seed, &info);
            res.per_rep_prices.push_back(price_at_origin(stack, cfg.eval_M, rep_seed));
            res.per_rep_fitted.push_back(stack.value(0, params.x0()));
            res.selected_lengthscales.push_back(info.selected_lengthscale);
            for (int t = 0; t < cfg.steps; ++t)
                res.stage_timings[static_cast<std::size_t>(t)] += stack.stage_seconds()[static_cast<std::size_t>(t)];
            total_seconds += stack.total_seconds();
            ++succeeded;
            if (!first_stack) {
                first_stack.emplace(std::move(stack));
                first_seed = rep_seed;
            }
        } catch (const StageFailure& e) {
            res.valid = false;
            res.failures.push_back("repetition " + std::to_string(rep) + ": " + e.what());
        }
    }

    if (succeeded > 0) {
        for (double& s : res.stage_timings) s /= succeeded;
        res.seconds = total_seconds / succeeded;
        res.price_mean = mean_of(res.per_rep_prices);
        res.std_error = std_error_of(res.per_rep_prices);
        res.ci_low = res.price_mean - 1.96 * res.std_error;
        res.ci_high = res.price_mean + 1.96 * res.std_error;
    } else {
        res.price_mean = res.ci_low = res.ci_high = std::numeric_limits<double>::quiet_NaN();
    }

    if (cfg.oracle && has_reduced_oracle(params, cfg.payoff)) {
        const int tree = cfg.tree_steps > 0 ? cfg.tree_steps : 450 * cfg.steps;
        res.oracle_price = reduced_oracle_price(params, cfg.payoff, cfg.steps, tree);
    }
    if (cfg.lower_bound && first_stack) {
        const int inner = cfg.lb_inner_M > 0 ? cfg.lb_inner_M : cfg.stage(0).M;
        res.lower_bound = policy_lower_bound(*first_stack, cfg.lb_paths, inner,
                                             derive_seed(first_seed, kLowerBoundSalt));
    }
    if (cfg.lsmc) {
        res.lsmc = longstaff_schwartz(params, cfg.payoff, cfg.steps, cfg.lsmc_paths, cfg.lsmc_degree,
                                      derive_seed(cfg.seed, kLsmcSalt));
    }
    return res;
}

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidInput("spearman_correlation: length mismatch");
    if (a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double ma = mean_of(ra), mb = mean_of(rb);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

ConvergenceTable convergence_study(const RunConfig& cfg, const std::vector<int>& n_grid) {
    if (n_grid.empty()) throw InvalidInput("convergence_study: empty n grid");
    cfg.validate();
    const GbmParams params = cfg.market();

    ConvergenceTable table;
    if (has_reduced_oracle(params, cfg.payoff)) {
        const int tree = cfg.tree_steps > 0 ? cfg.tree_steps : 450 * cfg.steps;
        table.reference = reduced_oracle_price(params, cfg.payoff, cfg.steps, tree);
        table.reference_kind = "binomial";
    } else {
        table.reference = longstaff_schwartz(params, cfg.payoff, cfg.steps, cfg.lsmc_paths,
                                             cfg.lsmc_degree, derive_seed(cfg.seed, kLsmcSalt))
                              .price;
        table.reference_kind = "lsmc";
    }

    std::vector<double> ns, errs;
    for (int n : n_grid) {
        RunConfig run = cfg;
        StageConfig shared = cfg.stages.front();
        shared.n = n;
        run.stages = {shared};
        run.schedule.enabled = true;
        run.oracle = run.lower_bound = run.lsmc = false;
        const PricingResult res = run_benchmark(run);
        if (!res.valid) throw StageFailure(-1, "convergence_study: run failed at n=" + std::to_string(n));

        std::vector<double> abs_err;
        for (double p : res.per_rep_prices) abs_err.push_back(std::abs(p - table.reference));
        const StageConfig eff = run.stage(0);
        table.rows.push_back({n, eff.lambda, eff.M, res.price_mean, mean_of(abs_err), std_error_of(abs_err)});
        ns.push_back(n);
        errs.push_back(mean_of(abs_err));
    }
    table.spearman = spearman_correlation(ns, errs);
    return table;
}

double mc_gap(const PointMatrix& xs, const StageFunction& next_value, int m_small, int m_large,
              const GbmParams& params, std::uint64_t seed) {
    if (m_small < 1 || m_large < m_small) throw InvalidInput("mc_gap: need 1 <= M_small <= M_large");
    const int n = static_cast<int>(xs.rows());
    const int d = params.dim();
    std::vector<double> sq(static_cast<std::size_t>(n));
#pragma omp parallel
    {
        Vector x(d), z(d), next(d);
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) {
            Stream rng(seed, {Purpose::Diagnostic, 0, static_cast<std::uint64_t>(i)});
            x = xs.row(i).transpose();
            double sum_small = 0.0, sum = 0.0;
            for (int j = 0; j < m_large; ++j) {
                rng.fill_normal({z.data(), static_cast<std::size_t>(d)});
                gbm_step(x.data(), params, z.data(), next.data());
                sum += next_value(next);
                if (j + 1 == m_small) sum_small = sum;
            }
            const double gap = params.discount() * (sum_small / m_small - sum / m_large);
            sq[static_cast<std::size_t>(i)] = gap * gap;
        }
    }
    return std::sqrt(std::accumulate(sq.begin(), sq.end(), 0.0) / n);
}

double mc_error_diagnostic(const RunConfig& cfg, int m_small, int m_large) {
    cfg.validate();
    set_thread_count(cfg.threads);
    const GbmParams params = cfg.market();
    const int t = cfg.steps - 1;
    const PointMatrix xs = sample_mu_t(params, t, cfg.stage(t).n, cfg.seed);
    const PayoffSpec payoff = cfg.payoff;
    return mc_gap(xs, [payoff](const Eigen::Ref<const Vector>& x) { return payoff(x); }, m_small,
                  m_large, params, cfg.seed);
}

std::string format_results(const std::vector<PricingResult>& results, ResultFormat format) {
    if (results.empty()) throw InvalidInput("format_results: no results");
    std::ostringstream out;
    const char* sep = format == ResultFormat::Csv ? "," : " | ";
    auto row = [&](const std::vector<std::string>& cells) {
        if (format == ResultFormat::Markdown) out << "| ";
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? sep : "") << cells[i];
        if (format == ResultFormat::Markdown) out << " |";
        out << '\n';
    };
    row(std::vector<std::string>(std::begin(kResultColumns), std::end(kResultColumns)));
    if (format == ResultFormat::Markdown) row(std::vector<std::string>(std::size(kResultColumns), "---"));
    for (const auto& r : results) {
        row({std::to_string(r.d), to_string(r.payoff), num17(r.price_mean), num17(r.ci_low),
             num17(r.ci_high), r.oracle_price ? num17(*r.oracle_price) : "",
             r.lower_bound ? num17(r.lower_bound->price) : "", num17(r.seconds),
             std::to_string(r.seed), r.config_hash});
    }
    return out.str();
}

void emit_results(const std::vector<PricingResult>& results, ResultFormat format,
                  const std::filesystem::path& path) {
    const std::string text = format_results(results, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw InvalidInput("failed writing '" + path.string() + "'");
}

std::vector<PricingResult> parse_results_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("results csv: empty");
    if (split_csv(line).size() != std::size(kResultColumns)) throw InvalidInput("results csv: bad header");
    std::vector<PricingResult> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != std::size(kResultColumns)) throw InvalidInput("results csv: bad row");
        PricingResult r;
        r.d = std::stoi(cells[0]);
        r.payoff = parse_payoff_kind(cells[1]);
        r.price_mean = std::strtod(cells[2].c_str(), nullptr);
        r.ci_low = std::strtod(cells[3].c_str(), nullptr);
        r.ci_high = std::strtod(cells[4].c_str(), nullptr);
        if (!cells[5].empty()) r.oracle_price = std::strtod(cells[5].c_str(), nullptr);
        if (!cells[6].empty()) r.lower_bound = Estimate{std::strtod(cells[6].c_str(), nullptr), 0.0};
        r.seconds = std::strtod(cells[7].c_str(), nullptr);
        r.seed = std::stoull(cells[8]);
        r.config_hash = cells[9];
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace krrdp
