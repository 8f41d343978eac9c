#include "krrdp/experiment.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace krrdp;

namespace {

RunConfig cheap_put(int reps) {
    RunConfig cfg = default_run_config(1, PayoffKind::GeometricBasketPut);
    cfg.steps = 3;
    cfg.stages[0].n = 60;
    cfg.stages[0].M = 10;
    cfg.lengthscale_grid = {40.0};
    cfg.eval_M = 2000;
    cfg.repetitions = reps;
    return cfg;
}

// Every CSV cell except the wall-clock column.
std::string without_seconds(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        std::stringstream cells(line);
        std::string cell;
        for (int i = 0; std::getline(cells, cell, ','); ++i)
            if (i != 7) out += cell + ",";
        out += "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("single repetition gives a degenerate interval") {
    const PricingResult r = run_benchmark(cheap_put(1));
    REQUIRE(r.per_rep_prices.size() == 1);
    CHECK(r.price_mean == r.per_rep_prices[0]);
    CHECK(r.ci_low == r.price_mean);
    CHECK(r.ci_high == r.price_mean);
    CHECK(r.valid);
}

TEST_CASE("interval is mean plus or minus 1.96 standard errors") {
    const PricingResult r = run_benchmark(cheap_put(6));
    REQUIRE(r.per_rep_prices.size() == 6);
    double mean = 0.0;
    for (double p : r.per_rep_prices) mean += p;
    mean /= 6;
    double ss = 0.0;
    for (double p : r.per_rep_prices) ss += (p - mean) * (p - mean);
    const double se = std::sqrt(ss / 5) / std::sqrt(6.0);
    CHECK(r.price_mean == doctest::Approx(mean).epsilon(1e-14));
    CHECK(r.ci_low == doctest::Approx(mean - 1.96 * se).epsilon(1e-12));
    CHECK(r.ci_high == doctest::Approx(mean + 1.96 * se).epsilon(1e-12));
    CHECK(r.stage_timings.size() == 3);
    CHECK(r.config_hash == config_hash(cheap_put(6)));
}

TEST_CASE("more repetitions shrink the interval") {
    // A single 10-repetition width has only 9 degrees of freedom, so the widths
    // are averaged over independent root seeds before taking the ratio.
    double w10 = 0.0, w40 = 0.0;
    for (std::uint64_t s = 0; s < 8; ++s) {
        RunConfig c10 = cheap_put(10), c40 = cheap_put(40);
        c10.seed = c40.seed = derive_seed(77, s);
        const PricingResult r10 = run_benchmark(c10);
        const PricingResult r40 = run_benchmark(c40);
        w10 += r10.ci_high - r10.ci_low;
        w40 += r40.ci_high - r40.ci_low;
    }
    const double ratio = w10 / w40;
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 2.7);
}

TEST_CASE("results are reproducible across runs and thread counts") {
    RunConfig cfg = cheap_put(3);
    cfg.oracle = true;
    set_thread_count(1);
    const std::string ref = without_seconds(format_results({run_benchmark(cfg)}, ResultFormat::Csv));
    for (int threads : {1, 4, 8}) {
        cfg.threads = threads;
        CHECK(without_seconds(format_results({run_benchmark(cfg)}, ResultFormat::Csv)) == ref);
    }
    set_thread_count(1);
}

TEST_CASE("csv and markdown output") {
    PricingResult r;
    r.d = 2;
    r.payoff = PayoffKind::GeometricBasketPut;
    r.price_mean = 4.6765432109876543;
    r.ci_low = 0.1 + 0.2;
    r.ci_high = 1.0 / 3.0;
    r.oracle_price = 4.5659;
    r.seconds = 1.25;
    r.seed = 18446744073709551615ull;
    r.config_hash = "0123456789abcdef";

    const std::string csv = format_results({r}, ResultFormat::Csv);
    std::istringstream in(csv);
    std::string header, row, extra;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "d,payoff,price,ci_low,ci_high,oracle,lower_bound,seconds,seed,config_hash");
    CHECK_FALSE(static_cast<bool>(std::getline(in, extra)));

    const auto back = parse_results_csv(csv);
    REQUIRE(back.size() == 1);
    CHECK(back[0].price_mean == r.price_mean);
    CHECK(back[0].ci_low == r.ci_low);
    CHECK(back[0].ci_high == r.ci_high);
    CHECK(*back[0].oracle_price == *r.oracle_price);
    CHECK_FALSE(back[0].lower_bound.has_value());
    CHECK(back[0].seed == r.seed);
    CHECK(back[0].config_hash == r.config_hash);

    const std::string md = format_results({r, r}, ResultFormat::Markdown);
    std::istringstream mdin(md);
    std::string first, rule;
    std::getline(mdin, first);
    std::getline(mdin, rule);
    CHECK(first.front() == '|');
    CHECK(std::count(first.begin(), first.end(), '|') == 11);
    CHECK(rule.find("---") != std::string::npos);
    CHECK(std::count(md.begin(), md.end(), '\n') == 4);

    CHECK_THROWS_AS(format_results({}, ResultFormat::Csv), std::invalid_argument);
    const auto path = std::filesystem::temp_directory_path() / "krrdp_results_test.csv";
    emit_results({r}, ResultFormat::Csv, path);
    std::ifstream f(path);
    std::stringstream buf;
    buf << f.rdbuf();
    CHECK(buf.str() == csv);
    std::filesystem::remove(path);
    CHECK_THROWS(emit_results({r}, ResultFormat::Csv, "/nonexistent-dir/x.csv"));
}

TEST_CASE("spearman correlation") {
    CHECK(spearman_correlation({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman_correlation({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(std::isnan(spearman_correlation({1}, {1})));
    // no variation in one argument: undefined
    CHECK(std::isnan(spearman_correlation({1, 2, 3}, {5, 5, 5})));
}

TEST_CASE("convergence study on the one-step call") {
    RunConfig cfg = krrdp::testing::one_step_call();
    cfg.repetitions = 10;
    cfg.eval_M = 20000;
    cfg.lengthscale_grid = {40.0};
    const ConvergenceTable one = convergence_study(cfg, {100});
    CHECK(one.rows.size() == 1);
    CHECK(std::isnan(one.spearman));
    CHECK(one.reference_kind == "binomial");

    const ConvergenceTable two = convergence_study(cfg, {100, 200});
    REQUIRE(two.rows.size() == 2);
    CHECK(std::abs(two.reference - krrdp::testing::bs_call(100, 100, 0.05, 0.2, 1.0)) < 1e-2);
    const double pooled = std::hypot(two.rows[0].error_std_error, two.rows[1].error_std_error);
    CHECK(two.rows[1].mean_abs_error <= two.rows[0].mean_abs_error + 2.0 * pooled);
    CHECK(two.rows[1].M >= two.rows[0].M);
    CHECK(two.rows[1].lambda < two.rows[0].lambda);
}

TEST_CASE("mc error diagnostic") {
    RunConfig cfg = default_run_config(2, PayoffKind::GeometricBasketPut);
    CHECK(mc_error_diagnostic(cfg, 50, 50) == 0.0);

    const PointMatrix xs = sample_mu_t(cfg.market(), 3, 100, 1);
    const StageFunction constant = [](const Eigen::Ref<const Vector>&) { return 3.0; };
    CHECK(mc_gap(xs, constant, 25, 400, cfg.market(), 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK_THROWS_AS(mc_error_diagnostic(cfg, 400, 25), std::invalid_argument);

    double small = 0.0, large = 0.0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
        cfg.seed = derive_seed(99, rep);
        small += mc_error_diagnostic(cfg, 25, 400);
        large += mc_error_diagnostic(cfg, 100, 400);
    }
    const double ratio = small / large;
    CHECK(ratio >= 1.6);
    CHECK(ratio <= 2.6);
}
