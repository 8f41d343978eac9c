// krrdp: command-line front end for KRR-DP option pricing experiments.
//
//   krrdp price      --config run.cfg [--seed S] [--reps R] [--out f] [--format csv|markdown]
//                    [--oracle] [--lower-bound] [--lsmc] [--threads N]
//   krrdp converge   --config run.cfg --n-grid 50,100,200 [--out f]
//   krrdp mc-diag    --config run.cfg --m 25,400
//   krrdp dump-stack --config run.cfg --out stack.txt [--seed S]
//
// Failures exit nonzero after printing one JSON object on stderr.

#include "krrdp/experiment.hpp"
#include "krrdp/stack_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace krrdp;

int fail(const std::string& kind, const std::string& message, int line = 0) {
    nlohmann::json j{{"error", kind}, {"message", message}};
    if (line > 0) j["line"] = line;
    std::cerr << j.dump() << '\n';
    return kind == "config" || kind == "usage" ? 2 : 3;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
    out << text;
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel ridge regression dynamic programming for Bermudan option pricing"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv", n_grid_text, m_pair_text;
    std::uint64_t seed = 0;
    int reps = 0, threads = 0;
    bool oracle = false, lower_bound = false, lsmc = false;

    auto* price = app.add_subcommand("price", "Run the benchmark for one configuration");
    price->add_option("--config", config_path, "Config file")->required();
    price->add_option("--seed", seed, "Root seed (overrides run.seed)");
    price->add_option("--reps", reps, "Repetitions (overrides run.repetitions)");
    price->add_option("--out", out_path, "Output file (default: stdout)");
    price->add_option("--format", format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}));
    price->add_flag("--oracle", oracle, "Add the binomial oracle price");
    price->add_flag("--lower-bound", lower_bound, "Add the policy lower bound");
    price->add_flag("--lsmc", lsmc, "Add the Longstaff-Schwartz baseline");
    price->add_option("--threads", threads, "OpenMP threads");

    auto* converge = app.add_subcommand("converge", "Error versus n under the hyperparameter schedule");
    converge->add_option("--config", config_path, "Config file")->required();
    converge->add_option("--n-grid", n_grid_text, "Comma-separated sample sizes")->required();
    converge->add_option("--out", out_path, "CSV output file (default: stdout)");
    converge->add_option("--threads", threads, "OpenMP threads");

    auto* diag = app.add_subcommand("mc-diag", "RMS gap between continuation estimates at two inner counts");
    diag->add_option("--config", config_path, "Config file")->required();
    diag->add_option("--m", m_pair_text, "M_small,M_large")->required();
    diag->add_option("--threads", threads, "OpenMP threads");

    auto* dump = app.add_subcommand("dump-stack", "Fit one backward pass and serialize the value functions");
    dump->add_option("--config", config_path, "Config file")->required();
    dump->add_option("--out", out_path, "Stack file")->required();
    dump->add_option("--seed", seed, "Root seed (overrides run.seed)");
    dump->add_option("--threads", threads, "OpenMP threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (threads > 0) cfg.threads = threads;
        set_thread_count(cfg.threads);

        if (*price) {
            if (price->count("--seed")) cfg.seed = seed;
            if (reps > 0) cfg.repetitions = reps;
            cfg.oracle = cfg.oracle || oracle;
            cfg.lower_bound = cfg.lower_bound || lower_bound;
            cfg.lsmc = cfg.lsmc || lsmc;
            const PricingResult res = run_benchmark(cfg);
            if (!res.valid) {
                std::string msg;
                for (const auto& f : res.failures) msg += (msg.empty() ? "" : "; ") + f;
                return fail("numerical", msg);
            }
            write_text(out_path, format_results({res}, format == "csv" ? ResultFormat::Csv : ResultFormat::Markdown));

            double fitted = 0.0;
            for (double v : res.per_rep_fitted) fitted += v;
            fitted /= static_cast<double>(res.per_rep_fitted.size());
            std::cerr << "price (fresh MC at x0): " << fmt(res.price_mean) << "  95% CI [" << fmt(res.ci_low)
                      << ", " << fmt(res.ci_high) << "]\n"
                      << "price (fitted W_0(x0)): " << fmt(fitted) << '\n'
                      << "lengthscale: " << res.selected_lengthscales.front()
                      << "  backward pass: " << fmt(res.seconds, 2) << " s/run\n";
            if (res.oracle_price) std::cerr << "binomial oracle: " << fmt(*res.oracle_price) << '\n';
            if (res.lower_bound)
                std::cerr << "policy lower bound: " << fmt(res.lower_bound->price) << " (se "
                          << fmt(res.lower_bound->std_error) << ")\n";
            if (res.lsmc)
                std::cerr << "LSMC: " << fmt(res.lsmc->price) << " (se " << fmt(res.lsmc->std_error) << ")\n";
        } else if (*converge) {
            std::vector<int> grid;
            std::stringstream ss(n_grid_text);
            std::string item;
            while (std::getline(ss, item, ',')) grid.push_back(std::stoi(item));
            const ConvergenceTable table = convergence_study(cfg, grid);
            std::ostringstream out;
            out << "n,lambda,M,mean_price,mean_abs_error,error_stderr,reference\n";
            for (const auto& row : table.rows) {
                char buf[256];
                std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%.17g,%.17g,%.17g,%.17g\n", row.n, row.lambda, row.M,
                              row.mean_price, row.mean_abs_error, row.error_std_error, table.reference);
                out << buf;
            }
            write_text(out_path, out.str());
            std::cerr << "reference (" << table.reference_kind << "): " << fmt(table.reference)
                      << "  spearman(n, error): " << table.spearman << '\n';
        } else if (*diag) {
            const auto comma = m_pair_text.find(',');
            if (comma == std::string::npos) return fail("usage", "--m expects M_small,M_large");
            const int m_small = std::stoi(m_pair_text.substr(0, comma));
            const int m_large = std::stoi(m_pair_text.substr(comma + 1));
            const double gap = mc_error_diagnostic(cfg, m_small, m_large);
            std::cout << "m_small,m_large,rms_gap\n" << m_small << ',' << m_large << ',' << fmt(gap, 10) << '\n';
        } else if (*dump) {
            if (dump->count("--seed")) cfg.seed = seed;
            save_stack(out_path, backward_pass(cfg));
        }
    } catch (const ConfigError& e) {
        return fail("config", e.what(), e.line());
    } catch (const StageFailure& e) {
        return fail("numerical", e.what());
    } catch (const FactorizationError& e) {
        return fail("numerical", e.what());
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
    return 0;
}
