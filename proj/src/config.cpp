#include "krrdp/config.hpp"

#include "krrdp/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace krrdp {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Entry {
    std::string value;
    int line = 0;
};

class Fields {
public:
    explicit Fields(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    const Entry& at(const std::string& key) {
        used_.insert(key);
        return entries_.at(key);
    }

    std::vector<double> reals(const std::string& key) {
        const Entry& e = at(key);
        std::vector<double> out;
        std::stringstream ss(e.value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            char* end = nullptr;
            const double v = std::strtod(t.c_str(), &end);
            if (t.empty() || *end != '\0' || !std::isfinite(v))
                throw ConfigError(key + ": '" + t + "' is not a number", e.line);
            out.push_back(v);
        }
        if (out.empty()) throw ConfigError(key + ": empty value", e.line);
        return out;
    }

    double real(const std::string& key) {
        const auto v = reals(key);
        if (v.size() != 1) throw ConfigError(key + ": expected a single number", at(key).line);
        return v[0];
    }

    long long integer(const std::string& key) {
        const Entry& e = at(key);
        char* end = nullptr;
        const long long v = std::strtoll(e.value.c_str(), &end, 10);
        if (e.value.empty() || *end != '\0') throw ConfigError(key + ": '" + e.value + "' is not an integer", e.line);
        return v;
    }

    std::uint64_t unsigned_integer(const std::string& key) {
        const Entry& e = at(key);
        char* end = nullptr;
        const unsigned long long v = std::strtoull(e.value.c_str(), &end, 10);
        if (e.value.empty() || e.value[0] == '-' || *end != '\0')
            throw ConfigError(key + ": '" + e.value + "' is not a nonnegative integer", e.line);
        return v;
    }

    bool boolean(const std::string& key) {
        const Entry& e = at(key);
        if (e.value == "true" || e.value == "1" || e.value == "yes" || e.value == "on") return true;
        if (e.value == "false" || e.value == "0" || e.value == "no" || e.value == "off") return false;
        throw ConfigError(key + ": '" + e.value + "' is not a boolean", e.line);
    }

    std::string text(const std::string& key) { return at(key).value; }

    void reject_unused() const {
        for (const auto& [key, entry] : entries_)
            if (!used_.count(key)) throw ConfigError("unknown key '" + key + "'", entry.line);
    }

private:
    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
};

Vector broadcast(Fields& f, const std::string& key, int d) {
    const auto v = f.reals(key);
    if (v.size() == 1) return Vector::Constant(d, v[0]);
    if (static_cast<int>(v.size()) != d)
        throw ConfigError(key + ": expected 1 or " + std::to_string(d) + " values", f.at(key).line);
    return Eigen::Map<const Vector>(v.data(), d);
}

void apply_stage_fields(Fields& f, const std::string& prefix, StageConfig& stage,
                        std::vector<double>* grid) {
    if (f.has(prefix + "n")) stage.n = static_cast<int>(f.integer(prefix + "n"));
    if (f.has(prefix + "M")) stage.M = static_cast<int>(f.integer(prefix + "M"));
    if (f.has(prefix + "lambda")) stage.lambda = f.real(prefix + "lambda");
    if (f.has(prefix + "beta")) stage.beta = f.real(prefix + "beta");
    if (f.has(prefix + "nystrom_m")) stage.nystrom_m = static_cast<int>(f.integer(prefix + "nystrom_m"));
    if (f.has(prefix + "clip_bound")) stage.clip_override = f.real(prefix + "clip_bound");
    if (f.has(prefix + "lengthscale")) {
        const auto ls = f.reals(prefix + "lengthscale");
        if (grid) {
            *grid = ls;
        } else if (ls.size() != 1) {
            throw ConfigError(prefix + "lengthscale: per-stage lengthscale must be a single value",
                              f.at(prefix + "lengthscale").line);
        }
        stage.kernel.lengthscale = ls.front();
    }
}

}  // namespace

void StageConfig::validate() const {
    if (n < 1) throw InvalidInput("stage.n must be >= 1");
    if (M < 1) throw InvalidInput("stage.M must be >= 1");
    if (!(lambda >= 0.0)) throw InvalidInput("stage.lambda must be >= 0");
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidInput("stage.beta must lie in (0, 1]");
    if (nystrom_m && (*nystrom_m < 1 || *nystrom_m > n))
        throw InvalidInput("stage.nystrom_m must lie in [1, n]");
    if (clip_override && !(*clip_override >= 0.0)) throw InvalidInput("stage.clip_bound must be >= 0");
    try {
        kernel.validate();
    } catch (const InvalidInput& e) {
        throw InvalidInput(std::string("stage.lengthscale: ") + e.what());
    }
}

GbmParams RunConfig::market() const { return GbmParams(r, sigma, rho, x0, dt()); }

StageConfig RunConfig::stage(int t) const {
    if (t < 0 || t >= steps) throw InvalidInput("stage index out of range");
    StageConfig s = stages.size() == 1 ? stages.front() : stages.at(static_cast<std::size_t>(t));
    if (schedule.enabled) {
        const Hyperparams h = schedule_hyperparams(s.n, s.beta, schedule.c_lambda, schedule.c_M);
        s.lambda = h.lambda;
        s.M = h.M;
    }
    if (!s.nystrom_m && s.n > nystrom_threshold) s.nystrom_m = std::min(s.n, nystrom_default_m);
    return s;
}

void RunConfig::validate() const {
    if (steps < 1) throw ConfigError("contract.steps must be >= 1");
    if (!(maturity > 0.0)) throw ConfigError("contract.maturity must be positive");
    if (repetitions < 1) throw ConfigError("run.repetitions must be >= 1");
    if (eval_M < 1) throw ConfigError("run.eval_M must be >= 1");
    if (cv_folds < 2) throw ConfigError("run.cv_folds must be >= 2");
    if (nystrom_threshold < 1 || nystrom_default_m < 1) throw ConfigError("run.nystrom_threshold and run.nystrom_m must be >= 1");
    if (!(payoff.strike > 0.0)) throw ConfigError("contract.strike must be positive");
    if (stages.size() != 1 && static_cast<int>(stages.size()) != steps)
        throw ConfigError("stage settings must be shared or given for every stage");
    if (lengthscale_grid.empty()) throw ConfigError("stage.lengthscale grid is empty");
    for (double ell : lengthscale_grid)
        if (!(ell > 0.0)) throw ConfigError("stage.lengthscale values must be positive");
    if (schedule.enabled && (!(schedule.c_lambda > 0.0) || !(schedule.c_M > 0.0)))
        throw ConfigError("schedule constants must be positive");
    if (lb_paths < 1 || lb_inner_M < 0) throw ConfigError("oracle.lb_paths must be >= 1 and oracle.lb_inner_M >= 0");
    if (lsmc_paths < 1 || lsmc_degree < 0) throw ConfigError("oracle.lsmc_paths / oracle.lsmc_degree invalid");
    if (tree_steps < 0 || (tree_steps > 0 && tree_steps % steps != 0))
        throw ConfigError("oracle.tree_steps must be a multiple of contract.steps");
    try {
        for (int t = 0; t < steps; ++t) stage(t).validate();
        (void)market();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
}

int default_sample_count(int d) {
    const double dd = std::max(d, 2);
    return static_cast<int>(std::lround(200.0 + (dd - 2.0) * 600.0 / 18.0));
}

int default_inner_count(int d) {
    const double dd = std::max(d, 2);
    return static_cast<int>(std::lround(50.0 + (dd - 2.0) * 50.0 / 18.0));
}

RunConfig default_run_config(int d, PayoffKind kind) {
    if (d < 1) throw InvalidInput("market.d must be >= 1");
    RunConfig cfg;
    cfg.sigma = Vector::Constant(d, 0.2);
    cfg.rho = constant_correlation(d, 0.2);
    cfg.x0 = Vector::Constant(d, 100.0);
    cfg.payoff = PayoffSpec{kind, 100.0};
    cfg.stages.front().n = default_sample_count(d);
    cfg.stages.front().M = default_inner_count(d);
    return cfg;
}

ConfigError::ConfigError(const std::string& message, int line)
    : InvalidInput(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

RunConfig parse_config(const std::string& text) {
    std::map<std::string, Entry> entries;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (value.empty()) throw ConfigError(key + ": empty value", line_no);
        if (!entries.emplace(key, Entry{value, line_no}).second)
            throw ConfigError("duplicate key '" + key + "'", line_no);
    }

    Fields f(std::move(entries));
    for (const char* required : {"market.d", "contract.payoff", "contract.strike"})
        if (!f.has(required)) throw ConfigError(std::string("missing required field '") + required + "'");

    const long long d = f.integer("market.d");
    if (d < 1 || d > 1000) throw ConfigError("market.d must lie in [1, 1000]", f.at("market.d").line);
    PayoffKind kind;
    try {
        kind = parse_payoff_kind(f.text("contract.payoff"));
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("contract.payoff: ") + e.what(), f.at("contract.payoff").line);
    }
    RunConfig cfg = default_run_config(static_cast<int>(d), kind);
    cfg.payoff.strike = f.real("contract.strike");

    if (f.has("market.r")) cfg.r = f.real("market.r");
    if (f.has("market.sigma")) cfg.sigma = broadcast(f, "market.sigma", static_cast<int>(d));
    if (f.has("market.x0")) cfg.x0 = broadcast(f, "market.x0", static_cast<int>(d));
    if (f.has("market.rho")) {
        const auto v = f.reals("market.rho");
        if (v.size() == 1) {
            cfg.rho = constant_correlation(static_cast<int>(d), v[0]);
        } else if (static_cast<long long>(v.size()) == d * d) {
            cfg.rho = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                v.data(), d, d);
        } else {
            throw ConfigError("market.rho: expected a scalar or d*d values", f.at("market.rho").line);
        }
    }
    if (f.has("contract.maturity")) cfg.maturity = f.real("contract.maturity");
    if (f.has("contract.steps")) cfg.steps = static_cast<int>(f.integer("contract.steps"));
    if (cfg.steps < 1) throw ConfigError("contract.steps must be >= 1", f.at("contract.steps").line);

    StageConfig shared = cfg.stages.front();
    apply_stage_fields(f, "stage.", shared, &cfg.lengthscale_grid);
    cfg.stages = {shared};
    bool per_stage = false;
    for (int t = 0; t < cfg.steps; ++t) {
        const std::string prefix = "stage." + std::to_string(t) + ".";
        for (const char* field : {"n", "M", "lambda", "beta", "nystrom_m", "clip_bound", "lengthscale"})
            per_stage = per_stage || f.has(prefix + field);
    }
    if (per_stage) {
        cfg.stages.assign(static_cast<std::size_t>(cfg.steps), shared);
        for (int t = 0; t < cfg.steps; ++t)
            apply_stage_fields(f, "stage." + std::to_string(t) + ".", cfg.stages[static_cast<std::size_t>(t)], nullptr);
    }

    if (f.has("schedule.enabled")) cfg.schedule.enabled = f.boolean("schedule.enabled");
    if (f.has("schedule.c_lambda")) cfg.schedule.c_lambda = f.real("schedule.c_lambda");
    if (f.has("schedule.c_M")) cfg.schedule.c_M = f.real("schedule.c_M");

    if (f.has("run.seed")) cfg.seed = f.unsigned_integer("run.seed");
    if (f.has("run.repetitions")) cfg.repetitions = static_cast<int>(f.integer("run.repetitions"));
    if (f.has("run.eval_M")) cfg.eval_M = static_cast<int>(f.integer("run.eval_M"));
    if (f.has("run.threads")) cfg.threads = static_cast<int>(f.integer("run.threads"));
    if (f.has("run.cv_folds")) cfg.cv_folds = static_cast<int>(f.integer("run.cv_folds"));
    if (f.has("run.nystrom_threshold")) cfg.nystrom_threshold = static_cast<int>(f.integer("run.nystrom_threshold"));
    if (f.has("run.nystrom_m")) cfg.nystrom_default_m = static_cast<int>(f.integer("run.nystrom_m"));

    if (f.has("oracle.binomial")) cfg.oracle = f.boolean("oracle.binomial");
    if (f.has("oracle.tree_steps")) cfg.tree_steps = static_cast<int>(f.integer("oracle.tree_steps"));
    if (f.has("oracle.lower_bound")) cfg.lower_bound = f.boolean("oracle.lower_bound");
    if (f.has("oracle.lb_paths")) cfg.lb_paths = static_cast<int>(f.integer("oracle.lb_paths"));
    if (f.has("oracle.lb_inner_M")) cfg.lb_inner_M = static_cast<int>(f.integer("oracle.lb_inner_M"));
    if (f.has("oracle.lsmc")) cfg.lsmc = f.boolean("oracle.lsmc");
    if (f.has("oracle.lsmc_paths")) cfg.lsmc_paths = static_cast<int>(f.integer("oracle.lsmc_paths"));
    if (f.has("oracle.lsmc_degree")) cfg.lsmc_degree = static_cast<int>(f.integer("oracle.lsmc_degree"));

    f.reject_unused();
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_form(const RunConfig& cfg) {
    std::ostringstream out;
    const int d = cfg.dim();
    out << "market.d=" << d << '\n' << "market.r=" << num(cfg.r) << '\n';
    out << "market.sigma=";
    for (int i = 0; i < d; ++i) out << (i ? "," : "") << num(cfg.sigma[i]);
    out << "\nmarket.rho=";
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out << (i || j ? "," : "") << num(cfg.rho(i, j));
    out << "\nmarket.x0=";
    for (int i = 0; i < d; ++i) out << (i ? "," : "") << num(cfg.x0[i]);
    out << "\ncontract.payoff=" << to_string(cfg.payoff.kind) << '\n'
        << "contract.strike=" << num(cfg.payoff.strike) << '\n'
        << "contract.maturity=" << num(cfg.maturity) << '\n'
        << "contract.steps=" << cfg.steps << '\n';
    for (int t = 0; t < cfg.steps && t < static_cast<int>(cfg.stages.size()); ++t) {
        const StageConfig& s = cfg.stages[static_cast<std::size_t>(t)];
        out << "stage." << t << "=n:" << s.n << ",M:" << s.M << ",lambda:" << num(s.lambda)
            << ",lengthscale:" << num(s.kernel.lengthscale) << ",beta:" << num(s.beta)
            << ",nystrom_m:" << (s.nystrom_m ? std::to_string(*s.nystrom_m) : "auto")
            << ",clip:" << (s.clip_override ? num(*s.clip_override) : "auto") << '\n';
    }
    out << "stage.lengthscale_grid=";
    for (std::size_t i = 0; i < cfg.lengthscale_grid.size(); ++i) out << (i ? "," : "") << num(cfg.lengthscale_grid[i]);
    out << "\nschedule=" << cfg.schedule.enabled << "," << num(cfg.schedule.c_lambda) << "," << num(cfg.schedule.c_M) << '\n'
        << "run.seed=" << cfg.seed << '\n'
        << "run.repetitions=" << cfg.repetitions << '\n'
        << "run.eval_M=" << cfg.eval_M << '\n'
        << "run.cv_folds=" << cfg.cv_folds << '\n'
        << "run.nystrom=" << cfg.nystrom_threshold << "," << cfg.nystrom_default_m << '\n'
        << "oracle.binomial=" << cfg.oracle << "," << cfg.tree_steps << '\n'
        << "oracle.lower_bound=" << cfg.lower_bound << "," << cfg.lb_paths << "," << cfg.lb_inner_M << '\n'
        << "oracle.lsmc=" << cfg.lsmc << "," << cfg.lsmc_paths << "," << cfg.lsmc_degree << '\n';
    return out.str();
}

std::string config_hash(const RunConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical_form(cfg)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace krrdp
