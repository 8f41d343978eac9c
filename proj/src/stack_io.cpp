#include "krrdp/stack_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace krrdp {

namespace {

constexpr const char* kMagic = "krrdp-stack";
constexpr int kVersion = 1;

std::string hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string word() {
        std::string w;
        if (!(in_ >> w)) throw InvalidInput("stack file: unexpected end of input");
        return w;
    }

    void expect(const std::string& keyword) {
        const std::string w = word();
        if (w != keyword) throw InvalidInput("stack file: expected '" + keyword + "', found '" + w + "'");
    }

    double real() {
        const std::string w = word();
        char* end = nullptr;
        const double v = std::strtod(w.c_str(), &end);
        if (end == w.c_str() || *end != '\0') throw InvalidInput("stack file: bad number '" + w + "'");
        return v;
    }

    long integer() {
        const std::string w = word();
        char* end = nullptr;
        const long v = std::strtol(w.c_str(), &end, 10);
        if (end == w.c_str() || *end != '\0') throw InvalidInput("stack file: bad integer '" + w + "'");
        return v;
    }

private:
    std::istream& in_;
};

}  // namespace

void write_stack(std::ostream& out, const ValueFunctionStack& stack) {
    const GbmParams& p = stack.params();
    const int d = p.dim();
    out << kMagic << ' ' << kVersion << '\n';
    out << "dim " << d << '\n';
    out << "horizon " << stack.horizon() << '\n';
    out << "dt " << hex(p.dt()) << '\n';
    out << "rate " << hex(p.rate()) << '\n';
    out << "payoff " << to_string(stack.payoff().kind) << ' ' << hex(stack.payoff().strike) << '\n';
    out << "sigma";
    for (int i = 0; i < d; ++i) out << ' ' << hex(p.sigma()[i]);
    out << "\nrho";
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out << ' ' << hex(p.rho()(i, j));
    out << "\nx0";
    for (int i = 0; i < d; ++i) out << ' ' << hex(p.x0()[i]);
    out << '\n';

    for (int t = 0; t < stack.horizon(); ++t) {
        const KrrModel& m = stack.model(t);
        out << "stage " << t << '\n';
        out << "kernel rbf " << hex(m.kernel().lengthscale) << '\n';
        out << "lambda " << hex(m.lambda()) << '\n';
        out << "clip " << (m.clip_bound() ? hex(*m.clip_bound()) : std::string("none")) << '\n';
        out << "offset " << hex(m.offset()) << '\n';
        out << "seconds " << hex(stack.stage_seconds()[static_cast<std::size_t>(t)]) << '\n';
        out << "centers " << m.centers().rows() << '\n';
        for (Eigen::Index i = 0; i < m.centers().rows(); ++i) {
            for (int k = 0; k < d; ++k) out << (k ? " " : "") << hex(m.centers()(i, k));
            out << '\n';
        }
        out << "coefficients";
        for (Eigen::Index i = 0; i < m.coefficients().size(); ++i) out << ' ' << hex(m.coefficients()[i]);
        out << '\n';
    }
    out << "end\n";
}

ValueFunctionStack read_stack(std::istream& in) {
    Reader r(in);
    r.expect(kMagic);
    if (r.integer() != kVersion) throw InvalidInput("stack file: unsupported version");
    r.expect("dim");
    const long d = r.integer();
    if (d < 1) throw InvalidInput("stack file: bad dimension");
    r.expect("horizon");
    const long horizon = r.integer();
    if (horizon < 1) throw InvalidInput("stack file: bad horizon");
    r.expect("dt");
    const double dt = r.real();
    r.expect("rate");
    const double rate = r.real();
    r.expect("payoff");
    PayoffSpec payoff;
    payoff.kind = parse_payoff_kind(r.word());
    payoff.strike = r.real();
    r.expect("sigma");
    Vector sigma(d);
    for (long i = 0; i < d; ++i) sigma[i] = r.real();
    r.expect("rho");
    Eigen::MatrixXd rho(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) rho(i, j) = r.real();
    r.expect("x0");
    Vector x0(d);
    for (long i = 0; i < d; ++i) x0[i] = r.real();

    std::vector<KrrModel> models;
    std::vector<double> seconds;
    for (long t = 0; t < horizon; ++t) {
        r.expect("stage");
        if (r.integer() != t) throw InvalidInput("stack file: stages out of order");
        r.expect("kernel");
        r.expect("rbf");
        KernelSpec kernel{KernelKind::Rbf, r.real()};
        r.expect("lambda");
        const double lambda = r.real();
        r.expect("clip");
        const std::string clip_word = r.word();
        std::optional<double> clip_bound;
        if (clip_word != "none") clip_bound = std::strtod(clip_word.c_str(), nullptr);
        r.expect("offset");
        const double offset = r.real();
        r.expect("seconds");
        seconds.push_back(r.real());
        r.expect("centers");
        const long m = r.integer();
        if (m < 0) throw InvalidInput("stack file: bad center count");
        PointMatrix centers(m, d);
        for (long i = 0; i < m; ++i)
            for (long k = 0; k < d; ++k) centers(i, k) = r.real();
        r.expect("coefficients");
        Vector coef(m);
        for (long i = 0; i < m; ++i) coef[i] = r.real();
        models.emplace_back(std::move(centers), std::move(coef), kernel, lambda, clip_bound, offset);
    }
    r.expect("end");
    return ValueFunctionStack(payoff, GbmParams(rate, sigma, rho, x0, dt), std::move(models),
                              std::move(seconds));
}

void save_stack(const std::filesystem::path& path, const ValueFunctionStack& stack) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
    write_stack(out, stack);
    if (!out) throw InvalidInput("failed writing '" + path.string() + "'");
}

ValueFunctionStack load_stack(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
    return read_stack(in);
}

}  // namespace krrdp
