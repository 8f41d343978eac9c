#include "krrdp/payoffs.hpp"

#include <algorithm>
#include <cmath>

namespace krrdp {

namespace {

double max_call_raw(const double* x, int d, double strike) {
    double m = x[0];
    for (int i = 1; i < d; ++i) m = std::max(m, x[i]);
    return std::max(m - strike, 0.0);
}

double geo_put_raw(const double* x, int d, double strike) {
    double log_sum = 0.0;
    for (int i = 0; i < d; ++i) log_sum += std::log(x[i]);
    return std::max(strike - std::exp(log_sum / d), 0.0);
}

}  // namespace

std::string to_string(PayoffKind kind) {
    switch (kind) {
        case PayoffKind::MaxCall: return "max_call";
        case PayoffKind::GeometricBasketPut: return "geometric_put";
    }
    return "unknown";
}

PayoffKind parse_payoff_kind(std::string_view text) {
    if (text == "max_call" || text == "maxcall" || text == "max-call") return PayoffKind::MaxCall;
    if (text == "geometric_put" || text == "geo_put" || text == "geometric-put")
        return PayoffKind::GeometricBasketPut;
    throw InvalidInput("unknown payoff kind '" + std::string(text) + "'");
}

void PayoffSpec::validate() const {
    if (!(strike > 0.0) || !std::isfinite(strike)) throw InvalidInput("strike must be positive");
}

double PayoffSpec::operator()(const double* x, int d) const {
    return kind == PayoffKind::MaxCall ? max_call_raw(x, d, strike) : geo_put_raw(x, d, strike);
}

double PayoffSpec::operator()(const Eigen::Ref<const Vector>& x) const {
    if (x.size() < 1) throw InvalidInput("payoff: empty state");
    const Vector xc = x;
    return (*this)(xc.data(), static_cast<int>(xc.size()));
}

double max_call(const Eigen::Ref<const Vector>& x, double strike) {
    return PayoffSpec{PayoffKind::MaxCall, strike}(x);
}

double geo_basket_put(const Eigen::Ref<const Vector>& x, double strike) {
    return PayoffSpec{PayoffKind::GeometricBasketPut, strike}(x);
}

double stage_reward(const State& x, Control u, int /*t*/, const PayoffSpec& spec) {
    if (u != kExercise && u != kHold) throw InvalidInput("stage_reward: control must be 0 or 1");
    if (x.is_cemetery() || u == kHold) return 0.0;
    return spec(x.prices());
}

}  // namespace krrdp
