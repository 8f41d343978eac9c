#pragma once

#include "krrdp/market.hpp"

#include <string>
#include <string_view>

namespace krrdp {

enum class PayoffKind { MaxCall, GeometricBasketPut };

std::string to_string(PayoffKind kind);
PayoffKind parse_payoff_kind(std::string_view text);

struct PayoffSpec {
    PayoffKind kind = PayoffKind::GeometricBasketPut;
    double strike = 100.0;

    void validate() const;
    // C_t(x); time-homogeneous, so the same function serves every stage and
    // the terminal value.
    double operator()(const Eigen::Ref<const Vector>& x) const;
    double operator()(const double* x, int d) const;
};

// (max_i x_i - K)^+
double max_call(const Eigen::Ref<const Vector>& x, double strike);
// (K - (prod_i x_i)^(1/d))^+
double geo_basket_put(const Eigen::Ref<const Vector>& x, double strike);

// F_t(x, 0) = C_t(x), F_t(x, 1) = 0, F_t(cemetery, .) = 0.
double stage_reward(const State& x, Control u, int t, const PayoffSpec& spec);

}  // namespace krrdp
