#pragma once

#include <vector>

#include "ecs/types.hpp"

namespace ecs {

// Truncated power series c_0 + c_1 (z-a) + ... + c_M (z-a)^M about the point a.
// Arithmetic between two series requires equal expansion points.
struct FormalSeries {
    double expansion_point = 0.0;
    std::vector<double> coefficients;  // size order()+1

    FormalSeries() = default;
    FormalSeries(double a, std::vector<double> c)
        : expansion_point(a), coefficients(std::move(c)) {}

    int order() const { return static_cast<int>(coefficients.size()) - 1; }
    double coeff(int k) const {
        return k >= 0 && k < static_cast<int>(coefficients.size()) ? coefficients[k] : 0.0;
    }
    // Sum of the coefficients: the series evaluated with the bookkeeping
    // variable set to 1. Partial sums up to `order` when given.
    double value_at_one(int order = -1) const;
};

// Solve z = a + eta*phi(z) for z = xi(eta) = a + sum_{k>=1} xi_k eta^k, with phi
// given as a truncated series about a.  The returned series has expansion point a
// and coefficients (a, xi_1, ..., xi_M) in the bookkeeping variable eta.
FormalSeries revert(const FormalSeries& phi, int order);

// g(xi(eta)) as a truncated series in eta, with xi the reverted solution above.
FormalSeries compose(const FormalSeries& g, const FormalSeries& phi, int order);

// Coefficients 0..order of (sum_r c_r x^r)^exponent by the multinomial expansion:
// the l-th output is sum over (l_0..l_l), sum l_r = exponent, sum r l_r = l, of
// exponent!/prod(l_r!) * prod c_r^{l_r}.
std::vector<double> multinomial_power(const std::vector<double>& coefficients, int exponent,
                                      int order);

// All compositions of r into s nonnegative parts (k_1..k_s), lexicographic order.
std::vector<std::vector<int>> leibniz_derivative_weights(int s, int r);

}  // namespace ecs
