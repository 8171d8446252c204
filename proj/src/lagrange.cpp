#include "ecs/lagrange.hpp"

#include <cmath>

#include "ecs/errors.hpp"

namespace ecs {

namespace {

// Truncated Cauchy product of two coefficient vectors.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b,
                             int order) {
    std::vector<double> out(order + 1, 0.0);
    for (int i = 0; i <= order && i < static_cast<int>(a.size()); ++i) {
        if (a[i] == 0.0) continue;
        for (int j = 0; j + i <= order && j < static_cast<int>(b.size()); ++j)
            out[i + j] += a[i] * b[j];
    }
    return out;
}

void check_order(const FormalSeries& s, int order, const char* who) {
    if (order < 0 || order > s.order())
        throw DomainError(std::string(who) + ": requested order exceeds the input series");
}

}  // namespace

double FormalSeries::value_at_one(int order) const {
    int last = order < 0 ? this->order() : std::min(order, this->order());
    KahanSum sum;
    for (int k = 0; k <= last; ++k) sum.add(coefficients[k]);
    return sum.value();
}

FormalSeries revert(const FormalSeries& phi, int order) {
    check_order(phi, order, "revert");
    const int M = order;
    // w(eta) = xi(eta) - a solves w = eta * sum_r phi_r w^r; build the eta
    // coefficients of w order by order, carrying the needed powers of w.
    std::vector<std::vector<double>> w_pow;  // w^p as eta-coefficients, p = 0..M
    w_pow.push_back(std::vector<double>(M + 1, 0.0));
    w_pow[0][0] = 1.0;
    std::vector<double> w(M + 1, 0.0);

    for (int k = 1; k <= M; ++k) {
        // [eta^k] w = [eta^{k-1}] sum_r phi_r w^r; powers w^r with r >= k have
        // no eta^{k-1} coefficient because w has no constant term.
        double coeff = 0.0;
        for (int r = 0; r <= std::min(k - 1, M); ++r) {
            if (r >= static_cast<int>(w_pow.size())) break;
            coeff += phi.coeff(r) * w_pow[r][k - 1];
        }
        w[k] = coeff;
        // Refresh the stored powers with the newly fixed coefficient.
        w_pow.resize(1);
        for (int p = 1; p <= M; ++p) w_pow.push_back(convolve(w_pow[p - 1], w, M));
    }

    std::vector<double> xi = w;
    xi[0] = phi.expansion_point;
    return FormalSeries(phi.expansion_point, std::move(xi));
}

FormalSeries compose(const FormalSeries& g, const FormalSeries& phi, int order) {
    if (g.expansion_point != phi.expansion_point)
        throw DomainError("compose: mismatched expansion points");
    check_order(g, order, "compose");
    check_order(phi, order, "compose");

    FormalSeries xi = revert(phi, order);
    std::vector<double> w = xi.coefficients;
    w[0] = 0.0;  // xi - a

    // Horner evaluation of g at a + w, truncated in eta.
    std::vector<double> acc(order + 1, 0.0);
    for (int r = order; r >= 0; --r) {
        acc = convolve(acc, w, order);
        acc[0] += g.coeff(r);
    }
    return FormalSeries(g.expansion_point, std::move(acc));
}

std::vector<double> multinomial_power(const std::vector<double>& coefficients, int exponent,
                                      int order) {
    if (exponent < 1) throw DomainError("multinomial_power: exponent must be >= 1");
    if (order < 0) throw DomainError("multinomial_power: order must be >= 0");
    std::vector<double> out(order + 1, 0.0);
    const int nterms = static_cast<int>(coefficients.size());

    // Enumerate multiplicities (l_0, l_1, ...) with sum l_r = exponent and
    // sum r*l_r <= order, accumulating exponent!/prod(l_r!) prod c_r^{l_r}.
    auto recurse = [&](auto&& self, int r, int remaining, int degree, double factor) -> void {
        if (remaining == 0) {
            out[degree] += factor;
            return;
        }
        if (r == nterms) return;
        if (degree + r * remaining > order) return;
        double power = 1.0;
        double fact = 1.0;
        for (int l = 0; l <= remaining; ++l) {
            int new_degree = degree + r * l;
            if (new_degree > order) break;
            self(self, r + 1, remaining - l, new_degree, factor * power / fact);
            power *= coefficients[r];
            fact *= (l + 1);
        }
    };
    double total_fact = 1.0;
    for (int i = 2; i <= exponent; ++i) total_fact *= i;
    recurse(recurse, 0, exponent, 0, total_fact);
    return out;
}

std::vector<std::vector<int>> leibniz_derivative_weights(int s, int r) {
    if (s < 1) throw DomainError("leibniz_derivative_weights: s must be >= 1");
    if (r < 0) throw DomainError("leibniz_derivative_weights: r must be >= 0");
    std::vector<std::vector<int>> out;
    std::vector<int> current(s, 0);
    auto recurse = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == s - 1) {
            current[pos] = remaining;
            out.push_back(current);
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            current[pos] = k;
            self(self, pos + 1, remaining - k);
        }
    };
    recurse(recurse, 0, r);
    return out;
}

}  // namespace ecs
