#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ecs/errors.hpp"
#include "ecs/lagrange.hpp"
#include "support/reference.hpp"

using namespace ecs;
using doctest::Approx;

namespace {

// Printed low-order reversion coefficients.
double xi_printed(int k, const std::vector<double>& p) {
    switch (k) {
        case 1: return p[0];
        case 2: return p[0] * p[1];
        case 3: return p[0] * p[0] * p[2] + p[0] * p[1] * p[1];
        case 4:
            return p[0] * p[0] * p[0] * p[3] + 3.0 * p[0] * p[0] * p[1] * p[2] +
                   p[0] * p[1] * p[1] * p[1];
        default: return 0.0;
    }
}

// Printed low-order composition coefficients.
double g_printed(int k, const std::vector<double>& g, const std::vector<double>& p) {
    switch (k) {
        case 0: return g[0];
        case 1: return g[1] * p[0];
        case 2: return g[2] * p[0] * p[0] + g[1] * p[0] * p[1];
        case 3:
            return g[3] * p[0] * p[0] * p[0] + 2.0 * g[2] * p[0] * p[0] * p[1] +
                   g[1] * (p[0] * p[0] * p[2] + p[0] * p[1] * p[1]);
        case 4:
            return g[4] * p[0] * p[0] * p[0] * p[0] + 3.0 * g[3] * p[0] * p[0] * p[0] * p[1] +
                   g[2] * (2.0 * p[0] * p[0] * p[0] * p[2] +
                           3.0 * p[0] * p[0] * p[1] * p[1]) +
                   g[1] * (p[0] * p[0] * p[0] * p[3] + 3.0 * p[0] * p[0] * p[1] * p[2] +
                           p[0] * p[1] * p[1] * p[1]);
        default: return 0.0;
    }
}

// Dyadic rationals keep every product below exact in double arithmetic.
std::vector<double> random_dyadic(std::mt19937& g, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        int num = static_cast<int>(testref::uniform(g, -8.0, 9.0));
        out.push_back(num / 8.0);
    }
    return out;
}

}  // namespace

TEST_CASE("revert of a constant series") {
    FormalSeries phi(0.7, {2.5, 0.0, 0.0, 0.0});
    auto xi = revert(phi, 3);
    CHECK(xi.coefficients[0] == 0.7);
    CHECK(xi.coefficients[1] == 2.5);
    CHECK(xi.coefficients[2] == 0.0);
    CHECK(xi.coefficients[3] == 0.0);
}

TEST_CASE("tree function coefficients from exp series") {
    std::vector<double> c(9);
    double fact = 1.0;
    for (int k = 0; k <= 8; ++k) {
        c[k] = 1.0 / fact;
        fact *= (k + 1);
    }
    auto xi = revert(FormalSeries(0.0, c), 8);
    for (int m = 1; m <= 6; ++m) {
        double mfact = 1.0;
        for (int i = 2; i <= m; ++i) mfact *= i;
        double expected = std::pow(static_cast<double>(m), m - 1) / mfact;
        CHECK(std::abs(xi.coefficients[m] - expected) < 1e-12);
    }
}

TEST_CASE("tree function partial sums track the numeric root") {
    std::vector<double> c(13);
    double fact = 1.0;
    for (int k = 0; k <= 12; ++k) {
        c[k] = 1.0 / fact;
        fact *= (k + 1);
    }
    auto xi = revert(FormalSeries(0.0, c), 12);
    for (double eta : {1e-3, 5e-3, 1e-2}) {
        // Newton iteration for z = eta e^z.
        double z = eta;
        for (int it = 0; it < 60; ++it)
            z -= (z - eta * std::exp(z)) / (1.0 - eta * std::exp(z));
        double partial = 0.0;
        for (int m = 1; m <= 12; ++m) partial += xi.coefficients[m] * std::pow(eta, m);
        CHECK(std::abs(partial - z) < 1e-8 * std::max(1.0, std::abs(z)));
    }
}

TEST_CASE("printed reversion coefficients, exact on dyadic draws") {
    auto g = testref::rng(101);
    for (int draw = 0; draw < 20; ++draw) {
        auto p = random_dyadic(g, 5);
        auto xi = revert(FormalSeries(0.25, p), 4);
        CHECK(xi.coefficients[0] == 0.25);
        for (int k = 1; k <= 4; ++k) CHECK(xi.coefficients[k] == xi_printed(k, p));
    }
}

TEST_CASE("printed composition coefficients, exact on dyadic draws") {
    auto g = testref::rng(103);
    for (int draw = 0; draw < 20; ++draw) {
        auto p = random_dyadic(g, 5);
        auto gc = random_dyadic(g, 5);
        auto comp = compose(FormalSeries(0.5, gc), FormalSeries(0.5, p), 4);
        for (int k = 0; k <= 4; ++k) CHECK(comp.coefficients[k] == g_printed(k, gc, p));
    }
}

TEST_CASE("compose with the identity equals revert") {
    auto g = testref::rng(107);
    auto p = random_dyadic(g, 6);
    FormalSeries phi(0.125, p);
    FormalSeries ident(0.125, {0.125, 1.0, 0.0, 0.0, 0.0, 0.0});
    auto lhs = compose(ident, phi, 5);
    auto rhs = revert(phi, 5);
    for (int k = 0; k <= 5; ++k) CHECK(lhs.coefficients[k] == rhs.coefficients[k]);
}

TEST_CASE("compose rejects mismatched expansion points") {
    CHECK_THROWS_AS(compose(FormalSeries(0.0, {1.0}), FormalSeries(1.0, {1.0}), 0),
                    DomainError);
    CHECK_THROWS_AS(revert(FormalSeries(0.0, {1.0}), 3), DomainError);
}

TEST_CASE("reversion agrees with the closed derivative form via multinomial_power") {
    // xi_m = (1/m) [w^{m-1}] phi(w)^m  and
    // [eta^m] g(xi) = (1/m) [w^{m-1}] (g'(w) phi(w)^m).
    auto g = testref::rng(109);
    for (int draw = 0; draw < 100; ++draw) {
        std::vector<double> p, gc;
        for (int i = 0; i < 9; ++i) {
            p.push_back(testref::uniform(g, -1.0, 1.0));
            gc.push_back(testref::uniform(g, -1.0, 1.0));
        }
        auto xi = revert(FormalSeries(0.0, p), 8);
        auto comp = compose(FormalSeries(0.0, gc), FormalSeries(0.0, p), 8);
        for (int m = 1; m <= 8; ++m) {
            auto pm = multinomial_power(p, m, m - 1);
            CHECK(std::abs(xi.coefficients[m] - pm[m - 1] / m) <
                  1e-12 * std::max(1.0, std::abs(pm[m - 1] / m)));

            std::vector<double> gprime(gc.size() - 1);
            for (std::size_t r = 1; r < gc.size(); ++r) gprime[r - 1] = r * gc[r];
            auto prod = testref::convolve(gprime, pm, m - 1);
            CHECK(std::abs(comp.coefficients[m] - prod[m - 1] / m) <
                  1e-12 * std::max(1.0, std::abs(prod[m - 1] / m)));
        }
    }
}

TEST_CASE("truncated reversion satisfies the defining equation to high order") {
    std::vector<double> p{0.9, -0.4, 0.3, 0.2};
    const int M = 3;
    auto xi = revert(FormalSeries(0.0, p), M);
    auto phi_of = [&](double w) {
        double v = 0.0;
        for (int r = static_cast<int>(p.size()) - 1; r >= 0; --r) v = v * w + p[r];
        return v;
    };
    // |xi(eta) - eta phi(xi(eta))| should scale like eta^{M+1}.
    std::vector<double> etas{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
    std::vector<double> lx, ly;
    for (double eta : etas) {
        double z = 0.0;
        for (int m = M; m >= 1; --m) z = (z + xi.coefficients[m]) * eta;
        double resid = std::abs(z - eta * phi_of(z));
        lx.push_back(std::log(eta));
        ly.push_back(std::log(resid));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    double n = static_cast<double>(lx.size());
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope > M + 0.7);
}

TEST_CASE("convergent case: partial sums reach the root under the contour condition") {
    // phi(z) = 1 + (z-a)/10 + (z-a)^2/50 about a = 0.05, eta = 0.1.
    const double a = 0.05, eta = 0.1;
    auto phi_of = [&](Complex z) { return 1.0 + 0.1 * (z - a) + 0.02 * (z - a) * (z - a); };
    // sup over a contour |z-a| = 1 of |eta phi(z) - a| / |z-a| stays below 1.
    double sup = 0.0;
    for (int i = 0; i < 360; ++i) {
        Complex z = a + std::polar(1.0, i * M_PI / 180.0);
        sup = std::max(sup, std::abs(eta * phi_of(z) - a) / std::abs(z - a));
    }
    REQUIRE(sup < 1.0);

    // Effective series for z = a + (eta phi(z) - a): coefficients of eta phi - a.
    std::vector<double> c(13, 0.0);
    c[0] = eta * 1.0 - a;
    c[1] = eta * 0.1;
    c[2] = eta * 0.02;
    auto xi = revert(FormalSeries(a, c), 12);
    double approx_root = xi.value_at_one();

    double z = a;
    for (int it = 0; it < 400; ++it) z = eta * phi_of(z).real();
    CHECK(std::abs(approx_root - z) < 1e-8);
}

TEST_CASE("multinomial power basics") {
    std::vector<double> c{1.0, 1.0};
    auto out = multinomial_power(c, 2, 2);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 2.0);
    CHECK(out[2] == 1.0);

    std::vector<double> id{0.3, -0.7, 0.2};
    auto one = multinomial_power(id, 1, 2);
    CHECK(one[0] == Approx(0.3));
    CHECK(one[1] == Approx(-0.7));
    CHECK(one[2] == Approx(0.2));

    auto g = testref::rng(113);
    for (int draw = 0; draw < 10; ++draw) {
        std::vector<double> r;
        for (int i = 0; i < 6; ++i) r.push_back(testref::uniform(g, -1.0, 1.0));
        auto cubed = multinomial_power(r, 3, 5);
        auto oracle = testref::power_by_convolution(r, 3, 5);
        for (int k = 0; k <= 5; ++k)
            CHECK(cubed[k] == Approx(oracle[k]).epsilon(1e-13));
    }
}

TEST_CASE("derivative weight enumeration") {
    auto w20 = leibniz_derivative_weights(2, 0);
    REQUIRE(w20.size() == 1);
    CHECK(w20[0] == std::vector<int>{0, 0});

    auto w21 = leibniz_derivative_weights(2, 1);
    REQUIRE(w21.size() == 2);
    CHECK(w21[0] == std::vector<int>{0, 1});
    CHECK(w21[1] == std::vector<int>{1, 0});

    for (int s = 1; s <= 4; ++s)
        for (int r = 0; r <= 5; ++r) {
            double binom = 1.0;
            for (int t = 0; t < s - 1; ++t) binom = binom * (r + s - 1 - t) / (t + 1);
            CHECK(leibniz_derivative_weights(s, r).size() ==
                  static_cast<std::size_t>(std::llround(binom)));
        }
}

TEST_CASE("derivative weights rebuild scaled derivatives of a reciprocal product") {
    // (1/r!) (d/da)^r prod 1/(x_k - a) = sum over compositions of prod (x_k-a)^{-1-k_k}.
    auto g = testref::rng(127);
    const int s = 3, r = 2;
    std::vector<double> x{testref::uniform(g, 2.0, 3.0), testref::uniform(g, 4.0, 5.0),
                          testref::uniform(g, 6.0, 7.0)};
    const double a = 0.3;
    double via_weights = 0.0;
    for (const auto& comp : leibniz_derivative_weights(s, r)) {
        double term = 1.0;
        for (int k = 0; k < s; ++k) term *= std::pow(x[k] - a, -1.0 - comp[k]);
        via_weights += term;
    }
    auto f = [&](double t) { return 1.0 / ((x[0] - t) * (x[1] - t) * (x[2] - t)); };
    double via_fd = testref::scaled_derivative(f, a, r, 1e-3);
    CHECK(via_weights == Approx(via_fd).epsilon(1e-7));
}
