#pragma once

#include <complex>
#include <limits>

#include "ecs/types.hpp"

namespace ecs {

// Elliptic nome q = exp(-beta/2).  q = 0 encodes the trigonometric limit beta = +inf.
struct Nome {
    double q = 0.0;
    double beta = std::numeric_limits<double>::infinity();

    static Nome from_q(double q);
    static Nome from_beta(double beta);
    bool trigonometric() const { return q == 0.0; }
};

// Truncation of the infinite products/sums.  The tail of a truncated product is
// bounded by q^(2*product_terms)/(1-q^2) per retained factor, so product_terms is
// chosen so that q^(2T) is below the requested precision target.
struct EllipticConfig {
    int product_terms = 1;
    int precision_digits = 15;

    static EllipticConfig for_nome(const Nome& nome, int precision_digits = 15);
};

// theta(r) = sin(r/2) * prod_{n=1..T} (1 - 2 q^{2n} cos r + q^{4n}).
Complex theta(Complex r, const Nome& nome, const EllipticConfig& cfg);

// Theta(z) = (1-z) * prod_{m=1..T} (1 - q^{2m} z)(1 - q^{2m}/z).  Requires z != 0.
Complex capital_theta(Complex z, const Nome& nome, const EllipticConfig& cfg);

// V(r) = sum_{|m|<=M} 1 / (4 sin^2((r + i beta m)/2));  equals -d^2/dr^2 log theta(r).
Complex potential_v(Complex r, const Nome& nome, const EllipticConfig& cfg);

// c0 = 1/12 - sum_{n>=1} 2 q^{2n} / (1 - q^{2n})^2.
double c0(const Nome& nome, const EllipticConfig& cfg);

// phi(x) = theta'(x)/theta(x), by term-wise analytic differentiation of the product.
Complex theta_log_deriv(Complex x, const Nome& nome, const EllipticConfig& cfg);

// f(x) = (V(x) - phi(x)^2 - c0) / 2; even in x.
Complex f_aux(Complex x, const Nome& nome, const EllipticConfig& cfg);

// S_nu = |nu| q^{|nu|-nu} / (1 - q^{2|nu|}) for nu != 0, S_0 = 0.
double s_coeff(int nu, const Nome& nome);

}  // namespace ecs
