#include "ecs/elliptic.hpp"

#include <algorithm>
#include <cmath>

#include "ecs/errors.hpp"

namespace ecs {

namespace {

constexpr double kPoleGuard = 1e-8;

}  // namespace

Nome Nome::from_q(double q) {
    if (!(q >= 0.0 && q < 1.0))
        throw DomainError("nome q must lie in [0,1), got " + std::to_string(q));
    Nome n;
    n.q = q;
    n.beta = q == 0.0 ? std::numeric_limits<double>::infinity() : -2.0 * std::log(q);
    return n;
}

Nome Nome::from_beta(double beta) {
    if (!(beta > 0.0))
        throw DomainError("beta must be positive, got " + std::to_string(beta));
    Nome n;
    n.beta = beta;
    n.q = std::isinf(beta) ? 0.0 : std::exp(-beta / 2.0);
    return n;
}

EllipticConfig EllipticConfig::for_nome(const Nome& nome, int precision_digits) {
    if (precision_digits < 1)
        throw DomainError("precision_digits must be positive");
    EllipticConfig cfg;
    cfg.precision_digits = precision_digits;
    if (nome.trigonometric()) {
        cfg.product_terms = 1;
    } else {
        // q^(2T) below the precision target with a few digits of slack.
        double target = -(precision_digits + 3) * std::log(10.0);
        int t = static_cast<int>(std::ceil(target / (2.0 * std::log(nome.q))));
        cfg.product_terms = std::clamp(t, 1, 8000);
    }
    return cfg;
}

Complex theta(Complex r, const Nome& nome, const EllipticConfig& cfg) {
    Complex value = std::sin(r / 2.0);
    if (nome.trigonometric()) return value;
    const Complex two_cos = 2.0 * std::cos(r);
    double q2n = 1.0;
    const double q2 = nome.q * nome.q;
    for (int n = 1; n <= cfg.product_terms; ++n) {
        q2n *= q2;
        value *= 1.0 - q2n * two_cos + q2n * q2n;
    }
    return value;
}

Complex capital_theta(Complex z, const Nome& nome, const EllipticConfig& cfg) {
    if (std::abs(z) == 0.0)
        throw DomainError("capital_theta: z = 0 is outside the domain");
    Complex value = 1.0 - z;
    if (nome.trigonometric()) return value;
    const Complex zinv = 1.0 / z;
    double q2m = 1.0;
    const double q2 = nome.q * nome.q;
    for (int m = 1; m <= cfg.product_terms; ++m) {
        q2m *= q2;
        value *= (1.0 - q2m * z) * (1.0 - q2m * zinv);
    }
    return value;
}

Complex potential_v(Complex r, const Nome& nome, const EllipticConfig& cfg) {
    // Terms with |m| beyond the truncation carry q^{2|m|} e^{|Im r|}; extend the
    // range so the tail stays below the precision target for complex arguments.
    int mrange = 0;
    if (!nome.trigonometric()) {
        mrange = cfg.product_terms +
                 static_cast<int>(std::ceil(std::abs(r.imag()) / nome.beta)) + 1;
    }
    KahanSum re, im;
    for (int m = -mrange; m <= mrange; ++m) {
        Complex arg = (r + Complex(0.0, m == 0 ? 0.0 : nome.beta * m)) / 2.0;
        Complex s = std::sin(arg);
        if (std::abs(s) < kPoleGuard)
            throw PoleError("potential_v: argument within guard distance of a pole");
        Complex term = 1.0 / (4.0 * s * s);
        re.add(term.real());
        im.add(term.imag());
    }
    return {re.value(), im.value()};
}

double c0(const Nome& nome, const EllipticConfig& cfg) {
    KahanSum sum;
    sum.add(1.0 / 12.0);
    if (!nome.trigonometric()) {
        double q2n = 1.0;
        const double q2 = nome.q * nome.q;
        for (int n = 1; n <= cfg.product_terms; ++n) {
            q2n *= q2;
            double d = 1.0 - q2n;
            sum.add(-2.0 * q2n / (d * d));
        }
    }
    return sum.value();
}

Complex theta_log_deriv(Complex x, const Nome& nome, const EllipticConfig& cfg) {
    Complex s = std::sin(x / 2.0);
    if (std::abs(s) < kPoleGuard)
        throw PoleError("theta_log_deriv: argument within guard distance of a theta zero");
    Complex value = 0.5 * std::cos(x / 2.0) / s;
    if (nome.trigonometric()) return value;
    const Complex two_cos = 2.0 * std::cos(x);
    const Complex sin_x = std::sin(x);
    double q2n = 1.0;
    const double q2 = nome.q * nome.q;
    for (int n = 1; n <= cfg.product_terms; ++n) {
        q2n *= q2;
        Complex factor = 1.0 - q2n * two_cos + q2n * q2n;
        if (std::abs(factor) < kPoleGuard)
            throw PoleError("theta_log_deriv: argument within guard distance of a theta zero");
        value += 2.0 * q2n * sin_x / factor;
    }
    return value;
}

Complex f_aux(Complex x, const Nome& nome, const EllipticConfig& cfg) {
    Complex phi = theta_log_deriv(x, nome, cfg);
    return (potential_v(x, nome, cfg) - phi * phi - c0(nome, cfg)) / 2.0;
}

double s_coeff(int nu, const Nome& nome) {
    if (nu == 0) return 0.0;
    const double a = std::abs(nu);
    if (nome.trigonometric()) return nu > 0 ? a : 0.0;
    return a * std::pow(nome.q, a - nu) / (1.0 - std::pow(nome.q, 2.0 * a));
}

}  // namespace ecs
