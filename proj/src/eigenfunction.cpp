#include "ecs/eigenfunction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "ecs/errors.hpp"

namespace ecs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_point(const PhasePoint& x, const ModelParams& params) {
    if (static_cast<int>(x.coords.size()) != params.n_particles)
        throw DomainError("phase point length does not match N");
}

bool lambda_is_integer(double lambda) {
    return std::abs(lambda - std::round(lambda)) < 1e-12;
}

// Phase-continuous log of a cyclic table of nonvanishing values.
std::vector<Complex> unwrapped_log(const std::vector<Complex>& values) {
    std::vector<Complex> logs(values.size());
    logs[0] = std::log(values[0]);
    for (std::size_t t = 1; t < values.size(); ++t)
        logs[t] = logs[t - 1] + std::log(values[t] / values[t - 1]);
    return logs;
}

std::vector<double> second_epsilon_set(const std::vector<double>& eps, double beta) {
    std::vector<double> out(eps.size());
    for (std::size_t j = 0; j < eps.size(); ++j) {
        double upper = j + 1 < eps.size() ? eps[j + 1]
                       : std::isinf(beta) ? eps[j] + 0.5
                                          : beta;
        out[j] = 0.5 * (eps[j] + upper);
    }
    return out;
}

// Richardson extrapolation of 4th-order central second differences.
// Steps h*2^l, l = 0..levels-1; eliminates h^4, h^6, ... error terms.
Complex second_derivative(const std::function<Complex(double)>& f, double h, int levels) {
    std::vector<Complex> d(levels);
    for (int l = 0; l < levels; ++l) {
        double step = h * std::pow(2.0, l);
        d[l] = (-f(-2.0 * step) + 16.0 * f(-step) - 30.0 * f(0.0) + 16.0 * f(step) -
                f(2.0 * step)) /
               (12.0 * step * step);
    }
    for (int k = 1; k < levels; ++k) {
        double factor = std::pow(2.0, 2.0 * k + 2.0);
        for (int l = 0; l + k < levels; ++l)
            d[l] = (factor * d[l] - d[l + 1]) / (factor - 1.0);
    }
    return d[0];
}

double coordinate_spread(const PhasePoint& x, const PhasePoint& y) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : x.coords) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : y.coords) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

// Per-factor principal logs of theta over the kernel's argument list; branch
// selected nearest to a reference log when one is supplied, so that finite
// difference stencils stay on one sheet.
struct KernelLogs {
    std::vector<Complex> logs;  // x-pairs, then y-pairs, then cross terms
};

KernelLogs kernel_logs(const PhasePoint& x, const PhasePoint& y, const ModelParams& params,
                       const KernelLogs* reference) {
    const int N = params.n_particles;
    const auto cfg = EllipticConfig::for_nome(params.nome);
    KernelLogs out;
    auto push = [&](Complex arg) {
        Complex th = theta(arg, params.nome, cfg);
        if (std::abs(th) < 1e-12)
            throw PoleError("kernel_F: theta factor vanishes (pole crossing)");
        Complex lg = std::log(th);
        if (reference) {
            double delta = (reference->logs[out.logs.size()] - lg).imag();
            lg += Complex(0.0, kTwoPi * std::round(delta / kTwoPi));
        }
        out.logs.push_back(lg);
    };
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k) push(Complex(x.coords[k] - x.coords[j], 0.0));
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k) push(Complex(y.coords[j] - y.coords[k], 0.0));
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) push(Complex(x.coords[j] - y.coords[k], 0.0));
    return out;
}

Complex kernel_from_logs(const KernelLogs& logs, const ModelParams& params) {
    const int N = params.n_particles;
    const int npairs = N * (N - 1) / 2;
    Complex sum = 0.0;
    std::size_t idx = 0;
    for (int i = 0; i < 2 * npairs; ++i) sum += logs.logs[idx++];
    for (int i = 0; i < N * N; ++i) sum -= logs.logs[idx++];
    return std::exp(params.lambda * sum);
}

}  // namespace

std::vector<double> default_epsilons(const ModelParams& params) {
    const int N = params.n_particles;
    std::vector<double> eps(N);
    for (int j = 0; j < N; ++j)
        eps[j] = params.nome.trigonometric() ? 0.5 * (j + 1)
                                             : params.nome.beta * (j + 1) / (N + 1);
    return eps;
}

QuadratureConfig QuadratureConfig::defaults_for(const ModelParams& params, int nodes) {
    QuadratureConfig q;
    q.nodes_per_contour = nodes;
    q.epsilons = default_epsilons(params);
    return q;
}

struct FnQuadrature::Tables {};

FnQuadrature::FnQuadrature(std::vector<Complex> z, const ModelParams& params,
                           const QuadratureConfig& quad) {
    const int N = params.n_particles;
    n_particles_ = N;
    if (static_cast<int>(z.size()) != N) throw DomainError("f_n: z length does not match N");
    for (const auto& zj : z)
        if (std::abs(std::abs(zj) - 1.0) > 1e-12)
            throw DomainError("f_n: z components must have unit modulus");

    nodes_ = quad.nodes_per_contour;
    if (nodes_ < 64 || (nodes_ & (nodes_ - 1)) != 0)
        throw DomainError("nodes_per_contour must be a power of two >= 64");

    epsilons_ = quad.epsilons.empty() ? default_epsilons(params) : quad.epsilons;
    if (static_cast<int>(epsilons_.size()) != N)
        throw DomainError("epsilons length does not match N");
    double prev = 0.0;
    for (double e : epsilons_) {
        if (!(e > prev)) throw DomainError("contour violation: need 0 < eps_1 < ... < eps_N");
        prev = e;
    }
    if (!(prev < params.nome.beta))
        throw DomainError("contour violation: eps_N must stay below beta");

    const auto cfg = EllipticConfig::for_nome(params.nome);
    const double lambda = params.lambda;
    const int P = nodes_;

    // Theta(xi_j/xi_k)^lambda depends only on t_j - t_k mod P.
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k) {
            double rho = std::exp(epsilons_[j] - epsilons_[k]);
            std::vector<Complex> vals(P);
            for (int t = 0; t < P; ++t)
                vals[t] = capital_theta(rho * std::polar(1.0, kTwoPi * t / P), params.nome, cfg);
            auto logs = unwrapped_log(vals);
            std::vector<Complex> pow_vals(P);
            for (int t = 0; t < P; ++t) pow_vals[t] = std::exp(lambda * logs[t]);
            pair_pow_.push_back(std::move(pow_vals));
        }

    // 1 / prod_j Theta(z_j/xi_k)^lambda collapses to one table per axis k.
    for (int k = 0; k < N; ++k) {
        std::vector<Complex> denom_log(P, Complex(0.0, 0.0));
        for (int j = 0; j < N; ++j) {
            std::vector<Complex> vals(P);
            for (int t = 0; t < P; ++t)
                vals[t] = capital_theta(z[j] * std::exp(-epsilons_[k]) *
                                            std::polar(1.0, -kTwoPi * t / P),
                                        params.nome, cfg);
            auto logs = unwrapped_log(vals);
            for (int t = 0; t < P; ++t) denom_log[t] += logs[t];
        }
        std::vector<Complex> fac(P);
        for (int t = 0; t < P; ++t) fac[t] = std::exp(-lambda * denom_log[t]);
        axis_fac_.push_back(std::move(fac));
    }
}

Complex FnQuadrature::coefficient(const LatticeVector& n) const {
    const int N = n_particles_;
    if (static_cast<int>(n.size()) != N) throw DomainError("f_n: n length does not match N");
    const int P = nodes_;

    // Per-axis factor xi_k^{n_k} / prod_j Theta(z_j/xi_k)^lambda.
    std::vector<std::vector<Complex>> axis(N, std::vector<Complex>(P));
    for (int k = 0; k < N; ++k) {
        double radial = std::exp(epsilons_[k] * n[k]);
        for (int t = 0; t < P; ++t)
            axis[k][t] = radial * std::polar(1.0, kTwoPi * t * n[k] / P) * axis_fac_[k][t];
    }

    KahanSum re, im;
    if (N == 2) {
        const auto& pp = pair_pow_[0];
        for (int t0 = 0; t0 < P; ++t0)
            for (int t1 = 0; t1 < P; ++t1) {
                Complex v = axis[0][t0] * axis[1][t1] * pp[(t0 - t1 + P) % P];
                re.add(v.real());
                im.add(v.imag());
            }
    } else {
        std::vector<int> t(N, 0);
        auto recurse = [&](auto&& self, int pos, Complex acc) -> void {
            if (pos == N) {
                int pair = 0;
                for (int j = 0; j < N; ++j)
                    for (int k = j + 1; k < N; ++k)
                        acc *= pair_pow_[pair++][(t[j] - t[k] + P) % P];
                re.add(acc.real());
                im.add(acc.imag());
                return;
            }
            for (t[pos] = 0; t[pos] < P; ++t[pos])
                self(self, pos + 1, acc * axis[pos][t[pos]]);
        };
        recurse(recurse, 0, Complex(1.0, 0.0));
    }
    double norm = std::pow(static_cast<double>(P), N);
    return Complex(re.value(), im.value()) / norm;
}

Complex f_n(const LatticeVector& n, const std::vector<Complex>& z, const ModelParams& params,
            const QuadratureConfig& quad) {
    FnQuadrature primary(z, params, quad);
    Complex value = primary.coefficient(n);

    if (quad.check_contours) {
        QuadratureConfig alt = quad;
        alt.check_contours = false;
        alt.epsilons = second_epsilon_set(
            quad.epsilons.empty() ? default_epsilons(params) : quad.epsilons,
            params.nome.beta);
        Complex other = FnQuadrature(z, params, alt).coefficient(n);
        if (std::abs(other - value) > 1e-8 * std::max(1.0, std::abs(value)))
            throw NoConvergenceError(
                "f_n: contour-shift disagreement " + std::to_string(std::abs(other - value)));
    }
    if (quad.check_nodes) {
        QuadratureConfig dbl = quad;
        dbl.check_contours = false;
        dbl.check_nodes = false;
        dbl.nodes_per_contour = 2 * quad.nodes_per_contour;
        Complex other = f_n(n, z, params, dbl);
        if (std::abs(other - value) > 1e-9 * std::max(1.0, std::abs(value)))
            throw NoConvergenceError("f_n: node-doubling disagreement");
    }
    return value;
}

Complex psi0(const PhasePoint& x, const ModelParams& params) {
    check_point(x, params);
    const auto cfg = EllipticConfig::for_nome(params.nome);
    const int N = params.n_particles;
    const bool integer_lambda = lambda_is_integer(params.lambda);
    Complex value = 1.0;
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k) {
            Complex th = theta(Complex(x.coords[k] - x.coords[j], 0.0), params.nome, cfg);
            if (!integer_lambda && std::abs(th) < 1e-10)
                throw DomainError("psi0: coincident coordinates with non-integer lambda");
            value *= std::pow(th, params.lambda);
        }
    return value;
}

Complex f_hat(const LatticeVector& n, const PhasePoint& x, const ModelParams& params,
              const QuadratureConfig& quad) {
    check_point(x, params);
    std::vector<Complex> z(params.n_particles);
    for (int j = 0; j < params.n_particles; ++j) z[j] = std::polar(1.0, x.coords[j]);
    return f_n(n, z, params, quad) * psi0(x, params);
}

Complex kernel_F(const PhasePoint& x, const PhasePoint& y, const ModelParams& params) {
    check_point(x, params);
    check_point(y, params);
    return kernel_from_logs(kernel_logs(x, y, params, nullptr), params);
}

Complex kernel_F_prime(const PhasePoint& x, const PhasePoint& y, const ModelParams& params,
                       double p_momentum, Complex c) {
    double phase = 0.0;
    for (int j = 0; j < params.n_particles; ++j) phase += x.coords[j] - y.coords[j];
    return c * std::polar(1.0, p_momentum * phase) * kernel_F(x, y, params);
}

double verify_lemma1(const PhasePoint& x, const PhasePoint& y, const ModelParams& params,
                     const QuadratureConfig& quad) {
    check_point(x, params);
    check_point(y, params);
    const int N = params.n_particles;
    const auto cfg = EllipticConfig::for_nome(params.nome);
    const double h = quad.fd_step * std::max(1.0, coordinate_spread(x, y));

    KernelLogs center = kernel_logs(x, y, params, nullptr);
    Complex f_center = kernel_from_logs(center, params);

    auto displaced = [&](bool in_x, int j, double d) {
        PhasePoint xx = x, yy = y;
        (in_x ? xx : yy).coords[j] += d;
        return kernel_from_logs(kernel_logs(xx, yy, params, &center), params);
    };

    Complex lhs = 0.0;
    for (int j = 0; j < N; ++j) {
        lhs += second_derivative([&](double d) { return displaced(true, j, d); }, h,
                                 quad.fd_levels);
        lhs -= second_derivative([&](double d) { return displaced(false, j, d); }, h,
                                 quad.fd_levels);
    }

    Complex vsum = 0.0;
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k)
            vsum += potential_v(Complex(x.coords[k] - x.coords[j], 0.0), params.nome, cfg) -
                    potential_v(Complex(y.coords[j] - y.coords[k], 0.0), params.nome, cfg);
    Complex rhs = params.gamma * vsum * f_center;

    double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    return std::abs(lhs - rhs) / scale;
}

double verify_prop1(const LatticeVector& n, const PhasePoint& x, const ModelParams& params,
                    const QuadratureConfig& quad, int nu_cutoff) {
    check_point(x, params);
    const int N = params.n_particles;
    const auto cfg = EllipticConfig::for_nome(params.nome);
    const double h = quad.fd_step;

    QuadratureConfig inner = quad;
    inner.check_nodes = false;

    auto fhat_at = [&](const PhasePoint& pt, const LatticeVector& m) {
        return f_hat(m, pt, params, inner);
    };

    // H acting at x by finite differences.
    Complex lap = 0.0;
    for (int j = 0; j < N; ++j) {
        auto slice = [&](double d) {
            PhasePoint xx = x;
            xx.coords[j] += d;
            return fhat_at(xx, n);
        };
        lap += second_derivative(slice, h, quad.fd_levels);
    }
    Complex center = fhat_at(x, n);
    Complex vsum = 0.0;
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k)
            vsum += potential_v(Complex(x.coords[j] - x.coords[k], 0.0), params.nome, cfg);
    Complex lhs = -lap + params.gamma * vsum * center;

    // Right side: shared tables at x serve every shifted index.
    std::vector<Complex> z(N);
    for (int j = 0; j < N; ++j) z[j] = std::polar(1.0, x.coords[j]);
    FnQuadrature grid(z, params, inner);
    Complex psi = psi0(x, params);

    Complex rhs = free_energy(n, params) * center;
    double last_magnitude = 0.0;
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k)
            for (int nu = -nu_cutoff; nu <= nu_cutoff; ++nu) {
                if (nu == 0) continue;
                double s = s_coeff(nu, params.nome);
                if (s == 0.0) continue;
                LatticeVector m = n;
                m[j] += nu;
                m[k] -= nu;
                Complex term = s * grid.coefficient(m) * psi;
                if (std::abs(nu) == nu_cutoff)
                    last_magnitude = std::max(last_magnitude, std::abs(term));
                rhs -= params.gamma * term;
            }

    double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    double tail = 2.0 * std::abs(params.gamma) * last_magnitude;
    return (std::abs(lhs - rhs) + tail) / scale;
}

Complex assemble_psi(const LatticeVector& n, const PhasePoint& x, const SpectralResult& result,
                     const ModelParams& params, const QuadratureConfig& quad, int support_cut) {
    check_point(x, params);
    std::vector<Complex> z(params.n_particles);
    for (int j = 0; j < params.n_particles; ++j) z[j] = std::polar(1.0, x.coords[j]);
    QuadratureConfig inner = quad;
    inner.check_nodes = false;
    FnQuadrature grid(z, params, inner);
    Complex psi = psi0(x, params);

    KahanSum re, im;
    for (const auto& [r, alpha] : result.coefficients.entries()) {
        if (max_abs_component(r) > support_cut) continue;
        Complex term = alpha * grid.coefficient(shifted(n, r)) * psi;
        re.add(term.real());
        im.add(term.imag());
    }
    return {re.value(), im.value()};
}

double psi_eigen_residual(const SpectralResult& result, const PhasePoint& x,
                          const ModelParams& params, const QuadratureConfig& quad,
                          int support_cut) {
    const int N = params.n_particles;
    const auto cfg = EllipticConfig::for_nome(params.nome);
    const double h = quad.fd_step;

    auto psi_at = [&](const PhasePoint& pt) {
        return assemble_psi(result.base, pt, result, params, quad, support_cut);
    };

    Complex lap = 0.0;
    for (int j = 0; j < N; ++j) {
        auto slice = [&](double d) {
            PhasePoint xx = x;
            xx.coords[j] += d;
            return psi_at(xx);
        };
        lap += second_derivative(slice, h, quad.fd_levels);
    }
    Complex center = psi_at(x);
    Complex vsum = 0.0;
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k)
            vsum += potential_v(Complex(x.coords[j] - x.coords[k], 0.0), params.nome, cfg);
    Complex h_psi = -lap + params.gamma * vsum * center;
    Complex e_psi = result.eigenvalue * center;
    return std::abs(h_psi - e_psi) / std::max(std::abs(e_psi), 1e-300);
}

}  // namespace ecs
