#pragma once

#include <vector>

#include "ecs/lattice.hpp"
#include "ecs/solver.hpp"

namespace ecs {

// Particle coordinates on the circle, -pi <= x_j <= pi.
struct PhasePoint {
    std::vector<double> coords;
};

struct QuadratureConfig {
    int nodes_per_contour = 256;     // power of two >= 64
    std::vector<double> epsilons;    // empty: beta*j/(N+1), or 0.5*j at q = 0
    double fd_step = 1e-3;
    int fd_levels = 3;
    // Re-evaluate each contour integral on a second admissible epsilon set and
    // require agreement (Cauchy); disable only inside large verified sweeps.
    bool check_contours = true;
    bool check_nodes = false;  // doubling check, off by default (costly)

    static QuadratureConfig defaults_for(const ModelParams& params, int nodes = 256);
};

std::vector<double> default_epsilons(const ModelParams& params);

// Shared contour tables for extracting several f_n at the same z.
class FnQuadrature {
public:
    FnQuadrature(std::vector<Complex> z, const ModelParams& params,
                 const QuadratureConfig& quad);

    // The contour integral for one integer vector n.
    Complex coefficient(const LatticeVector& n) const;

private:
    struct Tables;
    std::vector<double> epsilons_;
    int nodes_;
    std::vector<std::vector<Complex>> pair_pow_;   // [pair][t]: Theta(xi_j/xi_k)^lambda
    std::vector<std::vector<Complex>> axis_fac_;   // [k][t]: 1 / prod_j Theta(z_j/xi_k)^lambda
    int n_particles_;
};

// f_n(z) by N-fold trapezoidal contour quadrature; |z_j| = 1 required.
Complex f_n(const LatticeVector& n, const std::vector<Complex>& z, const ModelParams& params,
            const QuadratureConfig& quad);

// Psi_0(x) = prod_{j<k} theta(x_k - x_j)^lambda.
Complex psi0(const PhasePoint& x, const ModelParams& params);

// F^_n(x) = f_n(z) Psi_0(x) with z_j = e^{i x_j}.
Complex f_hat(const LatticeVector& n, const PhasePoint& x, const ModelParams& params,
              const QuadratureConfig& quad);

// F(x;y) = prod theta(x_k-x_j)^lambda prod theta(y_j-y_k)^lambda / prod theta(x_j-y_k)^lambda.
Complex kernel_F(const PhasePoint& x, const PhasePoint& y, const ModelParams& params);

// F'(x;y) = c e^{i P sum(x_j - y_j)} F(x;y).
Complex kernel_F_prime(const PhasePoint& x, const PhasePoint& y, const ModelParams& params,
                       double p_momentum, Complex c);

// Residual of the kernel differential identity
// sum_j (d^2/dx_j^2 - d^2/dy_j^2) F = gamma sum_{j<k} (V(x_k-x_j) - V(y_j-y_k)) F,
// by Richardson-extrapolated central differences; relative to the largest term.
double verify_lemma1(const PhasePoint& x, const PhasePoint& y, const ModelParams& params,
                     const QuadratureConfig& quad);

// Residual of H F^_n = E0(n) F^_n - gamma sum_nu S_nu F^_{n+nu}, truncated at nu_cutoff,
// with the S_nu tail estimate folded in.
double verify_prop1(const LatticeVector& n, const PhasePoint& x, const ModelParams& params,
                    const QuadratureConfig& quad, int nu_cutoff);

// Psi_n(x) = sum over |m - n| <= support_cut of alpha_n(m) F^_m(x).
Complex assemble_psi(const LatticeVector& n, const PhasePoint& x, const SpectralResult& result,
                     const ModelParams& params, const QuadratureConfig& quad, int support_cut);

// |H Psi - E Psi| / |E Psi| at x, H applied by finite differences.
double psi_eigen_residual(const SpectralResult& result, const PhasePoint& x,
                          const ModelParams& params, const QuadratureConfig& quad,
                          int support_cut);

}  // namespace ecs
