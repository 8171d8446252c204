#pragma once

#include <limits>
#include <string>
#include <vector>

#include "ecs/lagrange.hpp"
#include "ecs/lattice.hpp"

namespace ecs {

struct TruncationPolicy {
    int s_max = 8;         // highest retained power of gamma
    int nu_cutoff = 8;     // max |nu| per elementary shift
    int shell_radius = 12; // max lattice distance retained around n
    // Budget for coefficient mass clipped at the shell boundary, relative to
    // max(1, |E0(n)|); exceeding it raises TruncationError.
    double tail_tolerance = 1e-8;
};

struct GateReport {
    double b_value = 0.0;  // B evaluated at b = 0
    bool passed = false;
    // Radius of the eigenvalue enclosure around E0(n) + a, set when the gate passes.
    double enclosure = std::numeric_limits<double>::quiet_NaN();
};

struct SpectralResult {
    LatticeVector base;
    double eigenvalue = 0.0;
    std::vector<double> eta_terms;  // explicit solver: term m is O(q^{2m})
    CoefficientMap coefficients;
    HypothesisConstants constants;
    GateReport gate;
    std::string method;
    int iterations = 0;
    double truncation_tail = 0.0;
    bool non_partition = false;
    bool contraction_warning = false;  // gate region violated on entry (implicit)
    bool branch_ambiguous = false;     // degenerate branch tracking hit a tie
};

struct PerturbativeResult {
    SpectralResult result;
    std::vector<double> energy_orders;             // E^{(s)}, s = 0..s_max
    std::vector<CoefficientMap> coefficient_orders;  // alpha^{(s)}
};

// Order-by-order recursion in powers of gamma, resummed at the model's gamma.
PerturbativeResult perturbative_solve(const LatticeVector& n, const ModelParams& params,
                                      const TruncationPolicy& policy);

struct PhiEvaluation {
    // Phi^{(0)}(z): the truncated shift-series evaluated at z, minus z itself.
    double value = 0.0;
    std::vector<double> derivative_values;  // Phi^{(r)}(z), r = 0..R
    double truncation_tail_estimate = 0.0;
};

// Taylor stack of the eigenvalue self-map about z; derivative_orders = R.
PhiEvaluation phi_series(double z, const LatticeVector& n, const ModelParams& params,
                         const TruncationPolicy& policy, int derivative_orders = 0);

// Coefficient function G_n(z; m).
double g_series(double z, const LatticeVector& m, const LatticeVector& n,
                const ModelParams& params, const TruncationPolicy& policy);

// Fixed-point iteration E~ <- Phi_n(E~) starting from a.
SpectralResult implicit_solve(const LatticeVector& n, const ModelParams& params,
                              const TruncationPolicy& policy,
                              const HypothesisConstants& constants, int max_iter = 200,
                              double tol = 1e-12);

// Series reversion of the self-map about a, truncated at eta order M.
SpectralResult explicit_solve(const LatticeVector& n, const ModelParams& params,
                              const TruncationPolicy& policy,
                              const HypothesisConstants& constants, int eta_order);

// Degenerate variant over the resonance set of n; returns R+1 branches.
std::vector<SpectralResult> degenerate_solve(const LatticeVector& n, const ModelParams& params,
                                             const TruncationPolicy& policy, int radius,
                                             int max_iter = 200, double tol = 1e-12);

}  // namespace ecs
