#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecs/elliptic.hpp"
#include "ecs/types.hpp"

namespace ecs {

// Global model input: particle number N, coupling parameter lambda > 1/2,
// gamma = 2 lambda (lambda - 1), and the nome.
struct ModelParams {
    int n_particles = 2;
    double lambda = 1.0;
    double gamma = 0.0;
    Nome nome;

    static ModelParams make(int n_particles, double lambda, double q);
};

// Elementary shift nu * E_jk with (E_jk)_l = delta_jl - delta_kl, 1 <= j < k <= N.
struct LatticeShift {
    int j = 0;  // 0-based
    int k = 1;
    int nu = 1;

    RelVec as_vector(int n_particles) const;
};

// Sparse coefficient map alpha(m) around a base point n.  Keys are the relative
// vectors m - n (zero component sum); the entry at m = n is the normalization.
class CoefficientMap {
public:
    CoefficientMap() = default;
    explicit CoefficientMap(LatticeVector base) : base_(std::move(base)) {}

    const LatticeVector& base() const { return base_; }
    double at_relative(const RelVec& r) const;
    double at(const LatticeVector& m) const { return at_relative(relative(m, base_)); }
    void set_relative(RelVec r, double value);
    void add_relative(const RelVec& r, double value);
    std::size_t size() const { return entries_.size(); }
    const std::map<RelVec, double>& entries() const { return entries_; }

private:
    LatticeVector base_;
    std::map<RelVec, double> entries_;
};

enum class ConstantsMode { RationalGrid, N2ClosedForm, ExhaustiveSearch };

std::string to_string(ConstantsMode mode);

// Caller-supplied parameters for the rational-grid mode: a = k1 + lambda k2 + a0
// with lambda = p/denominator and Delta = |a0| <= 1/(2 denominator).
struct RationalGridInput {
    long k1 = 0;
    long k2 = 0;
    double a0 = 0.0;
    long denominator = 1;
};

// Shift constants (a, Delta) of the spectral-gap condition
// |E0(m) - E0(n) - a| >= Delta for all admissible m != n.
struct HypothesisConstants {
    double a = 0.0;
    double delta = 0.0;
    ConstantsMode mode = ConstantsMode::ExhaustiveSearch;
    // Exhaustive-search results are shell minima, not certified global bounds.
    bool certified = false;
    int shell_radius = 0;
};

// Free energy E0(n) = sum_j (n_j + lambda (N+1-2j)/2)^2.
double free_energy(const LatticeVector& n, const ModelParams& params);

double resonance_tolerance(const LatticeVector& n, const ModelParams& params);

// (S alpha)(m) = sum_{j<k} sum_{0<|nu|<=nu_cutoff} S_nu alpha(m - nu E_jk).
CoefficientMap apply_shift_operator(const CoefficientMap& alpha, const ModelParams& params,
                                    int nu_cutoff);

// All m != n with zero relative component sum, max_j |m_j - n_j| <= radius,
// and |E0(m) - E0(n)| below the resonance tolerance.
std::vector<LatticeVector> find_resonances(const LatticeVector& n, const ModelParams& params,
                                           int radius);

HypothesisConstants hypothesis_constants(const LatticeVector& n, const ModelParams& params,
                                         ConstantsMode mode, int radius,
                                         std::optional<RationalGridInput> rational = {});

// B = N(N-1) |gamma| q^{2/(N+b)} / (1 - q^{2/(N+b)})^3;  0 at q = 0.
double bound_b(const ModelParams& params, double b_param);

// Convergence gate B < (Delta - |a|)/3.
bool convergence_gate(double b_value, const HypothesisConstants& constants);

struct DecayConstants {
    double k = 0.0;        // K  = 2/(N+b)
    double k_tilde = 0.0;  // K~ = b K / (1+2b)
    double c = 0.0;        // prefactor C
};

DecayConstants bound_kc(const ModelParams& params, double b_param);

// Shell of relative vectors r with zero component sum and max|r_j| <= radius,
// in lexicographic order.  Shared by the solvers and the truncated-matrix oracle.
std::vector<RelVec> zero_sum_shell(int n_particles, int radius);

// All shifts nu*E_jk with 0 < |nu| <= nu_cutoff and S_nu != 0.
std::vector<LatticeShift> enumerate_shifts(const ModelParams& params, int nu_cutoff);

// m - n lies in the cone generated by positive shifts (prefix sums >= 0).
bool positive_shift_reachable(const RelVec& r);

}  // namespace ecs
