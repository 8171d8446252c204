#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ecs/lattice.hpp"

namespace ecs {

// Dense truncation of the lattice operator around n: basis = all m with zero
// relative component sum and max|m_j - n_j| <= cutoff, ordered lexicographically
// in m - n; entries M(m, m') = E0(m) delta(m,m') - gamma sum S_nu delta(m', m - nu E_jk).
struct TruncatedOperator {
    LatticeVector base;
    int cutoff = 0;
    std::vector<RelVec> basis;  // relative vectors, lexicographic
    Eigen::MatrixXd matrix;

    int index_of(const RelVec& r) const;  // -1 when outside the basis
};

struct OracleOptions {
    std::size_t max_basis = 20000;
};

TruncatedOperator build_truncated_operator(const LatticeVector& n, const ModelParams& params,
                                           int cutoff, const OracleOptions& opts = {});

struct OracleEigenpair {
    double eigenvalue = 0.0;
    CoefficientMap coefficients;  // rescaled so the n-component is 1
    double selection_overlap = 0.0;
    double imaginary_part = 0.0;   // of the selected eigenvalue, before discarding
    bool truncation_artifact = false;  // |imag| above 1e-8 * scale
};

// Diagonalize and pick the eigenpair whose eigenvector is largest at n.
OracleEigenpair oracle_eigenpair(const TruncatedOperator& op, const LatticeVector& n);

// Exact enumeration of K_s(m) = |gamma|^s sum over shift sequences of
// prod S_nu delta(m, sum nu E_jk), with |nu| <= nu_cutoff.
struct KsValue {
    double value = 0.0;
    double tail_estimate = 0.0;  // dropped |nu| > nu_cutoff contributions
};

KsValue k_s_enumerate(int s, const RelVec& m, const ModelParams& params, int nu_cutoff);

// Report-only comparison of K_s(0) with the conjectured bound
// Btilde^s q^{2 ceil(s/N)}; never asserted.
struct KsConjectureRow {
    int s = 0;
    double q = 0.0;
    double k_s_zero = 0.0;
    double conjectured_bound = 0.0;
    double ratio = 0.0;  // k_s_zero / bound
    bool within_bound = false;
};

std::vector<KsConjectureRow> k_s_conjecture_report(int s_min, int s_max,
                                                   const ModelParams& params, int nu_cutoff);

}  // namespace ecs
