#include "ecs/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "ecs/errors.hpp"

namespace ecs {

int TruncatedOperator::index_of(const RelVec& r) const {
    auto it = std::lower_bound(basis.begin(), basis.end(), r);
    if (it == basis.end() || *it != r) return -1;
    return static_cast<int>(it - basis.begin());
}

TruncatedOperator build_truncated_operator(const LatticeVector& n, const ModelParams& params,
                                           int cutoff, const OracleOptions& opts) {
    if (cutoff < 1) throw DomainError("oracle cutoff must be >= 1");
    TruncatedOperator op;
    op.base = n;
    op.cutoff = cutoff;
    op.basis = zero_sum_shell(params.n_particles, cutoff);
    const std::size_t dim = op.basis.size();
    if (dim > opts.max_basis)
        throw DomainError("oracle basis size " + std::to_string(dim) +
                          " exceeds the configured maximum " + std::to_string(opts.max_basis));

    op.matrix = Eigen::MatrixXd::Zero(dim, dim);
    // Couplings run over every shift that stays inside the basis.
    const auto shifts = enumerate_shifts(params, 2 * cutoff + 1);
    for (std::size_t row = 0; row < dim; ++row) {
        op.matrix(row, row) = free_energy(shifted(n, op.basis[row]), params);
        for (const auto& sh : shifts) {
            RelVec target = op.basis[row];
            target[sh.j] -= sh.nu;
            target[sh.k] += sh.nu;
            int col = op.index_of(target);
            if (col < 0) continue;
            op.matrix(row, col) -= params.gamma * s_coeff(sh.nu, params.nome);
        }
    }
    return op;
}

OracleEigenpair oracle_eigenpair(const TruncatedOperator& op, const LatticeVector& n) {
    if (n != op.base) throw DomainError("oracle_eigenpair: operator was built around a different n");
    const RelVec origin(op.base.size(), 0);
    const int origin_idx = op.index_of(origin);
    if (origin_idx < 0) throw DomainError("oracle_eigenpair: base point missing from basis");

    Eigen::EigenSolver<Eigen::MatrixXd> eig(op.matrix);
    if (eig.info() != Eigen::Success)
        throw NoConvergenceError("oracle_eigenpair: eigendecomposition failed");

    const int dim = static_cast<int>(op.basis.size());
    int pick = 0;
    double best = -1.0, second = -1.0;
    double best_val = 0.0, second_val = 0.0;
    for (int i = 0; i < dim; ++i) {
        double overlap = std::abs(eig.eigenvectors()(origin_idx, i));
        if (overlap > best) {
            second = best;
            second_val = best_val;
            best = overlap;
            best_val = eig.eigenvalues()(i).real();
            pick = i;
        } else if (overlap > second) {
            second = overlap;
            second_val = eig.eigenvalues()(i).real();
        }
    }
    if (second > 0.0 && best > 0.0 && second / best > 1.0 - 1e-6 &&
        std::abs(best_val - second_val) > 1e-12 * std::max(1.0, std::abs(best_val)))
        throw AmbiguityError("oracle_eigenpair: two eigenvectors are equally concentrated at n",
                             best_val, second_val);

    OracleEigenpair out;
    std::complex<double> ev = eig.eigenvalues()(pick);
    double scale = op.matrix.cwiseAbs().maxCoeff();
    out.eigenvalue = ev.real();
    out.imaginary_part = ev.imag();
    out.truncation_artifact = std::abs(ev.imag()) > 1e-8 * std::max(1.0, scale);
    out.selection_overlap = best;

    Eigen::VectorXcd v = eig.eigenvectors().col(pick);
    std::complex<double> pivot = v(origin_idx);
    if (std::abs(pivot) == 0.0)
        throw DomainError("oracle_eigenpair: selected eigenvector vanishes at n");
    CoefficientMap coeffs(op.base);
    for (int i = 0; i < dim; ++i) {
        double value = (v(i) / pivot).real();
        if (value != 0.0) coeffs.set_relative(op.basis[i], value);
    }
    out.coefficients = std::move(coeffs);
    return out;
}

KsValue k_s_enumerate(int s, const RelVec& m, const ModelParams& params, int nu_cutoff) {
    if (s < 1) throw DomainError("k_s_enumerate: s must be >= 1");
    const int N = params.n_particles;
    if (static_cast<int>(m.size()) != N || component_sum(m) != 0)
        throw DomainError("k_s_enumerate: m must be a zero-sum vector of length N");
    const long pair_count = static_cast<long>(N) * (N - 1) / 2;
    if (static_cast<long>(s) * pair_count * 2 * nu_cutoff > 4'000'000L)
        throw DomainError("k_s_enumerate: s * N^2 * nu_cutoff over the enumeration limit");

    // Walk sums with no denominators: layered over the reachable box.
    const int radius = s * nu_cutoff;
    auto shell = zero_sum_shell(N, radius);
    std::map<RelVec, int> index_of;
    for (std::size_t i = 0; i < shell.size(); ++i) index_of[shell[i]] = static_cast<int>(i);
    auto it = index_of.find(m);

    const auto shifts = enumerate_shifts(params, nu_cutoff);
    std::vector<double> w(shell.size(), 0.0);
    w[index_of.at(RelVec(N, 0))] = 1.0;
    for (int step = 1; step <= s; ++step) {
        std::vector<double> next(shell.size(), 0.0);
        for (std::size_t i = 0; i < shell.size(); ++i) {
            if (w[i] == 0.0) continue;
            for (const auto& sh : shifts) {
                RelVec target = shell[i];
                target[sh.j] += sh.nu;
                target[sh.k] -= sh.nu;
                auto t = index_of.find(target);
                if (t != index_of.end())
                    next[t->second] += s_coeff(sh.nu, params.nome) * w[i];
            }
        }
        w = std::move(next);
    }

    KsValue out;
    out.value = std::pow(std::abs(params.gamma), s) * (it == index_of.end() ? 0.0 : w[it->second]);
    // Dropped sequences contain a factor with |nu| > nu_cutoff; any such up-step
    // must be repaid by down-steps carrying q^{2(nu_cutoff+1)} in total, and a
    // down-step of that size carries it directly.
    const double q = params.nome.q;
    if (q > 0.0) {
        double s_sum = 0.0;
        for (const auto& sh : shifts)
            if (sh.j == 0 && sh.k == 1) s_sum += s_coeff(sh.nu, params.nome);
        double per_step = pair_count * s_sum;
        out.tail_estimate = s * std::pow(std::abs(params.gamma), s) *
                            std::pow(per_step, s - 1) * pair_count *
                            2.0 * (nu_cutoff + 1) * std::pow(q, 2.0 * (nu_cutoff + 1));
    }
    return out;
}

std::vector<KsConjectureRow> k_s_conjecture_report(int s_min, int s_max,
                                                   const ModelParams& params, int nu_cutoff) {
    if (s_min < 1 || s_max < s_min) throw DomainError("k_s_conjecture_report: bad s range");
    const int N = params.n_particles;
    const double q = params.nome.q;
    std::vector<KsConjectureRow> rows;
    for (int s = s_min; s <= s_max; ++s) {
        KsConjectureRow row;
        row.s = s;
        row.q = q;
        row.k_s_zero = k_s_enumerate(s, RelVec(N, 0), params, nu_cutoff).value;
        if (q > 0.0) {
            double p = std::pow(q, 2.0 / N);
            double btilde = N * (N - 1) * std::abs(params.gamma) / std::pow(1.0 - p, 3);
            row.conjectured_bound =
                std::pow(btilde, s) * std::pow(q, 2.0 * std::ceil(static_cast<double>(s) / N));
        }
        row.ratio = row.conjectured_bound > 0.0 ? row.k_s_zero / row.conjectured_bound : 0.0;
        row.within_bound = row.k_s_zero <= row.conjectured_bound;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace ecs
