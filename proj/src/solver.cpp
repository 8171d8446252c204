#include "ecs/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "ecs/errors.hpp"

namespace ecs {

namespace {

std::string vec_to_string(const std::vector<int>& v) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ")";
    return os.str();
}

// Smallest |E0(m) - E0(n)| over the shell; at q = 0 only points reachable by
// positive shifts matter because all other coefficients vanish identically.
double smallest_gap(const LatticeVector& n, const ModelParams& params, int radius,
                    bool reachable_only, LatticeVector* argmin = nullptr) {
    const double e0 = free_energy(n, params);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : zero_sum_shell(params.n_particles, radius)) {
        if (max_abs_component(r) == 0) continue;
        if (reachable_only && !positive_shift_reachable(r)) continue;
        LatticeVector m = shifted(n, r);
        double gap = std::abs(free_energy(m, params) - e0);
        if (gap < best) {
            best = gap;
            if (argmin) *argmin = m;
        }
    }
    return best;
}

HypothesisConstants shell_constants(const LatticeVector& n, const ModelParams& params,
                                    int radius) {
    HypothesisConstants c;
    c.a = 0.0;
    c.delta = smallest_gap(n, params, radius, params.nome.trigonometric());
    c.mode = ConstantsMode::ExhaustiveSearch;
    c.certified = false;
    c.shell_radius = radius;
    return c;
}

GateReport make_gate(const ModelParams& params, const HypothesisConstants& constants) {
    GateReport gate;
    gate.b_value = bound_b(params, 0.0);
    gate.passed = convergence_gate(gate.b_value, constants);
    if (gate.passed) {
        const double delta = constants.delta;
        const double abs_a = std::abs(constants.a);
        const double b = gate.b_value;
        double disc = (delta - b - abs_a) * (delta - b - abs_a) - 4.0 * b * b;
        gate.enclosure = 0.5 * (delta - b + abs_a - std::sqrt(disc));
    }
    return gate;
}

struct WalkSums {
    // arrivals[t][r]: sum over s <= s_max of gamma^s * path sums start -> terminal t
    // with denominator stacks over intermediate points only.
    std::vector<std::vector<double>> arrivals;
    std::vector<double> arrival_last_order;  // |terminal-0 contribution| at s = s_max
    // g_sums[shell index][r]: same with the endpoint denominator included.
    std::vector<std::vector<double>> g_sums;
    double escaped_weight = 0.0;
    const std::vector<RelVec>* shell = nullptr;
};

// Layered sum over shift sequences.  The denominator of every visited point
// depends only on that point, and the derivative stack composes associatively
// along a path, so the path sum is computed by a depth-by-depth sweep over the
// shell instead of walking each sequence.
WalkSums lattice_walk_sums(const LatticeVector& n_ref, const RelVec& start_rel,
                           const std::vector<RelVec>& terminals_rel, double z, int r_max,
                           bool want_g, const ModelParams& params,
                           const TruncationPolicy& policy,
                           const std::vector<RelVec>& shell) {
    const int R = r_max;
    const int npoints = static_cast<int>(shell.size());
    std::map<RelVec, int> index_of;
    for (int i = 0; i < npoints; ++i) index_of[shell[i]] = i;

    std::vector<int> terminal_idx;
    for (const auto& t : terminals_rel) {
        auto it = index_of.find(t);
        if (it == index_of.end())
            throw DomainError("walk: terminal outside the shell");
        terminal_idx.push_back(it->second);
    }
    auto start_it = index_of.find(start_rel);
    if (start_it == index_of.end()) throw DomainError("walk: start point outside the shell");

    const double e_ref = free_energy(n_ref, params);
    const double guard = resonance_tolerance(n_ref, params);
    std::vector<double> inv_denom(npoints, 0.0);
    std::vector<char> is_terminal(npoints, 0);
    for (int t : terminal_idx) is_terminal[t] = 1;
    for (int i = 0; i < npoints; ++i) {
        if (is_terminal[i]) continue;
        double d = free_energy(shifted(n_ref, shell[i]), params) - e_ref - z;
        inv_denom[i] = std::abs(d) < guard ? 0.0 : 1.0 / d;  // checked on first inflow
    }

    const auto shifts = enumerate_shifts(params, policy.nu_cutoff);
    struct Move {
        int from, to;
        double s;
    };
    std::vector<Move> moves;
    std::vector<std::pair<int, double>> boundary_moves;  // clipped at the shell edge
    for (int i = 0; i < npoints; ++i) {
        for (const auto& sh : shifts) {
            RelVec target = shell[i];
            target[sh.j] += sh.nu;
            target[sh.k] -= sh.nu;
            double s = s_coeff(sh.nu, params.nome);
            if (max_abs_component(target) > policy.shell_radius) {
                boundary_moves.push_back({i, s});
                continue;
            }
            moves.push_back({i, index_of[target], s});
        }
    }
    std::vector<char> clipped_from(npoints, 0);
    for (auto& [i, s] : boundary_moves) clipped_from[i] = 1;

    WalkSums out;
    out.shell = &shell;
    out.arrivals.assign(terminal_idx.size(), std::vector<double>(R + 1, 0.0));
    out.arrival_last_order.assign(terminal_idx.size(), 0.0);
    if (want_g) out.g_sums.assign(npoints, std::vector<double>(R + 1, 0.0));

    std::vector<std::vector<double>> w(npoints, std::vector<double>(R + 1, 0.0));
    std::vector<std::vector<double>> inflow(npoints, std::vector<double>(R + 1, 0.0));
    w[start_it->second][0] = 1.0;

    double gamma_pow = 1.0;
    for (int s = 1; s <= policy.s_max; ++s) {
        gamma_pow *= params.gamma;
        for (auto& row : inflow) std::fill(row.begin(), row.end(), 0.0);
        for (const auto& mv : moves) {
            const auto& src = w[mv.from];
            auto& dst = inflow[mv.to];
            for (int r = 0; r <= R; ++r)
                if (src[r] != 0.0) dst[r] += mv.s * src[r];
        }
        for (const auto& [i, sc] : boundary_moves)
            out.escaped_weight += std::abs(gamma_pow * sc * w[i][0]);

        for (std::size_t t = 0; t < terminal_idx.size(); ++t) {
            const auto& in = inflow[terminal_idx[t]];
            for (int r = 0; r <= R; ++r) out.arrivals[t][r] += gamma_pow * in[r];
            if (s == policy.s_max) out.arrival_last_order[t] = std::abs(gamma_pow * in[0]);
        }

        for (int i = 0; i < npoints; ++i) {
            auto& wi = w[i];
            if (is_terminal[i]) {
                std::fill(wi.begin(), wi.end(), 0.0);
                continue;
            }
            const auto& in = inflow[i];
            bool any = false;
            for (int r = 0; r <= R; ++r) any = any || in[r] != 0.0;
            if (!any) {
                std::fill(wi.begin(), wi.end(), 0.0);
                continue;
            }
            if (inv_denom[i] == 0.0)
                throw ResonanceError(
                    "energy denominator below resonance tolerance at m = " +
                        vec_to_string(shifted(n_ref, shell[i])),
                    shifted(n_ref, shell[i]));
            const double invd = inv_denom[i];
            for (int r = R; r >= 0; --r) {
                double acc = 0.0;
                double p = invd;
                for (int j = r; j >= 0; --j) {
                    acc += in[j] * p;
                    p *= invd;
                }
                wi[r] = acc;
            }
            if (want_g)
                for (int r = 0; r <= R; ++r) out.g_sums[i][r] += gamma_pow * wi[r];
        }
    }
    return out;
}

WalkSums single_point_walk(const LatticeVector& n, double z, int r_max, bool want_g,
                           const ModelParams& params, const TruncationPolicy& policy) {
    RelVec origin(params.n_particles, 0);
    auto shell = zero_sum_shell(params.n_particles, policy.shell_radius);
    return lattice_walk_sums(n, origin, {origin}, z, r_max, want_g, params, policy, shell);
}

// Phi fixed-point step with oscillation damping.
double damped_iterate(const std::function<double(double)>& phi, double start, int max_iter,
                      double tol, int* iterations) {
    double z = start;
    double prev_delta = 0.0;
    double omega = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        double next = phi(z);
        double delta = next - z;
        if (std::abs(delta) < tol) {
            if (iterations) *iterations = it;
            return next;
        }
        if (it > 1 && delta * prev_delta < 0.0 && std::abs(delta) >= std::abs(prev_delta))
            omega = 0.5;
        z = z + omega * delta;
        prev_delta = delta;
    }
    throw NoConvergenceError("fixed-point iteration did not converge in " +
                             std::to_string(max_iter) + " steps");
}

}  // namespace

PerturbativeResult perturbative_solve(const LatticeVector& n, const ModelParams& params,
                                      const TruncationPolicy& policy) {
    const int N = params.n_particles;
    if (static_cast<int>(n.size()) != N)
        throw DomainError("perturbative_solve: lattice vector length mismatch");

    // Resonance scan; at q = 0 only positive-shift-reachable points can enter the
    // recursion, so unreachable degeneracies are harmless there.
    {
        LatticeVector bad;
        double gap = smallest_gap(n, params, policy.shell_radius,
                                  params.nome.trigonometric(), &bad);
        if (gap < resonance_tolerance(n, params))
            throw ResonanceError("resonance at m = " + vec_to_string(bad), bad);
    }

    const auto shell = zero_sum_shell(N, policy.shell_radius);
    const int npoints = static_cast<int>(shell.size());
    std::map<RelVec, int> index_of;
    for (int i = 0; i < npoints; ++i) index_of[shell[i]] = i;
    const RelVec origin(N, 0);
    const int origin_idx = index_of.at(origin);

    const double e0 = free_energy(n, params);
    std::vector<double> inv_denom(npoints, 0.0);
    for (int i = 0; i < npoints; ++i) {
        if (i == origin_idx) continue;
        inv_denom[i] = 1.0 / (free_energy(shifted(n, shell[i]), params) - e0);
    }

    const auto shifts = enumerate_shifts(params, policy.nu_cutoff);
    struct Move {
        int from, to;
        double s;
    };
    std::vector<Move> moves;
    std::vector<std::pair<int, double>> boundary_moves;
    for (int i = 0; i < npoints; ++i)
        for (const auto& sh : shifts) {
            RelVec target = shell[i];
            target[sh.j] += sh.nu;
            target[sh.k] -= sh.nu;
            double s = s_coeff(sh.nu, params.nome);
            if (max_abs_component(target) > policy.shell_radius)
                boundary_moves.push_back({i, s});
            else
                moves.push_back({i, index_of[target], s});
        }

    std::vector<std::vector<double>> alpha_orders;
    std::vector<double> energy_orders;
    std::vector<double> current(npoints, 0.0);
    current[origin_idx] = 1.0;
    alpha_orders.push_back(current);
    energy_orders.push_back(e0);

    const double q2 = params.nome.q * params.nome.q;  // minimal cost of re-entering
    const double tail_budget = policy.tail_tolerance * std::max(1.0, std::abs(e0));
    double tail = 0.0;
    double gamma_pow = 1.0;

    for (int s = 1; s <= policy.s_max; ++s) {
        gamma_pow *= params.gamma;
        std::vector<double> shifted_prev(npoints, 0.0);
        for (const auto& mv : moves) shifted_prev[mv.to] += mv.s * alpha_orders[s - 1][mv.from];
        for (const auto& [i, sc] : boundary_moves) {
            double clipped = std::abs(sc * alpha_orders[s - 1][i]);
            if (clipped != 0.0) tail += std::abs(gamma_pow) * clipped * q2;
        }
        if (tail > tail_budget)
            throw TruncationError(
                "coefficient support escaped the shell: tail estimate " +
                std::to_string(tail) + " exceeds budget " + std::to_string(tail_budget));

        double es = -shifted_prev[origin_idx];
        energy_orders.push_back(es);

        std::vector<double> next(npoints, 0.0);
        for (int i = 0; i < npoints; ++i) {
            if (i == origin_idx) continue;
            double rhs = shifted_prev[i];
            for (int sp = 1; sp <= s - 1; ++sp)
                rhs += energy_orders[sp] * alpha_orders[s - sp][i];
            next[i] = rhs * inv_denom[i];
        }
        alpha_orders.push_back(std::move(next));
    }

    PerturbativeResult out;
    out.result.base = n;
    out.result.method = "perturbative";
    out.result.non_partition = !is_partition(n);
    out.result.truncation_tail = tail;
    KahanSum energy;
    gamma_pow = 1.0;
    CoefficientMap coeffs(n);
    for (int s = 0; s <= policy.s_max; ++s) {
        energy.add(gamma_pow * energy_orders[s]);
        CoefficientMap order_map(n);
        for (int i = 0; i < npoints; ++i)
            if (alpha_orders[s][i] != 0.0) {
                order_map.set_relative(shell[i], alpha_orders[s][i]);
                coeffs.add_relative(shell[i], gamma_pow * alpha_orders[s][i]);
            }
        out.coefficient_orders.push_back(std::move(order_map));
        out.energy_orders.push_back(energy_orders[s]);
        gamma_pow *= params.gamma;
    }
    out.result.eigenvalue = energy.value();
    out.result.coefficients = std::move(coeffs);
    out.result.constants = shell_constants(n, params, policy.shell_radius);
    out.result.gate = make_gate(params, out.result.constants);
    return out;
}

PhiEvaluation phi_series(double z, const LatticeVector& n, const ModelParams& params,
                         const TruncationPolicy& policy, int derivative_orders) {
    if (derivative_orders < 0) throw DomainError("derivative_orders must be >= 0");
    auto sums = single_point_walk(n, z, derivative_orders, false, params, policy);
    PhiEvaluation out;
    out.derivative_values.resize(derivative_orders + 1);
    for (int r = 0; r <= derivative_orders; ++r)
        out.derivative_values[r] = -sums.arrivals[0][r];
    out.derivative_values[0] -= z;
    out.value = out.derivative_values[0];
    out.truncation_tail_estimate = sums.arrival_last_order[0] + sums.escaped_weight;
    return out;
}

double g_series(double z, const LatticeVector& m, const LatticeVector& n,
                const ModelParams& params, const TruncationPolicy& policy) {
    auto sums = single_point_walk(n, z, 0, true, params, policy);
    RelVec r = relative(m, n);
    if (component_sum(r) != 0) return 0.0;
    double value = r == RelVec(params.n_particles, 0) ? 1.0 : 0.0;
    if (max_abs_component(r) <= policy.shell_radius) {
        const auto& shell = *sums.shell;
        auto it = std::lower_bound(shell.begin(), shell.end(), r);
        if (it != shell.end() && *it == r)
            value += sums.g_sums[it - shell.begin()][0];
    }
    return value;
}

SpectralResult implicit_solve(const LatticeVector& n, const ModelParams& params,
                              const TruncationPolicy& policy,
                              const HypothesisConstants& constants, int max_iter,
                              double tol) {
    SpectralResult out;
    out.base = n;
    out.method = "implicit";
    out.constants = constants;
    out.gate = make_gate(params, constants);
    out.non_partition = !is_partition(n);
    out.contraction_warning =
        out.gate.b_value >= constants.delta - std::abs(constants.a);

    double tail = 0.0;
    auto phi = [&](double z) {
        auto sums = single_point_walk(n, z, 0, false, params, policy);
        tail = sums.arrival_last_order[0] + sums.escaped_weight;
        return -sums.arrivals[0][0];
    };
    double fixed = damped_iterate(phi, constants.a, max_iter, tol, &out.iterations);
    out.eigenvalue = free_energy(n, params) + fixed;
    out.truncation_tail = tail;

    auto sums = single_point_walk(n, fixed, 0, true, params, policy);
    CoefficientMap coeffs(n);
    const auto& shell = *sums.shell;
    for (std::size_t i = 0; i < shell.size(); ++i) {
        double v = sums.g_sums[i][0];
        if (max_abs_component(shell[i]) == 0) v += 1.0;
        if (v != 0.0) coeffs.set_relative(shell[i], v);
    }
    out.coefficients = std::move(coeffs);
    return out;
}

SpectralResult explicit_solve(const LatticeVector& n, const ModelParams& params,
                              const TruncationPolicy& policy,
                              const HypothesisConstants& constants, int eta_order) {
    if (eta_order < 1) throw DomainError("eta_order must be >= 1");
    const int M = eta_order;
    const double a = constants.a;

    auto sums = single_point_walk(n, a, M, true, params, policy);

    std::vector<double> phi_coeffs(M + 1);
    for (int r = 0; r <= M; ++r) phi_coeffs[r] = -sums.arrivals[0][r];
    phi_coeffs[0] -= a;
    FormalSeries phi(a, phi_coeffs);

    FormalSeries xi = revert(phi, M);

    SpectralResult out;
    out.base = n;
    out.method = "explicit";
    out.constants = constants;
    out.gate = make_gate(params, constants);
    out.non_partition = !is_partition(n);
    out.eta_terms.assign(xi.coefficients.begin() + 1, xi.coefficients.end());
    out.eigenvalue = free_energy(n, params) + xi.value_at_one();
    out.truncation_tail = sums.arrival_last_order[0] + sums.escaped_weight;

    CoefficientMap coeffs(n);
    const auto& shell = *sums.shell;
    const RelVec origin(params.n_particles, 0);
    for (std::size_t i = 0; i < shell.size(); ++i) {
        std::vector<double> g_coeffs(M + 1);
        for (int r = 0; r <= M; ++r) g_coeffs[r] = sums.g_sums[i][r];
        if (shell[i] == origin) g_coeffs[0] += 1.0;
        bool all_zero = true;
        for (double c : g_coeffs) all_zero = all_zero && c == 0.0;
        if (all_zero) continue;
        FormalSeries g(a, std::move(g_coeffs));
        double value = compose(g, phi, M).value_at_one();
        if (value != 0.0) coeffs.set_relative(shell[i], value);
    }
    out.coefficients = std::move(coeffs);

    if (out.gate.passed) {
        double offset = std::abs(out.eigenvalue - free_energy(n, params) - a);
        if (offset > out.gate.enclosure + 1e-9)
            throw Error("explicit_solve: eigenvalue violates the certified enclosure");
    }
    return out;
}

std::vector<SpectralResult> degenerate_solve(const LatticeVector& n, const ModelParams& params,
                                             const TruncationPolicy& policy, int radius,
                                             int max_iter, double tol) {
    auto resonances = find_resonances(n, params, radius);
    if (resonances.empty())
        throw DomainError("degenerate_solve: no resonance partners within radius " +
                          std::to_string(radius));
    const int R = static_cast<int>(resonances.size());
    const int dim = R + 1;

    std::vector<RelVec> terminals;
    terminals.push_back(RelVec(params.n_particles, 0));
    for (const auto& m : resonances) terminals.push_back(relative(m, n));
    const auto shell = zero_sum_shell(params.n_particles, policy.shell_radius);

    auto phi_matrix = [&](double z) {
        Eigen::MatrixXd out(dim, dim);
        for (int k = 0; k < dim; ++k) {
            auto sums = lattice_walk_sums(n, terminals[k], terminals, z, 0, false, params,
                                          policy, shell);
            for (int j = 0; j < dim; ++j) out(j, k) = -sums.arrivals[j][0];
        }
        return out;
    };

    std::vector<SpectralResult> branches;
    for (int branch = 0; branch < dim; ++branch) {
        SpectralResult res;
        res.base = n;
        res.method = "degenerate";
        res.non_partition = !is_partition(n);
        // Off-resonance gap over the shell, with the resonance set excluded.
        res.constants.a = 0.0;
        res.constants.delta = std::numeric_limits<double>::infinity();
        {
            const double e0 = free_energy(n, params);
            for (const auto& r : shell) {
                if (std::find(terminals.begin(), terminals.end(), r) != terminals.end())
                    continue;
                double gap = std::abs(free_energy(shifted(n, r), params) - e0);
                res.constants.delta = std::min(res.constants.delta, gap);
            }
        }
        res.constants.mode = ConstantsMode::ExhaustiveSearch;
        res.constants.shell_radius = policy.shell_radius;
        res.gate.b_value = bound_b(params, 0.0);

        double z = 0.0;
        Eigen::VectorXcd c_prev;
        double omega = 1.0;
        double prev_delta = 0.0;
        bool converged = false;
        Eigen::VectorXcd c_final;
        for (int it = 1; it <= max_iter; ++it) {
            Eigen::MatrixXd m = phi_matrix(z);
            Eigen::EigenSolver<Eigen::MatrixXd> eig(m);
            if (eig.info() != Eigen::Success)
                throw NoConvergenceError("degenerate_solve: eigendecomposition failed");

            int pick = 0;
            if (it == 1) {
                // Seed branch by eigenvalue rank; unit overlaps cannot separate
                // the nearly parallel eigenvectors of the first, almost
                // triangular matrix.
                std::vector<int> order(dim);
                for (int i = 0; i < dim; ++i) order[i] = i;
                std::sort(order.begin(), order.end(), [&](int x, int y) {
                    return eig.eigenvalues()(x).real() < eig.eigenvalues()(y).real();
                });
                pick = order[branch];
            } else {
                double best = -1.0, second = -1.0;
                for (int i = 0; i < dim; ++i) {
                    double overlap = std::abs(c_prev.dot(eig.eigenvectors().col(i)));
                    if (overlap > best) {
                        second = best;
                        best = overlap;
                        pick = i;
                    } else if (overlap > second) {
                        second = overlap;
                    }
                }
                if (second >= 0.0 && best - second < 1e-6) res.branch_ambiguous = true;
            }

            std::complex<double> ev = eig.eigenvalues()(pick);
            if (std::abs(ev.imag()) > 1e-8 * std::max(1.0, std::abs(ev)))
                res.branch_ambiguous = true;
            c_prev = eig.eigenvectors().col(pick);

            double next = ev.real();
            double delta = next - z;
            if (std::abs(delta) < tol) {
                z = next;
                c_final = c_prev;
                res.iterations = it;
                converged = true;
                break;
            }
            if (it > 1 && delta * prev_delta < 0.0 && std::abs(delta) >= std::abs(prev_delta))
                omega = 0.5;
            z += omega * delta;
            prev_delta = delta;
        }
        if (!converged)
            throw NoConvergenceError("degenerate_solve: branch " + std::to_string(branch) +
                                     " did not converge");

        res.eigenvalue = free_energy(n, params) + z;

        // Coefficients: alpha(m) = sum_K c_K [delta(m, n_K) + series_K(m)].
        CoefficientMap coeffs(n);
        for (int k = 0; k < dim; ++k) {
            double ck = c_final(k).real();
            if (ck == 0.0) continue;
            coeffs.add_relative(terminals[k], ck);
            auto sums = lattice_walk_sums(n, terminals[k], terminals, z, 0, true, params,
                                          policy, shell);
            for (std::size_t i = 0; i < shell.size(); ++i) {
                double v = sums.g_sums[i][0];
                if (v != 0.0) coeffs.add_relative(shell[i], ck * v);
            }
        }
        const RelVec origin(params.n_particles, 0);
        double at_n = coeffs.at_relative(origin);
        double scale;
        if (std::abs(at_n) > 1e-8) {
            scale = 1.0 / at_n;
        } else {
            double biggest = 0.0;
            for (const auto& [r, v] : coeffs.entries()) biggest = std::max(biggest, std::abs(v));
            scale = biggest > 0.0 ? 1.0 / biggest : 1.0;
            res.branch_ambiguous = true;
        }
        CoefficientMap scaled(n);
        for (const auto& [r, v] : coeffs.entries()) scaled.set_relative(r, v * scale);
        res.coefficients = std::move(scaled);
        branches.push_back(std::move(res));
    }
    return branches;
}

}  // namespace ecs
