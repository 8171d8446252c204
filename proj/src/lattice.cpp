#include "ecs/lattice.hpp"

#include <algorithm>
#include <cmath>
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

void check_vector(const LatticeVector& n, const ModelParams& params) {
    if (static_cast<int>(n.size()) != params.n_particles)
        throw DomainError("lattice vector length " + std::to_string(n.size()) +
                          " does not match N = " + std::to_string(params.n_particles));
}

}  // namespace

ModelParams ModelParams::make(int n_particles, double lambda, double q) {
    if (n_particles < 2) throw DomainError("n_particles must be >= 2");
    if (!(lambda > 0.5)) throw DomainError("lambda must exceed 1/2");
    ModelParams p;
    p.n_particles = n_particles;
    p.lambda = lambda;
    p.gamma = 2.0 * lambda * (lambda - 1.0);
    p.nome = Nome::from_q(q);
    return p;
}

RelVec LatticeShift::as_vector(int n_particles) const {
    RelVec r(n_particles, 0);
    r[j] = nu;
    r[k] = -nu;
    return r;
}

double CoefficientMap::at_relative(const RelVec& r) const {
    auto it = entries_.find(r);
    return it == entries_.end() ? 0.0 : it->second;
}

void CoefficientMap::set_relative(RelVec r, double value) {
    if (component_sum(r) != 0)
        throw DomainError("CoefficientMap key " + vec_to_string(r) +
                          " has nonzero component sum");
    if (value == 0.0)
        entries_.erase(r);
    else
        entries_[std::move(r)] = value;
}

void CoefficientMap::add_relative(const RelVec& r, double value) {
    if (component_sum(r) != 0)
        throw DomainError("CoefficientMap key " + vec_to_string(r) +
                          " has nonzero component sum");
    entries_[r] += value;
}

std::string to_string(ConstantsMode mode) {
    switch (mode) {
        case ConstantsMode::RationalGrid: return "rational-grid";
        case ConstantsMode::N2ClosedForm: return "n2-closed-form";
        case ConstantsMode::ExhaustiveSearch: return "exhaustive-search";
    }
    return "?";
}

double free_energy(const LatticeVector& n, const ModelParams& params) {
    check_vector(n, params);
    const int N = params.n_particles;
    KahanSum sum;
    for (int j = 1; j <= N; ++j) {
        double t = n[j - 1] + 0.5 * params.lambda * (N + 1 - 2 * j);
        sum.add(t * t);
    }
    return sum.value();
}

double resonance_tolerance(const LatticeVector& n, const ModelParams& params) {
    return 1e-9 * std::max(1.0, std::abs(free_energy(n, params)));
}

std::vector<LatticeShift> enumerate_shifts(const ModelParams& params, int nu_cutoff) {
    if (nu_cutoff < 1) throw DomainError("nu_cutoff must be >= 1");
    std::vector<LatticeShift> shifts;
    const int N = params.n_particles;
    for (int j = 0; j < N; ++j)
        for (int k = j + 1; k < N; ++k)
            for (int nu = -nu_cutoff; nu <= nu_cutoff; ++nu) {
                if (nu == 0) continue;
                if (s_coeff(nu, params.nome) == 0.0) continue;
                shifts.push_back({j, k, nu});
            }
    return shifts;
}

CoefficientMap apply_shift_operator(const CoefficientMap& alpha, const ModelParams& params,
                                    int nu_cutoff) {
    CoefficientMap out(alpha.base());
    const auto shifts = enumerate_shifts(params, nu_cutoff);
    for (const auto& [r, value] : alpha.entries()) {
        for (const auto& sh : shifts) {
            RelVec target = r;
            target[sh.j] += sh.nu;
            target[sh.k] -= sh.nu;
            out.add_relative(target, s_coeff(sh.nu, params.nome) * value);
        }
    }
    return out;
}

std::vector<RelVec> zero_sum_shell(int n_particles, int radius) {
    if (radius < 0) throw DomainError("shell radius must be >= 0");
    std::vector<RelVec> shell;
    RelVec current(n_particles, 0);
    // Fill components left to right; the last one is forced by the zero-sum constraint.
    auto recurse = [&](auto&& self, int pos, int partial) -> void {
        if (pos == n_particles - 1) {
            int last = -partial;
            if (std::abs(last) <= radius) {
                current[pos] = last;
                shell.push_back(current);
            }
            return;
        }
        for (int v = -radius; v <= radius; ++v) {
            current[pos] = v;
            self(self, pos + 1, partial + v);
        }
    };
    recurse(recurse, 0, 0);
    std::sort(shell.begin(), shell.end());
    return shell;
}

bool positive_shift_reachable(const RelVec& r) {
    int prefix = 0;
    for (std::size_t j = 0; j + 1 < r.size(); ++j) {
        prefix += r[j];
        if (prefix < 0) return false;
    }
    return component_sum(r) == 0;
}

std::vector<LatticeVector> find_resonances(const LatticeVector& n, const ModelParams& params,
                                           int radius) {
    check_vector(n, params);
    if (radius < 1) throw DomainError("resonance radius must be >= 1");
    const double e0 = free_energy(n, params);
    const double tol = resonance_tolerance(n, params);
    std::vector<LatticeVector> found;
    for (const auto& r : zero_sum_shell(params.n_particles, radius)) {
        if (max_abs_component(r) == 0) continue;
        LatticeVector m = shifted(n, r);
        if (std::abs(free_energy(m, params) - e0) < tol) found.push_back(m);
    }
    return found;
}

namespace {

HypothesisConstants rational_grid_constants(const ModelParams& params,
                                            const RationalGridInput& in) {
    const long m = in.denominator;
    if (m <= 0) throw DomainError("rational-grid: denominator must be positive");
    double scaled = params.lambda * static_cast<double>(m);
    if (std::abs(scaled - std::llround(scaled)) > 1e-9)
        throw DomainError("rational-grid: lambda is not a multiple of 1/" + std::to_string(m));
    if (in.a0 == 0.0)
        throw DomainError("rational-grid: a0 must be nonzero");
    if (std::abs(in.a0) > 0.5 / static_cast<double>(m) + 1e-15)
        throw DomainError("rational-grid: |a0| must not exceed 1/(2m)");
    HypothesisConstants out;
    out.a = static_cast<double>(in.k1) + params.lambda * static_cast<double>(in.k2) + in.a0;
    out.delta = std::abs(in.a0);
    out.mode = ConstantsMode::RationalGrid;
    out.certified = true;
    return out;
}

HypothesisConstants n2_closed_form_constants(const LatticeVector& n,
                                             const ModelParams& params) {
    if (params.n_particles != 2)
        throw DomainError("n2-closed-form requires N = 2");
    double nearest = std::abs(params.lambda - std::round(params.lambda));
    if (nearest < 1e-9)
        throw DomainError("n2-closed-form requires non-integer lambda");
    const double c = n[0] - n[1] + params.lambda;
    // |2 nu (nu + c)| is increasing in |nu| once |nu| exceeds |c|; enumerating a
    // few values past ceil(|c|) + 2 therefore captures the exact minimum.
    const int limit = static_cast<int>(std::ceil(std::abs(c))) + 5;
    double best = std::numeric_limits<double>::infinity();
    for (int nu = -limit; nu <= limit; ++nu) {
        if (nu == 0) continue;
        best = std::min(best, std::abs(2.0 * nu * (nu + c)));
    }
    if (best < resonance_tolerance(n, params)) {
        int nu_res = static_cast<int>(std::llround(n[1] - n[0] - params.lambda));
        throw ResonanceError("n2-closed-form: resonance at nu = " + std::to_string(nu_res),
                             LatticeVector{n[0] + nu_res, n[1] - nu_res});
    }
    HypothesisConstants out;
    out.a = 0.0;
    out.delta = best;
    out.mode = ConstantsMode::N2ClosedForm;
    out.certified = true;
    return out;
}

HypothesisConstants exhaustive_constants(const LatticeVector& n, const ModelParams& params,
                                         int radius) {
    if (radius < 1) throw DomainError("exhaustive-search radius must be >= 1");
    const double e0 = free_energy(n, params);
    double best = std::numeric_limits<double>::infinity();
    LatticeVector argmin;
    for (const auto& r : zero_sum_shell(params.n_particles, radius)) {
        if (max_abs_component(r) == 0) continue;
        LatticeVector m = shifted(n, r);
        double gap = std::abs(free_energy(m, params) - e0);
        if (gap < best) {
            best = gap;
            argmin = m;
        }
    }
    if (best < resonance_tolerance(n, params))
        throw ResonanceError("exhaustive-search: resonance at " + vec_to_string(argmin),
                             argmin);
    HypothesisConstants out;
    out.a = 0.0;
    out.delta = best;
    out.mode = ConstantsMode::ExhaustiveSearch;
    out.certified = false;  // shell minimum, not a proof
    out.shell_radius = radius;
    return out;
}

}  // namespace

HypothesisConstants hypothesis_constants(const LatticeVector& n, const ModelParams& params,
                                         ConstantsMode mode, int radius,
                                         std::optional<RationalGridInput> rational) {
    check_vector(n, params);
    switch (mode) {
        case ConstantsMode::RationalGrid:
            if (!rational)
                throw DomainError("rational-grid mode needs caller-supplied k1, k2, a0");
            return rational_grid_constants(params, *rational);
        case ConstantsMode::N2ClosedForm:
            return n2_closed_form_constants(n, params);
        case ConstantsMode::ExhaustiveSearch:
            return exhaustive_constants(n, params, radius);
    }
    throw DomainError("unknown constants mode");
}

double bound_b(const ModelParams& params, double b_param) {
    if (b_param < 0.0) throw DomainError("b must be >= 0");
    if (params.nome.trigonometric()) return 0.0;
    const int N = params.n_particles;
    const double p = std::pow(params.nome.q, 2.0 / (N + b_param));
    const double d = 1.0 - p;
    return N * (N - 1) * std::abs(params.gamma) * p / (d * d * d);
}

bool convergence_gate(double b_value, const HypothesisConstants& constants) {
    return b_value < (constants.delta - std::abs(constants.a)) / 3.0;
}

DecayConstants bound_kc(const ModelParams& params, double b_param) {
    if (!(b_param > 0.0)) throw DomainError("bound_kc requires b > 0");
    if (params.nome.trigonometric())
        throw DomainError("bound_kc requires q > 0");
    const int N = params.n_particles;
    const double q = params.nome.q;
    const double lambda = params.lambda;
    DecayConstants out;
    out.k = 2.0 / (N + b_param);
    out.k_tilde = b_param * out.k / (1.0 + 2.0 * b_param);
    const auto cfg = EllipticConfig::for_nome(params.nome);
    const double x1 = std::pow(q, out.k - out.k_tilde);
    const double x0 = std::pow(q, 2.0 - 2.0 * b_param * out.k_tilde);
    const double theta_minus = capital_theta(Complex(-q * q, 0.0), params.nome, cfg).real();
    const double theta_x0 = capital_theta(Complex(x0, 0.0), params.nome, cfg).real();
    const double numer = std::pow(2.0 * theta_minus, N * (N - 1) * lambda / 2.0);
    const double denom = std::pow((1.0 - x1) * theta_x0 / (1.0 - x0),
                                  static_cast<double>(N) * N * lambda);
    out.c = numer / denom;
    return out;
}

}  // namespace ecs
