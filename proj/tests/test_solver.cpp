#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ecs/errors.hpp"
#include "ecs/oracle.hpp"
#include "ecs/solver.hpp"
#include "support/dfs_reference.hpp"
#include "support/reference.hpp"

using namespace ecs;
using doctest::Approx;

namespace {

TruncationPolicy tight_policy() {
    TruncationPolicy p;
    p.s_max = 12;
    p.nu_cutoff = 10;
    p.shell_radius = 14;
    return p;
}

}  // namespace

TEST_CASE("perturbative first order vanishes") {
    for (double q : {0.0, 0.1, 0.3}) {
        auto p = ModelParams::make(2, 2.5, q);
        auto r = perturbative_solve({1, 0}, p, TruncationPolicy{});
        CHECK(r.energy_orders[1] == 0.0);
    }
    auto p3 = ModelParams::make(3, std::sqrt(2.0), 0.1);
    TruncationPolicy pol;
    pol.shell_radius = 6;
    pol.nu_cutoff = 4;
    auto r3 = perturbative_solve({1, 0, -1}, p3, pol);
    CHECK(r3.energy_orders[1] == 0.0);
}

TEST_CASE("trigonometric limit is exact for the recursion") {
    auto p = ModelParams::make(2, 1.5, 0.0);
    auto r = perturbative_solve({2, 1}, p, TruncationPolicy{});
    for (int s = 1; s < static_cast<int>(r.energy_orders.size()); ++s)
        CHECK(r.energy_orders[s] == 0.0);
    CHECK(r.result.eigenvalue == free_energy({2, 1}, p));
    // support sits in the positive cone only
    for (int s = 0; s <= 8; ++s)
        for (const auto& [rel, v] : r.coefficient_orders[s].entries()) {
            (void)v;
            CHECK(positive_shift_reachable(rel));
        }
}

TEST_CASE("second-order energy matches the single-shift evaluation") {
    const double lambda = 2.5;
    const double q = 1e-3;
    auto p = ModelParams::make(2, lambda, q);
    auto r = perturbative_solve({0, 0}, p, TruncationPolicy{});
    // E^{(2)} = -sum_nu S_nu S_{-nu} / (2 nu (nu + lambda)); the |nu| = 1 terms
    // dominate up to O(q^4).
    double hand = 0.0;
    for (int nu : {1, -1})
        hand -= s_coeff(nu, p.nome) * s_coeff(-nu, p.nome) / (2.0 * nu * (nu + lambda));
    CHECK(std::abs(r.energy_orders[2] - hand) < 1e-11);
    double leading = q * q / (lambda * lambda - 1.0);
    CHECK(r.energy_orders[2] == Approx(leading).epsilon(1e-5));
}

TEST_CASE("normalization and support grading of the recursion orders") {
    auto p = ModelParams::make(2, 2.5, 0.2);
    TruncationPolicy pol;
    pol.s_max = 4;
    pol.nu_cutoff = 2;
    pol.shell_radius = 10;
    auto r = perturbative_solve({0, 0}, p, pol);
    CHECK(r.coefficient_orders[0].at_relative({0, 0}) == 1.0);
    for (int s = 1; s <= 4; ++s) {
        CHECK(r.coefficient_orders[s].at_relative({0, 0}) == 0.0);
        for (const auto& [rel, v] : r.coefficient_orders[s].entries()) {
            (void)v;
            CHECK(max_abs_component(rel) <= s * pol.nu_cutoff);
        }
    }
    CHECK(r.result.coefficients.at_relative({0, 0}) == 1.0);
}

TEST_CASE("resonances are reported with the offending vector") {
    auto p = ModelParams::make(2, 2.0, 0.1);
    try {
        perturbative_solve({0, 0}, p, TruncationPolicy{});
        FAIL("expected a resonance");
    } catch (const ResonanceError& e) {
        CHECK(e.offending == LatticeVector{-2, 2});
    }
}

TEST_CASE("support escaping a tiny shell raises a truncation error") {
    auto p = ModelParams::make(2, 2.5, 0.3);
    TruncationPolicy pol;
    pol.s_max = 6;
    pol.nu_cutoff = 4;
    pol.shell_radius = 2;
    CHECK_THROWS_AS(perturbative_solve({0, 0}, p, pol), TruncationError);
}

TEST_CASE("layered walk equals the literal path enumeration") {
    struct Case {
        int n_particles;
        double lambda, q, z;
        LatticeVector n;
    };
    for (const Case& c : {Case{2, 2.5, 0.25, 0.3, {1, 0}},
                          Case{2, 1.7, 0.4, -0.2, {0, 0}},
                          Case{3, 2.2, 0.3, 0.15, {1, 0, -1}}}) {
        auto p = ModelParams::make(c.n_particles, c.lambda, c.q);
        TruncationPolicy pol;
        pol.s_max = 4;
        pol.nu_cutoff = 2;
        pol.shell_radius = 8;
        const int R = 3;
        auto dfs = testref::dfs_path_sums(c.n, p, c.z, pol.s_max, pol.nu_cutoff,
                                          pol.shell_radius, R);
        auto eval = phi_series(c.z, c.n, p, pol, R);
        for (int r = 0; r <= R; ++r) {
            double expect = dfs.phi[r] - (r == 0 ? c.z : 0.0);
            CHECK(eval.derivative_values[r] ==
                  Approx(expect).epsilon(1e-12).scale(std::max(1.0, std::abs(expect))));
        }
        for (const auto& [rel, g_ref] : dfs.g_zero) {
            double got = g_series(c.z, shifted(c.n, rel), c.n, p, pol);
            double expect = g_ref + (max_abs_component(rel) == 0 ? 1.0 : 0.0);
            CHECK(got == Approx(expect).epsilon(1e-12).scale(std::max(1.0, std::abs(expect))));
        }
    }
}

TEST_CASE("self-map series vanishes in the trigonometric limit") {
    auto p = ModelParams::make(2, 2.5, 0.0);
    auto eval = phi_series(0.7, {1, 0}, p, TruncationPolicy{}, 3);
    CHECK(eval.value == -0.7);
    CHECK(eval.derivative_values[1] == 0.0);
    CHECK(eval.derivative_values[2] == 0.0);

    // g series: identity at the base point, zero outside the positive cone.
    CHECK(g_series(0.0, {1, 0}, {1, 0}, p, TruncationPolicy{}) == 1.0);
    CHECK(g_series(0.0, {0, 1}, {1, 0}, p, TruncationPolicy{}) == 0.0);
    CHECK(g_series(0.0, {2, -1}, {1, 0}, p, TruncationPolicy{}) != 0.0);
}

TEST_CASE("self-map and coefficient bounds inside the analyticity region") {
    auto p = ModelParams::make(2, 2.5, 0.05);
    LatticeVector n{0, 0};
    auto constants = hypothesis_constants(n, p, ConstantsMode::N2ClosedForm, 12);
    const double big_b = bound_b(p, 0.0);
    REQUIRE(big_b < constants.delta);
    auto g = testref::rng(301);
    TruncationPolicy pol = tight_policy();
    for (int i = 0; i < 20; ++i) {
        double z = constants.a +
                   testref::uniform(g, -0.95, 0.95) * (constants.delta - big_b);
        auto eval = phi_series(z, n, p, pol, 0);
        double phi_plain = eval.value + z;
        CHECK(std::abs(phi_plain) <
              big_b * big_b / (constants.delta - big_b - std::abs(z - constants.a)));
    }
    // G bound with the matching decay constant K = 2/(N+b) at b = 0.
    const double K = 1.0;
    for (int i = 0; i < 20; ++i) {
        double z = constants.a +
                   testref::uniform(g, -0.9, 0.9) * (constants.delta - big_b);
        for (int m1 : {-2, -1, 1, 2}) {
            LatticeVector m{m1, -m1};
            double val = g_series(z, m, n, p, pol);
            double expo = K * (1.0 * m1 + 2.0 * (-m1));
            double bound = std::pow(p.nome.q, expo) * big_b /
                           (constants.delta - big_b - std::abs(z - constants.a));
            CHECK(std::abs(val) < bound);
        }
    }
}

TEST_CASE("implicit solver: trigonometric limit converges immediately") {
    auto p = ModelParams::make(3, 1.5, 0.0);
    TruncationPolicy pol;
    pol.shell_radius = 6;
    pol.nu_cutoff = 4;
    HypothesisConstants c;
    c.a = 0.0;
    c.delta = 1.0;
    auto r = implicit_solve({2, 1, 0}, p, pol, c);
    CHECK(r.eigenvalue == free_energy({2, 1, 0}, p));
    CHECK(r.iterations == 1);
    CHECK(r.coefficients.at_relative({0, 0, 0}) == 1.0);
}

TEST_CASE("implicit solver matches the truncated-matrix oracle") {
    auto p = ModelParams::make(2, 2.5, 0.1);
    LatticeVector n{0, 0};
    auto constants = hypothesis_constants(n, p, ConstantsMode::N2ClosedForm, 12);
    auto r = implicit_solve(n, p, tight_policy(), constants);
    auto oracle = oracle_eigenpair(build_truncated_operator(n, p, 16), n);
    CHECK(std::abs(r.eigenvalue - oracle.eigenvalue) < 1e-8 * std::max(1.0, std::abs(oracle.eigenvalue)));

    // coefficients agree on the inner shell
    for (const auto& [rel, v] : oracle.coefficients.entries()) {
        if (max_abs_component(rel) > 4) continue;
        CHECK(std::abs(r.coefficients.at_relative(rel) - v) < 1e-7);
    }
}

TEST_CASE("implicit solver result does not depend on the admissible start") {
    auto p = ModelParams::make(2, 2.5, 0.05);
    LatticeVector n{1, 0};
    auto c0 = hypothesis_constants(n, p, ConstantsMode::N2ClosedForm, 12);
    HypothesisConstants c1 = c0;
    c1.a = 0.4;
    c1.delta = c0.delta - 0.4;
    auto r0 = implicit_solve(n, p, tight_policy(), c0);
    auto r1 = implicit_solve(n, p, tight_policy(), c1);
    CHECK(std::abs(r0.eigenvalue - r1.eigenvalue) < 1e-10);
}

TEST_CASE("explicit solver agrees with the implicit one and grades in q^2") {
    auto p = ModelParams::make(2, 2.5, 0.05);
    LatticeVector n{1, 0};
    auto constants = hypothesis_constants(n, p, ConstantsMode::N2ClosedForm, 12);
    auto pol = tight_policy();
    auto impl = implicit_solve(n, p, pol, constants);
    auto expl = explicit_solve(n, p, pol, constants, 8);
    CHECK(std::abs(impl.eigenvalue - expl.eigenvalue) <
          1e-9 * std::max(1.0, std::abs(impl.eigenvalue)));
    CHECK(expl.gate.passed);

    // eigenvalue = E0(n) + a + sum of eta terms
    double rebuilt = free_energy(n, p) + constants.a;
    for (double t : expl.eta_terms) rebuilt += t;
    CHECK(expl.eigenvalue == Approx(rebuilt).epsilon(1e-15));
    CHECK(expl.coefficients.at_relative({0, 0}) == Approx(1.0).epsilon(1e-12));

    // eta term m scales like q^{2m}
    for (int m = 1; m <= 3; ++m) {
        std::vector<double> ratios;
        for (double q : {0.02, 0.04, 0.08}) {
            auto pq = ModelParams::make(2, 2.5, q);
            auto cq = hypothesis_constants(n, pq, ConstantsMode::N2ClosedForm, 12);
            auto rq = explicit_solve(n, pq, pol, cq, 6);
            ratios.push_back(std::abs(rq.eta_terms[m - 1]) / std::pow(q, 2.0 * m));
        }
        double lo = *std::min_element(ratios.begin(), ratios.end());
        double hi = *std::max_element(ratios.begin(), ratios.end());
        CHECK(hi > 0.0);
        CHECK(hi / lo < 4.0);
    }
}

TEST_CASE("explicit coefficients obey the certified decay bound when gated") {
    auto p = ModelParams::make(2, 2.5, 0.05);
    LatticeVector n{1, 0};
    auto constants = hypothesis_constants(n, p, ConstantsMode::N2ClosedForm, 12);
    auto expl = explicit_solve(n, p, tight_policy(), constants, 8);
    REQUIRE(expl.gate.passed);
    const double big_b = bound_b(p, 0.0);
    const double K = 1.0;  // 2/(N+b) at b = 0
    const double d = constants.delta, aa = std::abs(constants.a);
    const double root = std::sqrt((d - big_b - aa) * (d - big_b - aa) - 4.0 * big_b * big_b);
    for (const auto& [rel, v] : expl.coefficients.entries()) {
        double delta_term = max_abs_component(rel) == 0 ? 1.0 : 0.0;
        double expo = K * (1.0 * rel[0] + 2.0 * rel[1]);
        double bound = delta_term +
                       std::pow(p.nome.q, expo) * 2.0 * big_b / (d - big_b - aa + root);
        CHECK(std::abs(v) <= bound * (1.0 + 1e-12));
    }
}

TEST_CASE("explicit solver is independent of the expansion point") {
    auto p = ModelParams::make(2, 2.5, 0.05);
    LatticeVector n{1, 0};
    auto c0 = hypothesis_constants(n, p, ConstantsMode::N2ClosedForm, 12);
    HypothesisConstants c1 = c0;
    c1.a = 0.3;
    c1.delta = c0.delta - 0.3;
    auto r0 = explicit_solve(n, p, tight_policy(), c0, 10);
    auto r1 = explicit_solve(n, p, tight_policy(), c1, 10);
    CHECK(std::abs(r0.eigenvalue - r1.eigenvalue) < 1e-8);
}

TEST_CASE("three methods agree on a gate-passing configuration") {
    auto p = ModelParams::make(2, 2.5, 0.05);
    for (LatticeVector n : {LatticeVector{1, 0}, LatticeVector{2, 1}}) {
        auto constants = hypothesis_constants(n, p, ConstantsMode::N2ClosedForm, 12);
        TruncationPolicy pol;  // defaults: s_max = 8
        auto pert = perturbative_solve(n, p, pol).result;
        auto impl = implicit_solve(n, p, pol, constants);
        auto expl = explicit_solve(n, p, pol, constants, 8);
        double scale = std::max(1.0, std::abs(impl.eigenvalue));
        CHECK(std::abs(pert.eigenvalue - impl.eigenvalue) < 1e-9 * scale);
        CHECK(std::abs(impl.eigenvalue - expl.eigenvalue) < 1e-9 * scale);
    }
}

TEST_CASE("degenerate solver resolves the integer-coupling pair") {
    auto p0 = ModelParams::make(2, 2.0, 0.0);
    TruncationPolicy pol;
    pol.shell_radius = 10;
    pol.nu_cutoff = 6;
    auto branches0 = degenerate_solve({0, 0}, p0, pol, 6);
    REQUIRE(branches0.size() == 2);
    CHECK(branches0[0].eigenvalue == Approx(free_energy({0, 0}, p0)).epsilon(1e-14));
    CHECK(branches0[1].eigenvalue == Approx(free_energy({0, 0}, p0)).epsilon(1e-14));

    auto p = ModelParams::make(2, 2.0, 0.05);
    auto branches = degenerate_solve({0, 0}, p, pol, 6);
    REQUIRE(branches.size() == 2);

    // Oracle: the two eigenvalues nearest E0(n).
    auto op = build_truncated_operator({0, 0}, p, 14);
    Eigen::EigenSolver<Eigen::MatrixXd> eig(op.matrix);
    std::vector<double> evs;
    for (int i = 0; i < op.matrix.rows(); ++i) evs.push_back(eig.eigenvalues()(i).real());
    double e0 = free_energy({0, 0}, p);
    std::sort(evs.begin(), evs.end(), [&](double a, double b) {
        return std::abs(a - e0) < std::abs(b - e0);
    });
    std::vector<double> nearest{evs[0], evs[1]};
    std::sort(nearest.begin(), nearest.end());
    std::vector<double> got{branches[0].eigenvalue, branches[1].eigenvalue};
    std::sort(got.begin(), got.end());
    CHECK(std::abs(got[0] - nearest[0]) < 1e-6);
    CHECK(std::abs(got[1] - nearest[1]) < 1e-6);
    CHECK(got[1] - got[0] > 1e-4);  // the pair splits at q > 0
}

TEST_CASE("non-partition inputs are flagged, not rejected") {
    auto p = ModelParams::make(2, 2.5, 0.05);
    auto r = perturbative_solve({0, 1}, p, TruncationPolicy{});
    CHECK(r.result.non_partition);
    auto c = hypothesis_constants({0, 1}, p, ConstantsMode::N2ClosedForm, 12);
    CHECK(implicit_solve({0, 1}, p, tight_policy(), c).non_partition);
}
