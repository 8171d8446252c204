#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ecs/errors.hpp"
#include "ecs/lattice.hpp"
#include "support/reference.hpp"

using namespace ecs;
using doctest::Approx;

TEST_CASE("model parameter construction") {
    auto p = ModelParams::make(2, 2.5, 0.1);
    CHECK(p.gamma == Approx(2.0 * 2.5 * 1.5).epsilon(1e-16));
    CHECK_THROWS_AS(ModelParams::make(1, 2.0, 0.1), DomainError);
    CHECK_THROWS_AS(ModelParams::make(2, 0.5, 0.1), DomainError);
}

TEST_CASE("free energy values") {
    auto p2 = ModelParams::make(2, 2.0, 0.0);
    CHECK(free_energy({0, 0}, p2) == Approx(2.0).epsilon(1e-16));
    CHECK(free_energy({1, 1}, p2) - free_energy({0, 0}, p2) == Approx(2.0).epsilon(1e-15));

    auto g = testref::rng(41);
    for (int i = 0; i < 10; ++i) {
        double lambda = testref::uniform(g, 0.6, 4.0);
        auto p = ModelParams::make(2, lambda, 0.0);
        double diff = free_energy({1, 0}, p) - free_energy({0, 1}, p);
        CHECK(diff == Approx(2.0 * lambda).epsilon(1e-13));
    }
}

TEST_CASE("shift operator support and linearity") {
    auto p = ModelParams::make(2, 2.5, 0.0);
    CoefficientMap delta({0, 0});
    delta.set_relative({0, 0}, 1.0);

    auto shifted_map = apply_shift_operator(delta, p, 5);
    CHECK(shifted_map.at_relative({0, 0}) == 0.0);  // S_0 = 0
    for (const auto& [r, v] : shifted_map.entries()) {
        CHECK(r[0] > 0);  // only positive shifts survive at q = 0
        CHECK(v == Approx(static_cast<double>(r[0])));
    }

    CoefficientMap zero({0, 0});
    CHECK(apply_shift_operator(zero, p, 5).size() == 0);

    auto pq = ModelParams::make(2, 2.5, 0.2);
    auto both = apply_shift_operator(delta, pq, 5);
    CHECK(both.at_relative({-1, 1}) == Approx(s_coeff(-1, pq.nome)).epsilon(1e-15));
    CHECK(both.at_relative({3, -3}) == Approx(s_coeff(3, pq.nome)).epsilon(1e-15));
}

TEST_CASE("shift operator preserves the zero-sum constraint") {
    auto p = ModelParams::make(3, 1.7, 0.15);
    CoefficientMap seed({1, 0, -1});
    seed.set_relative({0, 0, 0}, 0.7);
    seed.set_relative({2, -1, -1}, -0.4);
    auto out = apply_shift_operator(seed, p, 4);
    for (const auto& [r, v] : out.entries()) {
        (void)v;
        CHECK(component_sum(r) == 0);
    }
}

TEST_CASE("resonance search") {
    // Integer lambda: partner (n2 - lambda, n1 + lambda).
    auto p_int = ModelParams::make(2, 2.0, 0.1);
    auto res = find_resonances({0, 0}, p_int, 6);
    REQUIRE(res.size() == 1);
    CHECK(res[0] == LatticeVector{-2, 2});

    auto res10 = find_resonances({1, 0}, p_int, 6);
    REQUIRE(res10.size() == 1);
    CHECK(res10[0] == LatticeVector{-2, 3});

    // Non-integer lambda, N = 2: none.
    auto p_frac = ModelParams::make(2, 2.5, 0.1);
    CHECK(find_resonances({0, 0}, p_frac, 8).empty());

    // N = 3 lambda-independent resonance at (n1 - nu, n2 + 2nu, n3 - nu).
    auto p3 = ModelParams::make(3, std::sqrt(2.0), 0.1);
    auto res3 = find_resonances({3, 0, 0}, p3, 6);  // nu = 1
    CHECK(std::find(res3.begin(), res3.end(), LatticeVector{2, 2, -1}) != res3.end());
}

TEST_CASE("no resonances for irrational lambda at the groundstate") {
    for (int N : {2, 3}) {
        auto p = ModelParams::make(N, std::sqrt(2.0), 0.1);
        CHECK(find_resonances(LatticeVector(N, 0), p, 8).empty());
    }
}

TEST_CASE("cycle identity for chained shifts") {
    for (int N : {2, 3, 4}) {
        // All ordered chains j1 < j2 < ... < jl, l <= N.
        std::vector<std::vector<int>> chains;
        for (int mask = 0; mask < (1 << N); ++mask) {
            std::vector<int> chain;
            for (int j = 0; j < N; ++j)
                if (mask & (1 << j)) chain.push_back(j);
            if (chain.size() >= 2) chains.push_back(chain);
        }
        for (const auto& chain : chains) {
            RelVec total(N, 0);
            for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
                LatticeShift s{chain[i], chain[i + 1], 1};
                auto v = s.as_vector(N);
                for (int j = 0; j < N; ++j) total[j] += v[j];
            }
            LatticeShift closing{chain.front(), chain.back(), 1};
            auto v = closing.as_vector(N);
            for (int j = 0; j < N; ++j) total[j] -= v[j];
            CHECK(max_abs_component(total) == 0);
        }
    }
}

TEST_CASE("hypothesis constants: N = 2 closed form") {
    auto p = ModelParams::make(2, 2.5, 0.05);
    auto c = hypothesis_constants({0, 0}, p, ConstantsMode::N2ClosedForm, 8);
    CHECK(c.a == 0.0);
    CHECK(c.delta == Approx(2.0).epsilon(1e-14));  // attained at nu = -2
    CHECK(c.certified);

    // Exhaustive re-check of the gap condition over a shell.
    double e0 = free_energy({0, 0}, p);
    for (const auto& r : zero_sum_shell(2, 10)) {
        if (max_abs_component(r) == 0) continue;
        CHECK(std::abs(free_energy(shifted({0, 0}, r), p) - e0 - c.a) >= c.delta - 1e-12);
    }

    auto p_int = ModelParams::make(2, 3.0, 0.05);
    CHECK_THROWS_AS(hypothesis_constants({0, 0}, p_int, ConstantsMode::N2ClosedForm, 8),
                    Error);
}

TEST_CASE("hypothesis constants: rational grid") {
    auto p = ModelParams::make(2, 1.5, 0.1);
    RationalGridInput in;
    in.k1 = 0;
    in.k2 = 0;
    in.a0 = 0.25;
    in.denominator = 2;
    auto c = hypothesis_constants({0, 0}, p, ConstantsMode::RationalGrid, 8, in);
    CHECK(c.a == Approx(0.25));
    CHECK(c.delta == Approx(0.25));

    double e0 = free_energy({0, 0}, p);
    for (const auto& r : zero_sum_shell(2, 12)) {
        if (max_abs_component(r) == 0) continue;
        CHECK(std::abs(free_energy(shifted({0, 0}, r), p) - e0 - c.a) >= c.delta - 1e-12);
    }

    in.a0 = 0.3;  // exceeds 1/(2m)
    CHECK_THROWS_AS(hypothesis_constants({0, 0}, p, ConstantsMode::RationalGrid, 8, in),
                    DomainError);
    CHECK_THROWS_AS(hypothesis_constants({0, 0}, p, ConstantsMode::RationalGrid, 8, {}),
                    DomainError);
}

TEST_CASE("hypothesis constants: exhaustive search") {
    auto p = ModelParams::make(3, std::sqrt(2.0), 0.05);
    auto c = hypothesis_constants({0, 0, 0}, p, ConstantsMode::ExhaustiveSearch, 8);
    CHECK(!c.certified);
    CHECK(c.shell_radius == 8);
    // Smallest shell gap: |14 - 10 sqrt(2)| at relative (-2,-1,3).
    CHECK(c.delta == Approx(std::abs(14.0 - 10.0 * std::sqrt(2.0))).epsilon(1e-12));

    auto p_res = ModelParams::make(2, 2.0, 0.05);
    CHECK_THROWS_AS(hypothesis_constants({0, 0}, p_res, ConstantsMode::ExhaustiveSearch, 8),
                    ResonanceError);
}

TEST_CASE("n2 closed form matches an exhaustive shell re-check") {
    auto g = testref::rng(53);
    for (int i = 0; i < 10; ++i) {
        double lambda = testref::uniform(g, 0.6, 4.0);
        if (std::abs(lambda - std::round(lambda)) < 0.05) continue;
        auto p = ModelParams::make(2, lambda, 0.1);
        LatticeVector n{static_cast<int>(testref::uniform(g, -3, 4)),
                        static_cast<int>(testref::uniform(g, -3, 4))};
        auto closed = hypothesis_constants(n, p, ConstantsMode::N2ClosedForm, 8);
        auto shell = hypothesis_constants(n, p, ConstantsMode::ExhaustiveSearch, 30);
        CHECK(closed.delta == Approx(shell.delta).epsilon(1e-12));
    }
}

TEST_CASE("analyticity bound B") {
    auto p0 = ModelParams::make(2, 2.5, 0.0);
    CHECK(bound_b(p0, 0.7) == 0.0);

    auto p = ModelParams::make(2, 2.5, 0.05);
    double expected = 2.0 * 7.5 * 0.05 / std::pow(0.95, 3);
    CHECK(bound_b(p, 0.0) == Approx(expected).epsilon(1e-15));

    HypothesisConstants c;
    c.a = 0.0;
    c.delta = 3.0;
    CHECK(convergence_gate(bound_b(p, 0.0), c));
    c.delta = 2.0;
    CHECK(!convergence_gate(bound_b(p, 0.0), c));
}

TEST_CASE("decay constants K, K~, C") {
    auto p = ModelParams::make(2, 2.5, 0.1);
    auto kc = bound_kc(p, 1.0);
    CHECK(kc.k == Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(kc.k_tilde == Approx(2.0 / 9.0).epsilon(1e-15));
    CHECK(kc.c > 0.0);
    CHECK(std::isfinite(kc.c));

    auto g = testref::rng(61);
    for (int i = 0; i < 20; ++i) {
        double b = testref::uniform(g, 1e-3, 10.0);
        auto v = bound_kc(p, b);
        CHECK(v.k_tilde > 0.0);
        CHECK(v.k_tilde < v.k / 2.0);
        CHECK(2.0 - 2.0 * b * v.k_tilde > 0.0);
        CHECK(std::isfinite(v.c));
    }
    CHECK_THROWS_AS(bound_kc(p, 0.0), DomainError);
}

TEST_CASE("zero-sum shell enumeration") {
    auto shell = zero_sum_shell(2, 3);
    CHECK(shell.size() == 7);  // (-3,3) .. (3,-3)
    CHECK(std::is_sorted(shell.begin(), shell.end()));
    for (const auto& r : shell) CHECK(component_sum(r) == 0);

    auto shell3 = zero_sum_shell(3, 2);
    for (const auto& r : shell3) {
        CHECK(component_sum(r) == 0);
        CHECK(max_abs_component(r) <= 2);
    }
    CHECK(shell3.size() == 19);
}

TEST_CASE("positive-shift reachability") {
    CHECK(positive_shift_reachable({1, -1}));
    CHECK(!positive_shift_reachable({-1, 1}));
    CHECK(positive_shift_reachable({1, 0, -1}));
    CHECK(positive_shift_reachable({1, 1, -2}));
    CHECK(!positive_shift_reachable({1, -2, 1}));
    CHECK(!positive_shift_reachable({-1, 2, -1}));
}

TEST_CASE("coefficient map rejects bad keys") {
    CoefficientMap m({0, 0});
    CHECK_THROWS_AS(m.set_relative({1, 0}, 1.0), DomainError);
}
