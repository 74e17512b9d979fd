#include <doctest.h>

#include <cmath>

#include "seplab/errors.hpp"
#include "seplab/flow.hpp"
#include "seplab/numerics.hpp"
#include "support.hpp"

using namespace seplab;
using test::ang_diff;

TEST_CASE("unperturbed flow conserves energy and action") {
    ModelSpec m;
    PhasePoint x{0.6, 1.0, 1.2, 0.4, 0.0};
    auto tr = integrate(m, x, 30.0, 1e-12);
    CHECK(tr.max_energy_drift < 1e-10);
    CHECK(tr.samples.back().I == x.I);
    CHECK(tr.stats.accepted > 0);
    auto y = time_one_map(m, x);
    CHECK(std::abs(ang_diff(y.phi, x.phi + x.I)) < 1e-12);
    CHECK(y.t == doctest::Approx(1.0));
}

TEST_CASE("perturbed flow is reversible") {
    auto m = test::arnold(1e-2);
    PhasePoint x{0.6, 1.0, 1.9, 2.0, 0.3};
    auto y = flow_to(m, x, 12.3, 1e-12);
    auto back = flow_to(m, y, 0.3, 1e-12);
    CHECK(std::abs(back.I - x.I) < 1e-9);
    CHECK(std::abs(back.p - x.p) < 1e-9);
    CHECK(std::abs(ang_diff(back.q, x.q)) < 1e-9);
    CHECK(std::abs(ang_diff(back.phi, x.phi)) < 1e-9);
    CHECK_THROWS_AS(flow_to(m, x, 1.0, 1e-4), StepFailure);
    CHECK_THROWS_AS(flow_to(m, x, 1.0, 1e-15), StepFailure);
}

TEST_CASE("unperturbed return matches the integrable shear") {
    ModelSpec m;
    for (double w : {1e-3, -1e-3, 2e-4}) {
        const double I = 0.6, phi = 1.0, t = 0.3;
        auto start = section_point(I, phi, t, w, Branch::Plus);
        auto r = numeric_return_map(m, start);
        REQUIRE(r.defined);
        // Near-separatrix passage time of the pendulum is log(32/|w|) + O(w log w).
        const double T = std::log(32.0 / std::abs(w));
        CHECK(std::abs(r.event.time - t - T) < 20 * std::abs(w) * std::log(1 / std::abs(w)));
        CHECK(r.event.section == (w > 0 ? Branch::Plus : Branch::Minus));
        auto in = extract_coords(m, start);
        CHECK(in.eta == I);
        CHECK(std::abs(ang_diff(in.xi, phi)) < 1e-15);
        CHECK(std::abs(in.tau + t) < 1e-15);
        const double e = std::abs(r.extracted.h - in.h);
        CHECK(e < 1e-11);
        CHECK(std::abs(ang_diff(r.extracted.xi, phi + I * (r.event.time - t))) < 1e-9);
        CHECK(std::abs(ang_diff(r.extracted.tau, -r.event.time)) < 1e-9);
    }
}

TEST_CASE("coordinate extraction") {
    ModelSpec m;
    auto on = extract_coords(m, PhasePoint{1.0, 0.4, 2.0, kPi, 0.0});
    CHECK(on.eta == 1.0);
    CHECK(on.xi == doctest::Approx(0.4));
    CHECK(on.h == eval_H0({1.0, 0.4, 2.0, kPi, 0.0}));
    for (double q : {1.0, 2.5, 4.0, 5.5}) {
        const double p = std::sqrt(2.0 * (1.0 - std::cos(q)) + 2e-3);
        auto a = extract_coords(m, PhasePoint{0.5, 1.0, p, q, 0.0});
        auto b = extract_coords(m, PhasePoint{0.5, 1.0, -p, q, 0.0});
        CHECK(a.tau == doctest::Approx(-b.tau).epsilon(1e-12));
    }
}

TEST_CASE("vanishing splitting: the action does not move") {
    auto m = test::pq_free();
    const double tol = 1e-12;
    FlowOptions fo;
    fo.tol = tol;
    CounterRng rng(8, 0);
    for (int i = 0; i < 8; ++i) {
        auto start = section_point(0.6, rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi), 8e-3, Branch::Plus);
        auto r = numeric_return_map(m, start, fo);
        REQUIRE(r.defined);
        const auto in = extract_coords(m, start);
        CHECK(std::abs(r.extracted.eta - in.eta) <= 100 * tol);
    }
}

TEST_CASE("first-order return agrees with the splitting potential") {
    auto m = test::arnold(1e-3);
    auto start = section_point(0.6, 0.7, 1.9, 8e-3, Branch::Plus);
    auto r = numeric_return_map(m, start);
    REQUIRE(r.defined);
    auto in = extract_coords(m, start);
    auto th = theta_partials(in.eta, in.xi, in.tau, in.sigma, m);
    const double jump = r.extracted.eta - in.eta;
    CHECK(std::abs(jump + m.epsilon * th.d_xi) < 0.05 * std::abs(m.epsilon * th.d_xi) + 1e-7);
}

TEST_CASE("domain errors") {
    auto m = test::arnold();
    CHECK_THROWS_AS(numeric_return_map(m, {0.5, 0.0, 0.0, kPi, 0.0}), NotInDomain);
    CHECK_THROWS_AS(extract_coords(m, PhasePoint{0.5, 0.0, 3.0, kPi, 0.0}), OutOfCollar);
    FlowOptions fo;
    fo.t_max = 0.5;
    auto r = numeric_return_map(m, section_point(0.6, 0, 0, 1e-3, Branch::Plus), fo);
    CHECK_FALSE(r.defined);
    CHECK(default_t_max(1e-3) == doctest::Approx(10 * std::log(1e3)));
}

TEST_CASE("averaged inner flow") {
    auto m = load_model(SEPLAB_MODEL_DIR "/inner_flow.model");
    const ResonanceVector k{1, 0};
    auto h = resonant_harmonics(0.1, m, k);
    CHECK(h.nu == doctest::Approx(0.1));
    CHECK(h.nu_prime == doctest::Approx(1.0));
    // The theta-average of G1 vanishes for every bar_t.
    for (double bt : {0.5, 3.0, 9.0}) {
        const int n = 64;
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += G1(0.1, kTwoPi * i / n, bt, m, k);
        CHECK(std::abs(s / n) < 1e-12);
    }
    // G1 and F1 are the first-order coefficients of the truncated system: check by an eps difference.
    for (double theta : {0.3, 2.2}) {
        const double bt = 4.0, eps = 1e-6;
        ModelSpec me = m;
        me.epsilon = eps;
        auto [th, J] = integrate_truncated_resonant(0.1, theta, bt, me, k);
        CHECK(std::abs((J - 0.1) / eps - G1(0.1, theta, bt, m, k)) < 1e-4);
        CHECK(std::abs((th - theta - 0.1 * bt) / eps - F1(0.1, theta, bt, m, k)) < 1e-3);
    }
    ModelSpec zero = m;
    zero.epsilon = 0.0;
    auto p = averaged_inner_flow(0.1, 0.5, 3.0, 0.0, zero, k);
    CHECK(p.J == 0.1);
    CHECK(p.theta == doctest::Approx(0.8));
}
