#include <doctest.h>

#include <cmath>

#include "seplab/flow.hpp"
#include "seplab/geometry.hpp"
#include "support.hpp"

using namespace seplab;

TEST_CASE("pendulum separatrix") {
    auto s = pendulum_separatrix(Branch::Plus, 0.0);
    CHECK(s.p == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s.q == doctest::Approx(kPi).epsilon(1e-15));
    auto far = pendulum_separatrix(Branch::Plus, 40.0);
    CHECK(far.p < 1e-16);
    CHECK(far.q == doctest::Approx(kTwoPi).epsilon(1e-15));
    auto low = pendulum_separatrix(Branch::Minus, 0.0);
    CHECK(low.p == doctest::Approx(-2.0));
    for (int i = 0; i < 50; ++i) {
        const double tau = -12.0 + 24.0 * i / 49;
        for (Branch b : {Branch::Plus, Branch::Minus}) {
            auto x = pendulum_separatrix(b, tau);
            CHECK(std::abs(pendulum_energy(x.p, x.q)) < 1e-12);
        }
        auto a = pendulum_separatrix(Branch::Plus, tau), r = pendulum_separatrix(Branch::Plus, -tau);
        CHECK(std::abs(a.p - r.p) < 1e-12);
        CHECK(std::abs(r.q - (kTwoPi - a.q)) < 1e-12);
    }
}

TEST_CASE("saddle-relative coordinates") {
    for (double tau : {-3.0, 0.5, 4.0}) {
        auto x = pendulum_separatrix(Branch::Plus, tau);
        CHECK(separatrix_q_forward_relative(Branch::Plus, tau) == doctest::Approx(x.q - kTwoPi).epsilon(1e-13));
        CHECK(separatrix_q_backward_relative(Branch::Plus, tau) == doctest::Approx(x.q).epsilon(1e-13));
    }
}

TEST_CASE("gamma_full") {
    auto g = gamma_full(0, 0, 0, Branch::Plus);
    CHECK(g.I == 0.0);
    CHECK(g.phi == 0.0);
    CHECK(g.p == doctest::Approx(2.0));
    CHECK(g.q == doctest::Approx(kPi));
    CHECK(gamma_full(1, 0, kPi, Branch::Plus).phi == doctest::Approx(kPi));
}

TEST_CASE("gamma_full is an unperturbed orbit") {
    ModelSpec m;
    for (Branch b : {Branch::Plus, Branch::Minus}) {
        const double I = 0.7, xi = 1.3;
        for (double tau : {-4.0, -1.0, 0.0, 2.5}) {
            const double h = 1e-5;
            auto a = gamma_full(I, xi, tau + h, b), c = gamma_full(I, xi, tau - h, b);
            auto v = vector_field(m, gamma_full(I, xi, tau, b));
            CHECK(std::abs((a.p - c.p) / (2 * h) - v.dp) < 1e-9);
            CHECK(std::abs((a.q - c.q) / (2 * h) - v.dq) < 1e-9);
            CHECK(std::abs(test::ang_diff(a.phi, c.phi) / (2 * h) - v.dphi) < 1e-9);
        }
        PhasePoint start = gamma_full(I, xi, -2.0, b);
        PhasePoint end = flow_to(m, start, 4.0, 1e-13);
        auto ref = gamma_full(I, xi, 2.0, b);
        CHECK(std::abs(end.p - ref.p) < 1e-8);
        CHECK(std::abs(test::ang_diff(end.q, ref.q)) < 1e-8);
        CHECK(std::abs(test::ang_diff(end.phi, ref.phi)) < 1e-8);
    }
}

TEST_CASE("loop shift vanishes for the pendulum-rotor family") {
    for (double I : {-1.0, 0.0, 0.8})
        for (Branch b : {Branch::Plus, Branch::Minus}) {
            CHECK(std::abs(mu(I, b)) < 1e-12);
            CHECK(std::abs(mu(I, b, 20.0) - mu(I, b, 40.0)) < 1e-10);
            CHECK(std::abs(chi(I, b, -30.0)) < 1e-10);
            CHECK(std::abs(chi(I, b, 1.5)) < 1e-12);
            CHECK(std::abs(chi(I, b, 40.0) - mu(I, b)) < 1e-10);
        }
}

TEST_CASE("kappa") {
    // Oracle: as t -> inf the separatrix leaves and enters the saddle like p = 4e^{-t}, |q - lift| = 4e^{-t};
    // with a+ = (1,1)/sqrt2, a- = (-1,1)/sqrt2 the bracket tends to -(8/sqrt2)^2 = -32.
    const double expected = 1.0 / 32.0;
    for (Branch b : {Branch::Plus, Branch::Minus}) {
        CHECK(kappa(0.0, b) == doctest::Approx(expected).epsilon(1e-9));
        CHECK(std::abs(kappa_inverse_at(0.0, b, 20.0) - kappa_inverse_at(0.0, b, 30.0)) <
              1e-6 * std::abs(kappa_inverse_at(0.0, b, 30.0)));
    }
    CHECK(std::abs(kappa(0.3, Branch::Plus) - kappa(0.3, Branch::Minus)) < 1e-8);
    CHECK(std::abs(kappa(0.0, Branch::Plus) - kappa(1.0, Branch::Plus)) < 1e-10);
    CHECK_THROWS_AS(kappa(0.0, Branch::Plus, 1.0), NonConvergent);
}
