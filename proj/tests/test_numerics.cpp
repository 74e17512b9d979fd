#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "seplab/dop853.hpp"
#include "seplab/errors.hpp"
#include "seplab/hamiltonian.hpp"
#include "seplab/numerics.hpp"

using namespace seplab;

TEST_CASE("Philox4x32-10 known answers") {
    // Reference vectors of the Random123 distribution.
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == Philox4x32{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          Philox4x32{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          Philox4x32{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter streams are reproducible and uniform") {
    CounterRng a(42, 3), b(42, 3), c(42, 4);
    bool differs = false;
    double sum = 0.0, sum2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        differs |= x != c.uniform();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        sum += x;
        sum2 += x * x;
    }
    CHECK(differs);
    CHECK(std::abs(sum / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(sum2 / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("Gauss-Kronrod against tanh-sinh") {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [](double x) { return std::exp(-x * x) * std::cos(3 * x) / (1 + x * x); };
    const double ref = ts.integrate(f, -4.0, 4.0);
    auto r = integrate_gk([&](double x, double* out) { out[0] = f(x); out[1] = std::sin(x); }, 2, -4.0, 4.0, 1e-13);
    CHECK(std::abs(r.value[0] - ref) < 1e-12);
    CHECK(std::abs(r.value[1]) < 1e-13);
    auto s = integrate_gk([](double x, double* out) { out[0] = std::sin(x); }, 1, 0.0, kPi, 1e-14);
    CHECK(s.value[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(integrate_gk([](double x, double* out) { out[0] = std::sin(1 / x); }, 1, 1e-9, 1.0, 1e-15, 500),
                    QuadratureBudgetExceeded);
}

TEST_CASE("log-log slope and normal cdf") {
    std::vector<double> x{1e-4, 1e-3, 1e-2}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 1.75));
    CHECK(loglog_slope(x, y) == doctest::Approx(1.75).epsilon(1e-12));
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.0) == doctest::Approx(0.5 * std::erfc(-1.0 / std::sqrt(2.0))).epsilon(1e-15));
    CHECK(normal_cdf(-8.0) < 1e-14);
}

TEST_CASE("parallel_for visits each index once") {
    for (int threads : {1, 3, 8}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
        bool once = true;
        for (auto& h : hits) once &= h.load() == 1;
        CHECK(once);
    }
    CHECK_THROWS(parallel_for(10, 2, [](std::size_t i) {
        if (i == 7) throw InvalidArgument("boom");
    }));
    CHECK(resolve_threads(5) == 5);
}

namespace {

using Pendulum = Dop853<2>;
void pendulum_rhs(double, const State<2>& y, State<2>& d) {
    d[0] = -std::sin(y[1]);
    d[1] = y[0];
}

// Fixed-step run: huge tolerances accept every step and landing points clip the step.
State<2> fixed_steps(int n, double T) {
    Pendulum ode(pendulum_rhs, 1e30, 1e30);
    ode.reset(0.0, {1.5, 0.0}, T / n);
    for (int k = 1; k <= n; ++k) ode.integrate_to(T * k / n);
    return ode.y();
}

}  // namespace

TEST_CASE("DOP853 self-convergence order") {
    const double T = 10.0;
    const auto ref = fixed_steps(2560, T);
    auto err = [&](int n) {
        auto y = fixed_steps(n, T);
        return std::hypot(y[0] - ref[0], y[1] - ref[1]);
    };
    std::vector<double> h, e;
    for (int n : {20, 40, 80}) {
        h.push_back(T / n);
        e.push_back(err(n));
    }
    const double order = loglog_slope(h, e);
    MESSAGE("observed order " << order);
    CHECK(order >= 7.0);
}

TEST_CASE("DOP853 adaptive error falls with tolerance") {
    auto run = [](double tol) {
        Dop853<2> ode([](double, const State<2>& y, State<2>& d) { d = {-y[1], y[0]}; }, tol, tol);
        ode.reset(0.0, {1.0, 0.0});
        auto y = ode.integrate_to(20.0);
        return std::hypot(y[0] - std::cos(20.0), y[1] - std::sin(20.0));
    };
    for (double tol : {1e-6, 1e-8}) CHECK(run(tol / 10) * 4 <= run(tol));
}

TEST_CASE("DOP853 dense output and energy") {
    Dop853<2> ode([](double, const State<2>& y, State<2>& d) { d = {-y[1], y[0]}; }, 1e-12, 1e-12);
    ode.reset(0.0, {1.0, 0.0});
    double worst = 0.0, drift = 0.0;
    while (ode.step(30.0)) {
        for (double s : {0.25, 0.5, 0.75}) {
            const double t = ode.t_prev() + s * (ode.t() - ode.t_prev());
            auto y = ode.dense(t);
            worst = std::max(worst, std::hypot(y[0] - std::cos(t), y[1] - std::sin(t)));
        }
        drift = std::max(drift, std::abs(std::hypot(ode.y()[0], ode.y()[1]) - 1.0));
    }
    CHECK(worst < 1e-9);
    CHECK(drift < 1e-10);
}
