#include "seplab/geometry.hpp"

#include <cmath>

#include "seplab/errors.hpp"
#include "seplab/numerics.hpp"

namespace seplab {

std::string to_string(Branch s) { return s == Branch::Plus ? "+" : "-"; }

Branch parse_branch(const std::string& text) {
    if (text == "+" || text == "plus" || text == "1" || text == "+1") return Branch::Plus;
    if (text == "-" || text == "minus" || text == "-1") return Branch::Minus;
    throw ParseError("branch must be + or -, got '" + text + "'");
}

SeparatrixPoint pendulum_separatrix(Branch sigma, double tau) {
    const double s = sign_of(sigma);
    return {tau, 2.0 * s / std::cosh(tau), 4.0 * std::atan(std::exp(s * tau))};
}

double separatrix_q_forward_relative(Branch sigma, double tau) {
    // Upper loop tends to 2pi, lower loop to 0.
    return sigma == Branch::Plus ? -4.0 * std::atan(std::exp(-tau)) : 4.0 * std::atan(std::exp(-tau));
}

double separatrix_q_backward_relative(Branch sigma, double tau) {
    return sigma == Branch::Plus ? 4.0 * std::atan(std::exp(tau)) : -4.0 * std::atan(std::exp(tau));
}

PhasePoint gamma_full(double I, double xi, double tau, Branch sigma) {
    auto sp = pendulum_separatrix(sigma, tau);
    return {I, wrap_angle(xi + I * tau), sp.p, sp.q, 0.0};
}

namespace {

double mu_integrand(double I, Branch sigma, double t) {
    auto sp = pendulum_separatrix(sigma, t);
    PhasePoint x{I, 0.0, sp.p, sp.q, 0.0};
    // d_I H0 = I for the rotor-pendulum family.
    return -frequency_nu(I) + x.I;
}

}  // namespace

double mu(double I, Branch sigma, double T) {
    auto f = [&](double t, double* out) { out[0] = mu_integrand(I, sigma, t); };
    return integrate_gk(f, 1, -T, T, 1e-13).value[0];
}

double chi(double I, Branch sigma, double tau) {
    const double lo = std::min(tau, -30.0);
    if (tau <= lo) return 0.0;
    auto f = [&](double t, double* out) { out[0] = mu_integrand(I, sigma, t); };
    return integrate_gk(f, 1, lo, tau, 1e-13).value[0];
}

double kappa_inverse_at(double I, Branch sigma, double T) {
    const SaddleData sd = saddle_linearization(I);
    const auto back = pendulum_separatrix(sigma, -T);
    const auto fwd = pendulum_separatrix(sigma, T);
    const double qb = separatrix_q_backward_relative(sigma, -T);
    const double qf = separatrix_q_forward_relative(sigma, T);
    const double ip = sd.a_plus[0] * back.p + sd.a_plus[1] * qb;
    const double im = sd.a_minus[0] * fwd.p + sd.a_minus[1] * qf;
    return ip * im * std::exp(2.0 * sd.lambda * T);
}

double kappa(double I, Branch sigma, double T) {
    const double v = kappa_inverse_at(I, sigma, T);
    const double v5 = kappa_inverse_at(I, sigma, T + 5.0);
    if (std::abs(v - v5) > 1e-6 * std::abs(v)) throw NonConvergent("kappa limit has not stabilised");
    return 1.0 / std::abs(v);
}

}  // namespace seplab
