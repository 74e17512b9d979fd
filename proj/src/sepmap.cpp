#include "seplab/sepmap.hpp"

#include <cmath>

#include "seplab/errors.hpp"

namespace seplab {

double w_nonres(double eta_star, double h_star, const RegimeParams& params) {
    const double w = h_star - energy_E(eta_star);
    if (!(std::abs(w) < params.neighborhood)) throw OutOfNeighborhood("|h - E(eta)| outside the normal-form neighborhood");
    return w;
}

double w0_res(double eta_star, double h_star, double xi_star, const ModelSpec& model, double t,
              const RegimeParams& params) {
    const double w = h_star - energy_E(eta_star) - model.epsilon * boldface_H1(eta_star, xi_star, t, model);
    if (!(std::abs(w) < params.neighborhood)) throw OutOfNeighborhood("|w0| outside the normal-form neighborhood");
    return w;
}

void check_regime(double w, double eps, const RegimeParams& params) {
    const double lo = std::pow(eps, 1.0 + params.a) / params.c, hi = params.c * eps;
    if (!(std::abs(w) > lo && std::abs(w) < hi)) throw WindowViolation("|w| outside the separatrix-map regime window");
}

int select_bar_t(double w, double eps, double lambda, const RegimeParams& params) {
    check_regime(w, eps, params);
    const double target = -std::log(std::abs(w)) / lambda;
    const int t = int(std::nearbyint(target));  // ties to even under the default rounding mode
    const double v = std::abs(w) * std::exp(lambda * t);
    const double W = params.bar_t_window;
    if (!(v >= 1.0 / W && v <= W)) throw NoAdmissibleTime("no integer passage time inside the window");
    return t;
}

namespace {

int bar_t_or_nearest(double w, double eps, double lambda, const RegimeParams& params) {
    if (params.check_window) return select_bar_t(w, eps, lambda, params);
    return int(std::nearbyint(-std::log(std::abs(w)) / lambda));
}

double log_kappa_w(double w, double eta, Branch sigma) {
    const double lambda = saddle_linearization(eta).lambda;
    return std::log(std::abs(kappa(eta, sigma) * w / lambda));
}

SepMapState finish(double eta, double xi, double h, double tau, Branch sigma, double w) {
    return {eta, wrap_angle(xi), h, wrap_centered(tau), branch_from_sign(sign_of(sigma) * (w < 0.0 ? -1.0 : 1.0))};
}

// Shared implicit solve for the Treschev and refined non-resonant forms.
MapResult implicit_map(const SepMapState& s, const ModelSpec& model, const RegimeParams& params, bool averaged) {
    const double eps = model.epsilon;
    const double t_s = -s.tau;
    double eta_star = s.eta, h_star = s.h;
    double damping = 1.0, prev_res = INFINITY;
    ThetaResult th;
    AveragedJet hb;
    double w = 0.0, L = 0.0, lambda = 1.0;
    int iters = 0;
    double res = INFINITY;
    for (; iters < params.max_iters; ++iters) {
        th = eps != 0.0 ? theta_full(eta_star, s.xi, s.tau, s.sigma, model) : ThetaResult{};
        hb = averaged && eps != 0.0 ? boldface_H1_jet(eta_star, s.xi, t_s, model) : AveragedJet{};
        w = h_star - energy_E(eta_star) - eps * hb.value;
        if (!(std::abs(w) < params.neighborhood)) throw OutOfNeighborhood("|w| outside the normal-form neighborhood");
        if (w == 0.0) throw WindowViolation("w vanishes: orbit on the stable manifold");
        lambda = saddle_linearization(eta_star).lambda;
        L = log_kappa_w(w, eta_star, s.sigma);
        const double dxi_w = -eps * hb.dphi, dtau_w = eps * hb.dt;
        const double eta_new = s.eta - eps * th.d_xi - dxi_w * L / lambda;
        const double h_new = s.h - eps * th.d_tau - dtau_w * L / lambda;
        res = std::max(std::abs(eta_new - eta_star), std::abs(h_new - h_star));
        if (res > prev_res) damping = params.damping;
        prev_res = res;
        eta_star += damping * (eta_new - eta_star);
        h_star += damping * (h_new - h_star);
        if (res < params.tol) break;
    }
    if (!(res < params.tol)) throw NonConvergence("implicit separatrix map did not converge");
    if (params.check_window) check_regime(w, eps, params);
    const double deta_w = -eta_star - eps * hb.dI;
    const double mu_s = mu(eta_star, s.sigma);
    const double xi_star = s.xi + mu_s + eps * th.d_eta + deta_w * L / lambda;
    const double tau_star = s.tau + L / lambda;
    MapDiagnostics d;
    d.w_value = w;
    d.zone = classify_zone(s.eta, model);
    d.passage_time = -L / lambda;
    d.bar_t = bar_t_or_nearest(w, eps, lambda, params);
    d.fixed_point_iters = iters + 1;
    d.residual = res;
    return {finish(eta_star, xi_star, h_star, tau_star, s.sigma, w), d};
}

cplx phi1(cplx z) {
    if (std::abs(z) < 1e-4) return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
    return (std::exp(z) - 1.0) / z;
}

// sum_k psi v_k e^{i theta0} * factor_k * (1 - e^{i omega T}) / omega, omega = k.(eta, 1).
double drift_sum(double eta, double xi, double t0, double T, const ModelSpec& model, bool energy) {
    const cplx i1(0.0, 1.0);
    cplx s = 0.0;
    for (const auto& m : saddle_modes(model.perturbation)) {
        const double omega = m.k.divisor(eta);
        const double weight = bump_psi(omega / model.beta);
        if (weight == 0.0) continue;
        const double factor = energy ? -double(m.k.k_t) : double(m.k.k_phi);
        if (factor == 0.0) continue;
        const double theta0 = m.k.k_phi * xi + m.k.k_t * t0;
        // (1 - e^{i w T}) / w = -i T phi1(i w T)
        const cplx q = -i1 * T * phi1(i1 * omega * T);
        s += weight * m.value(eta) * std::exp(i1 * theta0) * factor * q;
    }
    return s.real();
}

}  // namespace

MapResult map_treschev(const SepMapState& s, const ModelSpec& model, const RegimeParams& params) {
    RegimeParams p = params;
    p.check_window = false;
    MapResult r = implicit_map(s, model, p, true);
    if (params.check_window) {
        const double eps = model.epsilon, w = std::abs(r.second.w_value);
        const double lo = std::pow(eps, 1.25) * std::abs(std::log(eps)) / params.c;
        const double hi = params.c * std::pow(eps, 0.875);
        if (!(w > lo && w <= hi)) throw WindowViolation("|w0| outside the first-order map window");
    }
    return r;
}

MapResult map_nonresonant(const SepMapState& s, const ModelSpec& model, const RegimeParams& params) {
    const ZoneLabel z = classify_zone(s.eta, model);
    if (z.resonant) throw WrongZone("action lies in resonant zone " + to_string(z));
    return implicit_map(s, model, params, false);
}

double B_eta(double eta, double xi, double t0, double w0, Branch sigma, const ModelSpec& model) {
    const double T = -log_kappa_w(w0, eta, sigma) / saddle_linearization(eta).lambda;
    return drift_sum(eta, xi, t0, T, model, false);
}

double B_h_inner(double eta, double xi, double t0, double w0, Branch sigma, const ModelSpec& model) {
    const double T = -log_kappa_w(w0, eta, sigma) / saddle_linearization(eta).lambda;
    return drift_sum(eta, xi, t0, T, model, true);
}

double B_eta_frozen(double eta, double xi, double w0, Branch sigma, const ModelSpec& model) {
    // (H(xi) - H(xi - eta L)) / eta summed per mode as i k L phi1(-i k eta L); smooth through eta = 0.
    const double L = log_kappa_w(w0, eta, sigma);
    const cplx i1(0.0, 1.0);
    cplx s = 0.0;
    for (const auto& m : saddle_modes(model.perturbation)) {
        const double weight = bump_psi(m.k.divisor(eta) / model.beta);
        if (weight == 0.0 || m.k.k_phi == 0) continue;
        const double k = m.k.k_phi;
        s += weight * m.value(eta) * std::exp(i1 * k * xi) * i1 * k * L * phi1(-i1 * k * eta * L);
    }
    return s.real();
}

double B_h(double eta, double xi, double tau, Branch, const ModelSpec& model, double mu_shift) {
    const double phase = xi + frequency_nu(eta) * tau;
    return boldface_H1_frozen(eta, phase + mu_shift, model) - boldface_H1_frozen(eta, phase, model);
}

double B_h(double eta, double xi, double tau, Branch sigma, const ModelSpec& model) {
    return B_h(eta, xi, tau, sigma, model, mu(eta, sigma));
}

double B_angles_envelope(double tau, double w0, int bar_t) {
    return 1.0 + std::abs(tau) + std::abs(std::log(std::abs(w0))) + std::abs(double(bar_t));
}

MapResult map_resonant(const SepMapState& s, const ModelSpec& model, const RegimeParams& params) {
    const ZoneLabel z = classify_zone(s.eta, model);
    if (!z.resonant) throw WrongZone("action lies in the non-resonant zone");
    const double eps = model.epsilon;
    const ThetaResult th = eps != 0.0 ? theta_full(s.eta, s.xi, s.tau, s.sigma, model) : ThetaResult{};
    const double eta_l = s.eta - eps * th.d_xi;
    const double h_l = s.h - eps * th.d_tau;
    const double xi_l = s.xi + mu(s.eta, s.sigma) + eps * th.d_eta;
    const double t_c = -s.tau;
    const double lambda = saddle_linearization(eta_l).lambda;
    const double kap = kappa(eta_l, s.sigma);

    double w0 = w0_res(eta_l, h_l, xi_l, model, t_c, params);
    double eta_star = eta_l, h_star = h_l, xi_star = xi_l, tau_star = s.tau, T = 0.0;
    double damping = 1.0, prev_res = INFINITY, res = INFINITY;
    int iters = 0;
    for (; iters < params.max_iters; ++iters) {
        if (w0 == 0.0) throw WindowViolation("w0 vanishes: orbit on the stable manifold");
        T = -std::log(std::abs(kap * w0 / lambda)) / lambda;
        eta_star = eta_l + eps * drift_sum(eta_l, xi_l, t_c, T, model, false);
        h_star = h_l + eps * drift_sum(eta_l, xi_l, t_c, T, model, true);
        xi_star = xi_l + frequency_nu(eta_l) * T;
        tau_star = s.tau - T;
        const double w_new = w0_res(eta_star, h_star, xi_star, model, -tau_star, params);
        res = std::abs(w_new - w0) / std::max(std::abs(w0), 1e-300);
        if (res > prev_res) damping = params.damping;
        prev_res = res;
        w0 += damping * (w_new - w0);
        if (res < params.tol) break;
    }
    if (!(res < params.tol)) throw NonConvergence("resonant map did not converge");
    if (params.check_window) check_regime(w0, eps, params);
    MapDiagnostics d;
    d.w_value = w0;
    d.zone = z;
    d.passage_time = T;
    d.bar_t = bar_t_or_nearest(w0, eps, lambda, params);
    d.fixed_point_iters = iters + 1;
    d.residual = res;
    return {finish(eta_star, xi_star, h_star, tau_star, s.sigma, w0), d};
}

SlowFastPoint slow_fast(const SlowFastPoint& x, const ResonanceVector& k) {
    if (k.k_phi == 0) throw ZeroK0("slow-fast change needs k_phi != 0");
    const double k0 = k.k_phi, k1 = k.k_t;
    return {x.a / k0, k0 * x.b + k1 * x.t, x.c - (k1 / k0) * x.a, x.t};
}

SlowFastPoint slow_fast_inverse(const SlowFastPoint& y, const ResonanceVector& k) {
    if (k.k_phi == 0) throw ZeroK0("slow-fast change needs k_phi != 0");
    const double k0 = k.k_phi, k1 = k.k_t;
    return {k0 * y.a, (y.b - k1 * y.t) / k0, y.c + k1 * y.a, y.t};
}

MapResult map_step(const SepMapState& s, const ModelSpec& model, Regime regime, const RegimeParams& params) {
    if (regime == Regime::Auto) regime = classify_zone(s.eta, model).resonant ? Regime::Resonant : Regime::NonResonant;
    return regime == Regime::Resonant ? map_resonant(s, model, params) : map_nonresonant(s, model, params);
}

Orbit iterate(const SepMapState& s, const ModelSpec& model, int n, IteratePolicy policy, Regime regime,
              RegimeParams params) {
    params.check_window = policy == IteratePolicy::Enforce;
    Orbit orbit;
    orbit.records.push_back({s, {}});
    orbit.records.back().diag.zone = classify_zone(s.eta, model);
    orbit.stop_reason = "Completed";
    SepMapState cur = s;
    for (int i = 0; i < n; ++i) {
        if (cur.eta < model.I_minus || cur.eta > model.I_plus) {
            orbit.stop_reason = "LeftWindow";
            break;
        }
        try {
            auto [next, diag] = map_step(cur, model, regime, params);
            orbit.records.push_back({next, diag});
            cur = next;
        } catch (const WindowViolation&) {
            orbit.stop_reason = "Captured";
            break;
        } catch (const NoAdmissibleTime&) {
            orbit.stop_reason = "Captured";
            break;
        } catch (const OutOfNeighborhood&) {
            orbit.stop_reason = "Captured";
            break;
        } catch (const NonConvergence&) {
            orbit.stop_reason = "NonConvergence";
            break;
        }
    }
    return orbit;
}

}  // namespace seplab
