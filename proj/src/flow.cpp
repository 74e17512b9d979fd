#include "seplab/flow.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "seplab/errors.hpp"

namespace seplab {

Dop853<4> make_flow_integrator(const ModelSpec& model, double tol) {
    auto rhs = [&model](double t, const State<4>& y, State<4>& dy) {
        const VectorField f = vector_field(model, {y[0], y[1], y[2], y[3], t});
        dy = {f.dI, f.dphi, f.dp, f.dq};
    };
    return Dop853<4>(rhs, tol, tol);
}

namespace {

void check_tol(double tol) {
    if (!(tol >= 1e-13 && tol <= 1e-6)) throw StepFailure("integrator tolerance must lie in [1e-13, 1e-6]");
}

PhasePoint to_point(const State<4>& y, double t) { return {y[0], y[1], y[2], y[3], t}; }

}  // namespace

Trajectory integrate(const ModelSpec& model, const PhasePoint& start, double t_end, double tol) {
    check_tol(tol);
    auto ode = make_flow_integrator(model, tol);
    ode.reset(start.t, {start.I, start.phi, start.p, start.q});
    Trajectory tr;
    tr.samples.push_back(start);
    const double e0 = eval_H0(start);
    while (ode.step(t_end) || ode.t() == t_end) {
        tr.samples.push_back(to_point(ode.y(), ode.t()));
        tr.max_energy_drift = std::max(tr.max_energy_drift, std::abs(eval_H0(tr.samples.back()) - e0));
        if (ode.t() == t_end) break;
    }
    tr.stats = ode.stats();
    for (auto& s : tr.samples) s = wrapped(s);
    return tr;
}

PhasePoint flow_to(const ModelSpec& model, const PhasePoint& start, double t_end, double tol) {
    check_tol(tol);
    auto ode = make_flow_integrator(model, tol);
    ode.reset(start.t, {start.I, start.phi, start.p, start.q});
    return to_point(ode.integrate_to(t_end), t_end);
}

PhasePoint time_one_map(const ModelSpec& model, const PhasePoint& point, double tol) {
    return wrapped(flow_to(model, point, point.t + 1.0, tol));
}

double default_t_max(double eps, double lambda) {
    if (!(eps > 0.0)) return 100.0 / lambda;
    return 10.0 * std::log(1.0 / eps) / lambda;
}

PhasePoint section_point(double I, double phi, double t, double w, Branch sigma) {
    return {I, wrap_angle(phi), sign_of(sigma) * std::sqrt(2.0 * (w + 2.0)), kPi, t};
}

namespace {

double section_g(double q) { return std::sin(0.5 * (q - kPi)); }

}  // namespace

ReturnResult numeric_return_map(const ModelSpec& model, const PhasePoint& start, const FlowOptions& opt) {
    check_tol(opt.tol);
    if (!(std::abs(pendulum_energy(start.p, start.q)) < opt.collar))
        throw NotInDomain("start point lies outside the separatrix collar");
    const double t_max = opt.t_max > 0.0 ? opt.t_max : default_t_max(model.epsilon, saddle_linearization(start.I).lambda);
    auto ode = make_flow_integrator(model, opt.tol);
    ode.reset(start.t, {start.I, start.phi, start.p, start.q});
    const double t_end = start.t + t_max;
    ReturnResult res;
    // A start on the section (up to roundoff) does not count as its own return.
    const bool on_section = std::abs(section_g(start.q)) < 1e-9;
    while (ode.step(t_end) || ode.t() == t_end) {
        const double g0 = section_g(ode.y_prev()[3]), g1 = section_g(ode.y()[3]);
        const bool crossed = g0 != 0.0 && (g1 == 0.0 || (g0 < 0.0) != (g1 < 0.0));
        if (crossed) {
            auto g = [&](double t) { return section_g(ode.dense(t)[3]); };
            double te = ode.t();
            if (g1 != 0.0) {
                boost::uintmax_t iters = 200;
                auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(1.0, std::abs(a)); };
                auto [a, b] = boost::math::tools::toms748_solve(g, ode.t_prev(), ode.t(), g0, g1, tol, iters);
                te = 0.5 * (a + b);
            }
            if (on_section && te - start.t < 1e-6) {
                if (ode.t() == t_end) break;
                continue;
            }
            // Re-integrate the final partial step exactly to the event time.
            auto fine = make_flow_integrator(model, opt.tol);
            const auto yp = ode.y_prev();
            fine.reset(ode.t_prev(), yp);
            const PhasePoint pt = to_point(fine.integrate_to(te), te);
            res.defined = true;
            res.event.point = wrapped(pt);
            res.event.time = te;
            res.event.section = branch_from_sign(pt.p);
            res.event.kind = CrossingKind::Enter;
            res.transit_steps = ode.stats().accepted;
            res.extracted = extract_coords(model, res.event, opt.collar);
            return res;
        }
        if (ode.t() == t_end) break;
    }
    res.transit_steps = ode.stats().accepted;
    return res;
}

SepMapState extract_coords(const ModelSpec& model, const PhasePoint& point, double collar) {
    if (!(std::abs(pendulum_energy(point.p, point.q)) < collar))
        throw OutOfCollar("point lies outside the normal-form collar");
    const Branch sigma = branch_from_sign(point.p);
    const double qw = wrap_angle(point.q);
    // Loop time of the point on its separatrix branch; zero on the section q = pi.
    const double s = std::abs(qw - kPi) < 1e-9 ? 0.0 : sign_of(sigma) * std::log(std::tan(0.25 * qw));
    const double eps = model.epsilon;
    SepMapState st;
    st.sigma = sigma;
    st.eta = point.I;
    st.xi = wrap_angle(point.phi - frequency_nu(point.I) * s);
    st.tau = wrap_centered(s - point.t);
    st.h = eval_H(model, point);
    if (eps != 0.0) {
        const auto lower = theta_lower_integrals(point.I, st.xi, st.tau, sigma, model, s);
        const AveragedJet vt = vartheta_jet(point.I, point.phi, point.t, sigma, model);
        st.eta += -eps * vt.dphi + eps * lower[1];
        st.h += eps * vt.dt + eps * lower[2];
    }
    return st;
}

SepMapState extract_coords(const ModelSpec& model, const SectionEvent& event, double collar) {
    return extract_coords(model, event.point, collar);
}

ResonantHarmonics resonant_harmonics(double J, const ModelSpec& model, const ResonanceVector& k) {
    if (k.k_phi == 0) throw ZeroK0("slow-fast change needs k_phi != 0");
    ResonantHarmonics r;
    r.k = k;
    const double k0 = k.k_phi, I = k0 * J;
    r.nu = k.divisor(I);
    r.nu_prime = k0 * k0 * frequency_nu_prime(I);
    for (const auto& m : saddle_modes(model.perturbation)) {
        // Keep modes parallel to k: m.k = n k.
        if (m.k.k_phi * k.k_t != m.k.k_t * k.k_phi) continue;
        if (m.k.k_phi % k.k_phi != 0) continue;
        const int n = m.k.k_phi / k.k_phi;
        if (n * k.k_t != m.k.k_t) continue;
        const double omega = m.k.divisor(I);
        const double wgt = bump_psi(omega / model.beta);
        const double dwgt = bump_psi_prime(omega / model.beta) * m.k.k_phi * frequency_nu_prime(I) * k0 / model.beta;
        r.m.push_back(n);
        r.coeff.push_back(wgt * m.value(I));
        r.dcoeff.push_back(dwgt * m.value(I) + wgt * k0 * m.derivative(I));
    }
    return r;
}

namespace {

cplx phi1(cplx z) {
    if (std::abs(z) < 1e-3) return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0;
    return (std::exp(z) - 1.0) / z;
}

cplx phi2(cplx z) {
    if (std::abs(z) < 1e-2)
        return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0 + z * z * z * z / 720.0;
    return (std::exp(z) - 1.0 - z) / (z * z);
}

}  // namespace

double G1(double J, double theta, double bar_t, const ModelSpec& model, const ResonanceVector& k) {
    const ResonantHarmonics r = resonant_harmonics(J, model, k);
    const cplx i1(0.0, 1.0);
    cplx s = 0.0;
    for (std::size_t j = 0; j < r.m.size(); ++j) {
        if (r.m[j] == 0) continue;
        const double n = r.m[j];
        // (e^{i n theta} - e^{i n (theta + nu t)}) / nu = -i n t phi1(i n nu t) e^{i n theta}
        s += r.coeff[j] * std::exp(i1 * n * theta) * (-i1 * n * bar_t) * phi1(i1 * n * r.nu * bar_t);
    }
    return s.real();
}

double F1(double J, double theta, double bar_t, const ModelSpec& model, const ResonanceVector& k) {
    const ResonantHarmonics r = resonant_harmonics(J, model, k);
    const cplx i1(0.0, 1.0);
    cplx s = 0.0;
    for (std::size_t j = 0; j < r.m.size(); ++j) {
        const double n = r.m[j];
        if (r.m[j] == 0) {
            s += r.dcoeff[j] * bar_t;
            continue;
        }
        const cplx z = i1 * n * r.nu * bar_t;
        const cplx e = std::exp(i1 * n * theta);
        // (nu'/nu) (t - (e^z - 1)/(i n nu)) = -nu' i n t^2 phi2(z)
        s += r.coeff[j] * e * (-r.nu_prime * i1 * n * bar_t * bar_t * phi2(z));
        s += r.dcoeff[j] * e * bar_t * phi1(z);
    }
    return s.real();
}

InnerFlowPrediction averaged_inner_flow(double J0, double theta0, double bar_t, double rho, const ModelSpec& model,
                                        const ResonanceVector& k) {
    const ResonantHarmonics r = resonant_harmonics(J0, model, k);
    // d_J g(J, rho) = rho lambda'(J) vanishes: the pendulum exponent does not depend on J.
    (void)rho;
    InnerFlowPrediction p;
    p.F1 = F1(J0, theta0, bar_t, model, k);
    p.G1 = G1(J0, theta0, bar_t, model, k);
    p.theta = theta0 + r.nu * bar_t + model.epsilon * p.F1;
    p.J = J0 + model.epsilon * p.G1;
    return p;
}

std::pair<double, double> integrate_truncated_resonant(double J0, double theta0, double bar_t,
                                                       const ModelSpec& model, const ResonanceVector& k, double tol) {
    const double eps = model.epsilon;
    const cplx i1(0.0, 1.0);
    auto rhs = [&](double, const State<2>& y, State<2>& dy) {
        const ResonantHarmonics r = resonant_harmonics(y[0], model, k);
        cplx dJ = 0.0, dth = 0.0;
        for (std::size_t j = 0; j < r.m.size(); ++j) {
            const cplx e = std::exp(i1 * double(r.m[j]) * y[1]);
            dJ += r.dcoeff[j] * e;
            dth += i1 * double(r.m[j]) * r.coeff[j] * e;
        }
        dy[0] = -eps * dth.real();
        dy[1] = r.nu + eps * dJ.real();
    };
    Dop853<2> ode(rhs, tol, tol);
    ode.reset(0.0, {J0, theta0});
    const auto y = ode.integrate_to(bar_t);
    return {y[1], y[0]};
}

}  // namespace seplab
