#include "seplab/melnikov.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "seplab/errors.hpp"
#include "seplab/numerics.hpp"

namespace seplab {

ResonanceVector ResonanceVector::normalized() const {
    if (k_phi < 0 || (k_phi == 0 && k_t < 0)) return {-k_phi, -k_t};
    return *this;
}

ResonanceVector ResonanceVector::primitive() const {
    const int g = std::gcd(std::abs(k_phi), std::abs(k_t));
    if (g == 0) return {0, 0};
    return ResonanceVector{k_phi / g, k_t / g}.normalized();
}

double ResonanceVector::divisor(double I) const { return k_phi * frequency_nu(I) + k_t; }

std::string to_string(const ResonanceVector& k) {
    return "(" + std::to_string(k.k_phi) + "," + std::to_string(k.k_t) + ")";
}

std::string to_string(const ZoneLabel& z) {
    return z.resonant ? "Resonant" + to_string(z.k) : std::string("NonResonant");
}

cplx SaddleMode::value(double I) const {
    cplx s = 0.0;
    for (std::size_t a = poly.size(); a-- > 0;) s = s * I + poly[a];
    return s;
}

cplx SaddleMode::derivative(double I) const {
    cplx s = 0.0;
    for (std::size_t a = poly.size(); a-- > 1;) s = s * I + double(a) * poly[a];
    return s;
}

namespace {

std::vector<SaddleMode> collect(std::map<ResonanceVector, std::vector<cplx>>& table) {
    std::vector<SaddleMode> out;
    for (auto& [k, poly] : table) {
        while (!poly.empty() && poly.back() == cplx(0.0)) poly.pop_back();
        if (!poly.empty()) out.push_back({k, poly});
    }
    return out;
}

void add_to(std::map<ResonanceVector, std::vector<cplx>>& table, ResonanceVector k, int a, cplx c) {
    auto& poly = table[k];
    if (int(poly.size()) <= a) poly.resize(a + 1, 0.0);
    poly[a] += c;
}

}  // namespace

std::vector<SaddleMode> saddle_modes(const TrigPerturbation& pert) {
    std::map<ResonanceVector, std::vector<cplx>> table;
    for (const auto& t : pert.terms)
        for (const auto& m : t.coeff)
            if (m.b == 0) add_to(table, {t.k_phi, t.k_t}, m.a, m.c);
    return collect(table);
}

std::vector<SaddleMode> saddle_xy_modes(const TrigPerturbation& pert) {
    // (1/2)(d_pp - d_qq) of c(I,p) e^{i k_q q} at p = q = 0.
    std::map<ResonanceVector, std::vector<cplx>> table;
    for (const auto& t : pert.terms)
        for (const auto& m : t.coeff) {
            if (m.b == 2) add_to(table, {t.k_phi, t.k_t}, m.a, m.c);
            if (m.b == 0 && t.k_q != 0) add_to(table, {t.k_phi, t.k_t}, m.a, 0.5 * double(t.k_q * t.k_q) * m.c);
        }
    return collect(table);
}

HarmonicSets harmonic_sets(const TrigPerturbation& pert) {
    HarmonicSets h;
    std::vector<ResonanceVector> raw;
    for (const auto& m : saddle_modes(pert))
        if (m.k != ResonanceVector{0, 0}) raw.push_back(m.k);
    for (const auto& k : raw) h.N.insert(k.normalized());
    for (const auto& a : raw)
        for (const auto& b : raw) {
            ResonanceVector s{a.k_phi + b.k_phi, a.k_t + b.k_t};
            if (s != ResonanceVector{0, 0}) h.N2.insert(s.normalized());
        }
    return h;
}

std::vector<ResonanceVector> validated_zone_vectors(const ModelSpec& model) {
    HarmonicSets h = harmonic_sets(model.perturbation);
    std::set<ResonanceVector> prim;
    for (const auto& k : h.N) prim.insert(k.primitive());
    for (const auto& k : h.N2) prim.insert(k.primitive());
    std::vector<ResonanceVector> ks(prim.begin(), prim.end());
    // Zone of k inside the action window: {I : |k_phi I + k_t| <= beta}.
    auto zone = [&](const ResonanceVector& k) -> std::pair<double, double> {
        if (k.k_phi == 0) {
            if (std::abs(k.k_t) <= model.beta) return {model.I_minus, model.I_plus};
            return {1.0, 0.0};
        }
        double a = (-k.k_t - model.beta) / k.k_phi, b = (-k.k_t + model.beta) / k.k_phi;
        if (a > b) std::swap(a, b);
        return {std::max(a, model.I_minus), std::min(b, model.I_plus)};
    };
    for (std::size_t i = 0; i < ks.size(); ++i)
        for (std::size_t j = i + 1; j < ks.size(); ++j) {
            auto [a1, b1] = zone(ks[i]);
            auto [a2, b2] = zone(ks[j]);
            if (a1 <= b1 && a2 <= b2 && std::max(a1, a2) <= std::min(b1, b2))
                throw OverlappingZones("resonant zones " + to_string(ks[i]) + " and " + to_string(ks[j]) +
                                       " overlap inside the action window");
        }
    return ks;
}

ZoneLabel classify_zone(double I, const ModelSpec& model) {
    ZoneLabel z{false, {0, 0}, model.beta};
    for (const auto& k : validated_zone_vectors(model))
        if (std::abs(k.divisor(I)) <= model.beta) {
            z.resonant = true;
            z.k = k;
        }
    return z;
}

namespace {

double mollifier(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

}  // namespace

double bump_psi(double r) {
    const double a = std::abs(r);
    if (a <= 0.5) return 1.0;
    if (a >= 1.0) return 0.0;
    const double s = 2.0 * (a - 0.5);
    const double A = mollifier(1.0 - s), B = mollifier(s);
    return A / (A + B);
}

double bump_psi_prime(double r) {
    const double a = std::abs(r);
    if (a <= 0.5 || a >= 1.0) return 0.0;
    const double s = 2.0 * (a - 0.5);
    const double A = mollifier(1.0 - s), B = mollifier(s);
    const double dA = -A / ((1.0 - s) * (1.0 - s)), dB = B / (s * s);
    const double dpsi_ds = (dA * B - A * dB) / ((A + B) * (A + B));
    return dpsi_ds * 2.0 * (r < 0.0 ? -1.0 : 1.0);
}

namespace {

AveragedJet filtered_sum(const std::vector<SaddleMode>& modes, double I, double phi, double t, double beta,
                         bool complement) {
    AveragedJet j;
    const cplx i1(0.0, 1.0);
    for (const auto& m : modes) {
        const double w = m.k.divisor(I);
        double weight = bump_psi(w / beta);
        double dweight = bump_psi_prime(w / beta) * m.k.k_phi * frequency_nu_prime(I) / beta;
        if (complement) {
            weight = 1.0 - weight;
            dweight = -dweight;
        }
        if (weight == 0.0 && dweight == 0.0) continue;
        const double arg = m.k.k_phi * phi + m.k.k_t * t;
        const cplx e(std::cos(arg), std::sin(arg));
        const cplx c = m.value(I);
        j.value += (weight * c * e).real();
        j.dI += ((dweight * c + weight * m.derivative(I)) * e).real();
        j.dphi += (i1 * double(m.k.k_phi) * weight * c * e).real();
        j.dt += (i1 * double(m.k.k_t) * weight * c * e).real();
    }
    return j;
}

}  // namespace

AveragedJet boldface_H1_jet(double I, double phi, double t, const ModelSpec& model) {
    return filtered_sum(saddle_modes(model.perturbation), I, phi, t, model.beta, false);
}

double boldface_H1(double I, double phi, double t, const ModelSpec& model) {
    return boldface_H1_jet(I, phi, t, model).value;
}

double boldface_H1_frozen(double I, double phi, const ModelSpec& model) { return boldface_H1(I, phi, 0.0, model); }

double boldface_H2(double I, double phi, double t, const ModelSpec& model) {
    const double lambda = saddle_linearization(I).lambda;
    return filtered_sum(saddle_xy_modes(model.perturbation), I, phi, t, model.beta, false).value / lambda;
}

double eval_fourier(const FourierTable& f, double phi, double t) {
    cplx s = 0.0;
    for (const auto& m : f) {
        const double arg = m.k.k_phi * phi + m.k.k_t * t;
        s += m.c * cplx(std::cos(arg), std::sin(arg));
    }
    return s.real();
}

FourierTable apply_partial(const FourierTable& f, double I) {
    FourierTable out = f;
    for (auto& m : out) m.c *= cplx(0.0, m.k.divisor(I));
    return out;
}

FourierTable inv_partial(const FourierTable& f, double I, const ModelSpec& model) {
    FourierTable out = f;
    for (auto& m : out) {
        const double w = m.k.divisor(I);
        if (m.c == cplx(0.0)) continue;
        if (std::abs(w) <= 0.5 * model.beta)
            throw SmallDivisor("mode " + to_string(m.k) + " has divisor below beta/2");
        m.c /= cplx(0.0, w);
    }
    return out;
}

FourierTable nonresonant_saddle_part(double I, const ModelSpec& model) {
    FourierTable out;
    for (const auto& m : saddle_modes(model.perturbation)) {
        const double weight = 1.0 - bump_psi(m.k.divisor(I) / model.beta);
        if (weight != 0.0) out.push_back({m.k, weight * m.value(I)});
    }
    return out;
}

AveragedJet vartheta_jet(double I, double phi, double t, Branch, const ModelSpec& model) {
    const FourierTable f = inv_partial(nonresonant_saddle_part(I, model), I, model);
    AveragedJet j;
    const cplx i1(0.0, 1.0);
    for (const auto& m : f) {
        const double arg = m.k.k_phi * phi + m.k.k_t * t;
        const cplx ce = -m.c * cplx(std::cos(arg), std::sin(arg));
        j.value += ce.real();
        j.dphi += (i1 * double(m.k.k_phi) * ce).real();
        j.dt += (i1 * double(m.k.k_t) * ce).real();
    }
    if (!f.empty()) {
        const double h = 1e-6 * std::max(1.0, std::abs(I));
        const double up = eval_fourier(inv_partial(nonresonant_saddle_part(I + h, model), I + h, model), phi, t);
        const double dn = eval_fourier(inv_partial(nonresonant_saddle_part(I - h, model), I - h, model), phi, t);
        j.dI = -(up - dn) / (2.0 * h);
    }
    return j;
}

double vartheta(double I, double phi, double t, Branch sigma, const ModelSpec& model) {
    return vartheta_jet(I, phi, t, sigma, model).value;
}

namespace {

VecIntegrand splitting_integrand(double eta, double xi, double tau, Branch sigma, const ModelSpec& model) {
    return [eta, xi, tau, sigma, &model](double u, double* out) {
        const auto sp = pendulum_separatrix(sigma, u);
        const double phi = xi + eta * u, t = u - tau;
        const H1Jet on = eval_H1_jet(model.perturbation, {eta, phi, sp.p, sp.q, t});
        const H1Jet sad = eval_H1_jet(model.perturbation, {eta, phi, 0.0, 0.0, t});
        out[0] = on.value - sad.value;
        out[1] = on.dphi - sad.dphi;
        out[2] = -(on.dt - sad.dt);
        out[3] = (on.dI - sad.dI) + u * out[1];
    };
}

}  // namespace

ThetaResult theta_full(double eta, double xi, double tau, Branch sigma, const ModelSpec& model,
                       const ThetaOptions& opt) {
    const VecIntegrand f = splitting_integrand(eta, xi, tau, sigma, model);
    const double T = opt.tail + std::abs(tau);
    const QuadResult lo = integrate_gk(f, 4, -T, 0.0, 0.5 * opt.abs_tol, opt.max_evaluations);
    const QuadResult hi = integrate_gk(f, 4, 0.0, T, 0.5 * opt.abs_tol, opt.max_evaluations);
    ThetaResult r;
    for (int d = 0; d < 4; ++d) {
        r.lower[d] = lo.value[d];
        r.upper[d] = hi.value[d];
    }
    r.value = lo.value[0] + hi.value[0];
    r.d_xi = lo.value[1] + hi.value[1];
    r.d_tau = lo.value[2] + hi.value[2];
    r.d_eta = lo.value[3] + hi.value[3];
    r.error = lo.error + hi.error;
    return r;
}

std::array<double, 4> theta_lower_integrals(double eta, double xi, double tau, Branch sigma, const ModelSpec& model,
                                            double upto, const ThetaOptions& opt) {
    const double T = opt.tail + std::abs(tau) + std::abs(upto);
    const QuadResult lo =
        integrate_gk(splitting_integrand(eta, xi, tau, sigma, model), 4, -T, upto, opt.abs_tol, opt.max_evaluations);
    return {lo.value[0], lo.value[1], lo.value[2], lo.value[3]};
}

double theta_splitting(double eta, double xi, double tau, Branch sigma, const ModelSpec& model) {
    return theta_full(eta, xi, tau, sigma, model).value;
}

ThetaPartials theta_partials(double eta, double xi, double tau, Branch sigma, const ModelSpec& model) {
    const ThetaResult r = theta_full(eta, xi, tau, sigma, model);
    return {r.d_xi, r.d_tau, r.d_eta};
}

SplittingPotentialGrid tabulate_theta(double eta, Branch sigma, int n_xi, int n_tau, const ModelSpec& model,
                                      int threads) {
    SplittingPotentialGrid g;
    g.eta = eta;
    g.sigma = sigma;
    g.n_xi = n_xi;
    g.n_tau = n_tau;
    g.values.assign(std::size_t(n_xi) * n_tau, 0.0);
    g.errors.assign(g.values.size(), 0.0);
    auto coord = [](double lo, double hi, int n, int i) { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); };
    parallel_for(g.values.size(), threads, [&](std::size_t idx) {
        const int i = int(idx / n_tau), j = int(idx % n_tau);
        const ThetaResult r = theta_full(eta, coord(g.xi_min, g.xi_max, n_xi, i),
                                         coord(g.tau_min, g.tau_max, n_tau, j), sigma, model);
        g.values[idx] = r.value;
        g.errors[idx] = r.error;
    });
    for (double e : g.errors) g.max_error = std::max(g.max_error, e);
    return g;
}

}  // namespace seplab
