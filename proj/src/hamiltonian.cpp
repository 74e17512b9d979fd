#include "seplab/hamiltonian.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "seplab/errors.hpp"

namespace seplab {

double wrap_angle(double x) {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double wrap_centered(double x) {
    double r = wrap_angle(x + kPi) - kPi;
    return r;
}

PhasePoint wrapped(const PhasePoint& x) {
    PhasePoint y = x;
    y.phi = wrap_angle(x.phi);
    y.q = wrap_angle(x.q);
    return y;
}

namespace {

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

}  // namespace

cplx Term::coeff_value(double I, double p) const {
    cplx s = 0.0;
    for (const auto& m : coeff) s += m.c * ipow(I, m.a) * ipow(p, m.b);
    return s;
}

cplx Term::coeff_dI(double I, double p) const {
    cplx s = 0.0;
    for (const auto& m : coeff)
        if (m.a > 0) s += m.c * double(m.a) * ipow(I, m.a - 1) * ipow(p, m.b);
    return s;
}

cplx Term::coeff_dp(double I, double p) const {
    cplx s = 0.0;
    for (const auto& m : coeff)
        if (m.b > 0) s += m.c * double(m.b) * ipow(I, m.a) * ipow(p, m.b - 1);
    return s;
}

cplx Term::coeff_dpp(double I, double p) const {
    cplx s = 0.0;
    for (const auto& m : coeff)
        if (m.b > 1) s += m.c * double(m.b * (m.b - 1)) * ipow(I, m.a) * ipow(p, m.b - 2);
    return s;
}

int TrigPerturbation::degree() const {
    int n = 0;
    for (const auto& t : terms) n = std::max({n, std::abs(t.k_phi), std::abs(t.k_t)});
    return n;
}

void TrigPerturbation::check_reality() const {
    using Key = std::tuple<int, int, int, int, int>;
    std::map<Key, cplx> table;
    for (const auto& t : terms)
        for (const auto& m : t.coeff) table[{t.k_q, t.k_phi, t.k_t, m.a, m.b}] += m.c;
    for (const auto& [key, c] : table) {
        auto [kq, kp, kt, a, b] = key;
        auto it = table.find({-kq, -kp, -kt, a, b});
        cplx partner = it == table.end() ? cplx(0.0) : it->second;
        double scale = std::max(1.0, std::abs(c));
        if (std::abs(partner - std::conj(c)) > 1e-14 * scale)
            throw InvalidModel("perturbation term (" + std::to_string(kq) + "," + std::to_string(kp) +
                               "," + std::to_string(kt) + ") has no conjugate partner");
    }
}

void ModelSpec::validate() const {
    if (!(I_minus < I_plus)) throw InvalidModel("action_window requires I- < I+");
    if (!(epsilon >= 0.0)) throw InvalidModel("epsilon must be non-negative");
    if (!(epsilon < epsilon_max)) throw InvalidModel("epsilon must be below epsilon_max");
    if (!(beta > 0.0)) throw InvalidModel("beta must be positive");
    perturbation.check_reality();
}

double pendulum_energy(double p, double q) { return 0.5 * p * p + std::cos(q) - 1.0; }

double eval_H0(const PhasePoint& x) { return 0.5 * x.I * x.I + pendulum_energy(x.p, x.q); }

H1Jet eval_H1_jet(const TrigPerturbation& pert, const PhasePoint& x) {
    cplx v = 0.0, dI = 0.0, dphi = 0.0, dp = 0.0, dq = 0.0, dt = 0.0;
    const cplx i1(0.0, 1.0);
    for (const auto& t : pert.terms) {
        double arg = t.k_q * x.q + t.k_phi * x.phi + t.k_t * x.t;
        cplx e(std::cos(arg), std::sin(arg));
        cplx c = t.coeff_value(x.I, x.p);
        cplx ce = c * e;
        v += ce;
        dI += t.coeff_dI(x.I, x.p) * e;
        dp += t.coeff_dp(x.I, x.p) * e;
        dphi += i1 * double(t.k_phi) * ce;
        dq += i1 * double(t.k_q) * ce;
        dt += i1 * double(t.k_t) * ce;
    }
    double scale = 1.0;
    for (const auto& t : pert.terms) scale += std::abs(t.coeff_value(x.I, x.p));
    if (std::abs(v.imag()) > 1e-12 * scale) throw NonRealValue("H1 evaluated to a non-real value");
    return {v.real(), dI.real(), dphi.real(), dp.real(), dq.real(), dt.real()};
}

double eval_H1(const ModelSpec& model, const PhasePoint& x) {
    return eval_H1_jet(model.perturbation, x).value;
}

double eval_H(const ModelSpec& model, const PhasePoint& x) {
    return eval_H0(x) + model.epsilon * eval_H1(model, x);
}

VectorField vector_field(const ModelSpec& model, const PhasePoint& x) {
    const double eps = model.epsilon;
    VectorField f{0.0, x.I, std::sin(x.q), x.p};
    if (eps != 0.0) {
        H1Jet j = eval_H1_jet(model.perturbation, x);
        f.dI -= eps * j.dphi;
        f.dphi += eps * j.dI;
        f.dp -= eps * j.dq;
        f.dq += eps * j.dp;
    }
    return f;
}

double energy_E(double I) { return 0.5 * I * I; }
double frequency_nu(double I) { return I; }
double frequency_nu_prime(double) { return 1.0; }

SaddleData saddle_linearization(double) {
    // Second derivatives of H0 in (p, q) at the saddle.
    const double Hpp = 1.0, Hqq = -1.0, Hpq = 0.0;
    SaddleData s;
    s.Lambda = {{{-Hpq, -Hqq}, {Hpp, Hpq}}};
    const double a = s.Lambda[0][0], b = s.Lambda[0][1], c = s.Lambda[1][0], d = s.Lambda[1][1];
    const double tr = a + d, det = a * d - b * c;
    const double disc = tr * tr / 4.0 - det;
    if (!(disc > 0.0) || !(det < 0.0)) throw SaddleNotHyperbolic("saddle eigenvalues are not real of opposite sign");
    const double lp = tr / 2.0 + std::sqrt(disc);
    const double lm = tr / 2.0 - std::sqrt(disc);
    s.lambda = lp;
    // Left eigenvectors: v (Lambda - l) = 0, i.e. v0 (a - l) + v1 c = 0.
    auto left = [&](double l) -> std::array<double, 2> {
        std::array<double, 2> v{c, l - a};
        if (std::hypot(v[0], v[1]) == 0.0) v = {l - d, b};
        return v;
    };
    auto ap = left(lp);
    auto am = left(lm);
    double D = ap[0] * am[1] - am[0] * ap[1];
    if (D < 0.0) {
        am = {-am[0], -am[1]};
        D = -D;
    }
    const double np = std::hypot(ap[0], ap[1]), nm = std::hypot(am[0], am[1]);
    // Scale so that det[a+, a-] = 1 and |a+| = |a-|.
    const double sp = std::sqrt(nm / (np * D)), sm = std::sqrt(np / (nm * D));
    s.a_plus = {ap[0] * sp, ap[1] * sp};
    s.a_minus = {am[0] * sm, am[1] * sm};
    return s;
}

TrigPerturbation add_cosine(TrigPerturbation pert, int k_q, int k_phi, int k_t, Monomial m) {
    auto push = [&](int kq, int kp, int kt, Monomial mono) {
        for (auto& t : pert.terms)
            if (t.k_q == kq && t.k_phi == kp && t.k_t == kt) {
                for (auto& x : t.coeff)
                    if (x.a == mono.a && x.b == mono.b) {
                        x.c += mono.c;
                        return;
                    }
                t.coeff.push_back(mono);
                return;
            }
        pert.terms.push_back({kq, kp, kt, {mono}});
    };
    if (k_q == 0 && k_phi == 0 && k_t == 0) {
        push(0, 0, 0, {cplx(m.c.real(), 0.0), m.a, m.b});
        return pert;
    }
    push(k_q, k_phi, k_t, {0.5 * m.c, m.a, m.b});
    push(-k_q, -k_phi, -k_t, {0.5 * std::conj(m.c), m.a, m.b});
    return pert;
}

TrigPerturbation classical_arnold() {
    // (1 - cos q)(cos phi + cos t)
    TrigPerturbation p;
    for (auto [kp, kt] : {std::pair{1, 0}, std::pair{0, 1}}) {
        p = add_cosine(p, 0, kp, kt, {1.0, 0, 0});
        p = add_cosine(p, 1, kp, kt, {-0.5, 0, 0});
        p = add_cosine(p, 1, -kp, -kt, {-0.5, 0, 0});
    }
    return p;
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("invalid number '" + std::string(s) + "'");
    return v;
}

int parse_int(std::string_view s) {
    int v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("invalid integer '" + std::string(s) + "'");
    return v;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

Monomial parse_monomial(const std::string& tok) {
    Monomial m{cplx(1.0, 0.0), 0, 0};
    std::size_t pos = 0;
    while (pos <= tok.size()) {
        std::size_t star = tok.find('*', pos);
        if (tok[pos] == '(') star = tok.find('*', tok.find(')', pos));
        std::string f = tok.substr(pos, star == std::string::npos ? std::string::npos : star - pos);
        if (f.empty()) throw ParseError("empty factor in '" + tok + "'");
        if (f.front() == '(') {
            if (f.back() != ')') throw ParseError("unterminated complex literal '" + f + "'");
            auto comma = f.find(',');
            if (comma == std::string::npos) throw ParseError("complex literal needs (re,im): '" + f + "'");
            m.c *= cplx(parse_double(std::string_view(f).substr(1, comma - 1)),
                        parse_double(std::string_view(f).substr(comma + 1, f.size() - comma - 2)));
        } else if (f[0] == 'I' || f[0] == 'p') {
            int n = 1;
            if (f.size() > 1) {
                if (f[1] != '^') throw ParseError("bad factor '" + f + "'");
                n = parse_int(std::string_view(f).substr(2));
                if (n < 0) throw ParseError("negative power in '" + f + "'");
            }
            (f[0] == 'I' ? m.a : m.b) += n;
        } else {
            m.c *= parse_double(f);
        }
        if (star == std::string::npos) break;
        pos = star + 1;
    }
    return m;
}

std::string format_monomial(const Monomial& m) {
    std::string s = m.c.imag() == 0.0 ? format_double(m.c.real())
                                      : "(" + format_double(m.c.real()) + "," + format_double(m.c.imag()) + ")";
    if (m.a == 1) s += "*I";
    else if (m.a > 1) s += "*I^" + std::to_string(m.a);
    if (m.b == 1) s += "*p";
    else if (m.b > 1) s += "*p^" + std::to_string(m.b);
    return s;
}

}  // namespace

ModelSpec parse_model(const std::string& text) {
    ModelSpec model;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        std::istringstream vs(val);
        std::vector<std::string> toks;
        for (std::string t; vs >> t;) toks.push_back(t);
        try {
            if (key == "epsilon" && toks.size() == 1) model.epsilon = parse_double(toks[0]);
            else if (key == "beta" && toks.size() == 1) model.beta = parse_double(toks[0]);
            else if (key == "epsilon_max" && toks.size() == 1) model.epsilon_max = parse_double(toks[0]);
            else if (key == "action_window" && toks.size() == 2) {
                model.I_minus = parse_double(toks[0]);
                model.I_plus = parse_double(toks[1]);
            } else if (key == "term" && toks.size() >= 5 && toks[3] == ":") {
                Term t{parse_int(toks[0]), parse_int(toks[1]), parse_int(toks[2]), {}};
                for (std::size_t i = 4; i < toks.size(); ++i) t.coeff.push_back(parse_monomial(toks[i]));
                model.perturbation.terms.push_back(std::move(t));
            } else {
                throw ParseError("unrecognized entry '" + key + "'");
            }
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    model.validate();
    return model;
}

std::string serialize_model(const ModelSpec& model) {
    std::ostringstream out;
    out << "epsilon = " << format_double(model.epsilon) << "\n";
    out << "beta = " << format_double(model.beta) << "\n";
    out << "epsilon_max = " << format_double(model.epsilon_max) << "\n";
    out << "action_window = " << format_double(model.I_minus) << " " << format_double(model.I_plus) << "\n";
    for (const auto& t : model.perturbation.terms) {
        out << "term = " << t.k_q << " " << t.k_phi << " " << t.k_t << " :";
        for (const auto& m : t.coeff) out << " " << format_monomial(m);
        out << "\n";
    }
    return out.str();
}

ModelSpec load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[i] = digits[h & 0xf];
    return s;
}

std::string model_hash(const ModelSpec& model) { return hex64(fnv1a(serialize_model(model))); }

}  // namespace seplab
