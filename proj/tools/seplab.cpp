#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "output.hpp"
#include "seplab/diffusion.hpp"
#include "seplab/experiments.hpp"
#include "seplab/flow.hpp"
#include "seplab/numerics.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace seplab::cli {
namespace {

struct Globals {
    std::string model_path;
    std::string out = ".";
    std::uint64_t seed = 1;
    int threads = 0;
    double tol = 1e-12;
    std::optional<double> eps;
};

ModelSpec load(const Globals& g) {
    if (g.model_path.empty()) throw InvalidArgument("--model is required for this command");
    ModelSpec m = load_model(g.model_path);
    if (g.eps) m.epsilon = *g.eps;
    m.validate();
    return m;
}

RunHeader header(const std::string& command, const Globals& g, json config, const ModelSpec* model) {
    RunHeader h;
    h.command = command;
    config["seed"] = g.seed;
    config["tol"] = g.tol;
    if (model) config["epsilon"] = model->epsilon;
    h.config = std::move(config);
    h.seed = g.seed;
    if (model) h.model_hash = model_hash(*model);
    return h;
}

std::string out_path(const Globals& g, const std::string& name) {
    fs::create_directories(g.out);
    return (fs::path(g.out) / name).string();
}

std::vector<double> split_numbers(const std::string& text, std::size_t expect, const char* what, char sep = ',') {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        std::size_t used = 0;
        try {
            v.push_back(std::stod(tok, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != tok.size()) throw ParseError(std::string("bad number '") + tok + "' in " + what);
    }
    if (expect && v.size() != expect) throw ParseError(std::string("expected ") + what);
    return v;
}

SepMapState parse_sepmap_state(const std::string& text) {
    const auto pos = text.rfind(',');
    if (pos == std::string::npos) throw ParseError("state must be eta,xi,h,tau,sigma");
    const auto v = split_numbers(text.substr(0, pos), 4, "eta,xi,h,tau,sigma");
    return {v[0], v[1], v[2], v[3], parse_branch(text.substr(pos + 1))};
}

json state_json(const SepMapState& s) {
    return {{"eta", s.eta}, {"xi", s.xi}, {"h", s.h}, {"tau", s.tau}, {"sigma", to_string(s.sigma)}};
}

json point_json(const PhasePoint& p) { return {{"I", p.I}, {"phi", p.phi}, {"p", p.p}, {"q", p.q}, {"t", p.t}}; }

json diag_json(const MapDiagnostics& d) {
    return {{"w", d.w_value},           {"zone", to_string(d.zone)},
            {"bar_t", d.bar_t},         {"passage_time", d.passage_time},
            {"iterations", d.fixed_point_iters}, {"residual", d.residual}};
}

RegimeParams regime_params(double c, double a, double tol) {
    RegimeParams p;
    p.c = c;
    p.a = a;
    p.tol = tol;
    return p;
}

// ---------------------------------------------------------------- geometry

int cmd_geometry_tabulate(const Globals& g, double I, double xi, const std::string& sigma_text,
                          const std::string& tau_grid) {
    const auto grid = split_numbers(tau_grid, 3, "a:b:n", ':');
    const double tau_min = grid[0], tau_max = grid[1];
    const int n = static_cast<int>(grid[2]);
    if (n < 2 || grid[2] != n) throw InvalidArgument("--tau-grid point count must be an integer of at least 2");
    const Branch sigma = parse_branch(sigma_text);
    const json cfg = {{"I", I}, {"xi", xi}, {"sigma", to_string(sigma)}, {"tau_grid", tau_grid}};
    const RunHeader h = header("geometry tabulate", g, cfg, nullptr);
    CsvWriter csv(h, {"tau", "p", "q", "chi"});
    double max_residual = 0.0;
    for (int i = 0; i < n; ++i) {
        const double tau = tau_min + (tau_max - tau_min) * i / (n - 1);
        const SeparatrixPoint sp = pendulum_separatrix(sigma, tau);
        max_residual = std::max(max_residual, std::abs(pendulum_energy(sp.p, sp.q)));
        csv.row(tau, sp.p, sp.q, chi(I, sigma, tau));
    }
    csv.save(out_path(g, "geometry_table.csv"));
    const SaddleData sd = saddle_linearization(I);
    json body = {{"lambda", sd.lambda},
                 {"a_plus", sd.a_plus},
                 {"a_minus", sd.a_minus},
                 {"nu", frequency_nu(I)},
                 {"mu_plus", mu(I, Branch::Plus)},
                 {"mu_minus", mu(I, Branch::Minus)},
                 {"kappa_plus", kappa(I, Branch::Plus)},
                 {"kappa_minus", kappa(I, Branch::Minus)},
                 {"max_level_residual", max_residual}};
    write_json(out_path(g, "geometry.json"), h, body);
    return 0;
}

// ---------------------------------------------------------------- melnikov

int cmd_melnikov_grid(const Globals& g, double eta, const std::string& sigma_text, int n_xi, int n_tau) {
    const ModelSpec model = load(g);
    const Branch sigma = parse_branch(sigma_text);
    const json cfg = {{"eta", eta}, {"sigma", to_string(sigma)}, {"n_xi", n_xi}, {"n_tau", n_tau}};
    const RunHeader h = header("melnikov grid", g, cfg, &model);
    const SplittingPotentialGrid grid = tabulate_theta(eta, sigma, n_xi, n_tau, model, resolve_threads(g.threads));
    CsvWriter csv(h, {"xi", "tau", "theta", "err_est"});
    for (int i = 0; i < n_xi; ++i)
        for (int j = 0; j < n_tau; ++j) {
            const double xi = grid.xi_min + (grid.xi_max - grid.xi_min) * i / std::max(n_xi - 1, 1);
            const double tau = grid.tau_min + (grid.tau_max - grid.tau_min) * j / std::max(n_tau - 1, 1);
            csv.row(xi, tau, grid.values[i * n_tau + j], grid.errors[i * n_tau + j]);
        }
    csv.save(out_path(g, "theta_grid.csv"));
    write_json(out_path(g, "melnikov_grid.json"), h,
               {{"eta", eta}, {"zone", to_string(classify_zone(eta, model))}, {"max_error", grid.max_error}});
    return 0;
}

// ---------------------------------------------------------------- map

std::string regime_name(const std::string& r) {
    if (r == "nonres") return "nonresonant";
    if (r == "res") return "resonant";
    return r;
}

MapResult run_map(const SepMapState& s, const ModelSpec& model, const std::string& regime_text, const RegimeParams& p) {
    const std::string regime = regime_name(regime_text);
    if (regime == "auto") return map_step(s, model, Regime::Auto, p);
    if (regime == "nonresonant") return map_nonresonant(s, model, p);
    if (regime == "resonant") return map_resonant(s, model, p);
    if (regime == "treschev") return map_treschev(s, model, p);
    throw InvalidArgument("unknown regime " + regime);
}

int cmd_map_step(const Globals& g, const std::string& state, const std::string& regime, double c, double a,
                 bool lenient) {
    const ModelSpec model = load(g);
    const SepMapState s = parse_sepmap_state(state);
    const json cfg = {{"state", state_json(s)}, {"regime", regime}, {"c", c}, {"a", a}, {"lenient", lenient}};
    const RunHeader h = header("map step", g, cfg, &model);
    RegimeParams p = regime_params(c, a, g.tol);
    p.check_window = !lenient;
    const auto [next, diag] = run_map(s, model, regime, p);
    write_json(out_path(g, "map_step.json"), h,
               {{"input", state_json(s)}, {"output", state_json(next)}, {"diagnostics", diag_json(diag)}});
    return 0;
}

int cmd_map_orbit(const Globals& g, const std::string& state, int n, const std::string& policy,
                  const std::string& regime_text, double c, double a) {
    const ModelSpec model = load(g);
    const SepMapState s = parse_sepmap_state(state);
    if (policy != "enforce" && policy != "lenient") throw InvalidArgument("--policy must be enforce or lenient");
    const std::string regime = regime_name(regime_text);
    const Regime r = regime == "auto" ? Regime::Auto
                   : regime == "nonresonant" ? Regime::NonResonant
                   : regime == "resonant" ? Regime::Resonant
                   : throw InvalidArgument("unknown regime " + regime);
    const json cfg = {{"state", state_json(s)}, {"n", n}, {"policy", policy}, {"regime", regime}, {"c", c}, {"a", a}};
    const RunHeader h = header("map orbit", g, cfg, &model);
    const Orbit orbit = iterate(s, model, n, policy == "enforce" ? IteratePolicy::Enforce : IteratePolicy::Lenient, r,
                                regime_params(c, a, g.tol));
    CsvWriter csv(h, {"n", "eta", "xi", "h", "tau", "sigma", "w", "bar_t", "residual", "zone", "passage_time",
                      "iterations"});
    for (std::size_t i = 0; i < orbit.records.size(); ++i) {
        const auto& rec = orbit.records[i];
        csv.row(static_cast<long>(i), rec.state.eta, rec.state.xi, rec.state.h, rec.state.tau,
                to_string(rec.state.sigma), rec.diag.w_value, rec.diag.bar_t, rec.diag.residual,
                to_string(rec.diag.zone), rec.diag.passage_time, rec.diag.fixed_point_iters);
    }
    csv.save(out_path(g, "map_orbit.csv"));
    write_json(out_path(g, "map_orbit.json"), h,
               {{"stop_reason", orbit.stop_reason}, {"length", orbit.records.size()}});
    return 0;
}

// ---------------------------------------------------------------- flow

int cmd_flow_return(const Globals& g, const std::string& state, double t_max, double collar) {
    const ModelSpec model = load(g);
    const auto v = split_numbers(state, 5, "I,phi,p,q,t");
    const PhasePoint start{v[0], v[1], v[2], v[3], v[4]};
    const json cfg = {{"state", point_json(start)}, {"t_max", t_max}, {"collar", collar}};
    const RunHeader h = header("flow return", g, cfg, &model);
    FlowOptions fo;
    fo.tol = g.tol;
    fo.t_max = t_max;
    fo.collar = collar;
    const ReturnResult r = numeric_return_map(model, start, fo);
    json body = {{"defined", r.defined},
                 {"outcome", r.defined ? "Returned" : "NotDefined"},
                 {"transit_steps", r.transit_steps},
                 {"representative", r.representative}};
    if (r.defined) {
        body["event"] = {{"time", r.event.time},
                         {"point", point_json(r.event.point)},
                         {"section", to_string(r.event.section)}};
        body["extracted"] = state_json(r.extracted);
        body["start_extracted"] = state_json(extract_coords(model, start, collar));
    }
    write_json(out_path(g, "flow_return.json"), h, body);
    return 0;
}

ScalingConfig scaling_config(const Globals& g, const std::string& eps_list, int samples, double eta0,
                             double w_factor, ScalingKind kind) {
    ScalingConfig c;
    c.eps_list = split_numbers(eps_list, 0, "eps list");
    c.samples = samples;
    c.eta0 = eta0;
    c.w_factor = w_factor;
    c.kind = kind;
    c.tol = g.tol;
    c.seed = g.seed;
    c.threads = resolve_threads(g.threads);
    return c;
}

json scaling_json(const ScalingReport& rep) {
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"eps", r.eps},
                        {"mean_abs_err_eta", r.mean_abs_err_eta},
                        {"mean_abs_err_h", r.mean_abs_err_h},
                        {"mean_abs_jump_eta", r.mean_abs_jump_eta},
                        {"defined", r.defined}});
    return {{"rows", rows}, {"fitted", rep.fitted}, {"slope_eta", rep.slope_eta}, {"slope_h", rep.slope_h}};
}

void save_scaling_csv(const RunHeader& h, const ScalingReport& rep, const std::string& path) {
    CsvWriter csv(h, {"eps", "mean_abs_err_eta", "mean_abs_err_h", "fitted_slope"});
    for (const auto& r : rep.rows) csv.row(r.eps, r.mean_abs_err_eta, r.mean_abs_err_h, rep.slope_eta);
    csv.save(path);
}

ScalingKind parse_kind(const std::string& kind, double eta0, const ModelSpec& model) {
    if (kind == "nonresonant") return ScalingKind::NonResonant;
    if (kind == "resonant") return ScalingKind::Resonant;
    if (kind == "auto") return classify_zone(eta0, model).resonant ? ScalingKind::Resonant : ScalingKind::NonResonant;
    throw InvalidArgument("unknown kind " + kind);
}

int cmd_flow_scaling(const Globals& g, const std::string& eps_list, int samples, double eta0, double w_factor,
                     const std::string& kind_text) {
    const ModelSpec model = load(g);
    const ScalingKind kind = parse_kind(kind_text, eta0, model);
    const json cfg = {{"eps_list", eps_list}, {"samples", samples}, {"eta0", eta0}, {"w_factor", w_factor},
                      {"kind", kind == ScalingKind::Resonant ? "resonant" : "nonresonant"}};
    const RunHeader h = header("flow verify-scaling", g, cfg, &model);
    const ScalingReport rep = run_return_scaling(model, scaling_config(g, eps_list, samples, eta0, w_factor, kind));
    save_scaling_csv(h, rep, out_path(g, "flow_scaling.csv"));
    write_json(out_path(g, "flow_scaling.json"), h, scaling_json(rep));
    return 0;
}

// ---------------------------------------------------------------- verify-scaling

int cmd_verify_scaling(const Globals& g, const std::string& eps_list, int samples, double eta0, double w_factor,
                       const std::string& kind_text, std::optional<double> min_eta, std::optional<double> min_h) {
    const ModelSpec model = load(g);
    const ScalingKind kind = parse_kind(kind_text, eta0, model);
    const bool res = kind == ScalingKind::Resonant;
    const double th_eta = min_eta.value_or(res ? 1.5 : 1.6);
    // The resonant energy component is report-only unless a threshold is given.
    const std::optional<double> th_h = min_h ? min_h : (res ? std::nullopt : std::optional<double>(1.6));
    json cfg = {{"eps_list", eps_list}, {"samples", samples}, {"eta0", eta0}, {"w_factor", w_factor},
                {"kind", res ? "resonant" : "nonresonant"}, {"min_slope_eta", th_eta}};
    cfg["min_slope_h"] = th_h ? json(*th_h) : json(nullptr);
    const RunHeader h = header("verify-scaling", g, cfg, &model);
    const ScalingReport rep = run_return_scaling(model, scaling_config(g, eps_list, samples, eta0, w_factor, kind));
    save_scaling_csv(h, rep, out_path(g, "verify_scaling.csv"));
    json body = scaling_json(rep);
    bool pass = true;
    json failures = json::array();
    if (rep.fitted) {
        if (!(rep.slope_eta >= th_eta)) {
            pass = false;
            failures.push_back({{"check", "slope_eta"}, {"value", rep.slope_eta}, {"threshold", th_eta}});
        }
        if (th_h && !(rep.slope_h >= *th_h)) {
            pass = false;
            failures.push_back({{"check", "slope_h"}, {"value", rep.slope_h}, {"threshold", *th_h}});
        }
    }
    body["pass"] = pass;
    body["failures"] = failures;
    body["note"] = rep.fitted ? "slopes fitted" : "errors at noise floor; slope fit skipped";
    write_json(out_path(g, "verify_scaling.json"), h, body);
    if (!pass) std::cout << json{{"error", "SlopeBelowThreshold"}, {"failures", failures}}.dump() << "\n";
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------- diffuse

std::function<double(double)> polynomial(const json& coeffs) {
    std::vector<double> c = coeffs.get<std::vector<double>>();
    if (c.empty()) throw ParseError("coefficient list is empty");
    return [c](double x) {
        double s = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
        return s;
    };
}

WalkSpec load_walk(const std::string& path, json& raw) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot read walk spec " + path);
    raw = json::parse(f);
    WalkSpec w;
    const auto sig = raw.at("sigma").get<std::vector<double>>();
    const auto b = raw.at("b").get<std::vector<double>>();
    w.sigma_fn = polynomial(raw.at("sigma"));
    w.b_fn = polynomial(raw.at("b"));
    w.delta = raw.at("delta").get<double>();
    w.eta0 = raw.value("eta0", 0.0);
    w.s = raw.at("s").get<double>();
    w.constant = sig.size() == 1 && b.size() == 1;
    w.validate();
    return w;
}

int cmd_diffuse_walk(const Globals& g, const std::string& spec_path, long samples, int bins) {
    json raw;
    const WalkSpec spec = load_walk(spec_path, raw);
    const json cfg = {{"spec", raw}, {"samples", samples}, {"bins", bins}};
    const RunHeader h = header("diffuse walk", g, cfg, nullptr);
    const EnsembleSummary s = simulate_ensemble(spec, samples, g.seed, resolve_threads(g.threads), bins);
    write_json(out_path(g, "walk_summary.json"), h,
               {{"n_samples", s.n_samples},
                {"n_steps", spec.n_steps()},
                {"mean", s.mean},
                {"variance", s.variance},
                {"ks_distance", s.ks_distance},
                {"target_mean", s.target_mean},
                {"target_variance", s.target_variance}});
    CsvWriter csv(h, {"bin_lo", "bin_hi", "count"});
    const double w = (s.histogram.hi - s.histogram.lo) / bins;
    for (int i = 0; i < bins; ++i)
        csv.row(s.histogram.lo + i * w, s.histogram.lo + (i + 1) * w, s.histogram.counts[i]);
    csv.save(out_path(g, "walk_histogram.csv"));
    return 0;
}

// Reads the eta column of a CSV orbit; a change in an "orbit" column starts a new sequence.
std::vector<std::vector<double>> read_orbit_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot read orbit " + path);
    std::string line;
    std::vector<std::string> cols;
    std::vector<std::vector<double>> out;
    int eta_col = -1, orbit_col = -1;
    std::string last_orbit;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (cols.empty()) {
            cols = cells;
            for (std::size_t i = 0; i < cols.size(); ++i) {
                if (cols[i] == "eta") eta_col = static_cast<int>(i);
                if (cols[i] == "orbit") orbit_col = static_cast<int>(i);
            }
            if (eta_col < 0) throw ParseError("orbit file has no eta column");
            continue;
        }
        if (static_cast<int>(cells.size()) <= eta_col) throw ParseError("short row in orbit file");
        const std::string tag = orbit_col >= 0 ? cells.at(orbit_col) : "";
        if (out.empty() || tag != last_orbit) out.emplace_back();
        last_orbit = tag;
        out.back().push_back(std::stod(cells[eta_col]));
    }
    return out;
}

void save_drift_csv(const RunHeader& h, const std::vector<DriftVarianceRow>& rows, const std::string& path) {
    CsvWriter csv(h, {"eta_lo", "eta_hi", "eta_mean", "count", "b_hat", "sigma_hat", "b_se", "sigma_se",
                      "insufficient"});
    for (const auto& r : rows)
        csv.row(r.eta_lo, r.eta_hi, r.eta_mean, r.count, r.b_hat, r.sigma_hat, r.b_se, r.sigma_se, r.insufficient);
    csv.save(path);
}

int cmd_diffuse_estimate(const Globals& g, const std::string& orbit_path, int bins, double scale, long min_count) {
    const auto orbits = read_orbit_csv(orbit_path);
    std::string bytes;
    {
        std::ifstream f(orbit_path, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(f), {});
    }
    const json cfg = {{"orbit_hash", hex64(fnv1a(bytes))}, {"bins", bins}, {"scale", scale}, {"min_count", min_count}};
    const RunHeader h = header("diffuse estimate", g, cfg, nullptr);
    BinSpec bs;
    bs.n_bins = bins;
    bs.min_count = min_count;
    save_drift_csv(h, empirical_drift_variance(orbits, scale, bs), out_path(g, "drift_variance.csv"));
    return 0;
}

// ---------------------------------------------------------------- golden

struct GoldenTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    double tol;
};

ModelSpec melnikov_reference_model() {
    ModelSpec m;
    TrigPerturbation p;
    p = add_cosine(p, 0, 1, 0, {1.0, 0, 0});
    p = add_cosine(p, 1, 1, 0, {-0.5, 0, 0});
    p = add_cosine(p, -1, 1, 0, {-0.5, 0, 0});
    m.perturbation = p;
    m.epsilon = 1e-3;
    return m;
}

std::vector<GoldenTable> compute_goldens(double tol_scale) {
    std::vector<GoldenTable> out;
    {
        GoldenTable t{"melnikov_arnold", {"eta", "xi", "theta", "residue"}, {}, 1e-9 * tol_scale};
        const ModelSpec m = melnikov_reference_model();
        ThetaOptions opt;
        opt.abs_tol = 1e-13;
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) {
                const double eta = 0.3 + 1.7 * i / 15.0, xi = kTwoPi * j / 16.0;
                const double th = theta_full(eta, xi, 0.0, Branch::Plus, m, opt).value;
                t.rows.push_back({eta, xi, th, kTwoPi * eta * std::cos(xi) / std::sinh(kPi * eta / 2.0)});
            }
        out.push_back(std::move(t));
    }
    {
        GoldenTable t{"kappa", {"I", "sigma", "kappa_T20", "kappa_T30"}, {}, 1e-9 * tol_scale};
        for (double I : {-1.5, -0.5, 0.0, 0.6, 1.0, 2.0})
            for (Branch s : {Branch::Minus, Branch::Plus})
                t.rows.push_back({I, sign_of(s), 1.0 / std::abs(kappa_inverse_at(I, s, 20.0)),
                                  1.0 / std::abs(kappa_inverse_at(I, s, 30.0))});
        out.push_back(std::move(t));
    }
    {
        GoldenTable t{"bar_t", {"eps", "w", "bar_t"}, {}, 0.0};
        const RegimeParams p;
        for (double eps : {1e-4, 1e-3, 1e-2})
            for (double f : {-5.0, -1.0, -0.2, 0.05, 0.3, 1.0, 3.0, 9.0}) {
                const double w = f * eps;
                double bt = -1.0;
                try {
                    bt = select_bar_t(w, eps, 1.0, p);
                } catch (const Error&) {
                }
                t.rows.push_back({eps, w, bt});
            }
        out.push_back(std::move(t));
    }
    return out;
}

std::string golden_text(const GoldenTable& t) {
    std::string s = "# golden table " + t.name + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
    s += "\n";
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + format_double(r[i]);
        s += "\n";
    }
    return s;
}

// Returns an empty string when the stored table matches, else a reason.
std::string compare_golden(const GoldenTable& t, const std::string& path, double& max_diff) {
    std::ifstream f(path);
    if (!f) return "missing";
    std::string line;
    bool header_seen = false;
    std::size_t row = 0;
    max_diff = 0.0;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            std::string want;
            for (std::size_t i = 0; i < t.columns.size(); ++i) want += (i ? "," : "") + t.columns[i];
            if (line != want) return "corrupted: header mismatch";
            continue;
        }
        if (row >= t.rows.size()) return "corrupted: extra rows";
        std::vector<double> v;
        std::stringstream ss(line);
        std::string c;
        try {
            while (std::getline(ss, c, ',')) {
                std::size_t used = 0;
                v.push_back(std::stod(c, &used));
                if (used != c.size()) return "corrupted: bad number in row " + std::to_string(row);
            }
        } catch (const std::exception&) {
            return "corrupted: bad number in row " + std::to_string(row);
        }
        if (v.size() != t.rows[row].size()) return "corrupted: wrong column count in row " + std::to_string(row);
        for (std::size_t i = 0; i < v.size(); ++i) max_diff = std::max(max_diff, std::abs(v[i] - t.rows[row][i]));
        ++row;
    }
    if (row != t.rows.size()) return "corrupted: missing rows";
    if (max_diff > t.tol) return "diff beyond tolerance";
    return "";
}

int cmd_golden(const Globals& g, const std::string& dir, bool regen, double tol_scale) {
    const json cfg = {{"regen", regen}, {"tol_scale", tol_scale}};
    const RunHeader h = header("golden", g, cfg, nullptr);
    const auto tables = compute_goldens(tol_scale);
    json files = json::array();
    bool ok = true;
    for (const auto& t : tables) {
        const std::string path = (fs::path(dir) / (t.name + ".csv")).string();
        if (regen) {
            fs::create_directories(dir);
            write_file(path, golden_text(t));
            files.push_back({{"name", t.name}, {"status", "regenerated"}});
            continue;
        }
        double diff = 0.0;
        const std::string why = compare_golden(t, path, diff);
        if (!why.empty()) ok = false;
        files.push_back({{"name", t.name},
                         {"status", why.empty() ? "match" : why},
                         {"max_abs_diff", diff},
                         {"tolerance", t.tol}});
    }
    write_json(out_path(g, "golden_report.json"), h, {{"pass", ok}, {"files", files}});
    if (!ok) std::cout << json{{"error", "GoldenMismatch"}, {"files", files}}.dump() << "\n";
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------- end-to-end

int cmd_end_to_end(const Globals& g, double eta0, int n, int orbits, int bins, long min_count, int grid) {
    const ModelSpec model = load(g);
    const json cfg = {{"eta0", eta0}, {"n", n}, {"orbits", orbits}, {"bins", bins}, {"min_count", min_count},
                      {"grid", grid}};
    const RunHeader h = header("end-to-end", g, cfg, &model);
    if (orbits < 1 || n < orbits) throw InvalidArgument("need 1 <= orbits <= n");
    const double eps = model.epsilon;
    std::vector<Orbit> runs(orbits);
    parallel_for(orbits, resolve_threads(g.threads), [&](std::size_t k) {
        CounterRng rng(g.seed, k);
        const double xi = rng.uniform(0.0, kTwoPi), tau = rng.uniform(-kPi, kPi);
        // Start inside the stochastic layer, w = eps above the separatrix.
        const SepMapState s{eta0, xi, energy_E(eta0) + eps * boldface_H1(eta0, xi, -tau, model) + eps, tau,
                            Branch::Plus};
        runs[k] = iterate(s, model, n / orbits, IteratePolicy::Lenient);
    });
    CsvWriter orbit_csv(h, {"orbit", "n", "eta", "xi", "h", "tau", "sigma"});
    std::vector<std::vector<double>> seqs;
    json stops = json::array();
    for (int k = 0; k < orbits; ++k) {
        seqs.emplace_back();
        stops.push_back(runs[k].stop_reason);
        for (std::size_t i = 0; i < runs[k].records.size(); ++i) {
            const auto& s = runs[k].records[i].state;
            orbit_csv.row(k, static_cast<long>(i), s.eta, s.xi, s.h, s.tau, to_string(s.sigma));
            seqs.back().push_back(s.eta);
        }
    }
    orbit_csv.save(out_path(g, "e2e_orbit.csv"));
    BinSpec bs;
    bs.n_bins = bins;
    bs.min_count = min_count;
    const auto rows = empirical_drift_variance(seqs, eps, bs);
    std::vector<double> theory(rows.size(), 0.0);
    std::vector<int> nonres(rows.size(), 0);
    parallel_for(rows.size(), resolve_threads(g.threads), [&](std::size_t i) {
        if (rows[i].insufficient || classify_zone(rows[i].eta_mean, model).resonant) return;
        nonres[i] = 1;
        theory[i] = std::sqrt(melnikov_variance(rows[i].eta_mean, model, grid));
    });
    CsvWriter bins_csv(h, {"eta_lo", "eta_hi", "eta_mean", "count", "b_hat", "sigma_hat", "b_se", "sigma_se",
                           "theory_sigma", "nonresonant", "within_3se"});
    int populated = 0, within = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const bool ok = nonres[i] && std::abs(r.sigma_hat - theory[i]) <= 3.0 * r.sigma_se + 1e-12 * theory[i];
        if (nonres[i]) {
            ++populated;
            within += ok;
        }
        bins_csv.row(r.eta_lo, r.eta_hi, r.eta_mean, r.count, r.b_hat, r.sigma_hat, r.b_se, r.sigma_se, theory[i],
                     nonres[i] != 0, ok);
    }
    bins_csv.save(out_path(g, "e2e_bins.csv"));
    const double frac = populated ? static_cast<double>(within) / populated : 0.0;
    const bool pass = populated > 0 && frac >= 0.8;
    write_json(out_path(g, "e2e.json"), h,
               {{"stop_reasons", stops},
                {"populated_nonresonant_bins", populated},
                {"within_3se", within},
                {"fraction", frac},
                {"pass", pass}});
    return pass ? 0 : 1;
}

}  // namespace
}  // namespace seplab::cli

int main(int argc, char** argv) {
    using namespace seplab::cli;
    CLI::App app{"seplab: separatrix map laboratory"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    double eps_value = 0.0;
    app.add_option("--model", g.model_path, "model file");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--threads", g.threads, "worker threads (default: SEPLAB_THREADS or 1)");
    app.add_option("--tol", g.tol, "integrator and fixed-point tolerance");
    auto* eps_opt = app.add_option("--eps", eps_value, "override the model epsilon");

    std::function<int()> run;

    auto* geometry = app.add_subcommand("geometry", "unperturbed separatrix data")->require_subcommand(1);
    double g_I = 1.0, g_xi = 0.0;
    std::string g_sigma = "+", g_grid = "-5:5:101";
    auto* tab = geometry->add_subcommand("tabulate", "tabulate the separatrix Gamma_sigma");
    tab->add_option("--I", g_I);
    tab->add_option("--xi", g_xi);
    tab->add_option("--branch,--sigma", g_sigma, "+ or -");
    tab->add_option("--tau-grid", g_grid, "a:b:n");
    tab->callback([&] { run = [&] { return cmd_geometry_tabulate(g, g_I, g_xi, g_sigma, g_grid); }; });

    auto* melnikov = app.add_subcommand("melnikov", "splitting potential")->require_subcommand(1);
    double m_eta = 1.0;
    std::string m_sigma = "+";
    int m_nxi = 16, m_ntau = 16;
    auto* grid = melnikov->add_subcommand("grid", "tabulate Theta on a (xi, tau) grid");
    grid->add_option("--eta", m_eta);
    grid->add_option("--sigma", m_sigma);
    grid->add_option("--nxi,--n-xi", m_nxi);
    grid->add_option("--ntau,--n-tau", m_ntau);
    grid->callback([&] { run = [&] { return cmd_melnikov_grid(g, m_eta, m_sigma, m_nxi, m_ntau); }; });

    auto* map = app.add_subcommand("map", "separatrix map")->require_subcommand(1);
    std::string mp_state, mp_regime = "auto", mp_policy = "enforce";
    double mp_c = 10.0, mp_a = 0.5;
    bool mp_lenient = false;
    int mp_n = 100;
    auto* step = map->add_subcommand("step", "one map step");
    step->add_option("--state", mp_state, "eta,xi,h,tau,sigma")->required();
    step->add_option("--regime", mp_regime, "auto, nonres, res or treschev");
    step->add_option("--c", mp_c);
    step->add_option("--a", mp_a);
    step->add_flag("--lenient", mp_lenient, "skip the regime window check");
    step->callback([&] { run = [&] { return cmd_map_step(g, mp_state, mp_regime, mp_c, mp_a, mp_lenient); }; });
    auto* orbit = map->add_subcommand("orbit", "iterate the map");
    orbit->add_option("--state", mp_state, "eta,xi,h,tau,sigma")->required();
    orbit->add_option("--n", mp_n);
    orbit->add_option("--policy", mp_policy, "enforce or lenient");
    orbit->add_option("--regime", mp_regime, "auto, nonres or res");
    orbit->add_option("--c", mp_c);
    orbit->add_option("--a", mp_a);
    orbit->callback([&] { run = [&] { return cmd_map_orbit(g, mp_state, mp_n, mp_policy, mp_regime, mp_c, mp_a); }; });

    auto* flow = app.add_subcommand("flow", "direct integration of the full flow")->require_subcommand(1);
    std::string f_state, f_eps_list = "1e-4,3e-4,1e-3,3e-3,1e-2", f_kind = "auto";
    double f_tmax = 0.0, f_collar = 0.5, f_eta0 = 0.6, f_wf = 8.0;
    int f_samples = 64;
    auto* ret = flow->add_subcommand("return", "numeric return map");
    ret->add_option("--state", f_state, "I,phi,p,q,t")->required();
    ret->add_option("--t-max", f_tmax);
    ret->add_option("--collar", f_collar);
    ret->callback([&] { run = [&] { return cmd_flow_return(g, f_state, f_tmax, f_collar); }; });
    auto* fscale = flow->add_subcommand("verify-scaling", "flow versus first-order map over an eps ladder");
    fscale->add_option("--eps-list", f_eps_list);
    fscale->add_option("--samples", f_samples);
    fscale->add_option("--eta0", f_eta0);
    fscale->add_option("--w-factor", f_wf);
    fscale->add_option("--kind", f_kind, "auto, nonresonant or resonant");
    fscale->callback([&] { run = [&] { return cmd_flow_scaling(g, f_eps_list, f_samples, f_eta0, f_wf, f_kind); }; });

    auto* vscale = app.add_subcommand("verify-scaling", "remainder exponent check with exit code");
    std::optional<double> v_min_eta, v_min_h;
    vscale->add_option("--eps-list", f_eps_list);
    vscale->add_option("--samples", f_samples);
    vscale->add_option("--eta0", f_eta0);
    vscale->add_option("--w-factor", f_wf);
    vscale->add_option("--kind", f_kind, "auto, nonresonant or resonant");
    vscale->add_option("--min-slope-eta", v_min_eta);
    vscale->add_option("--min-slope-h", v_min_h);
    vscale->callback([&] {
        run = [&] { return cmd_verify_scaling(g, f_eps_list, f_samples, f_eta0, f_wf, f_kind, v_min_eta, v_min_h); };
    });

    auto* diffuse = app.add_subcommand("diffuse", "random walk model")->require_subcommand(1);
    std::string d_spec, d_orbit;
    long d_samples = 100000, d_min_count = 30;
    int d_bins = 50;
    double d_scale = 1e-3;
    auto* walk = diffuse->add_subcommand("walk", "Monte Carlo ensemble of walks");
    walk->add_option("--spec", d_spec, "walk spec JSON")->required();
    walk->add_option("--samples", d_samples);
    walk->add_option("--bins", d_bins);
    walk->callback([&] { run = [&] { return cmd_diffuse_walk(g, d_spec, d_samples, d_bins); }; });
    auto* est = diffuse->add_subcommand("estimate", "binned drift and variance of an orbit");
    int e_bins = 20;
    est->add_option("--orbit", d_orbit, "CSV with an eta column")->required();
    est->add_option("--bins", e_bins);
    est->add_option("--scale", d_scale, "increment scale (epsilon)");
    est->add_option("--min-count", d_min_count);
    est->callback([&] { run = [&] { return cmd_diffuse_estimate(g, d_orbit, e_bins, d_scale, d_min_count); }; });

    auto* golden = app.add_subcommand("golden", "recompute and diff golden tables");
    std::string gd_dir = "tests/golden";
    bool gd_regen = false;
    double gd_scale = 1.0;
    golden->add_option("--golden-dir", gd_dir);
    golden->add_flag("--regen", gd_regen, "rewrite the golden tables");
    golden->add_option("--tol-scale", gd_scale);
    golden->callback([&] { run = [&] { return cmd_golden(g, gd_dir, gd_regen, gd_scale); }; });

    auto* e2e = app.add_subcommand("end-to-end", "map orbits fed to the drift/variance estimator");
    double e_eta0 = 0.6;
    int e_n = 10000, e_orbits = 4, e_ebins = 10, e_grid = 16;
    long e_min = 100;
    e2e->add_option("--eta0", e_eta0);
    e2e->add_option("--n", e_n);
    e2e->add_option("--orbits", e_orbits);
    e2e->add_option("--bins", e_ebins);
    e2e->add_option("--min-count", e_min);
    e2e->add_option("--grid", e_grid);
    e2e->callback([&] { run = [&] { return cmd_end_to_end(g, e_eta0, e_n, e_orbits, e_ebins, e_min, e_grid); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (eps_opt->count()) g.eps = eps_value;
    try {
        return run();
    } catch (const seplab::Error& e) {
        std::cout << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cout << json{{"error", "Exception"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
}
