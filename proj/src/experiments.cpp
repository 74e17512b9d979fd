#include "seplab/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "seplab/errors.hpp"
#include "seplab/numerics.hpp"

namespace seplab {

namespace {

struct SampleError {
    bool defined = false;
    double eta = 0.0;
    double h = 0.0;
    double jump = 0.0;
};

SampleError return_sample(const ModelSpec& model, const ScalingConfig& cfg, std::uint64_t stream) {
    CounterRng rng(cfg.seed, stream);
    const double phi = rng.uniform(0.0, kTwoPi);
    const double t = rng.uniform(0.0, kTwoPi);
    const Branch sigma = rng.uniform() < 0.5 ? Branch::Minus : Branch::Plus;
    const double eps = model.epsilon;
    const PhasePoint start = section_point(cfg.eta0, phi, t, cfg.w_factor * eps, sigma);
    const SepMapState s0 = extract_coords(model, start);
    FlowOptions fo;
    fo.tol = cfg.tol;
    const ReturnResult r = numeric_return_map(model, start, fo);
    SampleError e;
    if (!r.defined) return e;
    double eta_pred = s0.eta, h_pred = s0.h;
    if (cfg.kind == ScalingKind::NonResonant) {
        if (eps != 0.0) {
            const ThetaResult th = theta_full(s0.eta, s0.xi, s0.tau, s0.sigma, model);
            eta_pred -= eps * th.d_xi;
            h_pred -= eps * th.d_tau;
        }
    } else {
        RegimeParams rp;
        rp.check_window = false;
        const auto [m, d] = map_resonant(s0, model, rp);
        eta_pred = m.eta;
        h_pred = m.h;
    }
    e.defined = true;
    e.eta = std::abs(r.extracted.eta - eta_pred);
    e.h = std::abs(r.extracted.h - h_pred);
    e.jump = std::abs(r.extracted.eta - s0.eta);
    return e;
}

}  // namespace

ScalingReport run_return_scaling(const ModelSpec& model, const ScalingConfig& cfg) {
    if (cfg.samples < 1) throw InvalidArgument("samples must be positive");
    ScalingReport rep;
    const std::size_t m = cfg.samples;
    for (std::size_t ie = 0; ie < cfg.eps_list.size(); ++ie) {
        ModelSpec mod = model;
        mod.epsilon = cfg.eps_list[ie];
        mod.validate();
        std::vector<SampleError> errs(m);
        parallel_for(m, cfg.threads,
                     [&](std::size_t i) { errs[i] = return_sample(mod, cfg, ie * m + i); });
        ScalingRow row;
        row.eps = mod.epsilon;
        for (const auto& e : errs) {
            if (!e.defined) continue;
            ++row.defined;
            row.mean_abs_err_eta += e.eta;
            row.mean_abs_err_h += e.h;
            row.mean_abs_jump_eta += e.jump;
        }
        if (row.defined > 0) {
            row.mean_abs_err_eta /= row.defined;
            row.mean_abs_err_h /= row.defined;
            row.mean_abs_jump_eta /= row.defined;
        }
        rep.rows.push_back(row);
    }
    std::vector<double> x, ye, yh;
    for (const auto& r : rep.rows) {
        if (r.eps <= 0.0 || r.defined == 0 || r.mean_abs_err_eta <= 0.0 || r.mean_abs_err_h <= 0.0) continue;
        x.push_back(r.eps);
        ye.push_back(r.mean_abs_err_eta);
        yh.push_back(r.mean_abs_err_h);
    }
    if (x.size() >= 2) {
        rep.fitted = true;
        rep.slope_eta = loglog_slope(x, ye);
        rep.slope_h = loglog_slope(x, yh);
    }
    return rep;
}

InnerFlowReport run_inner_flow_scaling(const ModelSpec& model, const ResonanceVector& k, const InnerFlowConfig& cfg) {
    InnerFlowReport rep;
    const double eps_max = *std::max_element(cfg.eps_list.begin(), cfg.eps_list.end());
    std::vector<double> x, y;
    for (double eps : cfg.eps_list) {
        ModelSpec mod = model;
        mod.epsilon = eps;
        double worst = 0.0;
        const int nt = cfg.scaled_time ? 1 : cfg.n_times;
        for (int j = 1; j <= nt; ++j) {
            const double bar_t =
                cfg.scaled_time ? std::log(1.0 / eps) : 2.0 * std::log(1.0 / eps_max) * j / cfg.n_times;
            for (int i = 0; i < cfg.n_theta; ++i) {
                const double th0 = kTwoPi * i / cfg.n_theta;
                const InnerFlowPrediction p = averaged_inner_flow(cfg.J0, th0, bar_t, 0.0, mod, k);
                const auto [theta, J] = integrate_truncated_resonant(cfg.J0, th0, bar_t, mod, k, cfg.tol);
                worst = std::max(worst, std::abs(p.J - J) + std::abs(std::remainder(p.theta - theta, kTwoPi)));
            }
        }
        rep.rows.push_back({eps, worst});
        x.push_back(eps);
        y.push_back(worst);
    }
    rep.slope = loglog_slope(x, y);
    return rep;
}

}  // namespace seplab
