#pragma once

#include <string>
#include <utility>
#include <vector>

#include "seplab/geometry.hpp"
#include "seplab/melnikov.hpp"

namespace seplab {

struct SepMapState {
    double eta = 0.0;
    double xi = 0.0;
    double h = 0.0;
    double tau = 0.0;
    Branch sigma = Branch::Plus;
};

struct MapDiagnostics {
    double w_value = 0.0;
    ZoneLabel zone;
    int bar_t = 0;
    double passage_time = 0.0;
    int fixed_point_iters = 0;
    double residual = 0.0;
};

struct RegimeParams {
    double c = 10.0;            // regime window: c^-1 eps^(1+a) < |w| < c eps
    double a = 0.5;
    double bar_t_window = 2.718281828459045;  // W^-1 <= |w| e^(lambda t) <= W
    double neighborhood = 0.5;  // largest |w| accepted at all
    double tol = 1e-12;
    int max_iters = 100;
    double damping = 0.5;
    bool check_window = true;
};

using MapResult = std::pair<SepMapState, MapDiagnostics>;

double w_nonres(double eta_star, double h_star, const RegimeParams& params = {});
double w0_res(double eta_star, double h_star, double xi_star, const ModelSpec& model, double t = 0.0,
              const RegimeParams& params = {});

// Throws WindowViolation unless c^-1 eps^(1+a) < |w| < c eps.
void check_regime(double w, double eps, const RegimeParams& params);
int select_bar_t(double w, double eps, double lambda, const RegimeParams& params);

MapResult map_treschev(const SepMapState& s, const ModelSpec& model, const RegimeParams& params = {});
MapResult map_nonresonant(const SepMapState& s, const ModelSpec& model, const RegimeParams& params = {});
MapResult map_resonant(const SepMapState& s, const ModelSpec& model, const RegimeParams& params = {});

struct SlowFastPoint {
    double a = 0.0;  // I or J
    double b = 0.0;  // phi or theta
    double c = 0.0;  // A or D
    double t = 0.0;
};

SlowFastPoint slow_fast(const SlowFastPoint& x, const ResonanceVector& k);
SlowFastPoint slow_fast_inverse(const SlowFastPoint& y, const ResonanceVector& k);

// Resonant drift of the action over the passage of duration T starting at angle xi, time t0.
double B_eta(double eta, double xi, double t0, double w0, Branch sigma, const ModelSpec& model);
// Same drift written as a difference quotient of the time-frozen averaged Hamiltonian.
double B_eta_frozen(double eta, double xi, double w0, Branch sigma, const ModelSpec& model);
// Energy drift from time-dependent resonant harmonics over the same passage.
double B_h_inner(double eta, double xi, double t0, double w0, Branch sigma, const ModelSpec& model);
// Loop shift term; vanishes when mu = 0.
double B_h(double eta, double xi, double tau, Branch sigma, const ModelSpec& model, double mu_shift);
double B_h(double eta, double xi, double tau, Branch sigma, const ModelSpec& model);
// Structural bound on the unmodelled angle terms.
double B_angles_envelope(double tau, double w0, int bar_t);

enum class IteratePolicy { Enforce, Lenient };
enum class Regime { Auto, NonResonant, Resonant };

struct OrbitRecord {
    SepMapState state;
    MapDiagnostics diag;
};

struct Orbit {
    std::vector<OrbitRecord> records;
    std::string stop_reason;  // Completed, Captured, NonConvergence, LeftWindow
};

MapResult map_step(const SepMapState& s, const ModelSpec& model, Regime regime, const RegimeParams& params);
Orbit iterate(const SepMapState& s, const ModelSpec& model, int n, IteratePolicy policy,
              Regime regime = Regime::Auto, RegimeParams params = {});

}  // namespace seplab
