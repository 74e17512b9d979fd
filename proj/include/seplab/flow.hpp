#pragma once

#include <string>
#include <utility>
#include <vector>

#include "seplab/dop853.hpp"
#include "seplab/sepmap.hpp"

namespace seplab {

struct Trajectory {
    std::vector<PhasePoint> samples;
    StepStats stats;
    double max_energy_drift = 0.0;  // pendulum-plus-rotor energy H0 drift along samples
};

enum class CrossingKind { Enter, Exit };

struct SectionEvent {
    PhasePoint point;
    CrossingKind kind = CrossingKind::Enter;
    Branch section = Branch::Plus;
    double time = 0.0;
};

struct FlowOptions {
    double tol = 1e-12;
    double t_max = 0.0;   // 0 selects 10 log(1/eps) / lambda
    double collar = 0.5;  // |p^2/2 + cos q - 1| < collar on the section
};

struct ReturnResult {
    bool defined = false;
    SectionEvent event;
    SepMapState extracted;
    int transit_steps = 0;
    std::string representative = "continuous-crossing";
};

// Unwrapped state (I, phi, p, q) with time as the independent variable.
Dop853<4> make_flow_integrator(const ModelSpec& model, double tol);

Trajectory integrate(const ModelSpec& model, const PhasePoint& start, double t_end, double tol);
PhasePoint flow_to(const ModelSpec& model, const PhasePoint& start, double t_end, double tol);
PhasePoint time_one_map(const ModelSpec& model, const PhasePoint& point, double tol = 1e-12);

double default_t_max(double eps, double lambda = 1.0);
ReturnResult numeric_return_map(const ModelSpec& model, const PhasePoint& start, const FlowOptions& opt = {});
SepMapState extract_coords(const ModelSpec& model, const SectionEvent& event, double collar = 0.5);
SepMapState extract_coords(const ModelSpec& model, const PhasePoint& point, double collar = 0.5);

// Start point on the section q = pi with pendulum energy w above the separatrix.
PhasePoint section_point(double I, double phi, double t, double w, Branch sigma);

// Averaged inner flow of the resonant normal form in slow-fast variables.
struct InnerFlowPrediction {
    double theta = 0.0;
    double J = 0.0;
    double F1 = 0.0;
    double G1 = 0.0;
};

struct ResonantHarmonics {
    ResonanceVector k;
    std::vector<int> m;         // multiples of k present
    std::vector<cplx> coeff;    // bump-weighted coefficient at J
    std::vector<cplx> dcoeff;   // derivative in J
    double nu = 0.0;            // k.(nu(k_phi J), 1)
    double nu_prime = 0.0;
};

ResonantHarmonics resonant_harmonics(double J, const ModelSpec& model, const ResonanceVector& k);
double F1(double J, double theta, double bar_t, const ModelSpec& model, const ResonanceVector& k);
double G1(double J, double theta, double bar_t, const ModelSpec& model, const ResonanceVector& k);
InnerFlowPrediction averaged_inner_flow(double J0, double theta0, double bar_t, double rho, const ModelSpec& model,
                                        const ResonanceVector& k);
// Direct integration of the truncated resonant system theta' = nu + eps dJ H, J' = -eps dtheta H.
std::pair<double, double> integrate_truncated_resonant(double J0, double theta0, double bar_t,
                                                       const ModelSpec& model, const ResonanceVector& k,
                                                       double tol = 1e-13);

}  // namespace seplab
