#pragma once

#include <cstdint>
#include <vector>

#include "seplab/flow.hpp"

namespace seplab {

enum class ScalingKind { NonResonant, Resonant };

struct ScalingConfig {
    ScalingKind kind = ScalingKind::NonResonant;
    std::vector<double> eps_list{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
    int samples = 64;
    double eta0 = 0.6;
    double w_factor = 8.0;  // start pendulum energy w = w_factor * eps on the section q = pi
    double tol = 1e-12;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ScalingRow {
    double eps = 0.0;
    double mean_abs_err_eta = 0.0;
    double mean_abs_err_h = 0.0;
    double mean_abs_jump_eta = 0.0;  // mean |eta* - eta| of the flow, for scale
    int defined = 0;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    double slope_eta = 0.0;
    double slope_h = 0.0;
    bool fitted = false;  // false when every error sits at the noise floor
};

// Numeric return map against the first-order separatrix map prediction:
// non-resonant: eta - eps d_xi Theta, h - eps d_tau Theta; resonant: map_resonant.
ScalingReport run_return_scaling(const ModelSpec& model, const ScalingConfig& cfg);

struct InnerFlowConfig {
    std::vector<double> eps_list{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
    double J0 = 0.1;
    int n_theta = 16;
    int n_times = 8;
    bool scaled_time = false;  // true: bar_t = log(1/eps); false: grid on [0, 2 log(1/max eps)]
    double tol = 1e-13;
};

struct InnerFlowRow {
    double eps = 0.0;
    double max_discrepancy = 0.0;
};

struct InnerFlowReport {
    std::vector<InnerFlowRow> rows;
    double slope = 0.0;
};

InnerFlowReport run_inner_flow_scaling(const ModelSpec& model, const ResonanceVector& k, const InnerFlowConfig& cfg);

}  // namespace seplab
