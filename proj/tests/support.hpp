#pragma once

#include <cmath>

#include "seplab/hamiltonian.hpp"

namespace seplab::test {

// P = (1 - cos q) * c * cos(k_phi phi + k_t t)
inline TrigPerturbation saddle_cosine(int k_phi, int k_t, double c = 1.0) {
    TrigPerturbation p;
    p = add_cosine(p, 0, k_phi, k_t, {c, 0, 0});
    p = add_cosine(p, 1, k_phi, k_t, {-0.5 * c, 0, 0});
    p = add_cosine(p, 1, -k_phi, -k_t, {-0.5 * c, 0, 0});
    return p;
}

inline ModelSpec make_model(TrigPerturbation p, double eps, double beta = 0.25) {
    ModelSpec m;
    m.perturbation = std::move(p);
    m.epsilon = eps;
    m.beta = beta;
    return m;
}

inline ModelSpec arnold(double eps = 1e-3) { return make_model(classical_arnold(), eps); }

// Arnold example plus 0.25 cos phi, resonant at I = 0 for beta = 0.5.
inline ModelSpec arnold_resonant(double eps = 1e-3) {
    return make_model(add_cosine(classical_arnold(), 0, 1, 0, {0.25, 0, 0}), eps, 0.5);
}

// cos t + I cos 2t
inline ModelSpec pq_free(double eps = 1e-3) {
    TrigPerturbation p = add_cosine({}, 0, 0, 1, {1.0, 0, 0});
    p = add_cosine(p, 0, 0, 2, {1.0, 1, 0});
    return make_model(p, eps);
}

inline double ang_diff(double a, double b) { return std::remainder(a - b, kTwoPi); }

}  // namespace seplab::test
