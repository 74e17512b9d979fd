#pragma once

#include <string>

#include "seplab/hamiltonian.hpp"

namespace seplab {

enum class Branch { Minus = -1, Plus = 1 };

inline double sign_of(Branch s) { return s == Branch::Plus ? 1.0 : -1.0; }
inline Branch branch_from_sign(double s) { return s < 0.0 ? Branch::Minus : Branch::Plus; }
std::string to_string(Branch s);
Branch parse_branch(const std::string& text);

struct SeparatrixPoint {
    double tau = 0.0;
    double p = 0.0;
    double q = 0.0;
};

SeparatrixPoint pendulum_separatrix(Branch sigma, double tau);
// q measured from the saddle lift the branch approaches as tau -> +inf (q - 2pi for the upper loop).
double separatrix_q_forward_relative(Branch sigma, double tau);
// q measured from the saddle lift the branch leaves as tau -> -inf.
double separatrix_q_backward_relative(Branch sigma, double tau);

PhasePoint gamma_full(double I, double xi, double tau, Branch sigma);

// Integral of (-nu(I) + d_I H0) along the separatrix over (-T, T).
double mu(double I, Branch sigma, double T = 30.0);
// Cumulative version from -inf to tau.
double chi(double I, Branch sigma, double tau);

// Bracketed expression of the kappa limit evaluated at truncation time T.
double kappa_inverse_at(double I, Branch sigma, double T);
// kappa = 1/|limit|; throws NonConvergent if the limit has not stabilised by T.
double kappa(double I, Branch sigma, double T = 30.0);

}  // namespace seplab
