#pragma once

#include <array>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "seplab/geometry.hpp"
#include "seplab/hamiltonian.hpp"

namespace seplab {

struct ResonanceVector {
    int k_phi = 0;
    int k_t = 0;

    // gcd-reduced with the first nonzero entry positive.
    ResonanceVector primitive() const;
    // Sign-normalized only.
    ResonanceVector normalized() const;
    double divisor(double I) const;  // k_phi nu(I) + k_t
    auto operator<=>(const ResonanceVector&) const = default;
};

std::string to_string(const ResonanceVector& k);

struct ZoneLabel {
    bool resonant = false;
    ResonanceVector k;
    double beta = 0.0;
    bool operator==(const ZoneLabel&) const = default;
};

std::string to_string(const ZoneLabel& z);

// Fourier coefficient of H1 restricted to the saddle, as a polynomial in I.
struct SaddleMode {
    ResonanceVector k;
    std::vector<cplx> poly;  // poly[a] multiplies I^a
    cplx value(double I) const;
    cplx derivative(double I) const;
};

std::vector<SaddleMode> saddle_modes(const TrigPerturbation& pert);
// Modes of (1/2)(d_pp - d_qq) H1 at the saddle.
std::vector<SaddleMode> saddle_xy_modes(const TrigPerturbation& pert);

struct HarmonicSets {
    std::set<ResonanceVector> N;
    std::set<ResonanceVector> N2;
};

HarmonicSets harmonic_sets(const TrigPerturbation& pert);

// Primitive resonance vectors with pairwise disjoint zones; throws OverlappingZones otherwise.
std::vector<ResonanceVector> validated_zone_vectors(const ModelSpec& model);
ZoneLabel classify_zone(double I, const ModelSpec& model);

double bump_psi(double r);
double bump_psi_prime(double r);

struct AveragedJet {
    double value = 0.0;
    double dI = 0.0;
    double dphi = 0.0;
    double dt = 0.0;
};

AveragedJet boldface_H1_jet(double I, double phi, double t, const ModelSpec& model);
double boldface_H1(double I, double phi, double t, const ModelSpec& model);
double boldface_H1_frozen(double I, double phi, const ModelSpec& model);
double boldface_H2(double I, double phi, double t, const ModelSpec& model);

struct FourierMode {
    ResonanceVector k;
    cplx c;
};
using FourierTable = std::vector<FourierMode>;

double eval_fourier(const FourierTable& f, double phi, double t);
FourierTable apply_partial(const FourierTable& f, double I);
FourierTable inv_partial(const FourierTable& f, double I, const ModelSpec& model);

// Saddle restriction minus its bump-filtered part, as a Fourier table at action I.
FourierTable nonresonant_saddle_part(double I, const ModelSpec& model);

AveragedJet vartheta_jet(double I, double phi, double t, Branch sigma, const ModelSpec& model);
double vartheta(double I, double phi, double t, Branch sigma, const ModelSpec& model);

// Splitting potential and its partials. The lower/upper arrays hold the half-line
// integrals over (-inf, 0] and [0, inf) of the integrand and its (xi, tau, eta) derivatives.
struct ThetaResult {
    double value = 0.0;
    double d_xi = 0.0;
    double d_tau = 0.0;
    double d_eta = 0.0;
    double error = 0.0;
    std::array<double, 4> lower{};
    std::array<double, 4> upper{};
};

struct ThetaOptions {
    double abs_tol = 1e-11;
    double tail = 30.0;
    int max_evaluations = 400000;
};

ThetaResult theta_full(double eta, double xi, double tau, Branch sigma, const ModelSpec& model,
                       const ThetaOptions& opt = {});
// Integrals over (-inf, upto] of the splitting integrand and its (xi, tau, eta) derivatives.
std::array<double, 4> theta_lower_integrals(double eta, double xi, double tau, Branch sigma, const ModelSpec& model,
                                            double upto, const ThetaOptions& opt = {});
double theta_splitting(double eta, double xi, double tau, Branch sigma, const ModelSpec& model);

struct ThetaPartials {
    double d_xi = 0.0;
    double d_tau = 0.0;
    double d_eta = 0.0;
};

ThetaPartials theta_partials(double eta, double xi, double tau, Branch sigma, const ModelSpec& model);

struct SplittingPotentialGrid {
    double eta = 0.0;
    Branch sigma = Branch::Plus;
    int n_xi = 0;
    int n_tau = 0;
    double xi_min = 0.0, xi_max = kTwoPi, tau_min = -kPi, tau_max = kPi;
    std::vector<double> values;  // row-major in (xi, tau)
    std::vector<double> errors;
    double max_error = 0.0;
};

SplittingPotentialGrid tabulate_theta(double eta, Branch sigma, int n_xi, int n_tau, const ModelSpec& model,
                                      int threads = 1);

}  // namespace seplab
