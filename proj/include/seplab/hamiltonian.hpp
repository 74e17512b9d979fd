#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace seplab {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Wraps into [0, 2pi).
double wrap_angle(double x);
// Wraps into [-pi, pi).
double wrap_centered(double x);

// c * I^a * p^b
struct Monomial {
    cplx c;
    int a = 0;
    int b = 0;
};

// sum_m c_m I^a_m p^b_m * exp(i (k_q q + k_phi phi + k_t t))
struct Term {
    int k_q = 0;
    int k_phi = 0;
    int k_t = 0;
    std::vector<Monomial> coeff;

    cplx coeff_value(double I, double p) const;
    cplx coeff_dI(double I, double p) const;
    cplx coeff_dp(double I, double p) const;
    cplx coeff_dpp(double I, double p) const;
};

struct TrigPerturbation {
    std::vector<Term> terms;

    int degree() const;
    // Throws InvalidModel if some term lacks its conjugate partner.
    void check_reality() const;
};

struct PhasePoint {
    double I = 0.0;
    double phi = 0.0;
    double p = 0.0;
    double q = 0.0;
    double t = 0.0;
};

PhasePoint wrapped(const PhasePoint& x);

struct ModelSpec {
    TrigPerturbation perturbation;
    double epsilon = 0.0;
    double I_minus = -2.0;
    double I_plus = 2.0;
    double beta = 0.25;
    double epsilon_max = 0.05;

    void validate() const;
};

// Value and first partials of H1 at a point.
struct H1Jet {
    double value = 0.0;
    double dI = 0.0;
    double dphi = 0.0;
    double dp = 0.0;
    double dq = 0.0;
    double dt = 0.0;
};

struct VectorField {
    double dI = 0.0;
    double dphi = 0.0;
    double dp = 0.0;
    double dq = 0.0;
};

struct SaddleData {
    std::array<std::array<double, 2>, 2> Lambda{};  // acting on (p, q)
    double lambda = 0.0;
    std::array<double, 2> a_plus{};
    std::array<double, 2> a_minus{};
};

double eval_H0(const PhasePoint& x);
double pendulum_energy(double p, double q);
double eval_H1(const ModelSpec& model, const PhasePoint& x);
H1Jet eval_H1_jet(const TrigPerturbation& pert, const PhasePoint& x);
double eval_H(const ModelSpec& model, const PhasePoint& x);
VectorField vector_field(const ModelSpec& model, const PhasePoint& x);

double energy_E(double I);
double frequency_nu(double I);
double frequency_nu_prime(double I);
SaddleData saddle_linearization(double I);

// Model presets used by tests and the CLI.
TrigPerturbation classical_arnold();
TrigPerturbation add_cosine(TrigPerturbation pert, int k_q, int k_phi, int k_t, Monomial m);

// Key-value model file.
ModelSpec parse_model(const std::string& text);
std::string serialize_model(const ModelSpec& model);
ModelSpec load_model(const std::string& path);
std::string format_double(double x);
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t h);
std::string model_hash(const ModelSpec& model);

}  // namespace seplab
