#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "seplab/sepmap.hpp"

namespace seplab {

struct WalkSpec {
    std::function<double(double)> sigma_fn;
    std::function<double(double)> b_fn;
    double delta = 0.01;
    double eta0 = 0.0;
    double s = 1.0;
    bool constant = false;  // set by constant_walk; enables word-at-a-time stepping

    long n_steps() const;  // floor(s / delta^2)
    void validate() const;
};

WalkSpec constant_walk(double sigma, double b, double delta, double eta0, double s);

double walk_step(double eta, const WalkSpec& spec, int omega);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<long> counts;
};

struct EnsembleSummary {
    long n_samples = 0;
    Histogram histogram;
    double mean = 0.0;
    double variance = 0.0;
    double ks_distance = 0.0;
    double target_mean = 0.0;
    double target_variance = 0.0;
};

// End points of n_samples walks; sample i draws its signs from CounterRng(seed, i).
std::vector<double> simulate_endpoints(const WalkSpec& spec, long n_samples, std::uint64_t seed, int threads = 1);
EnsembleSummary simulate_ensemble(const WalkSpec& spec, long n_samples, std::uint64_t seed, int threads = 1,
                                  int n_bins = 50);
// Full path eta_0 .. eta_n of a single walk.
std::vector<double> simulate_path(const WalkSpec& spec, long n_steps, std::uint64_t seed, std::uint64_t stream = 0);

// Two-sided Kolmogorov-Smirnov distance between a sample and N(mean, variance).
double ks_distance_normal(std::vector<double> sample, double mean, double variance);

struct BinSpec {
    int n_bins = 20;
    double lo = 0.0;  // lo == hi selects the range of the data
    double hi = 0.0;
    long min_count = 30;
};

struct DriftVarianceRow {
    double eta_lo = 0.0;
    double eta_hi = 0.0;
    double eta_mean = 0.0;
    long count = 0;
    double b_hat = 0.0;
    double sigma_hat = 0.0;
    double b_se = 0.0;
    double sigma_se = 0.0;
    bool insufficient = true;
};

// Bins increments eta_{n+1} - eta_n by eta_n; b_hat = mean / scale^2, sigma_hat = stdev / scale.
std::vector<DriftVarianceRow> empirical_drift_variance(const std::vector<double>& eta, double scale,
                                                       const BinSpec& bins);
// Several independent orbits; increments never cross from one orbit to the next.
std::vector<DriftVarianceRow> empirical_drift_variance(const std::vector<std::vector<double>>& orbits, double scale,
                                                       const BinSpec& bins);
std::vector<DriftVarianceRow> empirical_drift_variance(const std::vector<SepMapState>& orbit, double scale,
                                                       const BinSpec& bins);

// Torus mean of (d_xi Theta)^2 on an n x n grid, averaged over both branches.
double melnikov_variance(double eta, const ModelSpec& model, int n = 32, int threads = 1);

}  // namespace seplab
