#include "seplab/diffusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "seplab/errors.hpp"
#include "seplab/numerics.hpp"

namespace seplab {

long WalkSpec::n_steps() const {
    // Guard against s / delta^2 landing just below an integer, as 1 / 0.1^2 does.
    return static_cast<long>(std::floor(s / (delta * delta) * (1.0 + 1e-12)));
}

void WalkSpec::validate() const {
    if (!sigma_fn || !b_fn) throw InvalidArgument("walk coefficients are not set");
    if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
    if (!(s > 0.0)) throw InvalidArgument("diffusion time must be positive");
    if (n_steps() < 1) throw InvalidArgument("s / delta^2 must be at least one step");
}

WalkSpec constant_walk(double sigma, double b, double delta, double eta0, double s) {
    WalkSpec w;
    w.sigma_fn = [sigma](double) { return sigma; };
    w.b_fn = [b](double) { return b; };
    w.delta = delta;
    w.eta0 = eta0;
    w.s = s;
    w.constant = true;
    return w;
}

double walk_step(double eta, const WalkSpec& spec, int omega) {
    if (omega != 1 && omega != -1) throw InvalidArgument("omega must be +1 or -1");
    return eta + spec.sigma_fn(eta) * spec.delta * omega + spec.b_fn(eta) * spec.delta * spec.delta;
}

namespace {

double constant_endpoint(const WalkSpec& spec, long n, CounterRng& rng) {
    const double sd = spec.sigma_fn(spec.eta0) * spec.delta;
    const double bd = spec.b_fn(spec.eta0) * spec.delta * spec.delta;
    long ups = 0;
    long left = n;
    while (left >= 32) {
        ups += std::popcount(rng.next_u32());
        left -= 32;
    }
    if (left > 0) ups += std::popcount(rng.next_u32() & ((1u << left) - 1u));
    return spec.eta0 + sd * static_cast<double>(2 * ups - n) + bd * static_cast<double>(n);
}

template <class Visit>
void run_walk(const WalkSpec& spec, long n, CounterRng& rng, Visit&& visit) {
    double eta = spec.eta0;
    const double d = spec.delta, d2 = d * d;
    std::uint32_t bits = 0;
    int left = 0;
    for (long i = 0; i < n; ++i) {
        if (left == 0) {
            bits = rng.next_u32();
            left = 32;
        }
        const double omega = (bits & 1u) ? 1.0 : -1.0;
        bits >>= 1;
        --left;
        eta += spec.sigma_fn(eta) * d * omega + spec.b_fn(eta) * d2;
        visit(eta);
    }
}

}  // namespace

std::vector<double> simulate_endpoints(const WalkSpec& spec, long n_samples, std::uint64_t seed, int threads) {
    spec.validate();
    const long n = spec.n_steps();
    std::vector<double> out(n_samples);
    parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t i) {
        CounterRng rng(seed, i);
        if (spec.constant) {
            out[i] = constant_endpoint(spec, n, rng);
            return;
        }
        double last = spec.eta0;
        run_walk(spec, n, rng, [&](double e) { last = e; });
        out[i] = last;
    });
    return out;
}

std::vector<double> simulate_path(const WalkSpec& spec, long n_steps, std::uint64_t seed, std::uint64_t stream) {
    spec.validate();
    std::vector<double> path;
    path.reserve(n_steps + 1);
    path.push_back(spec.eta0);
    CounterRng rng(seed, stream);
    run_walk(spec, n_steps, rng, [&](double e) { path.push_back(e); });
    return path;
}

double ks_distance_normal(std::vector<double> sample, double mean, double variance) {
    if (sample.empty()) throw InsufficientData("empty sample");
    std::sort(sample.begin(), sample.end());
    const double sd = std::sqrt(variance);
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        // Ties share one CDF jump; evaluate only at the last copy.
        if (i + 1 < sample.size() && sample[i + 1] == sample[i]) continue;
        const double f = normal_cdf((sample[i] - mean) / sd);
        std::size_t first = i;
        while (first > 0 && sample[first - 1] == sample[i]) --first;
        d = std::max({d, (i + 1) / n - f, f - first / n});
    }
    return std::min(d, 1.0);
}

EnsembleSummary simulate_ensemble(const WalkSpec& spec, long n_samples, std::uint64_t seed, int threads, int n_bins) {
    if (n_samples < 100) throw InvalidArgument("ensemble needs at least 100 samples");
    const std::vector<double> x = simulate_endpoints(spec, n_samples, seed, threads);
    EnsembleSummary sum;
    sum.n_samples = n_samples;
    double m = 0.0;
    for (double v : x) m += v;
    m /= n_samples;
    double var = 0.0;
    for (double v : x) var += (v - m) * (v - m);
    var /= n_samples - 1;
    sum.mean = m;
    sum.variance = var;
    const double sig = spec.sigma_fn(spec.eta0), b = spec.b_fn(spec.eta0);
    sum.target_mean = spec.eta0 + b * spec.s;
    sum.target_variance = sig * sig * spec.s;
    sum.ks_distance = ks_distance_normal(x, sum.target_mean, sum.target_variance);

    auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    sum.histogram.lo = *lo;
    sum.histogram.hi = *hi > *lo ? *hi : *lo + 1.0;
    sum.histogram.counts.assign(n_bins, 0);
    const double w = (sum.histogram.hi - sum.histogram.lo) / n_bins;
    for (double v : x) {
        const int k = std::clamp(static_cast<int>((v - sum.histogram.lo) / w), 0, n_bins - 1);
        ++sum.histogram.counts[k];
    }
    return sum;
}

std::vector<DriftVarianceRow> empirical_drift_variance(const std::vector<std::vector<double>>& orbits, double scale,
                                                       const BinSpec& bins) {
    std::size_t total = 0;
    for (const auto& o : orbits) total += o.size();
    if (total < 1000) throw InsufficientData("orbit shorter than 1000 points");
    if (!(scale > 0.0)) throw InvalidArgument("scale must be positive");
    if (bins.n_bins < 1) throw InvalidArgument("need at least one bin");
    double lo = bins.lo, hi = bins.hi;
    if (!(hi > lo)) {
        lo = INFINITY;
        hi = -INFINITY;
        for (const auto& o : orbits)
            for (std::size_t i = 0; i + 1 < o.size(); ++i) {
                lo = std::min(lo, o[i]);
                hi = std::max(hi, o[i]);
            }
        if (!(hi > lo)) hi = lo + 1.0;
        hi = std::nextafter(hi, INFINITY);
    }
    const int nb = bins.n_bins;
    const double width = (hi - lo) / nb;
    struct Acc {
        long n = 0;
        double eta = 0.0;
        std::vector<double> d;
    };
    std::vector<Acc> acc(nb);
    for (const auto& eta : orbits)
        for (std::size_t i = 0; i + 1 < eta.size(); ++i) {
            if (eta[i] < lo || eta[i] >= hi) continue;
            const int k = std::min(static_cast<int>((eta[i] - lo) / width), nb - 1);
            acc[k].n++;
            acc[k].eta += eta[i];
            acc[k].d.push_back(eta[i + 1] - eta[i]);
        }
    std::vector<DriftVarianceRow> rows(nb);
    for (int k = 0; k < nb; ++k) {
        DriftVarianceRow& r = rows[k];
        r.eta_lo = lo + k * width;
        r.eta_hi = lo + (k + 1) * width;
        r.count = acc[k].n;
        if (r.count == 0) continue;
        r.eta_mean = acc[k].eta / r.count;
        r.insufficient = r.count < std::max<long>(bins.min_count, 2);
        if (r.count < 2) continue;
        const auto& d = acc[k].d;
        const double n = static_cast<double>(r.count);
        double m = 0.0;
        for (double v : d) m += v;
        m /= n;
        double m2 = 0.0, m4 = 0.0;
        for (double v : d) {
            const double c = (v - m) * (v - m);
            m2 += c;
            m4 += c * c;
        }
        m2 /= n;
        m4 /= n;
        const double var = m2 * n / (n - 1.0);
        const double sd = std::sqrt(var);
        r.b_hat = m / (scale * scale);
        r.sigma_hat = sd / scale;
        r.b_se = sd / std::sqrt(n) / (scale * scale);
        // Delta method: Var(s^2) ~ (m4 - m2^2) / n and d sqrt(v) = dv / (2 sqrt(v)).
        r.sigma_se = sd > 0.0 ? std::sqrt(std::max(m4 - m2 * m2, 0.0) / n) / (2.0 * sd) / scale : 0.0;
    }
    return rows;
}

std::vector<DriftVarianceRow> empirical_drift_variance(const std::vector<double>& eta, double scale,
                                                       const BinSpec& bins) {
    return empirical_drift_variance(std::vector<std::vector<double>>{eta}, scale, bins);
}

std::vector<DriftVarianceRow> empirical_drift_variance(const std::vector<SepMapState>& orbit, double scale,
                                                       const BinSpec& bins) {
    std::vector<double> eta;
    eta.reserve(orbit.size());
    for (const auto& s : orbit) eta.push_back(s.eta);
    return empirical_drift_variance(eta, scale, bins);
}

double melnikov_variance(double eta, const ModelSpec& model, int n, int threads) {
    if (classify_zone(eta, model).resonant) throw WrongZone("melnikov_variance needs a non-resonant action");
    if (n < 2) throw InvalidArgument("grid needs at least 2 points per side");
    std::vector<double> sq(2 * n * n);
    parallel_for(sq.size(), threads, [&](std::size_t idx) {
        const Branch sigma = idx < static_cast<std::size_t>(n * n) ? Branch::Plus : Branch::Minus;
        const std::size_t j = idx % (n * n);
        const double xi = kTwoPi * static_cast<double>(j / n) / n;
        const double tau = -kPi + kTwoPi * static_cast<double>(j % n) / n;
        const double d = theta_full(eta, xi, tau, sigma, model).d_xi;
        sq[idx] = d * d;
    });
    double s = 0.0;
    for (double v : sq) s += v;
    return s / static_cast<double>(sq.size());
}

}  // namespace seplab
