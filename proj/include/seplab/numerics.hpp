#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace seplab {

// Adaptive Gauss-Kronrod (10/21) for vector-valued integrands sharing one subdivision.
struct QuadResult {
    std::vector<double> value;
    double error = 0.0;
    int evaluations = 0;
};

using VecIntegrand = std::function<void(double, double*)>;

QuadResult integrate_gk(const VecIntegrand& f, std::size_t dim, double a, double b, double abs_tol,
                        int max_evaluations = 200000);

// Philox4x32-10 counter-based generator.
using Philox4x32 = std::array<std::uint32_t, 4>;
Philox4x32 philox4x32(Philox4x32 counter, std::array<std::uint32_t, 2> key);

// Stream of uniform doubles keyed on (seed, stream id).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);
    std::uint32_t next_u32();
    double uniform();  // in [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32 buf_{};
    int used_ = 4;
};

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

double normal_cdf(double x);

// Worker count: explicit request if positive, else SEPLAB_THREADS, else 1.
int resolve_threads(int requested);
// Runs fn(i) for i in [0, n) on up to `threads` workers; each index is handled exactly once.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace seplab
