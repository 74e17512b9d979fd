#include "seplab/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <queue>
#include <thread>

#include "seplab/errors.hpp"

namespace seplab {

namespace {

struct Interval {
    double a, b;
    std::vector<double> value;
    double error;
    bool operator<(const Interval& o) const {
        if (error != o.error) return error < o.error;
        return a > o.a;
    }
};

Interval gk21(const VecIntegrand& f, std::size_t dim, double a, double b) {
    using K = boost::math::quadrature::gauss_kronrod<double, 21>;
    using G = boost::math::quadrature::gauss<double, 10>;
    static const auto& xk = K::abscissa();
    static const auto& wk = K::weights();
    static const auto& wg = G::weights();
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    std::vector<double> kron(dim, 0.0), gauss(dim, 0.0), f1(dim), f2(dim);
    f(c, f1.data());
    for (std::size_t d = 0; d < dim; ++d) kron[d] = wk[0] * f1[d];
    for (std::size_t j = 1; j < xk.size(); ++j) {
        f(c - r * xk[j], f1.data());
        f(c + r * xk[j], f2.data());
        for (std::size_t d = 0; d < dim; ++d) {
            const double s = f1[d] + f2[d];
            kron[d] += wk[j] * s;
            if (j % 2 == 1) gauss[d] += wg[j / 2] * s;
        }
    }
    double err = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        kron[d] *= r;
        gauss[d] *= r;
        err = std::max(err, std::abs(kron[d] - gauss[d]));
    }
    return {a, b, std::move(kron), err};
}

}  // namespace

QuadResult integrate_gk(const VecIntegrand& f, std::size_t dim, double a, double b, double abs_tol,
                        int max_evaluations) {
    std::priority_queue<Interval> heap;
    heap.push(gk21(f, dim, a, b));
    int evals = 21;
    double total_err = heap.top().error;
    while (total_err > abs_tol) {
        if (evals + 42 > max_evaluations)
            throw QuadratureBudgetExceeded("quadrature error target not met within evaluation budget");
        Interval worst = heap.top();
        heap.pop();
        const double m = 0.5 * (worst.a + worst.b);
        Interval left = gk21(f, dim, worst.a, m), right = gk21(f, dim, m, worst.b);
        evals += 42;
        total_err += left.error + right.error - worst.error;
        heap.push(std::move(left));
        heap.push(std::move(right));
    }
    std::vector<Interval> parts;
    parts.reserve(heap.size());
    while (!heap.empty()) {
        parts.push_back(heap.top());
        heap.pop();
    }
    std::sort(parts.begin(), parts.end(), [](const Interval& x, const Interval& y) { return x.a < y.a; });
    QuadResult res{std::vector<double>(dim, 0.0), 0.0, evals};
    for (const auto& p : parts) {
        for (std::size_t d = 0; d < dim; ++d) res.value[d] += p.value[d];
        res.error += p.error;
    }
    return res;
}

Philox4x32 philox4x32(Philox4x32 ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
        ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
               std::uint32_t(p0)};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, stream_(stream) {}

std::uint32_t CounterRng::next_u32() {
    if (used_ == 4) {
        buf_ = philox4x32({std::uint32_t(block_), std::uint32_t(block_ >> 32), std::uint32_t(stream_),
                           std::uint32_t(stream_ >> 32)},
                          key_);
        ++block_;
        used_ = 0;
    }
    return buf_[used_++];
}

double CounterRng::uniform() {
    const std::uint64_t hi = next_u32() >> 5, lo = next_u32() >> 6;
    return (double(hi) * 67108864.0 + double(lo)) * (1.0 / 9007199254740992.0);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= double(n);
    my /= double(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SEPLAB_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace seplab
