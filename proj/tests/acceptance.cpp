// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "seplab/diffusion.hpp"
#include "seplab/errors.hpp"
#include "seplab/experiments.hpp"
#include "seplab/flow.hpp"
#include "seplab/numerics.hpp"
#include "support.hpp"

using namespace seplab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d  %-34s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += !pass;
}

void info(const std::string& detail) {
    std::printf("       info         %s\n", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

template <class... T>
std::string fmt(const char* f, T... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void run(int id, const std::string& name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

// Melnikov golden values on the 16 x 16 grid against the residue identity.
void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    auto m = test::make_model(test::saddle_cosine(1, 0), 1e-3);
    double worst = 0.0;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            const double eta = 0.3 + 1.7 * i / 15, xi = kTwoPi * j / 16;
            const double expect = 2 * kPi * eta * std::cos(xi) / std::sinh(kPi * eta / 2);
            worst = std::max(worst, std::abs(theta_splitting(eta, xi, 0.0, Branch::Plus, m) - expect));
        }
    const double secs = seconds_since(t0);
    report(1, "Melnikov golden values", worst <= 1e-8 && secs < 10.0,
           fmt("max |err| %.2e (tol 1e-8), %.2f s (limit 10 s)", worst, secs));
}

// H1 independent of (p, q): the splitting potential and the action jump vanish.
void criterion2() {
    auto m = test::pq_free();
    double worst = 0.0;
    for (double eta : {0.3, 0.8, 1.5})
        for (int j = 0; j < 8; ++j)
            for (int k = 0; k < 8; ++k)
                for (Branch b : {Branch::Plus, Branch::Minus})
                    worst = std::max(worst, std::abs(theta_splitting(eta, kTwoPi * j / 8, -kPi + kTwoPi * k / 8, b, m)));
    const double tol = 1e-12;
    FlowOptions fo;
    fo.tol = tol;
    double jump = 0.0;
    CounterRng rng(2, 0);
    for (int i = 0; i < 16; ++i) {
        const auto start = section_point(rng.uniform(0.3, 1.2), rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi),
                                         8e-3, rng.uniform() < 0.5 ? Branch::Plus : Branch::Minus);
        const auto r = numeric_return_map(m, start, fo);
        if (!r.defined) throw NonConvergence("return not reached");
        jump = std::max(jump, std::abs(r.extracted.eta - extract_coords(m, start).eta));
    }
    report(2, "vanishing-splitting control", worst <= 1e-10 && jump <= 100 * tol,
           fmt("max |Theta| %.2e (tol 1e-10), max |d eta| %.2e (tol %.0e)", worst, jump, 100 * tol));
}

std::string ladder(const ScalingReport& r) {
    std::string s;
    for (const auto& row : r.rows) s += fmt(" %.0e:%.2e", row.eps, row.mean_abs_err_eta);
    return s;
}

void criterion3() {
    const auto t0 = std::chrono::steady_clock::now();
    ScalingConfig c;
    c.kind = ScalingKind::NonResonant;
    c.eta0 = 0.6;
    const auto r = run_return_scaling(test::arnold(), c);
    report(3, "non-resonant remainder exponent", r.slope_eta >= 1.6 && r.slope_h >= 1.6,
           fmt("slope eta %.3f, slope h %.3f (min 1.6), %.1f s", r.slope_eta, r.slope_h, seconds_since(t0)));
    info("eta errors" + ladder(r));
}

void criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    ScalingConfig c;
    c.kind = ScalingKind::Resonant;
    c.eta0 = 0.2;
    const auto r = run_return_scaling(test::arnold_resonant(), c);
    report(4, "resonant remainder exponent", r.slope_eta >= 1.5,
           fmt("slope eta %.3f (min 1.5), slope h %.3f, %.1f s", r.slope_eta, r.slope_h, seconds_since(t0)));
    info("eta errors" + ladder(r));
}

// sigma* = sigma sgn w0, with w0 recomputed from the output state.
void criterion5() {
    auto m = test::arnold_resonant();
    RegimeParams p;
    p.check_window = false;
    CounterRng rng(5, 0);
    int ok = 0, n = 1000;
    for (int i = 0; i < n; ++i) {
        const double eta = rng.uniform(-0.2, 0.2);
        const double mag = std::exp(rng.uniform(std::log(2e-4), std::log(8e-3)));
        const double w = rng.uniform() < 0.5 ? -mag : mag;
        const Branch s = rng.uniform() < 0.5 ? Branch::Plus : Branch::Minus;
        const SepMapState in{eta, rng.uniform(0, kTwoPi), energy_E(eta) + w, rng.uniform(-kPi, kPi), s};
        try {
            const auto out = map_resonant(in, m, p).first;
            const double w0 = w0_res(out.eta, out.h, out.xi, m, -out.tau);
            ok += out.sigma == branch_from_sign(sign_of(s) * (w0 < 0 ? -1.0 : 1.0));
        } catch (const Error&) {
        }
    }
    report(5, "branch rule", ok == n, fmt("%d / %d evaluations satisfy sigma* = sigma sgn w0", ok, n));
}

double det4(double A[4][4]) {
    double det = 1.0;
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        if (piv != c) {
            for (int k = 0; k < 4; ++k) std::swap(A[c][k], A[piv][k]);
            det = -det;
        }
        det *= A[c][c];
        for (int r = c + 1; r < 4; ++r) {
            const double f = A[r][c] / A[c][c];
            for (int k = c; k < 4; ++k) A[r][k] -= f * A[c][k];
        }
    }
    return det;
}

void criterion6() {
    auto m = test::arnold(1e-3);
    CounterRng rng(6, 0);
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
        const double eta = rng.uniform(0.4, 1.2), w = std::exp(rng.uniform(std::log(1e-3), std::log(5e-3)));
        const SepMapState s{eta, rng.uniform(0, kTwoPi), energy_E(eta) + w, rng.uniform(-kPi, kPi),
                            rng.uniform() < 0.5 ? Branch::Plus : Branch::Minus};
        const double step[4] = {1e-6, 1e-6, w * 1e-4, 1e-6};
        double J[4][4];
        for (int k = 0; k < 4; ++k) {
            SepMapState a = s, b = s;
            double* pa[4] = {&a.eta, &a.xi, &a.h, &a.tau};
            double* pb[4] = {&b.eta, &b.xi, &b.h, &b.tau};
            *pa[k] += step[k];
            *pb[k] -= step[k];
            const auto ya = map_nonresonant(a, m).first, yb = map_nonresonant(b, m).first;
            J[0][k] = (ya.eta - yb.eta) / (2 * step[k]);
            J[1][k] = std::remainder(ya.xi - yb.xi, kTwoPi) / (2 * step[k]);
            J[2][k] = (ya.h - yb.h) / (2 * step[k]);
            J[3][k] = std::remainder(ya.tau - yb.tau, kTwoPi) / (2 * step[k]);
        }
        worst = std::max(worst, std::abs(det4(J) - 1.0));
    }
    report(6, "approximate symplecticity", worst <= 5e-3, fmt("max |det - 1| %.2e over 100 states (tol 5e-3)", worst));
}

void criterion7() {
    auto m = load_model(SEPLAB_MODEL_DIR "/inner_flow.model");
    const ResonanceVector k{1, 0};
    double mean_worst = 0.0;
    for (double J : {0.0, 0.1, 0.2})
        for (double bt : {0.5, 4.0, 18.4}) {
            double s = 0.0;
            const int n = 64;
            for (int i = 0; i < n; ++i) s += G1(J, kTwoPi * i / n, bt, m, k);
            mean_worst = std::max(mean_worst, std::abs(s / n));
        }
    InnerFlowConfig c;
    const auto r = run_inner_flow_scaling(m, k, c);
    report(7, "averaged inner flow", r.slope >= 1.7 && mean_worst <= 1e-12,
           fmt("slope %.3f over bar_t <= 2 log(1/eps) (min 1.7), |<G1>_theta| %.1e (tol 1e-12)", r.slope,
               mean_worst));
    InnerFlowConfig scaled = c;
    scaled.scaled_time = true;
    info(fmt("bar_t = log(1/eps) at each rung: slope %.3f", run_inner_flow_scaling(m, k, scaled).slope));
}

void criterion8() {
    const auto t0 = std::chrono::steady_clock::now();
    const long n = 100000;
    std::vector<double> ks;
    for (double d : {0.04, 0.02, 0.01}) ks.push_back(simulate_ensemble(constant_walk(1.0, 0.3, d, 0.0, 1.0), n, 8).ks_distance);
    const double noise = 1.0 / std::sqrt(double(n));
    const bool monotone = ks[1] <= ks[0] + noise && ks[2] <= ks[1] + noise;
    const double secs = seconds_since(t0);
    report(8, "Donsker check", ks[2] < 0.05 && monotone && secs < 30.0,
           fmt("KS %.4f, %.4f, %.4f for delta 0.04, 0.02, 0.01 (final < 0.05, noise %.4f), %.1f s", ks[0], ks[1], ks[2],
               noise, secs));
}

// Estimator closure on synthetic walks; targets are the sample-weighted bin averages of b and sigma^2.
void criterion9() {
    struct Case {
        std::function<double(double)> sigma, b;
        double delta;
    };
    const std::vector<Case> cases{
        {[](double e) { return 1.0 + 0.3 * std::sin(e); }, [](double e) { return 0.5 * std::cos(e); }, 0.05},
        {[](double e) { return 0.8 + 0.2 * std::cos(2 * e); }, [](double e) { return -0.4 * e; }, 0.04},
        {[](double) { return 1.2; }, [](double e) { return std::sin(e) - 0.3 * e; }, 0.05},
    };
    int bins_total = 0, bins_ok = 0;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        WalkSpec w;
        w.sigma_fn = cases[c].sigma;
        w.b_fn = cases[c].b;
        w.delta = cases[c].delta;
        const auto path = simulate_path(w, 400000, 9, c);
        BinSpec bs;
        bs.n_bins = 20;
        bs.min_count = 200;
        const auto rows = empirical_drift_variance(path, w.delta, bs);
        for (const auto& r : rows) {
            if (r.insufficient) continue;
            double sb = 0.0, ss = 0.0;
            long cnt = 0;
            for (std::size_t i = 0; i + 1 < path.size(); ++i)
                if (path[i] >= r.eta_lo && path[i] < r.eta_hi) {
                    sb += w.b_fn(path[i]);
                    ss += w.sigma_fn(path[i]) * w.sigma_fn(path[i]);
                    ++cnt;
                }
            const double b = sb / cnt, s = std::sqrt(ss / cnt);
            bins_total += 2;
            bins_ok += std::abs(r.b_hat - b) <= 3 * r.b_se;
            bins_ok += std::abs(r.sigma_hat - s) <= 3 * r.sigma_se;
        }
    }
    const double frac = bins_total ? double(bins_ok) / bins_total : 0.0;
    report(9, "estimator closure", bins_total > 0 && frac >= 0.95,
           fmt("%d / %d (bin, coefficient) pairs within 3 SE = %.3f (min 0.95)", bins_ok, bins_total, frac));
}

void criterion10() {
    double worst = 0.0, kappa_worst = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double I = -2.0 + 0.2 * i;
        worst = std::max(worst, std::abs(saddle_linearization(I).lambda - 1.0));
        worst = std::max(worst, std::abs(frequency_nu(I) - I));
        for (Branch b : {Branch::Plus, Branch::Minus}) {
            worst = std::max(worst, std::abs(mu(I, b)));
            for (double tau : {-10.0, -1.0, 0.0, 2.0, 10.0}) worst = std::max(worst, std::abs(chi(I, b, tau)));
            const double k20 = kappa_inverse_at(I, b, 20.0), k30 = kappa_inverse_at(I, b, 30.0);
            kappa_worst = std::max(kappa_worst, std::abs(k20 - k30) / std::abs(k30));
        }
    }
    report(10, "structural identities", worst <= 1e-10 && kappa_worst <= 1e-6,
           fmt("max deviation of mu, chi, lambda - 1, nu - I: %.1e (tol 1e-10); kappa T20 vs T30 rel %.1e (tol 1e-6)",
               worst, kappa_worst));
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream f(e.path(), std::ios::binary);
        files[e.path().filename().string()] = std::string(std::istreambuf_iterator<char>(f), {});
    }
    return files;
}

void criterion11() {
    const fs::path root = fs::temp_directory_path() / fs::path("seplab_determinism_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::string cli = SEPLAB_CLI_PATH, models = SEPLAB_MODEL_DIR;
    const std::string arnold = " --model " + models + "/arnold.model";
    const std::vector<std::pair<std::string, std::string>> commands{
        {"geometry", "geometry tabulate --I 0.5 --branch - --tau-grid -5:5:21"},
        {"melnikov", arnold + " melnikov grid --eta 0.8 --sigma + --nxi 4 --ntau 3"},
        {"map_step", arnold + " map step --state 0.6,1.0,0.183,0.3,+"},
        {"map_orbit", arnold + " map orbit --state 0.6,1.0,0.183,0.3,+ --n 20 --policy lenient"},
        {"flow_return", arnold + " flow return --state 0.6,1.0,2.0039960079840316,3.141592653589793,0.3"},
        {"flow_scaling", arnold + " flow verify-scaling --eps-list 1e-3,1e-2 --samples 2"},
        {"verify_scaling", arnold + " verify-scaling --eps-list 1e-3,1e-2 --samples 2"},
        {"walk", " --seed 4 diffuse walk --spec " + std::string(SEPLAB_WALK_DIR) + "/donsker.json --samples 2000"},
        {"golden", " golden --golden-dir " + std::string(SEPLAB_GOLDEN_DIR)},
        {"end_to_end", arnold + " --seed 3 end-to-end --n 1200 --orbits 4 --grid 8 --min-count 20"},
    };
    int identical = 0, total = 0;
    std::string bad;
    for (const auto& [name, args] : commands) {
        std::map<std::string, std::string> out[2];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path dir = root / (name + "_" + std::to_string(rep));
            fs::create_directories(dir);
            const std::string cmd = cli + " --out " + dir.string() + " " + args + " > " + (dir / "stdout.txt").string();
            const int rc = std::system(cmd.c_str());
            if (rc != 0 && !(WIFEXITED(rc) && WEXITSTATUS(rc) == 1)) bad += " " + name + "(rc)";
            out[rep] = read_dir(dir);
        }
        ++total;
        const bool same = out[0] == out[1] && out[0].size() > 1;
        identical += same;
        if (!same) bad += " " + name;
    }
    // The estimator reads an orbit written by the end-to-end run.
    {
        const fs::path orbit = root / "end_to_end_0" / "e2e_orbit.csv";
        std::map<std::string, std::string> out[2];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path dir = root / ("estimate_" + std::to_string(rep));
            fs::create_directories(dir);
            const std::string cmd = cli + " --out " + dir.string() + " diffuse estimate --orbit " + orbit.string() +
                                    " --bins 5 > " + (dir / "stdout.txt").string();
            if (std::system(cmd.c_str()) != 0) bad += " estimate(rc)";
            out[rep] = read_dir(dir);
        }
        ++total;
        const bool same = out[0] == out[1] && out[0].size() > 1;
        identical += same;
        if (!same) bad += " estimate";
    }
    fs::remove_all(root);
    report(11, "determinism", identical == total && bad.empty(),
           fmt("%d / %d commands byte-identical on rerun", identical, total) + (bad.empty() ? "" : "; issues:" + bad));
}

}  // namespace

int main() {
    run(1, "Melnikov golden values", criterion1);
    run(2, "vanishing-splitting control", criterion2);
    run(3, "non-resonant remainder exponent", criterion3);
    run(4, "resonant remainder exponent", criterion4);
    run(5, "branch rule", criterion5);
    run(6, "approximate symplecticity", criterion6);
    run(7, "averaged inner flow", criterion7);
    run(8, "Donsker check", criterion8);
    run(9, "estimator closure", criterion9);
    run(10, "structural identities", criterion10);
    run(11, "determinism", criterion11);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
