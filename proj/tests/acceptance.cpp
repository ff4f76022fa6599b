// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracflow/cli.hpp"
#include "fracflow/eval.hpp"
#include "fracflow/fracops.hpp"
#include "fracflow/image_io.hpp"
#include "fracflow/solver.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

using namespace fracflow;
using namespace fracflow::testing;

namespace {

enum class Verdict { kPass, kFail, kSkip, kMiss };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
    return {ok ? Verdict::kPass : Verdict::kFail, std::move(detail)};
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// 1. Weight recurrence against signed binomials.
Outcome weights() {
    double worst = 0.0;
    for (double alpha : {0.0, 0.5, 1.0, 1.2, 1.7, 2.0}) {
        const auto w = gl_weights(alpha, 32);
        for (int k = 0; k <= 32; ++k) {
            worst = std::max(worst, std::abs(w[k] - oracle::signed_binomial(alpha, k)));
        }
    }
    const auto w1 = gl_weights(1.0, 32);
    const auto w2 = gl_weights(2.0, 32);
    bool exact = w1[0] == 1 && w1[1] == -1 && w2[0] == 1 && w2[1] == -2 && w2[2] == 1;
    for (int k = 2; k <= 32; ++k) exact = exact && w1[k] == 0.0;
    for (int k = 3; k <= 32; ++k) exact = exact && w2[k] == 0.0;
    return pass_if(worst < 1e-12 && exact,
                   "max |w_k - (-1)^k C(alpha,k)| = " + num(worst) +
                       (exact ? ", integer orders exact" : ", integer orders NOT exact"));
}

// 2. shrink and threshold_step against lattice minimizers.
Outcome prox_oracles() {
    std::mt19937 rng(20240601);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_real_distribution<double> P(0.1, 1.0);
    std::uniform_real_distribution<double> G(0.05, 1.5);
    constexpr double kStep = 1e-3;
    double worst_arg = 0.0, worst_val = -INFINITY, worst_th_arg = 0.0, worst_disc = -INFINITY;
    for (int t = 0; t < 1000; ++t) {
        const Vec2 z{2 * U(rng), 2 * U(rng)};
        const double gamma = G(rng);
        const Vec2 d = shrink(z, gamma);
        auto fs = [&](double a, double b) {
            return std::hypot(a, b) + ((a - z.x) * (a - z.x) + (b - z.y) * (b - z.y)) / (2 * gamma);
        };
        const auto ms = oracle::lattice_min(fs, z.x, z.y, kStep, 3000);
        const double fs_star = fs(d.x, d.y);
        worst_val = std::max(worst_val, fs_star - ms.value);
        const double s_off = std::hypot(d.x - ms.x, d.y - ms.y);
        worst_arg = std::max(worst_arg, s_off);
        worst_disc = std::max(
            worst_disc, s_off - std::sqrt(2 * gamma * std::max(0.0, ms.value - fs_star)));

        const Vec2 u{2 * U(rng), 2 * U(rng)};
        const double gx = 2 * U(rng), gy = 2 * U(rng), c = 5 * U(rng);
        const double lambda = P(rng), theta = P(rng);
        ResidualCoeffs rc{VectorField(1, 1, gx, gy), Plane(1, 1, c), VectorField(1, 1)};
        const VectorField v = threshold_step(VectorField(1, 1, u.x, u.y), rc, lambda, theta);
        auto ft = [&](double a, double b) {
            return ((a - u.x) * (a - u.x) + (b - u.y) * (b - u.y)) / (2 * theta) +
                   lambda * std::abs(gx * a + gy * b + c);
        };
        const auto mt = oracle::lattice_min(ft, u.x, u.y, kStep, 3000);
        const double f_star = ft(v.x(0, 0), v.y(0, 0));
        worst_val = std::max(worst_val, f_star - mt.value);
        // The lattice argmin of a 1/theta strongly convex objective lies within
        // sqrt(2 theta (f_lattice - f*)) of the minimizer. Near a kink that exceeds the
        // lattice step, so offsets are measured against this disc.
        const double offset = std::hypot(v.x(0, 0) - mt.x, v.y(0, 0) - mt.y);
        const double radius = std::sqrt(2 * theta * std::max(0.0, mt.value - f_star));
        worst_th_arg = std::max(worst_th_arg, offset);
        worst_disc = std::max(worst_disc, offset - radius);
    }
    return pass_if(worst_val <= 1e-6 && worst_disc <= 1e-9,
                   "2000 instances, shrink max argmin offset " + num(worst_arg) +
                       ", max objective excess over lattice " + num(worst_val) +
                       ", threshold_step max lattice offset " + num(worst_th_arg) +
                       " (excess over convexity disc " + num(worst_disc) + ")");
}

// 3. Fractional path at alpha = 1 versus the gradient path.
Outcome cross_path() {
    const Plane v = random_plane(32, 32, 303);
    BregmanOptions opt;
    opt.tol = 1e-8;
    opt.max_passes = 10000;
    const int pad = 10;
    const auto a = split_bregman_alpha1(v, opt);
    const auto b = split_bregman_alpha(v, 1.0, pad, opt);
    const double diff = max_abs_diff(a.u, b.u, pad);
    return pass_if(diff < 0.1, "interior max |u_grad - u_frac| = " + num(diff) + " (pad " +
                                   std::to_string(pad) + ")");
}

// 4. Gradient-path solver versus the Huber-smoothed accelerated-gradient oracle.
Outcome small_oracle() {
    const Plane v = random_plane(16, 16, 404);
    BregmanOptions opt;
    opt.theta = 0.4;
    opt.lambda_sb = 5.0;
    opt.tol = 1e-10;
    opt.max_passes = 20000;
    const auto r = split_bregman_alpha1(v, opt);
    const Plane ref = oracle::huber_tv_minimizer(v, opt.theta, 1e-6);
    const double e_sb = oracle::tv_objective(r.u, v, opt.theta);
    const double e_ref = oracle::tv_objective(ref, v, opt.theta);
    return pass_if(std::abs(e_sb - e_ref) < 1e-3 && r.feasibility.back() < 0.1,
                   "objective " + num(e_sb) + " vs oracle " + num(e_ref) + ", |diff| " +
                       num(std::abs(e_sb - e_ref)) + ", final feasibility " +
                       num(r.feasibility.back()) + ", passes " + std::to_string(r.passes));
}

// 5. Full pipeline on synthetic shifts.
Outcome recovery() {
    SolverParams p;
    p.lambda = 0.3;
    p.theta = 0.3;
    p.lambda_sb = 7.0;
    p.alpha = 1.0;
    const auto small = shifted_pair(64, 64, 1.0, 0.5, 505);
    p.n_scales = 3;
    const double e1 = mean_epe(optical_flow(small.frame0, small.frame1, p), small.gt);
    const auto large = shifted_pair(64, 64, 6.0, 0.0, 505);
    p.n_scales = 4;
    const double e2 = mean_epe(optical_flow(large.frame0, large.frame1, p), large.gt);
    return pass_if(e1 < 0.25 && e2 < 0.5, "AEPE shift (1,0.5): " + num(e1) +
                                              ", shift (6,0) with 4 scales: " + num(e2));
}

// 6. Metric identities.
Outcome metrics() {
    const double ae = angular_error({1, 0}, {0, 1});
    const double epe = endpoint_error({1, 0}, {0, 1});
    bool ok = std::abs(ae - std::numbers::pi / 3) < 1e-9 && std::abs(epe - std::sqrt(2.0)) < 1e-9;

    ScratchDir dir("acc6");
    const VectorField f(random_plane(17, 11, 61, -20, 20), random_plane(17, 11, 62, -20, 20));
    VectorField stored = f;
    for (auto* p : {&stored.x, &stored.y})
        for (auto& v : p->values()) v = static_cast<float>(v);
    write_flo(dir / "f.flo", stored);
    const bool roundtrip = read_flo(dir / "f.flo") == stored;
    ok = ok && roundtrip;

    const VectorField gt(random_plane(17, 11, 63, -20, 20), random_plane(17, 11, 64, -20, 20));
    const FlowMetrics all = aggregate_metrics(f, gt);
    const std::vector<RegionSpec> parts{{0, 0, 5, 10}, {6, 0, 16, 3}, {6, 4, 16, 10}};
    double aae = 0, aepe = 0;
    std::size_t n = 0;
    for (const auto& r : parts) {
        const FlowMetrics m = aggregate_metrics(f, gt, r);
        aae += static_cast<double>(m.n_valid) * m.aae;
        aepe += static_cast<double>(m.n_valid) * m.aepe;
        n += m.n_valid;
    }
    const double part_err = std::max(std::abs(aae / static_cast<double>(n) - all.aae),
                                     std::abs(aepe / static_cast<double>(n) - all.aepe));
    ok = ok && part_err < 1e-10 && n == all.n_valid;
    return pass_if(ok, "AE err " + num(std::abs(ae - std::numbers::pi / 3)) + ", EPE err " +
                           num(std::abs(epe - std::sqrt(2.0))) + ", .flo roundtrip " +
                           (roundtrip ? "bit-exact" : "MISMATCH") + ", partition err " +
                           num(part_err));
}

std::string params_text(const SolverParams& p) {
    std::ostringstream s;
    s << "lambda=" << p.lambda << " theta=" << p.theta << " epsilon=" << p.epsilon
      << " eta=" << p.eta << " n_scales=" << p.n_scales << " n_warps=" << p.n_warps
      << " n_maxiter=" << p.n_maxiter << " lambda_sb=" << p.lambda_sb << " alpha=" << p.alpha
      << " inner_tol=" << p.inner_tol << " pad=" << p.pad
      << " bregman_max_passes=" << p.bregman_max_passes << " gs_sweeps=" << p.gs_sweeps;
    return s.str();
}

// 7. RubberWhale sanity envelope. Needs the Middlebury "other" training data; set
// FRACFLOW_MIDDLEBURY_DIR to the directory holding other-data/ and other-gt-flow/.
Outcome middlebury() {
    const char* root = std::getenv("FRACFLOW_MIDDLEBURY_DIR");
    if (!root) return {Verdict::kSkip, "FRACFLOW_MIDDLEBURY_DIR not set"};
    const std::filesystem::path base(root);
    const auto f0 = base / "other-data" / "RubberWhale" / "frame10.png";
    const auto f1 = base / "other-data" / "RubberWhale" / "frame11.png";
    const auto gtp = base / "other-gt-flow" / "RubberWhale" / "flow10.flo";
    for (const auto& p : {f0, f1, gtp}) {
        if (!std::filesystem::exists(p)) return {Verdict::kSkip, "missing " + p.string()};
    }
    SolverParams p;
    p.lambda = 0.4;
    p.theta = 0.4;
    p.lambda_sb = 10.0;
    p.n_scales = 4;
    const VectorField flow = optical_flow(read_image(f0), read_image(f1), p);
    const FlowMetrics m = aggregate_metrics(flow, read_flo(gtp));
    const double ref_aae = 0.1530, ref_aepe = 0.2905;
    const bool finite = std::isfinite(m.aae) && std::isfinite(m.aepe);
    const bool within = finite && std::abs(m.aae - ref_aae) <= 0.5 * ref_aae &&
                        std::abs(m.aepe - ref_aepe) <= 0.5 * ref_aepe;
    const std::string detail = "AAE " + num(m.aae) + " rad (" + num(m.aae_deg) + " deg), AEPE " +
                               num(m.aepe) + ", SDAE " + num(m.sdae) + " vs reference " +
                               num(ref_aae) + " / " + num(ref_aepe) + "; " + params_text(p);
    if (!finite) return {Verdict::kFail, "non-finite metrics; " + detail};
    return {within ? Verdict::kPass : Verdict::kMiss, detail};
}

// 8. Alpha sweep on a piecewise-constant motion pair through the CLI.
Outcome alpha_sweep() {
    ScratchDir dir("acc8");
    const auto pair = piecewise_pair(48, 48, 808);
    save_image(dir / "f0.pgm", pair.frame0);
    save_image(dir / "f1.pgm", pair.frame1);
    write_flo(dir / "gt.flo", pair.gt);
    const std::string csv = (dir / "sweep.csv").string();
    const std::vector<std::string> args = {
        "fracflow",  "sweep",        "--frame0",       (dir / "f0.pgm").string(),
        "--frame1",  (dir / "f1.pgm").string(),        "--gt",
        (dir / "gt.flo").string(),   "--sweep_param",  "alpha",
        "--sweep_values",            "0,0.5,1,1.5,2",  "--region",
        "2,2,21,45", "--region",     "26,2,45,45",     "--n_scales",
        "3",         "--n_warps",    "3",              "--n_maxiter",
        "30",        "--pad",        "6",              "--csv",
        csv};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != cli::kOk) return {Verdict::kFail, "sweep exited " + std::to_string(code) + ": " + err.str()};

    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string c;
        while (std::getline(hs, c, ',')) header.push_back(c);
    }
    auto col = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return header.size();
    };
    int rows = 0;
    bool finite = true, descent = true;
    std::ostringstream summary;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        ++rows;
        for (const char* m : {"aae_rad", "aepe", "sdae"}) {
            finite = finite && std::isfinite(std::stod(cells.at(col(m))));
        }
        descent = descent && cells.at(col("energy_descent")) == "1";
        summary << " a=" << cells.at(col("value")) << "/" << cells.at(col("region")) << ":"
                << num(std::stod(cells.at(col("aepe"))));
    }
    return pass_if(rows == 10 && finite && descent,
                   std::to_string(rows) + " rows, finite " + (finite ? "yes" : "NO") +
                       ", energy descent " + (descent ? "yes" : "NO") + "; AEPE" + summary.str());
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria = {
        {1, "GL weight correctness", 1.0, weights},
        {2, "prox oracles (shrink, threshold)", 30.0, prox_oracles},
        {3, "alpha=1 cross-path agreement", 60.0, cross_path},
        {4, "small-instance solver oracle", 60.0, small_oracle},
        {5, "synthetic flow recovery", 120.0, recovery},
        {6, "metric identities", 1.0, metrics},
        {7, "RubberWhale sanity envelope", 600.0, middlebury},
        {8, "alpha-sweep finiteness and energy descent", 300.0, alpha_sweep},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {Verdict::kFail, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (o.verdict == Verdict::kPass && secs > c.budget_s) {
            o = {Verdict::kFail, o.detail + "; over the " + num(c.budget_s) + " s budget"};
        }
        const char* tag = "PASS";
        switch (o.verdict) {
            case Verdict::kPass: tag = "PASS"; break;
            case Verdict::kFail: tag = "FAIL"; ++failures; break;
            case Verdict::kSkip: tag = "SKIP"; break;
            case Verdict::kMiss: tag = "MISS"; break;
        }
        std::printf("[%s] %d %s (%.2f s): %s\n", tag, c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
