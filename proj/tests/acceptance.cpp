// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cevhedge/cev.hpp"
#include "cevhedge/experiments.hpp"
#include "cevhedge/hedging.hpp"
#include "cevhedge/hjb.hpp"
#include "cevhedge/ncx2.hpp"
#include "cevhedge/pricing.hpp"
#include "cevhedge/rng.hpp"
#include "oracles.hpp"

using namespace cevhedge;

namespace {

const ModelParams kStd{0.2, -0.25, 0.01};
const unsigned kThreads = std::max(1u, std::thread::hardware_concurrency());

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::shared_ptr<const Grid2D> grid(std::size_t nt, std::size_t ns) {
    return std::make_shared<const Grid2D>(Grid2D::log_spaced(TimeGrid::uniform(0.0, 1.0, nt), 50.0, 200.0, ns));
}

HedgeSetup setup(std::size_t n_paths, std::size_t steps) {
    HedgeSetup s;
    s.times = TimeGrid::uniform(0.0, 1.0, steps);
    s.n_paths = n_paths;
    s.threads = kThreads;
    s.seed = 20240601;
    return s;
}

const HjbSolution& standard() {
    static const HjbSolution sol = solve_hjb(kStd, OptionSpec::call(100.0, 1.0), grid(200, 200), 1e-4, 50, kThreads);
    return sol;
}

// Shared between the optimality and decomposition criteria.
const ComparisonTable& comparison() {
    static const ComparisonTable table = [] {
        const auto& sol = standard();
        return compare_strategies({StrategySpec::optimal(sol.a, sol.b), StrategySpec::naive(), StrategySpec::zero(),
                                   StrategySpec::delta_tracking(10.0)},
                                  kStd, sol.surface, setup(100000, 500));
    }();
    return table;
}

Outcome black_scholes() {
    const ModelParams p{0.2, 0.0, 0.01};
    const auto opt = OptionSpec::call(100.0, 1.0);
    const double q = price_european(opt, p, 0.0, 100.0), d = delta(opt, p, 0.0, 100.0);
    const double eq = std::abs(q - oracle::bs_call(100, 100, 0.2, 1)), ed = std::abs(d - oracle::bs_delta(100, 100, 0.2, 1));
    return {eq < 1e-4 && ed < 1e-4, fmt("price %.8f err %.2e, delta %.8f err %.2e", q, eq, d, ed)};
}

Outcome martingale_pricing() {
    bool ok = true;
    std::string detail;
    std::uint64_t seed = 20240601;
    for (double gamma : {-0.5, -0.25})
        for (double sigma : {0.1, 0.3}) {
            const ModelParams p{sigma, gamma, 0.01};
            const auto opt = OptionSpec::call(100.0, 1.0);
            // Independent draws per configuration.
            const auto xs = sample_transition_exact(p, 100.0, 1.0, 100000, seed++);
            std::vector<double> pay;
            pay.reserve(xs.size());
            for (double x : xs) pay.push_back(opt.payoff(x));
            const auto m = oracle::mean_se(pay);
            const double q = price_european(opt, p, 0.0, 100.0);
            const double z = (m.mean - q) / m.se;
            ok = ok && std::abs(z) <= 3.0;
            detail += fmt("(g=%.2f,s=%.1f) q=%.5f z=%+.2f ", gamma, sigma, q, z);
        }
    return {ok, detail};
}

Outcome sandwich() {
    const auto& sol = standard();
    const auto& r = sol.report;
    bool ordered = true;
    for (std::size_t i = 0; i < r.lower.values().size(); ++i) ordered = ordered && r.lower.values()[i] <= r.upper.values()[i];
    bool monotone = true;
    for (std::size_t k = 1; k < r.gap_history.size(); ++k) monotone = monotone && r.gap_history[k] <= r.gap_history[k - 1];
    const bool fast = r.converged && r.iterations <= 20 && r.gap < 1e-4 * r.sup_a1;

    const auto coarse = solve_hjb(kStd, OptionSpec::call(100.0, 1.0), grid(100, 200), 1e-4, 50, kThreads);
    const double ratio = sol.residuals.rel_a / coarse.residuals.rel_a;
    const bool small = sol.residuals.rel_a < 1e-2;
    const bool halves = ratio <= 0.55;
    return {ordered && monotone && fast && small && halves,
            fmt("iterations %d, gap/sup a1 %.2e, ordered %d, monotone %d, residual %.2e (100 steps %.2e, ratio %.3f)",
                r.iterations, r.gap / r.sup_a1, ordered, monotone, sol.residuals.rel_a, coarse.residuals.rel_a, ratio)};
}

// Per-path psi on `steps` steps, driven by the noise of the 500-step run.
std::vector<double> coupled_costs(const HjbSolution& sol, std::size_t steps, double* psi, double* se) {
    auto s = setup(100000, steps);
    s.brownian_refinement = static_cast<unsigned>(500 / steps);
    PathCosts pc;
    const auto r = simulate_hedge(StrategySpec::optimal(sol.a, sol.b), kStd, sol.surface, s, &pc);
    *psi = r.psi;
    *se = r.se_psi;
    std::vector<double> out(pc.tracking.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pc.tracking[i] + pc.liquidity[i];
    return out;
}

Outcome verification() {
    const auto& sol = standard();
    const auto half = solve_hjb(kStd, OptionSpec::call(100.0, 1.0), grid(100, 100), 1e-4, 50, kThreads);
    const double v = assemble_value(sol.a, sol.b, sol.c, 0.0, 100.0, 0.0);
    const double v_half = assemble_value(half.a, half.b, half.c, 0.0, 100.0, 0.0);
    double psi = 0.0, se = 0.0, psi_half = 0.0, se_half = 0.0;
    const auto fine = coupled_costs(sol, 500, &psi, &se);
    const auto coarse = coupled_costs(sol, 250, &psi_half, &se_half);
    std::vector<double> d(fine.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = fine[i] - coarse[i];
    // Grid tolerance: PDE grid halving plus Monte-Carlo time-step halving on common paths.
    const double pde_tol = std::abs(v - v_half), time_tol = std::abs(oracle::mean_se(d).mean);
    const double err = std::abs(psi - v);
    return {err <= 3.0 * se + pde_tol + time_tol,
            fmt("MC psi %.5f +- %.5f, PDE c(0,100) %.5f, |diff| %.5f, grid tol %.5f (PDE %.5f, time step %.5f)", psi, se, v,
                err, pde_tol + time_tol, pde_tol, time_tol)};
}

Outcome optimality() {
    const auto& t = comparison();
    bool ok = true;
    std::string detail;
    for (const auto& d : t.differences) {
        if (d.first != "optimal" || (d.second != "naive" && d.second != "zero")) continue;
        const bool better = d.mean < -3.0 * d.se;
        const bool tied = std::abs(d.mean) <= 3.0 * d.se;
        ok = ok && (better || tied);
        detail += fmt("optimal-%s %.5f (se %.5f) ", d.second.c_str(), d.mean, d.se);
    }
    return {ok, detail};
}

Outcome eps_asymptotics() {
    ExperimentConfig c;
    c.threads = kThreads;
    c.sweep_max_iter = 400;
    c.k = 1;
    std::ostringstream log;
    const SweepResult r = run_sweep(c, log);
    bool decreasing = true, ratio1 = true, ratio2 = true;
    std::string detail;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        detail += fmt("eps=%g psi=%.4f ", row.eps, row.psi_naive);
        if (i == 0) continue;
        const auto& prev = r.rows[i - 1];
        decreasing = decreasing && row.psi_naive < prev.psi_naive;
        ratio1 = ratio1 && row.psi_naive / std::sqrt(row.eps) < prev.psi_naive / std::sqrt(prev.eps);
        ratio2 = ratio2 && row.psi_naive / row.eps < prev.psi_naive / prev.eps;
    }
    const bool slope = r.decay_slope && *r.decay_slope < 0.0;
    detail += fmt("| decreasing %d, ratio k=1 decreasing %d, ratio k=2 decreasing %d, slope %.4f", decreasing, ratio1,
                  ratio2, r.decay_slope.value_or(NAN));
    return {decreasing && ratio1 && ratio2 && slope, detail};
}

Outcome decomposition() {
    bool ok = true;
    std::string detail;
    for (const auto& r : comparison().reports) {
        ok = ok && std::abs(r.decomposition_gap) <= 3.0 * r.se_decomposition_gap;
        detail += fmt("%s %.4f (se %.4f) ", r.strategy.c_str(), r.decomposition_gap, r.se_decomposition_gap);
    }
    return {ok, detail};
}

Outcome bond_exactness() {
    const auto sol = solve_hjb(kStd, OptionSpec::unit_bond(1.0), grid(200, 200), 1e-4, 50, kThreads);
    const auto opt = StrategySpec::optimal(sol.a, sol.b);
    const auto roll = record_rollout(opt, kStd, sol.surface, setup(2000, 500));
    bool h_zero = true;
    for (const auto& path : roll.rates)
        for (double h : path) h_zero = h_zero && h == 0.0;
    const auto r = simulate_hedge(opt, kStd, sol.surface, setup(10000, 500));
    const bool ok = sol.b.sup_abs() == 0.0 && sol.c.sup_abs() == 0.0 && h_zero && r.psi == 0.0;
    return {ok, fmt("sup|b| %g, sup|c| %g, h == 0 on all steps %d, psi %g", sol.b.sup_abs(), sol.c.sup_abs(), h_zero, r.psi)};
}

Outcome ncx2_kernel() {
    double worst = 0.0;
    for (double df : {0.5, 1.0, 3.5, 10.0, 50.0})
        for (double ncp : {0.0, 0.3, 2.0, 40.0, 1000.0}) {
            const NoncentralChiSq d(df, ncp);
            const double m1 = ncx2_moment(d, 1), var = ncx2_moment(d, 2) - m1 * m1;
            worst = std::max({worst, std::abs(m1 - (df + ncp)) / (df + ncp), std::abs(var - (2 * df + 4 * ncp)) / (2 * df + 4 * ncp)});
        }
    const NoncentralChiSq d(4.0, 2.0);
    const std::vector<double> xs{1.0, 3.0, 6.0, 10.0, 15.0};
    std::vector<double> hits(xs.size(), 0.0);
    const std::size_t n = 10'000'000;
    CounterRng rng(9, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ncx2_sample(d, rng);
        for (std::size_t k = 0; k < xs.size(); ++k) hits[k] += x <= xs[k];
    }
    double max_z = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double p = hits[k] / n;
        max_z = std::max(max_z, std::abs(p - ncx2_cdf(d, xs[k])) / std::sqrt(p * (1 - p) / n));
    }
    return {worst < 1e-10 && max_z <= 3.0, fmt("max relative moment error %.2e, max |z| of cdf vs 1e7 draws %.2f", worst, max_z)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"black-scholes regression", black_scholes},
        {"martingale pricing", martingale_pricing},
        {"sandwich certificate", sandwich},
        {"verification of the value function", verification},
        {"optimality ordering", optimality},
        {"eps asymptotics", eps_asymptotics},
        {"psi0 decomposition", decomposition},
        {"trivial payoff exactness", bond_exactness},
        {"noncentral chi-square kernel", ncx2_kernel},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << " (" << fmt("%.1f", secs)
                  << " s): " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
