#include "cevhedge/hedging.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "cevhedge/cev.hpp"
#include "cevhedge/errors.hpp"
#include "cevhedge/parallel.hpp"
#include "cevhedge/rng.hpp"

namespace cevhedge {
namespace {

struct Context {
    const StrategySpec& strategy;
    const ModelParams& params;
    const PriceSurface& surface;
    const HedgeSetup& setup;
    double x0;
    bool ab_on_surface_grid;
};

struct PathOutcome {
    double tracking = 0.0;
    double liquidity = 0.0;
    double terminal_sq = 0.0;
    double holdings_qv = 0.0;
    bool absorbed = false;
};

void validate_setup(const ModelParams& params, const PriceSurface& surface, const HedgeSetup& setup,
                    std::size_t min_paths) {
    params.validate();
    if (!(setup.s0 > 0.0)) throw InvalidInput("hedge setup: s0 must be positive");
    if (!std::isfinite(setup.H0)) throw InvalidInput("hedge setup: H0 must be finite");
    if (setup.times.size() < 2) throw InvalidInput("hedge setup: empty time grid");
    if (setup.n_paths < min_paths) {
        throw InvalidInput("hedge setup: need at least " + std::to_string(min_paths) + " paths");
    }
    if (setup.brownian_refinement == 0) throw InvalidInput("hedge setup: brownian_refinement must be >= 1");
    if (!surface.grid) throw InvalidInput("hedge setup: empty price surface");
    if (setup.times.T() > surface.option.maturity * (1.0 + 1e-12))
        throw InvalidInput("hedge setup: rollout extends past the option maturity");
}

Context make_context(const StrategySpec& strategy, const ModelParams& params, const PriceSurface& surface,
                     const HedgeSetup& setup) {
    const double q0 = price_european(surface.option, params, setup.times.t0(), setup.s0);
    bool same = false;
    if (strategy.kind == StrategyKind::OptimalFeedback) {
        if (!strategy.a || !strategy.b) throw InvalidInput("optimal strategy needs a and b fields");
        same = strategy.a->grid_ptr() == surface.grid || strategy.a->grid() == *surface.grid;
    }
    return {strategy, params, surface, setup, setup.x0.value_or(q0), same};
}

[[noreturn]] void blow_up(const char* what, std::size_t path, std::size_t step) {
    std::ostringstream os;
    os << "hedge rollout: non-finite " << what << " on path " << path << " at step " << step;
    throw NumericalError(os.str());
}

// Runs path `index`; on_step(t, s, H, theta, h, cum_liq, xi) is called before each step and once at T.
template <class OnStep>
PathOutcome run_path(const Context& ctx, std::size_t index, OnStep&& on_step) {
    const ModelParams& p = ctx.params;
    const TimeGrid& times = ctx.setup.times;
    const unsigned m = ctx.setup.brownian_refinement;
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
    const double half_eps = 0.5 * p.eps;
    const double sig2 = p.sigma * p.sigma;
    const double pow_var = 2.0 + 2.0 * p.gamma;

    CounterRng rng(ctx.setup.seed, index);
    std::normal_distribution<double> n01;

    PathOutcome out;
    double s = ctx.setup.s0;
    double H = ctx.setup.H0;
    double xi = ctx.setup.H0 * ctx.setup.s0 + ctx.x0;

    for (std::size_t k = 0; k < times.n_steps(); ++k) {
        const double t = times[k];
        const double dt = times.dt(k);
        double z = 0.0;
        for (unsigned r = 0; r < m; ++r) z += n01(rng);
        z *= inv_sqrt_m;
        if (s <= 0.0) {
            on_step(t, 0.0, H, ctx.surface.theta_at(t, 0.0), 0.0, out.liquidity, xi);
            continue;
        }
        const GridPoint gp = ctx.surface.grid->locate_clamped(t, s);
        const double theta = ctx.surface.theta.at(gp);
        double h;
        if (ctx.strategy.kind == StrategyKind::OptimalFeedback) {
            const GridPoint gab = ctx.ab_on_surface_grid ? gp : ctx.strategy.a->grid().locate_clamped(t, s);
            h = -(2.0 * ctx.strategy.a->at(gab) * H + ctx.strategy.b->at(gab)) / (s * p.eps);
        } else {
            h = ctx.strategy.rate(PortfolioState{t, s, H, xi}, theta, p);
        }
        if (!std::isfinite(h)) blow_up("trading rate", index, k);
        on_step(t, s, H, theta, h, out.liquidity, xi);

        const double var = sig2 * std::exp(pow_var * std::log(s));
        const double gap = theta - H;
        out.tracking += 0.5 * gap * gap * var * dt;
        out.liquidity += s * half_eps * h * h * dt;
        out.holdings_qv += H * H * var * dt;

        const double next = euler_step(p, s, dt, z);
        xi += H * (next - s);
        H += h * dt;
        s = next;
        if (s == 0.0) out.absorbed = true;
        if (!std::isfinite(xi) || !std::isfinite(H) || !std::isfinite(out.liquidity) ||
            !std::isfinite(out.tracking))
            blow_up("accumulator", index, k);
    }
    const double payoff = ctx.surface.option.payoff(s);
    const double err = payoff - xi;
    out.terminal_sq = 0.5 * err * err;
    if (!std::isfinite(out.terminal_sq)) blow_up("terminal error", index, times.n_steps());
    const double theta_T = ctx.surface.theta_at(times.T(), s);
    on_step(times.T(), s, H, theta_T, 0.0, out.liquidity, xi);
    return out;
}

CostReport summarize(const Context& ctx, const PathCosts& pc) {
    CostReport r;
    r.strategy = ctx.strategy.name;
    r.n_paths = pc.tracking.size();
    r.n_steps = ctx.setup.times.n_steps();
    r.threads = resolve_threads(ctx.setup.threads);
    r.q0 = price_european(ctx.surface.option, ctx.params, ctx.setup.times.t0(), ctx.setup.s0);
    r.x0 = ctx.x0;
    const double mismatch = r.x0 + ctx.setup.H0 * ctx.setup.s0 - r.q0;
    r.initial_mismatch = 0.5 * mismatch * mismatch;

    const std::size_t n = r.n_paths;
    std::vector<double> psi(n), psi0(n), gap(n);
    std::size_t absorbed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        psi[i] = pc.tracking[i] + pc.liquidity[i];
        psi0[i] = pc.terminal_sq[i] + pc.liquidity[i];
        gap[i] = pc.terminal_sq[i] - pc.tracking[i] - r.initial_mismatch;
        absorbed += pc.absorbed[i];
    }
    std::tie(r.tracking_term, r.se_tracking) = mean_and_se(pc.tracking);
    std::tie(r.liquidity_term, r.se_liquidity) = mean_and_se(pc.liquidity);
    std::tie(r.psi, r.se_psi) = mean_and_se(psi);
    std::tie(r.terminal_sq_error, r.se_terminal_sq_error) = mean_and_se(pc.terminal_sq);
    std::tie(r.psi0, r.se_psi0) = mean_and_se(psi0);
    std::tie(r.decomposition_gap, r.se_decomposition_gap) = mean_and_se(gap);
    r.psi0_decomposed = r.initial_mismatch + r.psi;
    r.absorbed_fraction = static_cast<double>(absorbed) / static_cast<double>(n);
    return r;
}

}  // namespace

StrategySpec StrategySpec::optimal(CoeffField a, CoeffField b) {
    StrategySpec s;
    s.kind = StrategyKind::OptimalFeedback;
    s.name = "optimal";
    s.a = std::make_shared<const CoeffField>(std::move(a));
    s.b = std::make_shared<const CoeffField>(std::move(b));
    return s;
}

StrategySpec StrategySpec::naive() {
    StrategySpec s;
    s.kind = StrategyKind::NaiveBenchmark;
    s.name = "naive";
    return s;
}

StrategySpec StrategySpec::zero() { return StrategySpec{}; }

StrategySpec StrategySpec::delta_tracking(double kappa) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidInput("delta tracking needs kappa >= 0");
    StrategySpec s;
    s.kind = StrategyKind::DeltaTracking;
    s.name = "delta_tracking";
    s.kappa = kappa;
    return s;
}

StrategySpec StrategySpec::custom_rate(std::string name, std::function<double(const PortfolioState&, double)> fn) {
    if (!fn) throw InvalidInput("custom strategy needs a rate function");
    StrategySpec s;
    s.kind = StrategyKind::CustomRate;
    s.name = std::move(name);
    s.custom = std::move(fn);
    return s;
}

double StrategySpec::rate(const PortfolioState& state, double theta, const ModelParams& params) const {
    switch (kind) {
        case StrategyKind::OptimalFeedback: {
            const GridPoint gp = a->grid().locate_clamped(state.t, state.s);
            return -(2.0 * a->at(gp) * state.H + b->at(gp)) / (state.s * params.eps);
        }
        case StrategyKind::NaiveBenchmark: return naive_rate(params, theta, state.H, state.s);
        case StrategyKind::Zero: return 0.0;
        case StrategyKind::DeltaTracking: return kappa * (theta - state.H);
        case StrategyKind::CustomRate: return custom(state, theta);
    }
    return 0.0;
}

double naive_rate(const ModelParams& params, double theta, double H, double s) {
    if (!(s > 0.0)) throw InvalidInput("naive_rate: spot must be positive");
    return params.sigma * std::pow(s, 0.5 + params.gamma) * (theta - H) / std::sqrt(params.eps);
}

std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n == 0) return {0.0, 0.0};
    const double mean = pairwise_sum(xs) / static_cast<double>(n);
    if (n < 2) return {mean, 0.0};
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = (xs[i] - mean) * (xs[i] - mean);
    const double var = pairwise_sum(dev) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

CostReport simulate_hedge(const StrategySpec& strategy, const ModelParams& params, const PriceSurface& surface,
                          const HedgeSetup& setup, PathCosts* per_path) {
    validate_setup(params, surface, setup, 2);
    const Context ctx = make_context(strategy, params, surface, setup);
    const std::size_t n = setup.n_paths;
    PathCosts pc{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                 std::vector<unsigned char>(n)};
    parallel_for(n, setup.threads, [&](std::size_t i) {
        const PathOutcome o = run_path(ctx, i, [](double, double, double, double, double, double, double) {});
        pc.tracking[i] = o.tracking;
        pc.liquidity[i] = o.liquidity;
        pc.terminal_sq[i] = o.terminal_sq;
        pc.holdings_qv[i] = o.holdings_qv;
        pc.absorbed[i] = o.absorbed ? 1 : 0;
    });
    CostReport report = summarize(ctx, pc);
    if (per_path) *per_path = std::move(pc);
    return report;
}

std::vector<TraceRow> trace_path(const StrategySpec& strategy, const ModelParams& params,
                                 const PriceSurface& surface, const HedgeSetup& setup, std::size_t index) {
    validate_setup(params, surface, setup, 1);
    const Context ctx = make_context(strategy, params, surface, setup);
    std::vector<TraceRow> rows;
    rows.reserve(setup.times.size());
    run_path(ctx, index, [&](double t, double s, double H, double theta, double h, double liq, double xi) {
        rows.push_back({t, s, H, theta, h, liq, xi});
    });
    return rows;
}

void write_trace_csv(const std::vector<TraceRow>& rows, std::ostream& out) {
    out << "# cevhedge trace v1\n";
    out << "t,S,H,theta,h,cum_liq_cost,xi\n";
    out.precision(17);
    for (const TraceRow& r : rows) {
        out << r.t << ',' << r.s << ',' << r.H << ',' << r.theta << ',' << r.h << ',' << r.cum_liq_cost << ','
            << r.xi << '\n';
    }
}

std::string cost_report_json(const CostReport& r, int indent) {
    nlohmann::ordered_json j;
    j["format"] = "cevhedge cost_report v1";
    j["strategy"] = r.strategy;
    j["n_paths"] = r.n_paths;
    j["n_steps"] = r.n_steps;
    j["threads"] = r.threads;
    j["q0"] = r.q0;
    j["x0"] = r.x0;
    j["initial_mismatch"] = r.initial_mismatch;
    j["tracking_term"] = r.tracking_term;
    j["liquidity_term"] = r.liquidity_term;
    j["psi"] = r.psi;
    j["terminal_sq_error"] = r.terminal_sq_error;
    j["psi0"] = r.psi0;
    j["psi0_decomposed"] = r.psi0_decomposed;
    j["decomposition_gap"] = r.decomposition_gap;
    j["absorbed_fraction"] = r.absorbed_fraction;
    j["std_errors"] = {{"tracking_term", r.se_tracking},         {"liquidity_term", r.se_liquidity},
                       {"psi", r.se_psi},                        {"terminal_sq_error", r.se_terminal_sq_error},
                       {"psi0", r.se_psi0},                      {"decomposition_gap", r.se_decomposition_gap}};
    return j.dump(indent);
}

Rollout record_rollout(const StrategySpec& strategy, const ModelParams& params, const PriceSurface& surface,
                       const HedgeSetup& setup) {
    validate_setup(params, surface, setup, 2);
    const Context ctx = make_context(strategy, params, surface, setup);
    const std::size_t n = setup.n_paths;
    const std::size_t steps = setup.times.n_steps();
    Rollout ro{setup.times, std::vector<std::vector<double>>(n), std::vector<std::vector<double>>(n),
               std::vector<std::vector<double>>(n)};
    parallel_for(n, setup.threads, [&](std::size_t i) {
        auto& sp = ro.spots[i];
        auto& hs = ro.holdings[i];
        auto& rs = ro.rates[i];
        sp.reserve(steps + 1);
        hs.reserve(steps + 1);
        rs.reserve(steps + 1);
        run_path(ctx, i, [&](double, double s, double H, double, double h, double, double) {
            sp.push_back(s);
            hs.push_back(H);
            rs.push_back(h);
        });
    });
    return ro;
}

AdmissibilityReport admissibility_diagnostics(const Rollout& rollout, const ModelParams& params) {
    const std::size_t n = rollout.spots.size();
    if (n < 2) throw InvalidInput("admissibility_diagnostics: need at least two paths");
    const TimeGrid& times = rollout.times;
    const std::size_t steps = times.n_steps();
    const std::size_t tail_steps = std::max<std::size_t>(1, (steps + 99) / 100);

    std::vector<double> qv(n), liq(n), liq_tail(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& sp = rollout.spots[i];
        const auto& hs = rollout.holdings[i];
        const auto& rs = rollout.rates[i];
        if (sp.size() != steps + 1 || hs.size() != steps + 1 || rs.size() != steps + 1)
            throw InvalidInput("admissibility_diagnostics: path length does not match the time grid");
        double a = 0.0, l = 0.0, lt = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double dt = times.dt(k);
            const double s = sp[k];
            a += hs[k] * hs[k] * params.variance_rate(s) * dt;
            const double c = 0.5 * params.eps * rs[k] * rs[k] * s * dt;
            l += c;
            if (k + tail_steps >= steps) lt += c;
        }
        qv[i] = a;
        liq[i] = l;
        liq_tail[i] = lt;
    }
    AdmissibilityReport rep;
    std::tie(rep.holdings_qv, rep.se_holdings_qv) = mean_and_se(qv);
    std::tie(rep.liquidity, rep.se_liquidity) = mean_and_se(liq);
    const std::size_t half = n / 2;
    rep.holdings_qv_half = mean_and_se({qv.begin(), qv.begin() + static_cast<std::ptrdiff_t>(half)}).first;
    rep.liquidity_half = mean_and_se({liq.begin(), liq.begin() + static_cast<std::ptrdiff_t>(half)}).first;
    const double tail_mean = mean_and_se(liq_tail).first;
    rep.liquidity_tail_share = rep.liquidity > 0.0 ? tail_mean / rep.liquidity : 0.0;

    // Halving the sample moves a converging mean by about 1 SE of the half sample.
    auto unstable = [](double full, double half_value, double se_full) {
        return std::abs(full - half_value) > 6.0 * se_full + 1e-12 * std::abs(full);
    };
    rep.unstable_under_doubling = !std::isfinite(rep.holdings_qv) || !std::isfinite(rep.liquidity) ||
                                  unstable(rep.holdings_qv, rep.holdings_qv_half, rep.se_holdings_qv) ||
                                  unstable(rep.liquidity, rep.liquidity_half, rep.se_liquidity);
    rep.tail_dominated = rep.liquidity_tail_share > 0.5;
    rep.flagged = rep.unstable_under_doubling || rep.tail_dominated;
    return rep;
}

ComparisonTable compare_strategies(const std::vector<StrategySpec>& strategies, const ModelParams& params,
                                   const PriceSurface& surface, const HedgeSetup& setup,
                                   bool common_random_numbers) {
    if (strategies.empty()) throw InvalidInput("compare_strategies: no strategies");
    ComparisonTable table;
    std::vector<std::vector<double>> psi(strategies.size());
    for (std::size_t j = 0; j < strategies.size(); ++j) {
        HedgeSetup s = setup;
        if (!common_random_numbers) s.seed = setup.seed + j;
        PathCosts pc;
        table.reports.push_back(simulate_hedge(strategies[j], params, surface, s, &pc));
        psi[j].resize(pc.tracking.size());
        for (std::size_t i = 0; i < psi[j].size(); ++i) psi[j][i] = pc.tracking[i] + pc.liquidity[i];
    }
    std::vector<std::size_t> order(strategies.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return table.reports[x].psi < table.reports[y].psi; });
    for (std::size_t j : order) table.ranking.push_back(table.reports[j].strategy);

    for (std::size_t x = 0; x < strategies.size(); ++x) {
        for (std::size_t y = x + 1; y < strategies.size(); ++y) {
            std::vector<double> d(psi[x].size());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = psi[x][i] - psi[y][i];
            const auto [m, se] = mean_and_se(d);
            table.differences.push_back({table.reports[x].strategy, table.reports[y].strategy, m, se});
        }
    }
    return table;
}

}  // namespace cevhedge
