#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cevhedge/grid.hpp"
#include "cevhedge/model.hpp"
#include "cevhedge/pricing.hpp"

namespace cevhedge {

/// (t, S, H, xi) with xi = H0 S0 + x0 + int H dS.
struct PortfolioState {
    double t;
    double s;
    double H;
    double xi;
};

enum class StrategyKind { OptimalFeedback, NaiveBenchmark, Zero, DeltaTracking, CustomRate };

/// A feedback trading rate h(t, S, H, theta).
struct StrategySpec {
    StrategyKind kind = StrategyKind::Zero;
    std::string name = "zero";
    std::shared_ptr<const CoeffField> a;
    std::shared_ptr<const CoeffField> b;
    double kappa = 0.0;
    std::function<double(const PortfolioState&, double theta)> custom;

    /// h = -(2 a H + b) / (S eps), with clamped lookups outside the grid.
    static StrategySpec optimal(CoeffField a, CoeffField b);
    /// h = sigma S^{1/2+gamma} (theta - H) / sqrt(eps).
    static StrategySpec naive();
    static StrategySpec zero();
    /// h = kappa (theta - H).
    static StrategySpec delta_tracking(double kappa);
    static StrategySpec custom_rate(std::string name, std::function<double(const PortfolioState&, double)> fn);

    double rate(const PortfolioState& state, double theta, const ModelParams& params) const;
};

double naive_rate(const ModelParams& params, double theta, double H, double s);

/// Market setup shared by every strategy of a run.
struct HedgeSetup {
    double s0 = 100.0;
    double H0 = 0.0;
    /// Initial cash; defaults to the option price q0 at (t0, s0).
    std::optional<double> x0;
    TimeGrid times;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    /// Each step's Gaussian increment is the normalized sum of this many draws,
    /// so a run with n steps and refinement 2 shares its noise with a run on
    /// 2n steps and refinement 1.
    unsigned brownian_refinement = 1;
};

struct CostReport {
    std::string strategy;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    unsigned threads = 1;
    double q0 = 0.0;
    double x0 = 0.0;
    /// 1/2 (x0 + H0 S0 - q0)^2.
    double initial_mismatch = 0.0;
    /// 1/2 E int (theta - H)^2 sigma^2 S^{2+2gamma} dt.
    double tracking_term = 0.0;
    /// E int S (eps/2) h^2 dt.
    double liquidity_term = 0.0;
    double psi = 0.0;
    /// 1/2 E (G(S_T) - xi_T)^2.
    double terminal_sq_error = 0.0;
    /// Direct form: terminal_sq_error + liquidity_term.
    double psi0 = 0.0;
    /// initial_mismatch + psi.
    double psi0_decomposed = 0.0;
    /// Mean and standard error of the pathwise difference psi0 - psi0_decomposed.
    double decomposition_gap = 0.0;
    double se_decomposition_gap = 0.0;
    double se_tracking = 0.0;
    double se_liquidity = 0.0;
    double se_psi = 0.0;
    double se_terminal_sq_error = 0.0;
    double se_psi0 = 0.0;
    double absorbed_fraction = 0.0;
};

/// Per-path outcomes of a rollout, kept for paired statistics.
struct PathCosts {
    std::vector<double> tracking;
    std::vector<double> liquidity;
    std::vector<double> terminal_sq;
    std::vector<double> holdings_qv;
    std::vector<unsigned char> absorbed;
};

/// Explicit Euler policy rollout: per step h = strategy(t, S, H, theta),
/// costs accrue with left-point sums, xi += H dS, H += h dt. Trading stops
/// on absorbed paths. Path i draws from CounterRng(seed, i), so strategies
/// run with one setup see identical spot paths.
/// Throws NumericalError naming path and step on NaN or overflow.
CostReport simulate_hedge(const StrategySpec& strategy, const ModelParams& params, const PriceSurface& surface,
                          const HedgeSetup& setup, PathCosts* per_path = nullptr);

struct TraceRow {
    double t, s, H, theta, h, cum_liq_cost, xi;
};

/// Full rollout of one path (same stream as simulate_hedge's path `index`).
std::vector<TraceRow> trace_path(const StrategySpec& strategy, const ModelParams& params,
                                 const PriceSurface& surface, const HedgeSetup& setup, std::size_t index);

void write_trace_csv(const std::vector<TraceRow>& rows, std::ostream& out);
std::string cost_report_json(const CostReport& report, int indent = 2);

struct AdmissibilityReport {
    /// E int H^2 sigma^2 S^{2+2gamma} dt and its standard error.
    double holdings_qv = 0.0;
    double se_holdings_qv = 0.0;
    /// E int l(h) S dt and its standard error.
    double liquidity = 0.0;
    double se_liquidity = 0.0;
    /// Same estimates on the first half of the paths.
    double holdings_qv_half = 0.0;
    double liquidity_half = 0.0;
    /// Share of the mean liquidity cost accrued in the last 1% of steps.
    double liquidity_tail_share = 0.0;
    bool unstable_under_doubling = false;
    bool tail_dominated = false;
    bool flagged = false;
};

/// Recorded rollout: per-path holdings and rates on the step grid.
struct Rollout {
    TimeGrid times;
    std::vector<std::vector<double>> spots;
    std::vector<std::vector<double>> holdings;
    std::vector<std::vector<double>> rates;
};

Rollout record_rollout(const StrategySpec& strategy, const ModelParams& params, const PriceSurface& surface,
                       const HedgeSetup& setup);

AdmissibilityReport admissibility_diagnostics(const Rollout& rollout, const ModelParams& params);

struct PairedDifference {
    std::string first;
    std::string second;
    /// Mean of psi(first) - psi(second) over common paths and its standard error.
    double mean = 0.0;
    double se = 0.0;
};

struct ComparisonTable {
    std::vector<CostReport> reports;
    /// Strategy names ordered by increasing psi.
    std::vector<std::string> ranking;
    std::vector<PairedDifference> differences;
};

/// One CostReport per strategy on identical paths, plus all pairwise
/// differences of psi with paired standard errors. With
/// common_random_numbers = false strategy j uses seed + j instead.
ComparisonTable compare_strategies(const std::vector<StrategySpec>& strategies, const ModelParams& params,
                                   const PriceSurface& surface, const HedgeSetup& setup,
                                   bool common_random_numbers = true);

/// Mean and standard error of a sample (SE 0 for fewer than two values).
std::pair<double, double> mean_and_se(const std::vector<double>& xs);

}  // namespace cevhedge
