#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "cevhedge/grid.hpp"
#include "cevhedge/model.hpp"

namespace cevhedge {

enum class PayoffKind { Call, Put, Custom };

/// European payoff G(S_T) at maturity T.
struct OptionSpec {
    PayoffKind kind = PayoffKind::Call;
    double strike = 100.0;
    double maturity = 1.0;
    /// Payoff for Custom; ignored otherwise.
    std::function<double(double)> custom;
    /// Spot levels where a custom payoff is not smooth.
    std::vector<double> kinks;
    /// Set when G(S) = alpha + beta S; priced exactly (q = G, theta = beta).
    std::optional<std::pair<double, double>> affine;

    static OptionSpec call(double strike, double maturity);
    static OptionSpec put(double strike, double maturity);
    static OptionSpec custom_payoff(std::function<double(double)> g, double maturity,
                                    std::vector<double> kinks = {});
    static OptionSpec affine_payoff(double alpha, double beta, double maturity);
    /// G = 1.
    static OptionSpec unit_bond(double maturity) { return affine_payoff(1.0, 0.0, maturity); }

    void validate() const;
    double payoff(double s) const;
    /// Almost-everywhere derivative of G; 1/2 exactly at a call or put strike
    /// (with sign for puts).
    double payoff_slope(double s) const;
    /// Affine coefficients if the payoff is affine (covers strike-0 calls and puts).
    std::optional<std::pair<double, double>> affine_coefficients() const;
};

/// E[G(S_T) | S_t = s] under zero drift, absorbed paths paying G(0).
double price_european(const OptionSpec& option, const ModelParams& params, double t, double s);

/// dq/dS. Fourth-order differences on price_european with one Richardson
/// step; one-sided stencil when s is too close to the origin.
double delta(const OptionSpec& option, const ModelParams& params, double t, double s);

/// q and theta tabulated on a grid (time nodes must lie within [0, T]).
struct PriceSurface {
    std::shared_ptr<const Grid2D> grid;
    CoeffField q;
    CoeffField theta;
    OptionSpec option;
    ModelParams params;

    /// Clamped bilinear lookup of theta; used by the hedging rollout.
    double theta_at(double t, double s) const noexcept { return theta.interpolate_clamped(t, s); }
};

PriceSurface build_price_surface(const OptionSpec& option, const ModelParams& params,
                                 std::shared_ptr<const Grid2D> grid, unsigned threads = 1);

/// max |dq/dt + 1/2 sigma^2 S^{2+2gamma} d2q/dS2| over interior grid nodes,
/// with q from price_european and second-order nonuniform differences.
double pde_residual_q(const OptionSpec& option, const ModelParams& params, const Grid2D& grid,
                      unsigned threads = 1);

struct GrowthBoundReport {
    double C;
    double alpha;
    double C1;
    double beta;
    bool satisfied;
};

/// Fits |theta| <= C (1 + S^alpha) and |dtheta/dS| <= C1 (1 + S^beta) over the
/// grid. The exponents are the largest log-log slopes of the running maximum
/// over the upper quarter of each time row (floored at 0); the constants are
/// then the smallest that fit.
GrowthBoundReport growth_bound_check(const PriceSurface& surface);

/// Columns t,S,q,theta after a version line.
void write_price_surface_csv(const PriceSurface& surface, std::ostream& out);

}  // namespace cevhedge
