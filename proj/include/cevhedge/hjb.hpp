#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "cevhedge/grid.hpp"
#include "cevhedge/model.hpp"
#include "cevhedge/pricing.hpp"

namespace cevhedge {

/// Nodal coefficient f(it, is) on a Grid2D.
using NodeFn = std::function<double(std::size_t it, std::size_t is)>;

/// Solves 0 = du/dt + 1/2 sigma^2 S^{2+2gamma} d2u/dS2 + f - r u, u(T, .) = 0,
/// by backward Euler in time and three-point differences on the (nonuniform)
/// spot nodes. Source and killing rate are taken at the implicit time level.
/// Boundary nodes carry no diffusion (zero second derivative).
/// Throws NumericalError if r < 0 somewhere or the system loses diagonal dominance.
CoeffField solve_linear_parabolic(const NodeFn& source, const NodeFn& kill_rate,
                                  const ModelParams& params, std::shared_ptr<const Grid2D> grid);

/// Psi(a) = solution with source 1/2 sigma^2 S^{2+2gamma} and killing 2a/(eps S).
CoeffField psi_apply(const CoeffField& a_in, const ModelParams& params);

struct SolveReport {
    int iterations = 0;
    double gap = 0.0;
    double tolerance = 0.0;
    /// sup of the first iterate Psi(0); tolerances are relative to it.
    double sup_a1 = 0.0;
    /// Sup-gap after each iteration from the second on.
    std::vector<double> gap_history;
    /// Envelopes bracketing the fixed point (even iterates below, odd above).
    CoeffField lower;
    CoeffField upper;
    bool converged = false;
};

struct SolveAResult {
    CoeffField a;
    SolveReport report;
};

/// Iterates a^{(0)} = 0, a^{(n+1)} = Psi(a^{(n)}) until
/// sup|upper - lower| < rel_tol * sup a^{(1)}; returns the envelope midpoint.
/// Throws ConvergenceError after max_iter applications of Psi.
SolveAResult solve_a(const ModelParams& params, std::shared_ptr<const Grid2D> grid,
                     double rel_tol = 1e-4, int max_iter = 50);

/// Source -sigma^2 S^{2+2gamma} theta, killing 2a/(eps S).
CoeffField solve_b(const CoeffField& a, const PriceSurface& theta, const ModelParams& params);

/// Source 1/2 sigma^2 S^{2+2gamma} theta^2 - b^2/(2 eps S), no killing.
CoeffField solve_c(const CoeffField& a, const CoeffField& b, const PriceSurface& theta,
                   const ModelParams& params);

/// V = a H^2 + b H + c, interpolated; throws OutOfGrid outside the grid.
double assemble_value(const CoeffField& a, const CoeffField& b, const CoeffField& c, double H, double s,
                      double t);

/// h = -(2 a H + b) / (s eps).
double optimal_control(const CoeffField& a, const CoeffField& b, double H, double s, double t,
                       const ModelParams& params);

struct HjbResiduals {
    /// Pointwise max over interior nodes, natural units of each equation.
    double max_a = 0.0;
    double max_b = 0.0;
    double max_c = 0.0;
    /// sum_n dt_n max_i |res_{n,i}| / ((T - t0) sup_i |source|): the time-integrated
    /// defect relative to the forcing of each equation.
    double rel_a = 0.0;
    double rel_b = 0.0;
    double rel_c = 0.0;
};

/// Residuals of the three coefficient PDEs (a-equation in its nonlinear form)
/// with central differences in time and the solver's spot stencil.
HjbResiduals hjb_residual(const CoeffField& a, const CoeffField& b, const CoeffField& c,
                          const PriceSurface& theta, const ModelParams& params);

/// Everything needed to run the optimal feedback policy.
struct HjbSolution {
    std::shared_ptr<const Grid2D> grid;
    PriceSurface surface;
    CoeffField a;
    CoeffField b;
    CoeffField c;
    SolveReport report;
    HjbResiduals residuals;
};

HjbSolution solve_hjb(const ModelParams& params, const OptionSpec& option,
                      std::shared_ptr<const Grid2D> grid, double rel_tol = 1e-4, int max_iter = 50,
                      unsigned threads = 1);

struct FieldSet {
    CoeffField a;
    CoeffField b;
    CoeffField c;
};

/// Version line, then t,S,a,b,c rows in time-major order.
void write_fields_csv(const CoeffField& a, const CoeffField& b, const CoeffField& c, std::ostream& out);
/// Inverse of write_fields_csv; rebuilds the grid from the listed nodes.
FieldSet read_fields_csv(std::istream& in);

}  // namespace cevhedge
