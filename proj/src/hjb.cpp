#include "cevhedge/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cevhedge/errors.hpp"

namespace cevhedge {
namespace {

struct Stencil {
    std::vector<double> lower;  // weight of u_{i-1} in d2u/dS2
    std::vector<double> upper;  // weight of u_{i+1}
};

Stencil second_difference_weights(std::span<const double> s) {
    Stencil st{std::vector<double>(s.size(), 0.0), std::vector<double>(s.size(), 0.0)};
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const double h0 = s[i] - s[i - 1];
        const double h1 = s[i + 1] - s[i];
        st.lower[i] = 2.0 / (h0 * (h0 + h1));
        st.upper[i] = 2.0 / (h1 * (h0 + h1));
    }
    return st;
}

std::vector<double> half_variance(const ModelParams& p, std::span<const double> s) {
    std::vector<double> hv(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) hv[i] = 0.5 * p.variance_rate(s[i]);
    return hv;
}

// In-place Thomas algorithm; `diag` and `rhs` are overwritten, solution left in rhs.
void thomas(const std::vector<double>& sub, std::vector<double>& diag, const std::vector<double>& sup,
            std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

bool same_grid(const CoeffField& x, const CoeffField& y) {
    return x.grid_ptr() == y.grid_ptr() || x.grid() == y.grid();
}

// theta at the nodes of `grid`, interpolated if the surface lives elsewhere.
NodeFn theta_on(const PriceSurface& surface, std::shared_ptr<const Grid2D> grid) {
    if (surface.grid == grid || *surface.grid == *grid) {
        return [&surface](std::size_t it, std::size_t is) { return surface.theta(it, is); };
    }
    return [&surface, grid](std::size_t it, std::size_t is) {
        return surface.theta_at(grid->times()[it], grid->spots()[is]);
    };
}

double fd_first(double f0, double f1, double f2, double h0, double h1) {
    return -h1 / (h0 * (h0 + h1)) * f0 + (h1 - h0) / (h0 * h1) * f1 + h0 / (h1 * (h0 + h1)) * f2;
}

}  // namespace

CoeffField solve_linear_parabolic(const NodeFn& source, const NodeFn& kill_rate, const ModelParams& params,
                                  std::shared_ptr<const Grid2D> grid) {
    params.validate();
    if (!grid) throw InvalidInput("solve_linear_parabolic: null grid");
    const std::size_t nt = grid->n_t();
    const std::size_t ns = grid->n_s();
    const auto spots = grid->spots();
    const TimeGrid& times = grid->times();
    const Stencil st = second_difference_weights(spots);
    const std::vector<double> hv = half_variance(params, spots);

    CoeffField u(grid, 0.0);
    std::vector<double> sub(ns), diag(ns), sup(ns), rhs(ns);
    for (std::size_t n = nt - 1; n-- > 0;) {
        const double dt = times.dt(n);
        const auto next = u.row(n + 1);
        for (std::size_t i = 0; i < ns; ++i) {
            const double r = kill_rate(n, i);
            const double f = source(n, i);
            if (!(r >= 0.0) || !std::isfinite(r) || !std::isfinite(f)) {
                std::ostringstream os;
                os << "solve_linear_parabolic: bad coefficient at node (" << n << ", " << i << "): source=" << f
                   << ", kill_rate=" << r;
                throw NumericalError(os.str());
            }
            const bool interior = i > 0 && i + 1 < ns;
            sub[i] = interior ? -dt * hv[i] * st.lower[i] : 0.0;
            sup[i] = interior ? -dt * hv[i] * st.upper[i] : 0.0;
            diag[i] = 1.0 + dt * r - sub[i] - sup[i];
            rhs[i] = next[i] + dt * f;
        }
        thomas(sub, diag, sup, rhs);
        auto row = u.row(n);
        std::copy(rhs.begin(), rhs.end(), row.begin());
    }
    return u;
}

CoeffField psi_apply(const CoeffField& a_in, const ModelParams& params) {
    params.validate();
    const auto grid = a_in.grid_ptr();
    const auto spots = grid->spots();
    const std::vector<double> hv = half_variance(params, spots);
    const double eps = params.eps;
    return solve_linear_parabolic([&hv](std::size_t, std::size_t is) { return hv[is]; },
                                  [&](std::size_t it, std::size_t is) {
                                      return 2.0 * a_in(it, is) / (eps * spots[is]);
                                  },
                                  params, grid);
}

SolveAResult solve_a(const ModelParams& params, std::shared_ptr<const Grid2D> grid, double rel_tol,
                     int max_iter) {
    params.validate();
    if (!(rel_tol >= 0.0)) throw InvalidInput("solve_a: tolerance must be nonnegative");
    if (max_iter < 1) throw InvalidInput("solve_a: max_iter must be >= 1");

    SolveReport report;
    report.lower = CoeffField(grid, 0.0);
    report.upper = psi_apply(report.lower, params);
    report.iterations = 1;
    report.sup_a1 = report.upper.sup_abs();
    report.tolerance = rel_tol * report.sup_a1;

    auto sup_gap = [&] {
        double g = 0.0;
        const auto lo = report.lower.values();
        const auto up = report.upper.values();
        for (std::size_t k = 0; k < lo.size(); ++k) g = std::max(g, std::abs(up[k] - lo[k]));
        return g;
    };
    report.gap = sup_gap();
    while (!(report.gap < report.tolerance)) {
        if (report.iterations >= max_iter) {
            std::ostringstream os;
            os << "solve_a: no convergence after " << report.iterations << " iterations (gap " << report.gap
               << ", tolerance " << report.tolerance << ")";
            throw ConvergenceError(os.str(), report.gap, report.iterations);
        }
        if (report.iterations % 2 == 1) {
            report.lower = psi_apply(report.upper, params);
        } else {
            report.upper = psi_apply(report.lower, params);
        }
        ++report.iterations;
        report.gap = sup_gap();
        report.gap_history.push_back(report.gap);
    }
    report.converged = true;

    std::vector<double> mid(grid->size());
    const auto lo = report.lower.values();
    const auto up = report.upper.values();
    for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (lo[k] + up[k]);
    return {CoeffField(grid, std::move(mid)), std::move(report)};
}

CoeffField solve_b(const CoeffField& a, const PriceSurface& theta, const ModelParams& params) {
    params.validate();
    const auto grid = a.grid_ptr();
    const auto spots = grid->spots();
    const std::vector<double> hv = half_variance(params, spots);
    const NodeFn th = theta_on(theta, grid);
    const double eps = params.eps;
    return solve_linear_parabolic(
        [&](std::size_t it, std::size_t is) { return -2.0 * hv[is] * th(it, is); },
        [&](std::size_t it, std::size_t is) { return 2.0 * a(it, is) / (eps * spots[is]); }, params, grid);
}

CoeffField solve_c(const CoeffField& a, const CoeffField& b, const PriceSurface& theta,
                   const ModelParams& params) {
    params.validate();
    if (!same_grid(a, b)) throw InvalidInput("solve_c: a and b live on different grids");
    const auto grid = a.grid_ptr();
    const auto spots = grid->spots();
    const std::vector<double> hv = half_variance(params, spots);
    const NodeFn th = theta_on(theta, grid);
    const double eps = params.eps;
    return solve_linear_parabolic(
        [&](std::size_t it, std::size_t is) {
            const double t = th(it, is);
            const double bv = b(it, is);
            return hv[is] * t * t - bv * bv / (2.0 * eps * spots[is]);
        },
        [](std::size_t, std::size_t) { return 0.0; }, params, grid);
}

double assemble_value(const CoeffField& a, const CoeffField& b, const CoeffField& c, double H, double s,
                      double t) {
    if (!same_grid(a, b) || !same_grid(a, c)) throw InvalidInput("assemble_value: fields on different grids");
    const GridPoint p = a.grid().locate(t, s);
    return (a.at(p) * H + b.at(p)) * H + c.at(p);
}

double optimal_control(const CoeffField& a, const CoeffField& b, double H, double s, double t,
                       const ModelParams& params) {
    if (!same_grid(a, b)) throw InvalidInput("optimal_control: fields on different grids");
    const GridPoint p = a.grid().locate(t, s);
    return -(2.0 * a.at(p) * H + b.at(p)) / (s * params.eps);
}

HjbResiduals hjb_residual(const CoeffField& a, const CoeffField& b, const CoeffField& c,
                          const PriceSurface& theta, const ModelParams& params) {
    if (!same_grid(a, b) || !same_grid(a, c)) throw InvalidInput("hjb_residual: fields on different grids");
    const auto grid = a.grid_ptr();
    const std::size_t nt = grid->n_t();
    const std::size_t ns = grid->n_s();
    const auto spots = grid->spots();
    const TimeGrid& times = grid->times();
    const Stencil st = second_difference_weights(spots);
    const std::vector<double> hv = half_variance(params, spots);
    const NodeFn th = theta_on(theta, grid);
    const double eps = params.eps;

    double src_a = 0.0, src_b = 0.0, src_c = 0.0;
    for (std::size_t it = 0; it < nt; ++it) {
        for (std::size_t is = 0; is < ns; ++is) {
            const double t = th(it, is);
            src_a = std::max(src_a, hv[is]);
            src_b = std::max(src_b, std::abs(2.0 * hv[is] * t));
            src_c = std::max(src_c, hv[is] * t * t);
        }
    }

    HjbResiduals out;
    double int_a = 0.0, int_b = 0.0, int_c = 0.0;
    for (std::size_t n = 1; n + 1 < nt; ++n) {
        const double k0 = times[n] - times[n - 1];
        const double k1 = times[n + 1] - times[n];
        double row_a = 0.0, row_b = 0.0, row_c = 0.0;
        for (std::size_t i = 1; i + 1 < ns; ++i) {
            auto dt = [&](const CoeffField& f) { return fd_first(f(n - 1, i), f(n, i), f(n + 1, i), k0, k1); };
            auto dss = [&](const CoeffField& f) {
                return st.lower[i] * f(n, i - 1) - (st.lower[i] + st.upper[i]) * f(n, i) + st.upper[i] * f(n, i + 1);
            };
            const double av = a(n, i);
            const double bv = b(n, i);
            const double t = th(n, i);
            const double kill = 2.0 / (eps * spots[i]);
            const double ra = dt(a) + hv[i] * dss(a) + hv[i] - kill * av * av;
            const double rb = dt(b) + hv[i] * dss(b) - 2.0 * hv[i] * t - kill * av * bv;
            const double rc = dt(c) + hv[i] * dss(c) + hv[i] * t * t - bv * bv / (2.0 * eps * spots[i]);
            row_a = std::max(row_a, std::abs(ra));
            row_b = std::max(row_b, std::abs(rb));
            row_c = std::max(row_c, std::abs(rc));
        }
        out.max_a = std::max(out.max_a, row_a);
        out.max_b = std::max(out.max_b, row_b);
        out.max_c = std::max(out.max_c, row_c);
        const double w = 0.5 * (k0 + k1);
        int_a += w * row_a;
        int_b += w * row_b;
        int_c += w * row_c;
    }
    const double horizon = times.T() - times.t0();
    auto rel = [horizon](double integral, double scale) {
        return integral / (horizon * (scale > 0.0 ? scale : 1.0));
    };
    out.rel_a = rel(int_a, src_a);
    out.rel_b = rel(int_b, src_b);
    out.rel_c = rel(int_c, src_c);
    return out;
}

HjbSolution solve_hjb(const ModelParams& params, const OptionSpec& option, std::shared_ptr<const Grid2D> grid,
                      double rel_tol, int max_iter, unsigned threads) {
    params.validate();
    option.validate();
    if (std::abs(grid->times().T() - option.maturity) > 1e-12 * std::max(1.0, option.maturity))
        throw InvalidInput("solve_hjb: grid must end at the option maturity");
    HjbSolution sol{grid, build_price_surface(option, params, grid, threads), {}, {}, {}, {}, {}};
    SolveAResult ra = solve_a(params, grid, rel_tol, max_iter);
    sol.a = std::move(ra.a);
    sol.report = std::move(ra.report);
    sol.b = solve_b(sol.a, sol.surface, params);
    sol.c = solve_c(sol.a, sol.b, sol.surface, params);
    sol.residuals = hjb_residual(sol.a, sol.b, sol.c, sol.surface, params);
    return sol;
}

void write_fields_csv(const CoeffField& a, const CoeffField& b, const CoeffField& c, std::ostream& out) {
    if (!same_grid(a, b) || !same_grid(a, c)) throw InvalidInput("write_fields_csv: fields on different grids");
    const Grid2D& grid = a.grid();
    out << "# cevhedge fields v1 n_t=" << grid.n_t() << " n_s=" << grid.n_s() << '\n';
    out << "t,S,a,b,c\n";
    out.precision(17);
    for (std::size_t it = 0; it < grid.n_t(); ++it) {
        for (std::size_t is = 0; is < grid.n_s(); ++is) {
            out << grid.times()[it] << ',' << grid.spots()[is] << ',' << a(it, is) << ',' << b(it, is) << ','
                << c(it, is) << '\n';
        }
    }
}

FieldSet read_fields_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# cevhedge fields v1", 0) != 0)
        throw InvalidInput("fields file: missing or unsupported version line");
    if (!std::getline(in, line) || line != "t,S,a,b,c") throw InvalidInput("fields file: bad column header");
    std::vector<double> ts, ss, va, vb, vc;
    std::size_t row = 2;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        double v[5];
        std::istringstream ls(line);
        std::string cell;
        for (int k = 0; k < 5; ++k) {
            if (!std::getline(ls, cell, ',')) throw InvalidInput("fields file: short row " + std::to_string(row));
            try {
                v[k] = std::stod(cell);
            } catch (const std::exception&) {
                throw InvalidInput("fields file: bad number on row " + std::to_string(row));
            }
        }
        if (ts.empty() || v[0] != ts.back()) ts.push_back(v[0]);
        if (ts.size() == 1) ss.push_back(v[1]);
        va.push_back(v[2]);
        vb.push_back(v[3]);
        vc.push_back(v[4]);
    }
    if (ts.size() < 2 || ss.size() < 3 || va.size() != ts.size() * ss.size())
        throw InvalidInput("fields file: inconsistent grid");
    auto grid = std::make_shared<const Grid2D>(TimeGrid(ts), ss);
    return {CoeffField(grid, std::move(va)), CoeffField(grid, std::move(vb)), CoeffField(grid, std::move(vc))};
}

}  // namespace cevhedge
