#include "cevhedge/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "cevhedge/cev.hpp"
#include "cevhedge/errors.hpp"
#include "cevhedge/ncx2.hpp"
#include "cevhedge/parallel.hpp"

namespace cevhedge {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double black_scholes_call(double s, double k, double vol) {
    const double d1 = (std::log(s / k) + 0.5 * vol * vol) / vol;
    return s * normal_cdf(d1) - k * normal_cdf(d1 - vol);
}

double cev_call(const CevTransition& law, double s, double k) {
    const double w_k = law.w_of(k);
    const double nu = law.nu();
    const double lambda = law.lambda();
    try {
        const double itm_share = ncx2_sf(NoncentralChiSq(2.0 * nu + 2.0, lambda), w_k);
        const double itm_prob = ncx2_cdf(NoncentralChiSq(2.0 * nu, w_k), lambda);
        return std::max(s - k, s * itm_share - k * itm_prob);
    } catch (const NumericalError&) {
        return law.expect([k](double y) { return y > k ? y - k : 0.0; }, std::span<const double>(&k, 1));
    }
}

// Three-point nonuniform differences in divided-difference form (exact zero on constants).
double fd_first(double f0, double f1, double f2, double h0, double h1) {
    return (h0 * (f2 - f1) / h1 + h1 * (f1 - f0) / h0) / (h0 + h1);
}

double fd_second(double f0, double f1, double f2, double h0, double h1) {
    return 2.0 * ((f2 - f1) / h1 - (f1 - f0) / h0) / (h0 + h1);
}

void check_time(const OptionSpec& option, double t) {
    if (!(t >= 0.0 && t <= option.maturity) || !std::isfinite(t)) {
        std::ostringstream os;
        os << "time " << t << " outside [0, " << option.maturity << "]";
        throw InvalidInput(os.str());
    }
}

}  // namespace

OptionSpec OptionSpec::call(double strike, double maturity) {
    OptionSpec o;
    o.kind = PayoffKind::Call;
    o.strike = strike;
    o.maturity = maturity;
    o.validate();
    return o;
}

OptionSpec OptionSpec::put(double strike, double maturity) {
    OptionSpec o = call(strike, maturity);
    o.kind = PayoffKind::Put;
    return o;
}

OptionSpec OptionSpec::custom_payoff(std::function<double(double)> g, double maturity,
                                     std::vector<double> kinks) {
    OptionSpec o;
    o.kind = PayoffKind::Custom;
    o.strike = 0.0;
    o.maturity = maturity;
    o.custom = std::move(g);
    o.kinks = std::move(kinks);
    o.validate();
    return o;
}

OptionSpec OptionSpec::affine_payoff(double alpha, double beta, double maturity) {
    OptionSpec o = custom_payoff([alpha, beta](double s) { return alpha + beta * s; }, maturity);
    o.affine = std::make_pair(alpha, beta);
    return o;
}

void OptionSpec::validate() const {
    if (!(maturity > 0.0) || !std::isfinite(maturity)) throw InvalidInput("maturity must be positive");
    if (kind == PayoffKind::Custom) {
        if (!custom) throw InvalidInput("custom payoff needs a function");
        if (affine && (affine->first < 0.0 || affine->second < 0.0))
            throw InvalidInput("affine payoff alpha + beta S must be nonnegative on S >= 0");
    } else if (!(strike >= 0.0) || !std::isfinite(strike)) {
        throw InvalidInput("strike must be nonnegative");
    }
}

double OptionSpec::payoff(double s) const {
    switch (kind) {
        case PayoffKind::Call: return s > strike ? s - strike : 0.0;
        case PayoffKind::Put: return s < strike ? strike - s : 0.0;
        case PayoffKind::Custom: return custom(s);
    }
    return 0.0;
}

double OptionSpec::payoff_slope(double s) const {
    switch (kind) {
        case PayoffKind::Call: return s > strike ? 1.0 : (s == strike ? 0.5 : 0.0);
        case PayoffKind::Put: return s < strike ? -1.0 : (s == strike ? -0.5 : 0.0);
        case PayoffKind::Custom: {
            if (affine) return affine->second;
            const double h = 1e-6 * std::max(1.0, std::abs(s));
            const double lo = std::max(0.0, s - h);
            return (custom(s + h) - custom(lo)) / (s + h - lo);
        }
    }
    return 0.0;
}

std::optional<std::pair<double, double>> OptionSpec::affine_coefficients() const {
    if (kind == PayoffKind::Custom) return affine;
    if (strike == 0.0) {
        if (kind == PayoffKind::Call) return std::make_pair(0.0, 1.0);
        return std::make_pair(0.0, 0.0);
    }
    return std::nullopt;
}

double price_european(const OptionSpec& option, const ModelParams& params, double t, double s) {
    params.validate();
    option.validate();
    check_time(option, t);
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidInput("spot must be nonnegative");
    if (const auto ab = option.affine_coefficients()) return ab->first + ab->second * s;
    const double tau = option.maturity - t;
    if (tau <= 0.0 || s == 0.0) return option.payoff(s);

    const CevTransition law(params, s, tau);
    if (option.kind == PayoffKind::Custom) {
        return law.expect(option.custom, option.kinks);
    }
    const double k = option.strike;
    double call;
    if (law.lognormal()) {
        call = black_scholes_call(s, k, params.sigma * std::sqrt(tau));
    } else {
        call = cev_call(law, s, k);
    }
    if (option.kind == PayoffKind::Call) return std::max(0.0, call);
    return std::max(0.0, call - s + k);
}

double delta(const OptionSpec& option, const ModelParams& params, double t, double s) {
    params.validate();
    option.validate();
    check_time(option, t);
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidInput("spot must be nonnegative");
    if (const auto ab = option.affine_coefficients()) return ab->second;
    const double tau = option.maturity - t;
    if (tau <= 0.0) return option.payoff_slope(s);

    const double scale = std::max(s, 1e-8);
    const double h = std::max(0.1 * params.sigma * std::pow(scale, 1.0 + params.gamma) * std::sqrt(tau),
                              1e-6 * scale);
    auto q = [&](double x) { return price_european(option, params, t, x); };

    if (s - 4.0 * h > 0.0) {
        auto d4 = [&](double step) {
            return (-q(s + 2.0 * step) + 8.0 * q(s + step) - 8.0 * q(s - step) + q(s - 2.0 * step)) /
                   (12.0 * step);
        };
        return (16.0 * d4(0.5 * h) - d4(h)) / 15.0;
    }
    const double f0 = q(s);
    auto d4 = [&](double step) {
        return (-25.0 * f0 + 48.0 * q(s + step) - 36.0 * q(s + 2.0 * step) + 16.0 * q(s + 3.0 * step) -
                3.0 * q(s + 4.0 * step)) /
               (12.0 * step);
    };
    return (16.0 * d4(0.5 * h) - d4(h)) / 15.0;
}

PriceSurface build_price_surface(const OptionSpec& option, const ModelParams& params,
                                 std::shared_ptr<const Grid2D> grid, unsigned threads) {
    params.validate();
    option.validate();
    if (!grid) throw InvalidInput("build_price_surface: null grid");
    const TimeGrid& times = grid->times();
    if (times.t0() < 0.0 || times.T() > option.maturity * (1.0 + 1e-12))
        throw InvalidInput("build_price_surface: time grid must lie within [0, maturity]");

    PriceSurface surface{grid, CoeffField(grid), CoeffField(grid), option, params};
    const std::size_t ns = grid->n_s();
    const auto spots = grid->spots();
    parallel_for(grid->size(), threads, [&](std::size_t k) {
        const std::size_t it = k / ns;
        const std::size_t is = k % ns;
        const double t = std::min(times[it], option.maturity);
        surface.q(it, is) = price_european(option, params, t, spots[is]);
        surface.theta(it, is) = delta(option, params, t, spots[is]);
    });
    return surface;
}

double pde_residual_q(const OptionSpec& option, const ModelParams& params, const Grid2D& grid,
                      unsigned threads) {
    params.validate();
    const TimeGrid& times = grid.times();
    const std::size_t nt = grid.n_t();
    const std::size_t ns = grid.n_s();
    if (nt < 3) throw InvalidInput("pde_residual_q needs at least three time nodes");
    const auto spots = grid.spots();
    std::vector<double> q(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t k) {
        const double t = std::min(times[k / ns], option.maturity);
        q[k] = price_european(option, params, t, spots[k % ns]);
    });
    double worst = 0.0;
    for (std::size_t it = 1; it + 1 < nt; ++it) {
        const double k0 = times[it] - times[it - 1];
        const double k1 = times[it + 1] - times[it];
        for (std::size_t is = 1; is + 1 < ns; ++is) {
            const double h0 = spots[is] - spots[is - 1];
            const double h1 = spots[is + 1] - spots[is];
            const double q_t = fd_first(q[grid.index(it - 1, is)], q[grid.index(it, is)],
                                        q[grid.index(it + 1, is)], k0, k1);
            const double q_ss = fd_second(q[grid.index(it, is - 1)], q[grid.index(it, is)],
                                          q[grid.index(it, is + 1)], h0, h1);
            worst = std::max(worst, std::abs(q_t + 0.5 * params.variance_rate(spots[is]) * q_ss));
        }
    }
    return worst;
}

GrowthBoundReport growth_bound_check(const PriceSurface& surface) {
    const Grid2D& grid = *surface.grid;
    const std::size_t nt = grid.n_t();
    const std::size_t ns = grid.n_s();
    const auto spots = grid.spots();
    const auto logs = grid.log_spots();
    const std::size_t upper_from = ns - std::max<std::size_t>(2, ns / 4);

    // Least-squares slope, over the upper quarter, of log M against log S where
    // M(S) = max_{S' <= S} |v(S')| is the growth envelope; decaying tails give 0.
    auto tail_slope = [&](const std::vector<double>& v) {
        std::vector<double> env(ns);
        double run = 0.0;
        for (std::size_t is = 0; is < ns; ++is) env[is] = run = std::max(run, std::abs(v[is]));
        double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
        for (std::size_t is = upper_from; is < ns; ++is) {
            const double a = env[is];
            if (!(a > 1e-300)) continue;
            const double y = std::log(a);
            sx += logs[is];
            sy += y;
            sxx += logs[is] * logs[is];
            sxy += logs[is] * y;
            n += 1;
        }
        if (n < 2) return 0.0;
        const double den = n * sxx - sx * sx;
        return den > 0 ? (n * sxy - sx * sy) / den : 0.0;
    };

    std::vector<std::vector<double>> theta_rows(nt), dtheta_rows(nt);
    double alpha = 0.0, beta = 0.0;
    for (std::size_t it = 0; it < nt; ++it) {
        const auto row = surface.theta.row(it);
        std::vector<double> th(row.begin(), row.end());
        std::vector<double> d(ns);
        for (std::size_t is = 0; is < ns; ++is) {
            if (is == 0) {
                d[is] = (th[1] - th[0]) / (spots[1] - spots[0]);
            } else if (is + 1 == ns) {
                d[is] = (th[is] - th[is - 1]) / (spots[is] - spots[is - 1]);
            } else {
                d[is] = fd_first(th[is - 1], th[is], th[is + 1], spots[is] - spots[is - 1],
                                 spots[is + 1] - spots[is]);
            }
        }
        alpha = std::max(alpha, tail_slope(th));
        if (it + 1 < nt) beta = std::max(beta, tail_slope(d));
        theta_rows[it] = std::move(th);
        dtheta_rows[it] = std::move(d);
    }

    double c = 0.0, c1 = 0.0;
    for (std::size_t it = 0; it < nt; ++it) {
        for (std::size_t is = 0; is < ns; ++is) {
            c = std::max(c, std::abs(theta_rows[it][is]) / (1.0 + std::pow(spots[is], alpha)));
            c1 = std::max(c1, std::abs(dtheta_rows[it][is]) / (1.0 + std::pow(spots[is], beta)));
        }
    }
    const bool ok = std::isfinite(c) && std::isfinite(c1) && alpha <= 4.0 && beta <= 4.0;
    return {c, alpha, c1, beta, ok};
}

void write_price_surface_csv(const PriceSurface& surface, std::ostream& out) {
    const Grid2D& grid = *surface.grid;
    out << "# cevhedge price_surface v1\n";
    out << "t,S,q,theta\n";
    out.precision(17);
    for (std::size_t it = 0; it < grid.n_t(); ++it) {
        for (std::size_t is = 0; is < grid.n_s(); ++is) {
            out << grid.times()[it] << ',' << grid.spots()[is] << ',' << surface.q(it, is) << ','
                << surface.theta(it, is) << '\n';
        }
    }
}

}  // namespace cevhedge
