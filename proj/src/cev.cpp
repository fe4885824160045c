#include "cevhedge/cev.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cevhedge/errors.hpp"
#include "cevhedge/ncx2.hpp"
#include "cevhedge/parallel.hpp"

namespace cevhedge {
namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Adaptive Gauss-Kronrod over consecutive breakpoints.
template <class F>
double integrate_pieces(F&& f, std::vector<double> cuts) {
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        total += GK::integrate(f, cuts[i], cuts[i + 1], 15, 1e-13);
    }
    return total;
}

}  // namespace

std::vector<SamplePath> simulate_paths(const ModelParams& params, double s0, const TimeGrid& grid,
                                       std::size_t n_paths, std::uint64_t seed, unsigned threads) {
    params.validate();
    if (!(s0 > 0.0)) throw InvalidInput("simulate_paths: s0 must be positive");
    if (grid.size() < 2) throw InvalidInput("simulate_paths: empty time grid");
    if (n_paths == 0) throw InvalidInput("simulate_paths: n_paths must be >= 1");

    std::vector<SamplePath> paths(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        CounterRng rng(seed, i);
        std::normal_distribution<double> n01;
        SamplePath& path = paths[i];
        path.spots.resize(grid.size());
        path.spots[0] = s0;
        for (std::size_t k = 0; k < grid.n_steps(); ++k) {
            const double z = n01(rng);
            const double s = path.spots[k];
            const double next = euler_step(params, s, grid.dt(k), z);
            path.spots[k + 1] = next;
            if (next == 0.0 && s > 0.0) path.absorbed_at = k + 1;
        }
    });
    return paths;
}

CevTransition::CevTransition(const ModelParams& params, double s, double dt)
    : s_(s), dt_(dt), gamma_(params.gamma), lognormal_(params.lognormal()) {
    params.validate();
    if (!(s > 0.0)) throw InvalidInput("CEV transition: spot must be positive");
    if (!(dt > 0.0)) throw InvalidInput("CEV transition: dt must be positive");
    if (lognormal_) {
        vol_ = params.sigma * std::sqrt(dt);
    } else {
        nu_ = -0.5 / gamma_;
        const double c = gamma_ * gamma_ * params.sigma * params.sigma;
        lambda_ = std::pow(s, -2.0 * gamma_) / (c * dt);
        if (!std::isfinite(lambda_))
            throw NumericalError("CEV transition: noncentrality overflow");
    }
}

double CevTransition::w_of(double y) const {
    return lambda_ * std::pow(y / s_, -2.0 * gamma_);
}

double CevTransition::s_of(double w) const {
    if (w <= 0.0) return 0.0;
    return s_ * std::exp(nu_ * std::log1p((w - lambda_) / lambda_));
}

double CevTransition::absorption_probability() const {
    if (lognormal_) return 0.0;
    return boost::math::gamma_q(nu_, 0.5 * lambda_);
}

double CevTransition::density_w(double w) const {
    if (w <= 0.0) return ncx2_pdf(NoncentralChiSq(2.0 * nu_ + 2.0, 0.0), lambda_);
    return ncx2_pdf(NoncentralChiSq(2.0 * nu_ + 2.0, w), lambda_);
}

double CevTransition::density(double y) const {
    if (!(y > 0.0)) return 0.0;
    if (lognormal_) {
        const double z = (std::log(y / s_) + 0.5 * vol_ * vol_) / vol_;
        return kInvSqrt2Pi * std::exp(-0.5 * z * z) / (y * vol_);
    }
    const double w = w_of(y);
    return density_w(w) * (-2.0 * gamma_) * w / y;
}

double CevTransition::sf(double y) const {
    if (y < 0.0) return 1.0;
    if (lognormal_) {
        if (y == 0.0) return 1.0;
        return normal_cdf(-(std::log(y / s_) + 0.5 * vol_ * vol_) / vol_);
    }
    const double w = w_of(y);
    try {
        return ncx2_cdf(NoncentralChiSq(2.0 * nu_, w), lambda_);
    } catch (const NumericalError&) {
        return expect([y](double x) { return x > y ? 1.0 : 0.0; }, std::span<const double>(&y, 1));
    }
}

double CevTransition::cdf(double y) const {
    if (y < 0.0) return 0.0;
    return 1.0 - sf(y);
}

double CevTransition::expect(const std::function<double(double)>& g,
                             std::span<const double> kinks) const {
    if (lognormal_) {
        const double v = vol_;
        auto integrand = [&](double z) {
            return g(s_ * std::exp(-0.5 * v * v + v * z)) * kInvSqrt2Pi * std::exp(-0.5 * z * z);
        };
        std::vector<double> cuts{-14.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 14.0};
        for (double k : kinks) {
            if (k > 0.0) {
                const double z = (std::log(k / s_) + 0.5 * v * v) / v;
                if (z > -14.0 && z < 14.0) cuts.push_back(z);
            }
        }
        return integrate_pieces(integrand, std::move(cuts));
    }

    const double mean = std::max(0.0, lambda_ - 2.0 * nu_ + 2.0);
    const double sd = 2.0 * std::sqrt(lambda_ + nu_ + 1.0) + 2.0;
    const double lo = std::max(0.0, mean - 14.0 * sd);
    const double hi = mean + 14.0 * sd + 100.0;
    std::vector<double> cuts{lo, hi};
    for (double k : {-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0}) {
        const double c = mean + k * sd;
        if (c > lo && c < hi) cuts.push_back(c);
    }
    for (double k : kinks) {
        if (k > 0.0) {
            const double c = w_of(k);
            if (c > lo && c < hi) cuts.push_back(c);
        }
    }
    auto integrand = [&](double w) {
        const double f = density_w(w);
        return f == 0.0 ? 0.0 : g(s_of(w)) * f;
    };
    const double atom = absorption_probability();
    return (atom > 0.0 ? g(0.0) * atom : 0.0) + integrate_pieces(integrand, std::move(cuts));
}

double transition_density(const ModelParams& params, double s_t, double s_u, double dt) {
    if (!(s_u > 0.0)) throw InvalidInput("transition_density: s_u must be positive");
    return CevTransition(params, s_t, dt).density(s_u);
}

double spot_power_moment(const ModelParams& params, double s_t, double dt, double p) {
    params.validate();
    if (!(s_t > 0.0)) throw InvalidInput("spot_power_moment: s_t must be positive");
    if (!(dt >= 0.0)) throw InvalidInput("spot_power_moment: dt must be nonnegative");
    if (!std::isfinite(p)) throw InvalidInput("spot_power_moment: exponent must be finite");
    if (dt == 0.0) return std::pow(s_t, p);
    if (p == 0.0) return 1.0;
    if (params.lognormal()) {
        const double v2 = params.sigma * params.sigma * dt;
        return std::pow(s_t, p) * std::exp(0.5 * p * (p - 1.0) * v2);
    }
    if (p < 0.0) {
        std::ostringstream os;
        os << "spot_power_moment: E[S^" << p << "] diverges (positive mass at the absorbing origin)";
        throw DomainError(os.str());
    }
    const CevTransition law(params, s_t, dt);
    const double nu = law.nu();
    const double lambda = law.lambda();
    const double r = (p - 1.0) * nu;
    double value;
    try {
        const double m = ncx2_moment_real(NoncentralChiSq(2.0 * nu + 2.0, lambda), r);
        value = std::exp(p * std::log(s_t) + std::log(m) - r * std::log(lambda));
    } catch (const NumericalError&) {
        value = law.expect([p](double y) { return std::pow(y, p); });
    }
    if (!std::isfinite(value)) throw NumericalError("spot_power_moment: overflow");
    return value;
}

std::vector<double> sample_transition_exact(const ModelParams& params, double s_t, double dt,
                                            std::size_t n, std::uint64_t seed) {
    const CevTransition law(params, s_t, dt);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng(seed, i);
        out[i] = law.sample(rng);
    }
    return out;
}

}  // namespace cevhedge
