#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "cevhedge/model.hpp"
#include "cevhedge/rng.hpp"

namespace cevhedge {

/// One simulated trajectory on a TimeGrid. Once absorbed at the origin the
/// path stays at zero.
struct SamplePath {
    std::vector<double> spots;
    std::optional<std::size_t> absorbed_at;
};

/// Euler-Maruyama step of dS = sigma S^{1+gamma} dW; a nonpositive result is
/// clamped to 0 (absorbed).
inline double euler_step(const ModelParams& p, double s, double dt, double z) noexcept {
    if (s <= 0.0) return 0.0;
    const double next = s + p.sigma * std::pow(s, 1.0 + p.gamma) * std::sqrt(dt) * z;
    return next > 0.0 ? next : 0.0;
}

/// Paths for stream indices [0, n_paths); path i draws from CounterRng(seed, i).
std::vector<SamplePath> simulate_paths(const ModelParams& params, double s0, const TimeGrid& grid,
                                       std::size_t n_paths, std::uint64_t seed,
                                       unsigned threads = 1);

/// Exact law of S_{t+dt} given S_t = s.
///
/// For gamma < 0 write nu = -1/(2 gamma), lambda = s^{-2gamma} / (gamma^2 sigma^2 dt) and
/// W = lambda (S_{t+dt}/s)^{-2gamma}. Then W = 0 (absorption) with probability
/// Q(nu, lambda/2), and otherwise W has density f_{df=2nu+2, ncp=w}(lambda), a
/// noncentral chi-square density read in its noncentrality argument. Equivalently
/// P(S_{t+dt} > y) = F_{df=2nu, ncp=w(y)}(lambda).
/// For |gamma| < kLognormalGamma the law is lognormal.
class CevTransition {
public:
    CevTransition(const ModelParams& params, double s, double dt);

    bool lognormal() const noexcept { return lognormal_; }
    double spot() const noexcept { return s_; }
    double dt() const noexcept { return dt_; }
    double nu() const noexcept { return nu_; }
    double lambda() const noexcept { return lambda_; }

    double absorption_probability() const;
    /// Density per unit spot of the continuous part (y > 0).
    double density(double y) const;
    /// P(S_{t+dt} <= y), including the atom at 0.
    double cdf(double y) const;
    /// P(S_{t+dt} > y).
    double sf(double y) const;

    /// E[g(S_{t+dt})] by adaptive Gauss-Kronrod quadrature (atom included);
    /// `kinks` are spot levels where g is not smooth.
    double expect(const std::function<double(double)>& g, std::span<const double> kinks = {}) const;

    double w_of(double y) const;
    double s_of(double w) const;

    template <class Rng>
    double sample(Rng& rng) const {
        if (lognormal_) {
            std::normal_distribution<double> n01;
            const double v = vol_;
            return s_ * std::exp(-0.5 * v * v + v * n01(rng));
        }
        const double m = 0.5 * lambda_;
        const double e0 = std::gamma_distribution<double>(nu_, 1.0)(rng);
        if (e0 >= m) return 0.0;
        const long long j = std::poisson_distribution<long long>(m - e0)(rng);
        const double w = 2.0 * std::gamma_distribution<double>(static_cast<double>(j) + 1.0, 1.0)(rng);
        return s_of(w);
    }

private:
    double density_w(double w) const;

    double s_;
    double dt_;
    double gamma_;
    bool lognormal_;
    double vol_ = 0.0;     // sigma sqrt(dt), lognormal case
    double nu_ = 0.0;
    double lambda_ = 0.0;
};

/// CEV transition density per unit spot. Requires s_t, s_u, dt > 0.
double transition_density(const ModelParams& params, double s_t, double s_u, double dt);

/// E[S_{t+dt}^p | S_t = s_t]. For gamma < 0:
///   E[S^p] = s^p E[(X/lambda)^{(p-1)nu}],  X ~ ncx2(2nu+2, lambda).
/// Negative p diverges when the origin carries mass (DomainError).
double spot_power_moment(const ModelParams& params, double s_t, double dt, double p);

/// n i.i.d. draws of S_{t+dt}; draw i uses CounterRng(seed, i).
std::vector<double> sample_transition_exact(const ModelParams& params, double s_t, double dt,
                                            std::size_t n, std::uint64_t seed);

}  // namespace cevhedge
