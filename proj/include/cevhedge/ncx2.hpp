#pragma once

#include <cstdint>
#include <random>

namespace cevhedge {

/// Noncentral chi-square law with real degrees of freedom `df` > 0 and
/// noncentrality `ncp` >= 0.
struct NoncentralChiSq {
    double df;
    double ncp;

    NoncentralChiSq(double df, double ncp);

    double mean() const noexcept { return df + ncp; }
    double variance() const noexcept { return 2.0 * df + 4.0 * ncp; }
};

/// Absolute tolerance of the Poisson-mixture series.
inline constexpr double kNcx2Tolerance = 1e-12;
/// Maximum number of series terms before a NumericalError is raised.
inline constexpr long kNcx2IterationCap = 1'000'000;

/// Density. Poisson-weighted central densities summed outward from the
/// dominant term. For df >= 2 and ncp > 1e4 the Bessel form with an
/// exponentially scaled I_nu is used instead.
double ncx2_pdf(const NoncentralChiSq& dist, double x);

/// Log-density through the Bessel representation
///   f(x) = 1/2 exp(-(x+ncp)/2) (x/ncp)^{(df-2)/4} I_{df/2-1}(sqrt(ncp x)).
/// Requires df >= 2, ncp > 0, x > 0.
double ncx2_log_pdf_bessel(const NoncentralChiSq& dist, double x);

/// Lower tail P(X <= x) and upper tail P(X > x), each summed directly.
double ncx2_cdf(const NoncentralChiSq& dist, double x);
double ncx2_sf(const NoncentralChiSq& dist, double x);

/// Integer raw moment E[X^k] from the cumulant form of the MGF derivatives:
/// kappa_n = 2^{n-1} (n-1)! (df + n ncp), mu'_n = sum_i C(n-1,i) kappa_{n-i} mu'_i.
double ncx2_moment(const NoncentralChiSq& dist, unsigned k);

/// Real-order raw moment E[X^r] via the Poisson mixture of central moments
/// 2^r Gamma(df/2 + j + r) / Gamma(df/2 + j). Finite iff r > -df/2; otherwise
/// DomainError.
double ncx2_moment_real(const NoncentralChiSq& dist, double r);

/// Hoelder majorant E[X^r] <= E[X^n]^{r/n} with n = ceil(r), for r > 0.
double ncx2_holder_bound(const NoncentralChiSq& dist, double r);

/// Draw: N ~ Poisson(ncp/2), X = 2 Gamma(df/2 + N).
template <class Rng>
double ncx2_sample(const NoncentralChiSq& dist, Rng& rng) {
    long long n = 0;
    if (dist.ncp > 0.0) n = std::poisson_distribution<long long>(0.5 * dist.ncp)(rng);
    std::gamma_distribution<double> g(0.5 * dist.df + static_cast<double>(n), 1.0);
    return 2.0 * g(rng);
}

}  // namespace cevhedge
