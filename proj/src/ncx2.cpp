#include "cevhedge/ncx2.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cevhedge/errors.hpp"

namespace cevhedge {
namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Above this noncentrality the density goes through the scaled Bessel function.
constexpr double kBesselNcp = 1e4;

[[noreturn]] void series_failure(const char* what, const NoncentralChiSq& d, double arg, long iters) {
    std::ostringstream os;
    os << what << ": series exceeded " << kNcx2IterationCap << " terms (df=" << d.df
       << ", ncp=" << d.ncp << ", arg=" << arg << ", iterations=" << iters << ")";
    throw NumericalError(os.str());
}

// Terms needed on both sides of the Poisson mode to reach the tolerance.
bool series_affordable(double half_ncp) {
    return 2.0 * (9.0 * std::sqrt(half_ncp) + 50.0) <= static_cast<double>(kNcx2IterationCap);
}

double log_poisson_weight(double m, double j) {
    return -m + j * std::log(m) - std::lgamma(j + 1.0);
}

// sum_j w_j P(df/2 + j, x/2)  (or Q when `upper`), walking outward from the Poisson mode.
double tail_series(const NoncentralChiSq& d, double x, bool upper) {
    if (!(x > 0.0)) return upper ? 1.0 : 0.0;
    if (std::isinf(x)) return upper ? 0.0 : 1.0;
    const double m = 0.5 * d.ncp;
    const double y = 0.5 * x;
    const double half_df = 0.5 * d.df;
    namespace bm = boost::math;
    if (m == 0.0) return upper ? bm::gamma_q(half_df, y) : bm::gamma_p(half_df, y);
    if (!series_affordable(m)) series_failure(upper ? "ncx2_sf" : "ncx2_cdf", d, x, 0);

    const double j0 = std::floor(m);
    const double w0 = std::exp(log_poisson_weight(m, j0));
    const double a0 = half_df + j0;
    const double g0 = upper ? bm::gamma_q(a0, y) : bm::gamma_p(a0, y);
    const double t0 = bm::gamma_p_derivative(a0 + 1.0, y);  // y^a e^{-y} / Gamma(a+1)
    const double tol = 0.5 * kNcx2Tolerance;

    double sum = w0 * g0;
    long iters = 0;

    double w = w0, g = g0, t = t0, a = a0;
    for (double j = j0 + 1.0;; j += 1.0) {
        g = upper ? g + t : std::max(0.0, g - t);
        t *= y / (a + 1.0);
        a += 1.0;
        w *= m / j;
        sum += w * g;
        if (++iters > kNcx2IterationCap) series_failure("ncx2 tail", d, x, iters);
        const double q = m / (j + 1.0);
        if (q < 1.0) {
            const double bound = w * (upper ? 1.0 : g) * q / (1.0 - q);
            if (bound < tol) break;
        }
    }

    w = w0, g = g0, t = t0, a = a0;
    for (double j = j0 - 1.0; j >= 0.0; j -= 1.0) {
        t *= a / y;
        a -= 1.0;
        g = upper ? std::max(0.0, g - t) : g + t;
        w *= (j + 1.0) / m;
        sum += w * g;
        if (++iters > kNcx2IterationCap) series_failure("ncx2 tail", d, x, iters);
        const double q = j / m;
        const double bound = w * (upper ? g : 1.0) * q / (1.0 - q);
        if (bound < tol) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

double log_central_pdf(double k, double x) {
    return (0.5 * k - 1.0) * std::log(0.5 * x) - 0.5 * x - kLn2 - std::lgamma(0.5 * k);
}

double pdf_series(const NoncentralChiSq& d, double x) {
    const double m = 0.5 * d.ncp;
    const double y = 0.5 * x;
    const double h = 0.5 * d.df;
    // Index of the dominant term: (j+1)(h+j) = m y.
    const double b = h + 1.0;
    const double disc = b * b - 4.0 * (h - m * y);
    const double jstar = std::max(0.0, std::floor(0.5 * (-b + std::sqrt(std::max(0.0, disc)))));

    const double log_t0 = log_poisson_weight(m, jstar) + log_central_pdf(d.df + 2.0 * jstar, x);
    const double t0 = std::exp(log_t0);
    if (t0 == 0.0) return 0.0;
    constexpr double rel = 1e-15;
    double sum = t0;
    long iters = 0;

    double t = t0;
    for (double j = jstar;; j += 1.0) {
        const double q = m * y / ((j + 1.0) * (h + j));
        t *= q;
        sum += t;
        if (++iters > kNcx2IterationCap) series_failure("ncx2_pdf", d, x, iters);
        const double qn = m * y / ((j + 2.0) * (h + j + 1.0));
        if (qn < 1.0 && !(t * qn / (1.0 - qn) > rel * sum)) break;
    }
    t = t0;
    for (double j = jstar; j >= 1.0; j -= 1.0) {
        const double r = j * (h + j - 1.0) / (m * y);
        t *= r;
        sum += t;
        if (++iters > kNcx2IterationCap) series_failure("ncx2_pdf", d, x, iters);
        const double rn = (j - 1.0) * (h + j - 2.0) / (m * y);
        if (rn < 1.0 && !(t * rn / (1.0 - rn) > rel * sum)) break;
    }
    return sum;
}

struct GslQuiet {
    GslQuiet() { gsl_set_error_handler_off(); }
};

}  // namespace

NoncentralChiSq::NoncentralChiSq(double df_, double ncp_) : df(df_), ncp(ncp_) {
    if (!(df > 0.0) || !std::isfinite(df)) throw InvalidInput("ncx2: df must be positive");
    if (!(ncp >= 0.0) || !std::isfinite(ncp)) throw InvalidInput("ncx2: ncp must be nonnegative");
}

double ncx2_log_pdf_bessel(const NoncentralChiSq& d, double x) {
    static const GslQuiet quiet;
    if (!(d.df >= 2.0) || !(d.ncp > 0.0) || !(x > 0.0))
        throw InvalidInput("ncx2_log_pdf_bessel needs df >= 2, ncp > 0, x > 0");
    const double nu = 0.5 * d.df - 1.0;
    const double z = std::sqrt(d.ncp * x);
    gsl_sf_result r;
    const int status = gsl_sf_bessel_Inu_scaled_e(nu, z, &r);
    if (status == GSL_EUNDRFLW || r.val <= 0.0) return -std::numeric_limits<double>::infinity();
    if (status != GSL_SUCCESS) {
        std::ostringstream os;
        os << "ncx2_log_pdf_bessel: scaled Bessel I failed (nu=" << nu << ", z=" << z
           << ", status=" << status << ")";
        throw NumericalError(os.str());
    }
    const double root_sum = std::sqrt(x) + std::sqrt(d.ncp);
    const double sq = (x - d.ncp) / root_sum;
    return -kLn2 - 0.5 * sq * sq + 0.5 * nu * std::log(x / d.ncp) + std::log(r.val);
}

double ncx2_pdf(const NoncentralChiSq& d, double x) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) {
        if (d.df < 2.0) return std::numeric_limits<double>::infinity();
        return d.df == 2.0 ? 0.5 * std::exp(-0.5 * d.ncp) : 0.0;
    }
    if (d.ncp == 0.0) return std::exp(log_central_pdf(d.df, x));
    if (d.df >= 2.0 && d.ncp > kBesselNcp) return std::exp(ncx2_log_pdf_bessel(d, x));
    if (series_affordable(0.5 * d.ncp)) return pdf_series(d, x);
    if (d.df >= 2.0) return std::exp(ncx2_log_pdf_bessel(d, x));
    series_failure("ncx2_pdf", d, x, 0);
}

double ncx2_cdf(const NoncentralChiSq& d, double x) { return tail_series(d, x, false); }

double ncx2_sf(const NoncentralChiSq& d, double x) { return tail_series(d, x, true); }

double ncx2_moment(const NoncentralChiSq& d, unsigned k) {
    std::vector<double> kappa(k + 1, 0.0);
    double fact = 1.0;  // (n-1)!
    for (unsigned n = 1; n <= k; ++n) {
        if (n > 1) fact *= static_cast<double>(n - 1);
        kappa[n] = std::ldexp(fact, static_cast<int>(n) - 1) * (d.df + n * d.ncp);
    }
    std::vector<double> mu(k + 1, 0.0);
    mu[0] = 1.0;
    for (unsigned n = 1; n <= k; ++n) {
        double binom = 1.0;  // C(n-1, i)
        double s = 0.0;
        for (unsigned i = 0; i < n; ++i) {
            s += binom * kappa[n - i] * mu[i];
            binom = binom * static_cast<double>(n - 1 - i) / static_cast<double>(i + 1);
        }
        mu[n] = s;
    }
    return mu[k];
}

double ncx2_moment_real(const NoncentralChiSq& d, double r) {
    const double h = 0.5 * d.df;
    if (!(r > -h)) {
        std::ostringstream os;
        os << "ncx2 moment of order " << r << " diverges for df=" << d.df;
        throw DomainError(os.str());
    }
    if (r == 0.0) return 1.0;
    const double m = 0.5 * d.ncp;
    const double scale = r * kLn2;
    auto log_central = [&](double a) { return scale + std::lgamma(a + r) - std::lgamma(a); };
    if (m == 0.0) return std::exp(log_central(h));
    if (!series_affordable(m)) series_failure("ncx2_moment_real", d, r, 0);

    constexpr double rel = 1e-15;
    const double j0 = std::floor(m);
    const double t0 = std::exp(log_poisson_weight(m, j0) + log_central(h + j0));
    double sum = t0;
    long iters = 0;

    double t = t0;
    for (double j = j0;; j += 1.0) {
        const double a = h + j;
        t *= (m / (j + 1.0)) * (a + r) / a;
        sum += t;
        if (++iters > kNcx2IterationCap) series_failure("ncx2_moment_real", d, r, iters);
        const double an = a + 1.0;
        const double q = (m / (j + 2.0)) * std::max(1.0, (an + r) / an);
        if (q < 1.0 && !(t * q / (1.0 - q) > rel * sum)) break;
    }
    t = t0;
    const double worst = r < 0.0 ? h / (h + r) : 1.0;
    for (double j = j0; j >= 1.0; j -= 1.0) {
        const double a = h + j - 1.0;  // index j-1
        t *= (j / m) * a / (a + r);
        sum += t;
        if (++iters > kNcx2IterationCap) series_failure("ncx2_moment_real", d, r, iters);
        const double q = ((j - 1.0) / m) * worst;
        if (q < 1.0 && !(t * q / (1.0 - q) > rel * sum)) break;
    }
    return sum;
}

double ncx2_holder_bound(const NoncentralChiSq& d, double r) {
    if (!(r > 0.0)) throw InvalidInput("ncx2_holder_bound needs r > 0");
    const unsigned n = static_cast<unsigned>(std::ceil(r));
    return std::pow(ncx2_moment(d, n), r / static_cast<double>(n));
}

}  // namespace cevhedge
