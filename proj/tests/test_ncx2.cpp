#include "doctest.h"

#include <cmath>
#include <random>
#include <string>

#include "cevhedge/errors.hpp"
#include "cevhedge/ncx2.hpp"
#include "cevhedge/rng.hpp"
#include "oracles.hpp"

using namespace cevhedge;

TEST_CASE("central chi-square edge cases") {
    const NoncentralChiSq d(2.0, 0.0);
    CHECK(d.mean() == 2.0);
    CHECK(ncx2_cdf(d, 0.0) == 0.0);
    CHECK(ncx2_sf(d, 0.0) == 1.0);
    CHECK(ncx2_pdf(d, -1.0) == 0.0);
    CHECK(ncx2_cdf(d, 2.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("first raw moment") {
    CHECK(ncx2_moment(NoncentralChiSq(3.5, 1.2), 1) == doctest::Approx(4.7).epsilon(1e-15));
    CHECK(ncx2_moment(NoncentralChiSq(3.5, 1.2), 0) == 1.0);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(NoncentralChiSq(0.0, 1.0), InvalidInput);
    CHECK_THROWS_AS(NoncentralChiSq(1.0, -0.1), InvalidInput);
    CHECK_THROWS_AS(ncx2_moment_real(NoncentralChiSq(3.0, 1.0), -1.5), DomainError);
    CHECK_THROWS_AS(ncx2_holder_bound(NoncentralChiSq(3.0, 1.0), 0.0), InvalidInput);
}

TEST_CASE("mean and variance identities from the cumulants") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> udf(0.1, 40.0), uncp(0.0, 500.0);
    for (int i = 0; i < 200; ++i) {
        const NoncentralChiSq d(udf(gen), uncp(gen));
        const double m1 = ncx2_moment(d, 1);
        const double m2 = ncx2_moment(d, 2);
        CHECK(std::abs(m1 - (d.df + d.ncp)) <= 1e-10 * (d.df + d.ncp));
        CHECK(std::abs(m2 - m1 * m1 - (2 * d.df + 4 * d.ncp)) <= 1e-10 * m2);
    }
}

TEST_CASE("third and fourth moments match skewness and kurtosis of the reference law") {
    for (auto [df, ncp] : {std::pair{1.5, 0.7}, std::pair{6.0, 20.0}, std::pair{0.5, 3.0}}) {
        const auto ref = oracle::ncx2(df, ncp);
        const double mu = boost::math::mean(ref);
        const double var = boost::math::variance(ref);
        const double sd = std::sqrt(var);
        const double m3 = boost::math::skewness(ref) * sd * sd * sd + 3 * mu * var + mu * mu * mu;
        const double c4 = boost::math::kurtosis(ref) * var * var;
        const double m4 = c4 + 4 * mu * (m3 - 3 * mu * var - mu * mu * mu) + 6 * mu * mu * var + mu * mu * mu * mu;
        const NoncentralChiSq d(df, ncp);
        CHECK(ncx2_moment(d, 3) == doctest::Approx(m3).epsilon(1e-10));
        CHECK(ncx2_moment(d, 4) == doctest::Approx(m4).epsilon(1e-10));
    }
}

TEST_CASE("pdf, cdf and sf agree with an independent implementation") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> udf(0.2, 30.0), uncp(0.0, 300.0), uq(0.001, 0.999);
    for (int i = 0; i < 150; ++i) {
        const double df = udf(gen), ncp = uncp(gen);
        const auto ref = oracle::ncx2(df, ncp);
        const double x = boost::math::quantile(ref, uq(gen));
        const NoncentralChiSq d(df, ncp);
        CAPTURE(df);
        CAPTURE(ncp);
        CAPTURE(x);
        CHECK(std::abs(ncx2_cdf(d, x) - boost::math::cdf(ref, x)) < 1e-11);
        CHECK(std::abs(ncx2_sf(d, x) - boost::math::cdf(boost::math::complement(ref, x))) < 1e-11);
        CHECK(ncx2_cdf(d, x) + ncx2_sf(d, x) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(ncx2_pdf(d, x) == doctest::Approx(boost::math::pdf(ref, x)).epsilon(1e-9));
    }
}

TEST_CASE("far tails stay accurate in absolute terms") {
    const NoncentralChiSq d(4.0, 2.0);
    const auto ref = oracle::ncx2(4.0, 2.0);
    for (double x : {1e-6, 1e-3, 60.0, 120.0}) {
        CHECK(std::abs(ncx2_cdf(d, x) - boost::math::cdf(ref, x)) < 1e-12);
        CHECK(std::abs(ncx2_sf(d, x) - boost::math::cdf(boost::math::complement(ref, x))) < 1e-12);
    }
}

TEST_CASE("Bessel form agrees with the series") {
    for (auto [df, ncp, x] : {std::tuple{2.0, 5.0, 3.0}, std::tuple{7.5, 120.0, 100.0}, std::tuple{3.0, 1e4, 1.02e4}}) {
        const NoncentralChiSq d(df, ncp);
        CHECK(std::exp(ncx2_log_pdf_bessel(d, x)) == doctest::Approx(ncx2_pdf(d, x)).epsilon(1e-10));
    }
}

TEST_CASE("huge noncentrality: Bessel route keeps the density normalized") {
    const NoncentralChiSq d(4.0, 1e13);
    const double sd = std::sqrt(d.variance());
    auto f = [&](double x) { return ncx2_pdf(d, x); };
    const double lo = d.mean() - 10 * sd, hi = d.mean() + 10 * sd;
    const double mass = oracle::integrate(f, {lo, d.mean() - 2 * sd, d.mean(), d.mean() + 2 * sd, hi});
    const double mean = oracle::integrate([&](double x) { return (x - d.mean()) * f(x); },
                                          {lo, d.mean() - 2 * sd, d.mean(), d.mean() + 2 * sd, hi});
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(mean) < 1e-6 * sd);
}

TEST_CASE("series cap raises a numerical error with diagnostics") {
    const NoncentralChiSq d(4.0, 1e13);
    try {
        (void)ncx2_cdf(d, 1e13);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("ncp=") != std::string::npos);
    }
    CHECK_THROWS_AS(ncx2_pdf(NoncentralChiSq(1.0, 1e13), 1e13), NumericalError);
}

TEST_CASE("cdf against a 1e7-sample Monte-Carlo estimate") {
    const NoncentralChiSq d(4.0, 2.0);
    const std::vector<double> xs{1.0, 3.0, 6.0, 10.0, 15.0};
    std::vector<double> hits(xs.size(), 0.0);
    const std::size_t n = 10'000'000;
    CounterRng rng(2024, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ncx2_sample(d, rng);
        for (std::size_t k = 0; k < xs.size(); ++k) hits[k] += x <= xs[k];
    }
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double p = hits[k] / n;
        const double se = std::sqrt(p * (1 - p) / n);
        CAPTURE(xs[k]);
        CHECK(std::abs(p - ncx2_cdf(d, xs[k])) < 3 * se);
    }
}

TEST_CASE("real-order moments") {
    const NoncentralChiSq d(3.0, 7.0);
    for (unsigned k = 1; k <= 4; ++k) CHECK(ncx2_moment_real(d, k) == doctest::Approx(ncx2_moment(d, k)).epsilon(1e-12));
    const auto ref = oracle::ncx2(3.0, 7.0);
    for (double r : {-1.2, -0.5, 0.3, 1.5, 2.7}) {
        // x = y^4 near the origin removes the integrable singularity for negative r.
        const double head = oracle::integrate(
            [&](double y) { return y > 0 ? 4 * std::pow(y, 4 * r + 3) * boost::math::pdf(ref, std::pow(y, 4)) : 0.0; },
            {0.0, 0.5, 1.0});
        const double q = head + oracle::integrate([&](double x) { return std::pow(x, r) * boost::math::pdf(ref, x); },
                                                  {1.0, 5.0, 10.0, 20.0, 40.0, 80.0, 200.0});
        CAPTURE(r);
        CHECK(ncx2_moment_real(d, r) == doctest::Approx(q).epsilon(1e-7));
        if (r > 0) CHECK(ncx2_holder_bound(d, r) >= ncx2_moment_real(d, r) * (1 - 1e-14));
    }
    CHECK(ncx2_moment_real(NoncentralChiSq(3.0, 0.0), 1.5) == doctest::Approx(std::exp(1.5 * std::log(2.0) + std::lgamma(3.0) - std::lgamma(1.5))));
}
