#include "doctest.h"

#include <cmath>
#include <random>

#include "cevhedge/cev.hpp"
#include "cevhedge/errors.hpp"
#include "oracles.hpp"

using namespace cevhedge;

namespace {

std::vector<double> terminal(const std::vector<SamplePath>& paths) {
    std::vector<double> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(p.spots.back());
    return out;
}

}  // namespace

TEST_CASE("vanishing volatility leaves paths flat") {
    const ModelParams p{1e-12, -0.25, 0.01};
    const auto paths = simulate_paths(p, 100.0, TimeGrid::uniform(0.0, 1.0, 50), 10, 1);
    for (const auto& path : paths)
        for (double s : path.spots) CHECK(s == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("lognormal paths: martingale and second moment") {
    const ModelParams p{0.2, 0.0, 0.01};
    const auto st = terminal(simulate_paths(p, 100.0, TimeGrid::uniform(0.0, 1.0, 50), 100000, 9, 4));
    const auto m = oracle::mean_se(st);
    CHECK(std::abs(m.mean - 100.0) < 3.5 * m.se);
    std::vector<double> sq;
    for (double s : st) sq.push_back(s * s);
    const auto m2 = oracle::mean_se(sq);
    CHECK(std::abs(m2.mean - 1e4 * std::exp(0.04)) < 3.5 * m2.se);
}

TEST_CASE("absorbed paths stay at the origin") {
    const ModelParams p{2.0, -0.5, 0.01};
    const auto paths = simulate_paths(p, 1.0, TimeGrid::uniform(0.0, 1.0, 100), 2000, 3);
    std::size_t absorbed = 0;
    for (const auto& path : paths) {
        if (!path.absorbed_at) continue;
        ++absorbed;
        for (std::size_t i = *path.absorbed_at; i < path.spots.size(); ++i) CHECK(path.spots[i] == 0.0);
    }
    CHECK(absorbed > 0);
}

TEST_CASE("transition law: density integrates to one minus the atom") {
    for (auto [sigma, gamma, s, dt] : {std::tuple{0.2, -0.25, 100.0, 1.0}, std::tuple{2.0, -0.5, 1.0, 0.5},
                                       std::tuple{0.6, -0.1, 5.0, 2.0}, std::tuple{0.2, -0.45, 100.0, 0.01}}) {
        const ModelParams p{sigma, gamma, 0.01};
        const CevTransition tr(p, s, dt);
        const double atom = tr.absorption_probability();
        const double sd = sigma * std::pow(s, 1 + gamma) * std::sqrt(dt);
        const double mass = oracle::integrate([&](double y) { return tr.density(y); },
                                              {0.0, std::max(0.0, s - 3 * sd), s, s + 3 * sd, s + 10 * sd, s + 60 * sd});
        CAPTURE(gamma);
        CHECK(mass + atom == doctest::Approx(1.0).epsilon(1e-7));
        CHECK(tr.cdf(0.0) == doctest::Approx(atom).epsilon(1e-12));
        const double y = s * 1.1;
        CHECK(tr.cdf(y) + tr.sf(y) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(transition_density(p, s, y, dt) == doctest::Approx(tr.density(y)).epsilon(1e-12));
    }
}

TEST_CASE("absorption probability against Monte-Carlo") {
    const ModelParams p{2.0, -0.5, 0.01};
    const CevTransition tr(p, 1.0, 0.5);
    const auto xs = sample_transition_exact(p, 1.0, 0.5, 200000, 77);
    double zeros = 0.0;
    for (double x : xs) zeros += x == 0.0;
    const double q = tr.absorption_probability();
    const double phat = zeros / xs.size();
    CHECK(q > 0.05);
    CHECK(std::abs(phat - q) < 4.0 * std::sqrt(q * (1 - q) / xs.size()));
}

TEST_CASE("short horizons concentrate at the starting spot") {
    const ModelParams p{0.2, -0.25, 0.01};
    const CevTransition tr(p, 100.0, 1e-8);
    CHECK(tr.absorption_probability() < 1e-300);
    CHECK(tr.cdf(99.99) < 1e-12);
    CHECK(tr.sf(100.01) < 1e-12);
    CHECK(tr.cdf(100.0) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("tiny gamma is close to the lognormal law") {
    const ModelParams p{0.2, -1e-6, 0.01};
    const CevTransition tr(p, 100.0, 1.0);
    CHECK_FALSE(tr.lognormal());
    for (double y : {70.0, 100.0, 140.0}) {
        const double ln_cdf = oracle::norm_cdf((std::log(y / 100.0) + 0.02) / 0.2);
        CHECK(std::abs(tr.cdf(y) - ln_cdf) < 1e-4);
        CHECK(tr.density(y) == doctest::Approx(oracle::lognormal_density(100.0, y, 0.2, 1.0)).epsilon(1e-3));
    }
    const CevTransition ln(ModelParams{0.2, 0.0, 0.01}, 100.0, 1.0);
    CHECK(ln.lognormal());
    CHECK(ln.density(120.0) == doctest::Approx(oracle::lognormal_density(100.0, 120.0, 0.2, 1.0)).epsilon(1e-12));
}

TEST_CASE("spot power moments") {
    const ModelParams p{0.2, -0.25, 0.01};
    CHECK(spot_power_moment(p, 100.0, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(spot_power_moment(p, 100.0, 1.0, 1.0) == doctest::Approx(100.0).epsilon(1e-10));
    CHECK(spot_power_moment(p, 100.0, 0.0, 1.5) == doctest::Approx(1000.0).epsilon(1e-14));
    CHECK_THROWS_AS(spot_power_moment(p, 100.0, 1.0, -0.5), DomainError);
    // E[S^2] = s^2 + E int sigma^2 S^{1.5} dt exceeds s^2 by at least sigma^2 s^{1.5} (Jensen, S a martingale).
    const double m2 = spot_power_moment(p, 100.0, 1.0, 2.0);
    CHECK(m2 >= 1e4 + 0.04 * 1000.0);
    CHECK(m2 == doctest::Approx(CevTransition(p, 100.0, 1.0).expect([](double y) { return y * y; })).epsilon(1e-8));

    const auto xs = sample_transition_exact(p, 100.0, 1.0, 1000000, 5);
    std::vector<double> ys;
    ys.reserve(xs.size());
    for (double x : xs) ys.push_back(std::pow(x, 1.5));
    const auto m = oracle::mean_se(ys);
    CHECK(std::abs(m.mean - spot_power_moment(p, 100.0, 1.0, 1.5)) < 3.5 * m.se);

    const CevTransition tr(p, 100.0, 1.0);
    const double quad = tr.expect([](double y) { return std::pow(y, 1.5); });
    CHECK(spot_power_moment(p, 100.0, 1.0, 1.5) == doctest::Approx(quad).epsilon(1e-8));
}

TEST_CASE("exact sampler matches the transition cdf") {
    for (auto [sigma, gamma, s, dt] : {std::tuple{0.2, -0.25, 100.0, 1.0}, std::tuple{2.0, -0.5, 1.0, 0.5},
                                       std::tuple{0.2, 0.0, 100.0, 1.0}}) {
        const ModelParams p{sigma, gamma, 0.01};
        const CevTransition tr(p, s, dt);
        const auto xs = sample_transition_exact(p, s, dt, 200000, 13);
        CAPTURE(gamma);
        CHECK(oracle::kolmogorov_distance(xs, [&](double y) { return tr.cdf(y); }) < 0.01);
    }
}

TEST_CASE("tiny time step stays well defined") {
    const ModelParams p{0.2, -0.25, 0.01};
    const CevTransition tr(p, 100.0, 1e-8);
    const auto xs = sample_transition_exact(p, 100.0, 1e-8, 1000, 2);
    for (double x : xs) CHECK(std::abs(x - 100.0) < 0.1);
    CHECK(std::isfinite(tr.density(100.0)));
}

TEST_CASE("fine Euler scheme approaches the exact law") {
    const ModelParams p{0.2, -0.25, 0.01};
    const auto euler = terminal(simulate_paths(p, 100.0, TimeGrid::uniform(0.0, 1.0, 2048), 20000, 21, 4));
    const auto exact = sample_transition_exact(p, 100.0, 1.0, 20000, 22);
    CHECK(oracle::kolmogorov_distance_2(euler, exact) < 0.02);
}

TEST_CASE("simulation is deterministic in seed and independent of thread count") {
    const ModelParams p{0.3, -0.3, 0.01};
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 20);
    const auto a = simulate_paths(p, 50.0, g, 64, 8, 1);
    const auto b = simulate_paths(p, 50.0, g, 64, 8, 5);
    const auto c = simulate_paths(p, 50.0, g, 64, 9, 1);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].spots == b[i].spots);
        differs = differs || a[i].spots != c[i].spots;
    }
    CHECK(differs);
}

TEST_CASE("exact transition preserves the mean for random parameters") {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> ug(-0.5, 0.0), us(0.1, 1.0), uspot(1.0, 200.0), udt(0.01, 3.0);
    for (int i = 0; i < 40; ++i) {
        const ModelParams p{us(gen), ug(gen), 0.01};
        const double s = uspot(gen), dt = udt(gen);
        const CevTransition tr(p, s, dt);
        CAPTURE(p.gamma);
        CAPTURE(s);
        CHECK(tr.expect([](double y) { return y; }) == doctest::Approx(s).epsilon(1e-8));
        CHECK(spot_power_moment(p, s, dt, 1.0) == doctest::Approx(s).epsilon(1e-9));
    }
}
