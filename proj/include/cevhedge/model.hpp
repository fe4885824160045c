#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace cevhedge {

/// |gamma| below this is treated as the lognormal (Black-Scholes) limit.
inline constexpr double kLognormalGamma = 1e-8;

/// CEV dynamics dS = sigma S^{1+gamma} dW (zero drift) with illiquidity cost
/// l(h) = (eps/2) h^2 per unit spot.
struct ModelParams {
    double sigma = 0.2;
    double gamma = -0.25;
    double eps = 0.01;

    /// Throws InvalidInput unless sigma > 0, eps > 0 and -1/2 <= gamma <= 0.
    void validate() const;

    bool lognormal() const noexcept { return std::abs(gamma) < kLognormalGamma; }

    /// Local variance rate sigma^2 S^{2+2gamma}; zero at S = 0.
    double variance_rate(double s) const noexcept {
        return s > 0.0 ? sigma * sigma * std::pow(s, 2.0 + 2.0 * gamma) : 0.0;
    }
};

/// Strictly increasing time nodes from t0 to T.
class TimeGrid {
public:
    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> nodes);

    static TimeGrid uniform(double t0, double T, std::size_t n_steps);
    /// Nodes t_i = T - (T - t0)(1 - i/n)^power; power > 1 clusters nodes near T.
    static TimeGrid graded(double t0, double T, std::size_t n_steps, double power);

    double t0() const noexcept { return nodes_.front(); }
    double T() const noexcept { return nodes_.back(); }
    std::size_t n_steps() const noexcept { return nodes_.size() - 1; }
    std::size_t size() const noexcept { return nodes_.size(); }
    double operator[](std::size_t i) const noexcept { return nodes_[i]; }
    double dt(std::size_t step) const noexcept { return nodes_[step + 1] - nodes_[step]; }
    std::span<const double> nodes() const noexcept { return nodes_; }

    /// Index i with nodes[i] <= t < nodes[i+1] (clamped to [0, n_steps-1]).
    std::size_t locate(double t) const noexcept;

    bool operator==(const TimeGrid&) const = default;

private:
    std::vector<double> nodes_;
};

}  // namespace cevhedge
