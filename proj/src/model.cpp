#include "cevhedge/model.hpp"

#include <algorithm>
#include <string>

#include "cevhedge/errors.hpp"

namespace cevhedge {

void ModelParams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InvalidInput("sigma must be positive, got " + std::to_string(sigma));
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw InvalidInput("eps must be positive, got " + std::to_string(eps));
    if (!(gamma >= -0.5 && gamma <= 0.0))
        throw InvalidInput("gamma must lie in [-1/2, 0], got " + std::to_string(gamma));
}

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw InvalidInput("time grid needs at least two nodes");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!(nodes_[i] > nodes_[i - 1]))
            throw InvalidInput("time grid nodes must be strictly increasing");
    }
}

TimeGrid TimeGrid::uniform(double t0, double T, std::size_t n_steps) {
    if (n_steps == 0) throw InvalidInput("time grid needs n_steps >= 1");
    if (!(T > t0)) throw InvalidInput("time grid needs T > t0");
    std::vector<double> nodes(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i)
        nodes[i] = t0 + (T - t0) * static_cast<double>(i) / static_cast<double>(n_steps);
    nodes.back() = T;
    return TimeGrid(std::move(nodes));
}

TimeGrid TimeGrid::graded(double t0, double T, std::size_t n_steps, double power) {
    if (n_steps == 0) throw InvalidInput("time grid needs n_steps >= 1");
    if (!(T > t0)) throw InvalidInput("time grid needs T > t0");
    if (!(power >= 1.0)) throw InvalidInput("grading power must be >= 1");
    std::vector<double> nodes(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i) {
        const double u = 1.0 - static_cast<double>(i) / static_cast<double>(n_steps);
        nodes[i] = T - (T - t0) * std::pow(u, power);
    }
    nodes.front() = t0;
    nodes.back() = T;
    return TimeGrid(std::move(nodes));
}

std::size_t TimeGrid::locate(double t) const noexcept {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    std::size_t i = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
    return std::min(i, n_steps() - 1);
}

}  // namespace cevhedge
