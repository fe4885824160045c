#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "cevhedge/model.hpp"

namespace cevhedge {

/// Behaviour at s_min / s_max. `Linear` imposes a vanishing second derivative
/// in S, so boundary nodes only feel the source and killing terms.
enum class BoundaryPolicy { Linear };

/// Position of a (t, S) query inside a Grid2D: cell indices plus
/// interpolation weights in t and log S.
struct GridPoint {
    std::size_t it;
    double ft;
    std::size_t is;
    double fs;
};

/// Rectangular (t, S) grid. The origin is excluded: s_min > 0.
class Grid2D {
public:
    Grid2D(TimeGrid times, std::vector<double> spots,
           BoundaryPolicy policy = BoundaryPolicy::Linear);

    /// Geometrically spaced spot nodes.
    static Grid2D log_spaced(TimeGrid times, double s_min, double s_max, std::size_t n_spots);

    const TimeGrid& times() const noexcept { return times_; }
    std::span<const double> spots() const noexcept { return spots_; }
    std::span<const double> log_spots() const noexcept { return log_spots_; }
    BoundaryPolicy boundary_policy() const noexcept { return policy_; }

    std::size_t n_t() const noexcept { return times_.size(); }
    std::size_t n_s() const noexcept { return spots_.size(); }
    std::size_t size() const noexcept { return n_t() * n_s(); }
    std::size_t index(std::size_t it, std::size_t is) const noexcept { return it * n_s() + is; }

    double s_min() const noexcept { return spots_.front(); }
    double s_max() const noexcept { return spots_.back(); }
    /// True when the spot nodes are equally spaced in log S.
    bool log_uniform() const noexcept { return log_uniform_; }

    bool contains(double t, double s) const noexcept;
    /// Throws OutOfGrid when (t, s) lies outside the grid.
    GridPoint locate(double t, double s) const;
    /// Clamps (t, s) into the grid first.
    GridPoint locate_clamped(double t, double s) const noexcept;

    bool operator==(const Grid2D& other) const;

private:
    TimeGrid times_;
    std::vector<double> spots_;
    std::vector<double> log_spots_;
    BoundaryPolicy policy_;
    bool log_uniform_ = false;
};

/// Scalar field on a Grid2D, stored time-major.
class CoeffField {
public:
    CoeffField() = default;
    explicit CoeffField(std::shared_ptr<const Grid2D> grid, double fill = 0.0);
    CoeffField(std::shared_ptr<const Grid2D> grid, std::vector<double> values);

    const Grid2D& grid() const noexcept { return *grid_; }
    const std::shared_ptr<const Grid2D>& grid_ptr() const noexcept { return grid_; }

    double& operator()(std::size_t it, std::size_t is) noexcept { return values_[grid_->index(it, is)]; }
    double operator()(std::size_t it, std::size_t is) const noexcept { return values_[grid_->index(it, is)]; }

    std::span<double> row(std::size_t it) noexcept { return {values_.data() + it * grid_->n_s(), grid_->n_s()}; }
    std::span<const double> row(std::size_t it) const noexcept {
        return {values_.data() + it * grid_->n_s(), grid_->n_s()};
    }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// Bilinear in (t, log S).
    double at(const GridPoint& p) const noexcept;
    /// Throws OutOfGrid outside the grid.
    double interpolate(double t, double s) const { return at(grid_->locate(t, s)); }
    double interpolate_clamped(double t, double s) const noexcept { return at(grid_->locate_clamped(t, s)); }

    double min() const noexcept;
    double max() const noexcept;
    double sup_abs() const noexcept;

private:
    std::shared_ptr<const Grid2D> grid_;
    std::vector<double> values_;
};

}  // namespace cevhedge
