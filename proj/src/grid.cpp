#include "cevhedge/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cevhedge/errors.hpp"

namespace cevhedge {

Grid2D::Grid2D(TimeGrid times, std::vector<double> spots, BoundaryPolicy policy)
    : times_(std::move(times)), spots_(std::move(spots)), policy_(policy) {
    if (spots_.size() < 3) throw InvalidInput("Grid2D needs at least three spot nodes");
    if (!(spots_.front() > 0.0)) throw InvalidInput("Grid2D needs s_min > 0");
    for (std::size_t i = 1; i < spots_.size(); ++i) {
        if (!(spots_[i] > spots_[i - 1]))
            throw InvalidInput("Grid2D spot nodes must be strictly increasing");
    }
    log_spots_.resize(spots_.size());
    std::transform(spots_.begin(), spots_.end(), log_spots_.begin(), [](double s) { return std::log(s); });
    const double dx = (log_spots_.back() - log_spots_.front()) / static_cast<double>(spots_.size() - 1);
    log_uniform_ = true;
    for (std::size_t i = 1; i < spots_.size(); ++i) {
        if (std::abs(log_spots_[i] - log_spots_[i - 1] - dx) > 1e-9 * dx) {
            log_uniform_ = false;
            break;
        }
    }
}

Grid2D Grid2D::log_spaced(TimeGrid times, double s_min, double s_max, std::size_t n_spots) {
    if (!(s_min > 0.0) || !(s_max > s_min))
        throw InvalidInput("Grid2D::log_spaced needs 0 < s_min < s_max");
    if (n_spots < 3) throw InvalidInput("Grid2D::log_spaced needs at least three nodes");
    std::vector<double> spots(n_spots);
    const double a = std::log(s_min);
    const double b = std::log(s_max);
    for (std::size_t i = 0; i < n_spots; ++i)
        spots[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n_spots - 1));
    spots.front() = s_min;
    spots.back() = s_max;
    return Grid2D(std::move(times), std::move(spots));
}

bool Grid2D::contains(double t, double s) const noexcept {
    return t >= times_.t0() && t <= times_.T() && s >= s_min() && s <= s_max();
}

GridPoint Grid2D::locate_clamped(double t, double s) const noexcept {
    t = std::clamp(t, times_.t0(), times_.T());
    s = std::clamp(s, s_min(), s_max());
    GridPoint p{};
    p.it = times_.locate(t);
    p.ft = (t - times_[p.it]) / times_.dt(p.it);
    const double x = std::log(s);
    auto itx = std::upper_bound(log_spots_.begin(), log_spots_.end(), x);
    std::size_t is = itx == log_spots_.begin() ? 0 : static_cast<std::size_t>(itx - log_spots_.begin()) - 1;
    is = std::min(is, n_s() - 2);
    p.is = is;
    p.fs = std::clamp((x - log_spots_[is]) / (log_spots_[is + 1] - log_spots_[is]), 0.0, 1.0);
    p.ft = std::clamp(p.ft, 0.0, 1.0);
    return p;
}

GridPoint Grid2D::locate(double t, double s) const {
    const double tol_t = 1e-12 * std::max(1.0, std::abs(times_.T()));
    const double tol_s = 1e-12 * s_max();
    if (t < times_.t0() - tol_t || t > times_.T() + tol_t || s < s_min() - tol_s || s > s_max() + tol_s) {
        std::ostringstream os;
        os << "query (t=" << t << ", S=" << s << ") outside grid [" << times_.t0() << ", "
           << times_.T() << "] x [" << s_min() << ", " << s_max() << "]";
        throw OutOfGrid(os.str());
    }
    return locate_clamped(t, s);
}

bool Grid2D::operator==(const Grid2D& other) const {
    return times_ == other.times_ && spots_ == other.spots_ && policy_ == other.policy_;
}

CoeffField::CoeffField(std::shared_ptr<const Grid2D> grid, double fill)
    : grid_(std::move(grid)), values_(grid_->size(), fill) {}

CoeffField::CoeffField(std::shared_ptr<const Grid2D> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) throw InvalidInput("CoeffField: value count does not match grid");
}

double CoeffField::at(const GridPoint& p) const noexcept {
    const std::size_t ns = grid_->n_s();
    const double* r0 = values_.data() + p.it * ns + p.is;
    const double* r1 = r0 + ns;
    const double v0 = r0[0] + p.fs * (r0[1] - r0[0]);
    if (p.ft == 0.0) return v0;
    const double v1 = r1[0] + p.fs * (r1[1] - r1[0]);
    return v0 + p.ft * (v1 - v0);
}

double CoeffField::min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }
double CoeffField::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }
double CoeffField::sup_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace cevhedge
