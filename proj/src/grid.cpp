#include "carleman_lab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "carleman_lab/errors.hpp"

namespace carleman_lab {

const char* role_name(AxisRole role) {
    switch (role) {
        case AxisRole::x0: return "x0";
        case AxisRole::x1: return "x1";
        case AxisRole::t: return "t";
        case AxisRole::a: return "a";
        case AxisRole::tau: return "tau";
    }
    return "?";
}

bool SpatialDomain::contains(const Vec2& x, double tol) const {
    double r2 = 0.0;
    for (int k = 0; k < dim(); ++k) {
        if (x[k] < box[k].lo - tol || x[k] > box[k].hi + tol) return false;
        r2 += x[k] * x[k];
    }
    if (unit_ball_clip && r2 > 1.0 + tol) return false;
    return true;
}

void DomainSpec::validate() const {
    if (omega.dim() < 1 || omega.dim() > 2)
        throw InputError("spatial_dim must be 1 or 2");
    for (const auto& iv : omega.box)
        if (!(iv.hi > iv.lo)) throw InputError("non-positive extent of Omega");
    if (!(t_max > 0.0)) throw InputError("non-positive extent: t_max must be > 0");
    if (!(a_max > 0.0)) throw InputError("non-positive extent: a_max must be > 0");
    if (!(tau_max > tau_min)) throw InputError("empty size interval");
    if (omega.unit_ball_clip) {
        // positive measure: some box point must lie strictly inside the ball
        Vec2 c{};
        for (int k = 0; k < omega.dim(); ++k)
            c[k] = std::clamp(0.0, omega.box[k].lo, omega.box[k].hi);
        double r2 = 0.0;
        for (int k = 0; k < omega.dim(); ++k) r2 += c[k] * c[k];
        if (r2 >= 1.0) throw InputError("Omega has zero measure");
    }
}

DomainSpec DomainSpec::unit(int spatial_dim) {
    DomainSpec s;
    s.omega.box.assign(spatial_dim, Interval{0.0, 1.0});
    return s;
}

Axis make_axis(AxisRole role, double lo, double hi, int nodes) {
    if (nodes < 3) throw InputError("node count < 3");
    if (!(hi > lo)) throw InputError("non-positive extent");
    Axis ax;
    ax.role = role;
    ax.lo = lo;
    ax.hi = hi;
    ax.nodes = nodes;
    ax.h = (hi - lo) / (nodes - 1);
    return ax;
}

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || rank() > max_rank) throw InputError("grid rank out of range");
    for (int k = 0; k < rank(); ++k) {
        int r = static_cast<int>(axes_[k].role);
        if (slot_[r] >= 0) throw InputError("duplicate grid axis");
        if (k > 0 && static_cast<int>(axes_[k - 1].role) > r)
            throw InputError("grid axes out of order");
        if (axes_[k].nodes < 3) throw InputError("node count < 3");
        slot_[r] = k;
    }
    size_ = 1;
    for (int k = rank() - 1; k >= 0; --k) {
        strides_[k] = size_;
        size_ *= static_cast<std::size_t>(axes_[k].nodes);
    }
}

int Grid::spatial_dim() const { return (has(AxisRole::x0) ? 1 : 0) + (has(AxisRole::x1) ? 1 : 0); }

Grid::Index Grid::unravel(std::size_t flat) const {
    Index idx{};
    for (int k = rank() - 1; k >= 0; --k) {
        std::size_t n = static_cast<std::size_t>(axes_[k].nodes);
        idx[k] = static_cast<int>(flat % n);
        flat /= n;
    }
    return idx;
}

std::size_t Grid::ravel(const Index& idx) const {
    std::size_t flat = 0;
    for (int k = 0; k < rank(); ++k) flat += strides_[k] * static_cast<std::size_t>(idx[k]);
    return flat;
}

Point Grid::point(const Index& idx) const {
    Point p;
    for (int k = 0; k < rank(); ++k) {
        double v = axes_[k].coord(idx[k]);
        switch (axes_[k].role) {
            case AxisRole::x0: p.x[0] = v; break;
            case AxisRole::x1: p.x[1] = v; break;
            case AxisRole::t: p.t = v; break;
            case AxisRole::a: p.a = v; break;
            case AxisRole::tau: p.tau = v; break;
        }
    }
    return p;
}

bool Grid::near_face(const Index& idx, int layers) const {
    for (int k = 0; k < rank(); ++k)
        if (idx[k] < layers || idx[k] >= axes_[k].nodes - layers) return true;
    return false;
}

Grid Grid::without(AxisRole role) const {
    std::vector<Axis> kept;
    for (const auto& ax : axes_)
        if (ax.role != role) kept.push_back(ax);
    return Grid(std::move(kept));
}

Grid Grid::spatial_only() const {
    std::vector<Axis> kept;
    for (const auto& ax : axes_)
        if (ax.role == AxisRole::x0 || ax.role == AxisRole::x1) kept.push_back(ax);
    return Grid(std::move(kept));
}

bool Grid::same_layout(const Grid& other) const {
    if (rank() != other.rank()) return false;
    for (int k = 0; k < rank(); ++k) {
        const Axis& p = axes_[k];
        const Axis& q = other.axes_[k];
        if (p.role != q.role || p.nodes != q.nodes || p.lo != q.lo || p.hi != q.hi) return false;
    }
    return true;
}

GridPtr build_grid(const DomainSpec& spec, const std::vector<int>& counts) {
    spec.validate();
    const int n = spec.spatial_dim();
    const int total = n + 3;
    std::vector<int> c;
    if (counts.size() == 1) {
        c.assign(total, counts[0]);
    } else if (static_cast<int>(counts.size()) == total) {
        c = counts;
    } else if (n == 2 && counts.size() == 4) {
        c = {counts[0], counts[0], counts[1], counts[2], counts[3]};
    } else {
        throw InputError("resolution needs 1 or " + std::to_string(total) + " node counts");
    }
    for (int v : c)
        if (v < 3) throw InputError("node count < 3");

    std::vector<Axis> axes;
    for (int k = 0; k < n; ++k)
        axes.push_back(make_axis(k == 0 ? AxisRole::x0 : AxisRole::x1, spec.omega.box[k].lo,
                                 spec.omega.box[k].hi, c[k]));
    axes.push_back(make_axis(AxisRole::t, 0.0, spec.t_max, c[n]));
    axes.push_back(make_axis(AxisRole::a, 0.0, spec.a_max, c[n + 1]));
    axes.push_back(make_axis(AxisRole::tau, spec.tau_min, spec.tau_max, c[n + 2]));
    return std::make_shared<const Grid>(std::move(axes));
}

GridPtr state_grid(const Grid& full) {
    return std::make_shared<const Grid>(full.without(AxisRole::t));
}

Field::Field(GridPtr grid, double fill, std::string label)
    : grid_(std::move(grid)), label_(std::move(label)) {
    if (!grid_) throw InputError("field without grid");
    values_.assign(grid_->size(), fill);
}

Field::Field(GridPtr grid, std::vector<double> values, std::string label)
    : grid_(std::move(grid)), values_(std::move(values)), label_(std::move(label)) {
    if (!grid_) throw InputError("field without grid");
    if (values_.size() != grid_->size()) throw InputError("field shape does not match grid");
}

Field Field::sample(GridPtr grid, const std::function<double(const Point&)>& f, std::string label) {
    Field out(grid, 0.0, std::move(label));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(grid->point(i));
    return out;
}

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Field::require_finite(std::string_view context) const {
    if (!all_finite())
        throw NumericalError(std::string(context) + ": non-finite value in field");
}

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double trapezoid_weight(const Grid& grid, const Grid::Index& idx) {
    double w = 1.0;
    for (int k = 0; k < grid.rank(); ++k) {
        const Axis& ax = grid.axis(k);
        w *= (idx[k] == 0 || idx[k] == ax.nodes - 1) ? 0.5 * ax.h : ax.h;
    }
    return w;
}

std::vector<double> trapezoid_weights(const Grid& grid) {
    std::vector<double> w(grid.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = trapezoid_weight(grid, grid.unravel(i));
    return w;
}

double integrate(const Field& f) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sum += trapezoid_weight(g, g.unravel(i)) * f[i];
    return sum;
}

double l2_norm(const Field& f) {
    const Grid& g = f.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sum += trapezoid_weight(g, g.unravel(i)) * f[i] * f[i];
    return std::sqrt(sum);
}

}  // namespace carleman_lab
