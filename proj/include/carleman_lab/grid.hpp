#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace carleman_lab {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

enum class AxisRole { x0, x1, t, a, tau };

const char* role_name(AxisRole role);

// A point of (x, t, a, tau) space. Unused coordinates stay zero.
struct Point {
    Vec2 x{0.0, 0.0};
    double t = 0.0;
    double a = 0.0;
    double tau = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    double length() const { return hi - lo; }
};

// Omega: an axis-aligned box, optionally intersected with the unit ball.
struct SpatialDomain {
    std::vector<Interval> box;
    bool unit_ball_clip = false;

    int dim() const { return static_cast<int>(box.size()); }
    // Membership in the closure, with a small slack for nodes on the boundary.
    bool contains(const Vec2& x, double tol = 1e-12) const;
};

struct DomainSpec {
    SpatialDomain omega;
    double t_max = 1.0;
    double a_max = 1.0;
    double tau_min = 0.0;
    double tau_max = 1.0;

    int spatial_dim() const { return omega.dim(); }
    void validate() const;

    // (0,1)^n with T = a_max = 1 and tau in (0,1).
    static DomainSpec unit(int spatial_dim = 1);
};

struct Axis {
    AxisRole role = AxisRole::x0;
    double lo = 0.0;
    double hi = 1.0;
    int nodes = 3;
    double h = 0.5;

    double coord(int i) const { return i == nodes - 1 ? hi : lo + h * i; }
};

Axis make_axis(AxisRole role, double lo, double hi, int nodes);

// Tensor grid. Axes are stored in role order (x0, x1, t, a, tau); the last
// axis varies fastest in the flat layout.
class Grid {
public:
    static constexpr int max_rank = 5;
    using Index = std::array<int, max_rank>;

    explicit Grid(std::vector<Axis> axes);

    int rank() const { return static_cast<int>(axes_.size()); }
    std::size_t size() const { return size_; }
    const Axis& axis(int k) const { return axes_[k]; }
    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t stride(int k) const { return strides_[k]; }

    int find(AxisRole role) const { return slot_[static_cast<int>(role)]; }
    bool has(AxisRole role) const { return find(role) >= 0; }
    int spatial_dim() const;

    Index unravel(std::size_t flat) const;
    std::size_t ravel(const Index& idx) const;
    Point point(const Index& idx) const;
    Point point(std::size_t flat) const { return point(unravel(flat)); }

    // True if idx lies within `layers` nodes of a face of any axis.
    bool near_face(const Index& idx, int layers) const;

    Grid without(AxisRole role) const;
    Grid spatial_only() const;
    bool same_layout(const Grid& other) const;

private:
    std::vector<Axis> axes_;
    std::array<std::size_t, max_rank> strides_{};
    std::array<int, 5> slot_{-1, -1, -1, -1, -1};
    std::size_t size_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

// counts: one entry for all axes, or one per axis (x..., t, a, tau). For
// n = 2 a four-entry list applies its first count to both x axes.
GridPtr build_grid(const DomainSpec& spec, const std::vector<int>& counts);

// Grid over (x..., a, tau): one time slice of a space-time grid.
GridPtr state_grid(const Grid& full);

class Field {
public:
    Field() = default;
    Field(GridPtr grid, double fill = 0.0, std::string label = {});
    Field(GridPtr grid, std::vector<double> values, std::string label = {});

    static Field sample(GridPtr grid, const std::function<double(const Point&)>& f,
                        std::string label = {});

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    const std::string& label() const { return label_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool all_finite() const;
    void require_finite(std::string_view context) const;
    double max_abs() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
    std::string label_;
};

// Tensor trapezoid weight of one node.
double trapezoid_weight(const Grid& grid, const Grid::Index& idx);
std::vector<double> trapezoid_weights(const Grid& grid);
double integrate(const Field& f);
double l2_norm(const Field& f);

}  // namespace carleman_lab
