#include "carleman_lab/weight.hpp"

#include <cmath>

#include "carleman_lab/errors.hpp"

namespace carleman_lab {

WeightFunction ramp_weight(double slope, double curvature, double anchor, int spatial_dim) {
    WeightFunction w;
    w.name = "ramp";
    w.spatial_dim = spatial_dim;
    w.value = [=](const Vec2& x) {
        const double z = x[0] - anchor;
        return slope * z - 0.5 * curvature * z * z;
    };
    w.gradient = [=](const Vec2& x) { return Vec2{slope - curvature * (x[0] - anchor), 0.0}; };
    w.hessian = [=](const Vec2&) { return Mat2{{{-curvature, 0.0}, {0.0, 0.0}}}; };
    return w;
}

WeightFunction bowl_weight(int spatial_dim) {
    WeightFunction w;
    w.name = "bowl";
    w.spatial_dim = spatial_dim;
    const bool two = spatial_dim == 2;
    w.value = [two](const Vec2& x) { return 1.0 - x[0] * x[0] - (two ? x[1] * x[1] : 0.0); };
    w.gradient = [two](const Vec2& x) { return Vec2{-2.0 * x[0], two ? -2.0 * x[1] : 0.0}; };
    w.hessian = [two](const Vec2&) { return Mat2{{{-2.0, 0.0}, {0.0, two ? -2.0 : 0.0}}}; };
    return w;
}

void CarlemanWeight::validate() const {
    if (!d.value || !d.gradient || !d.hessian) throw InputError("weight base is incomplete");
    if (!(lambda > 0.0)) throw InputError("lambda must be positive");
    if (!(s >= 0.0)) throw InputError("s must be non-negative");
    if (!(beta_w >= 0.0)) throw InputError("beta_w must be non-negative");
}

double CarlemanWeight::offset2(const Point& p) const {
    const double dt = p.t - center[0], da = p.a - center[1], ds = p.tau - center[2];
    return dt * dt + da * da + ds * ds;
}

double CarlemanWeight::phi(const Point& p) const { return std::exp(lambda * psi(p)); }

double CarlemanWeight::l0_tilde_psi(const Point& p, double g) const {
    return -2.0 * beta_w * ((p.t - center[0]) + (p.a - center[1]) + g * (p.tau - center[2]));
}

WeightValue eval_weight(const CarlemanWeight& w, const Point& p) {
    const double psi = w.psi(p);
    return {psi, std::exp(w.lambda * psi)};
}

}  // namespace carleman_lab
