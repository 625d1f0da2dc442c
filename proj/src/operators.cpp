#include "carleman_lab/operators.hpp"

#include <cmath>

#include "carleman_lab/errors.hpp"
#include "carleman_lab/stencil.hpp"

namespace carleman_lab {

namespace {

void require_dim(const Field& u, const CoefficientSet& c) {
    if (u.grid().spatial_dim() != c.spatial_dim)
        throw InputError("field and coefficients disagree on spatial dimension");
}

}  // namespace

Field apply_K(const Field& u, const CoefficientSet& c) {
    require_dim(u, c);
    const Grid& g = u.grid();
    const int n = c.spatial_dim;
    const auto& v = u.values();
    auto val = [&](std::size_t f) { return v[f]; };
    Field out(u.grid_ptr(), 0.0, "Ku");
    for (std::size_t f = 0; f < u.size(); ++f) {
        const Grid::Index idx = g.unravel(f);
        const Point p = g.point(idx);
        const Mat2 A = c.diffusion(p.x);
        const Vec2 b = c.drift(p);
        const double cr = c.reaction(p);
        double r = 0.0;
        for (int k = 0; k < n; ++k) {
            r += A[k][k] * stencil::d2_reflect(g, idx, f, k, val);
            r -= b[k] * stencil::d1_reflect(g, idx, f, k, val);
        }
        if (n == 2) r += (A[0][1] + A[1][0]) * stencil::d11_reflect(g, idx, f, 0, 1, val);
        r -= cr * v[f];
        if (!std::isfinite(r)) throw NumericalError("apply_K: coefficient evaluation non-finite");
        out[f] = r;
    }
    return out;
}

Field apply_L0_tilde(const Field& u, const CoefficientSet& c) {
    const Grid& g = u.grid();
    const int kt = g.find(AxisRole::t);
    const int ka = g.find(AxisRole::a);
    const int ks = g.find(AxisRole::tau);
    const auto& v = u.values();
    auto val = [&](std::size_t f) { return v[f]; };
    Field out(u.grid_ptr(), 0.0, "L0~u");
    for (std::size_t f = 0; f < u.size(); ++f) {
        const Grid::Index idx = g.unravel(f);
        double r = 0.0;
        if (kt >= 0) r += stencil::d1_onesided(g, idx, f, kt, val);
        if (ka >= 0) r += stencil::d1_onesided(g, idx, f, ka, val);
        if (ks >= 0) r += c.growth(g.axis(ks).coord(idx[ks])) * stencil::d1_onesided(g, idx, f, ks, val);
        out[f] = r;
    }
    out.require_finite("apply_L0_tilde");
    return out;
}

Field apply_L0(const Field& u, const CoefficientSet& c) {
    Field out = apply_L0_tilde(u, c);
    const Grid& g = u.grid();
    const int ks = g.find(AxisRole::tau);
    if (ks >= 0) {
        for (std::size_t f = 0; f < u.size(); ++f) {
            double tau = g.axis(ks).coord(g.unravel(f)[ks]);
            out[f] += c.growth_derivative(tau) * u[f];
        }
    }
    out.require_finite("apply_L0");
    return Field(u.grid_ptr(), std::move(out.values()), "L0u");
}

Field birth_integral(const Field& u, const CoefficientSet& c) {
    const Grid& g = u.grid();
    const int ka = g.find(AxisRole::a);
    const int ks = g.find(AxisRole::tau);
    if (ka < 0 || ks < 0) throw InputError("birth_integral needs a and tau axes");
    auto og = std::make_shared<const Grid>(g.without(AxisRole::a));
    const Axis& aa = g.axis(ka);
    const Axis& sa = g.axis(ks);
    Field out(og, 0.0, "birth");
    const int oks = og->find(AxisRole::tau);
    for (std::size_t o = 0; o < out.size(); ++o) {
        Grid::Index oi = og->unravel(o);
        const Point p = og->point(oi);
        // position in the source grid: same leading indices, a and tau varied
        Grid::Index si{};
        for (int k = 0, m = 0; k < g.rank(); ++k) {
            if (k == ka) continue;
            si[k] = oi[m++];
        }
        double sum = 0.0;
        for (int i = 0; i < aa.nodes; ++i) {
            const double a = aa.coord(i);
            const double wa = (i == 0 || i == aa.nodes - 1) ? 0.5 * aa.h : aa.h;
            si[ka] = i;
            for (int j = 0; j < sa.nodes; ++j) {
                const double ws = (j == 0 || j == sa.nodes - 1) ? 0.5 * sa.h : sa.h;
                si[ks] = j;
                const double beta = c.birth(p.x, a, sa.coord(oi[oks]), sa.coord(j));
                if (beta == 0.0) continue;
                sum += wa * ws * beta * u[g.ravel(si)];
            }
        }
        if (!std::isfinite(sum)) throw NumericalError("birth_integral: non-finite kernel");
        out[o] = sum;
    }
    return out;
}

Field spatial_derivative(const Field& u, int k) {
    const Grid& g = u.grid();
    if (k < 0 || k >= g.spatial_dim()) throw InputError("no such spatial axis");
    const auto& v = u.values();
    auto val = [&](std::size_t f) { return v[f]; };
    Field out(u.grid_ptr(), 0.0, "du");
    for (std::size_t f = 0; f < u.size(); ++f) out[f] = stencil::d1_reflect(g, g.unravel(f), f, k, val);
    return out;
}

}  // namespace carleman_lab
