#include "carleman_lab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "carleman_lab/errors.hpp"
#include "carleman_lab/stencil.hpp"

namespace carleman_lab {

namespace {

double norm2(const Vec2& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1]); }

// Strict interior of a box, optionally clipped to the open unit ball.
bool open_contains(const SpatialDomain& dom, const Vec2& x) {
    double r2 = 0.0;
    for (int k = 0; k < dom.dim(); ++k) {
        if (!(x[k] > dom.box[k].lo && x[k] < dom.box[k].hi)) return false;
        r2 += x[k] * x[k];
    }
    return !dom.unit_ball_clip || r2 < 1.0;
}

// Lattice over the bounding box of dom, kept where the closure contains it.
std::vector<Vec2> lattice(const SpatialDomain& dom, int per_axis) {
    std::vector<Vec2> out;
    const int n = dom.dim();
    const int ny = n == 2 ? per_axis : 1;
    for (int i = 0; i < per_axis; ++i) {
        for (int j = 0; j < ny; ++j) {
            Vec2 x{0.0, 0.0};
            x[0] = dom.box[0].lo + dom.box[0].length() * i / (per_axis - 1);
            if (n == 2) x[1] = dom.box[1].lo + dom.box[1].length() * j / (per_axis - 1);
            if (dom.contains(x)) out.push_back(x);
        }
    }
    return out;
}

// Points on the boundary of dom: box faces inside the ball, sphere inside the box.
std::vector<Vec2> boundary_points(const SpatialDomain& dom, int per_face) {
    std::vector<Vec2> out;
    const int n = dom.dim();
    if (n == 1) {
        for (double c : {dom.box[0].lo, dom.box[0].hi}) {
            Vec2 x{c, 0.0};
            if (dom.contains(x)) out.push_back(x);
        }
        if (dom.unit_ball_clip) {
            for (double c : {-1.0, 1.0}) {
                Vec2 x{c, 0.0};
                if (dom.contains(x) && std::abs(c - dom.box[0].lo) > 1e-12 && std::abs(c - dom.box[0].hi) > 1e-12)
                    out.push_back(x);
            }
        }
        return out;
    }
    for (int k = 0; k < 2; ++k) {
        const int o = 1 - k;
        for (double c : {dom.box[k].lo, dom.box[k].hi}) {
            for (int i = 0; i < per_face; ++i) {
                Vec2 x{};
                x[k] = c;
                x[o] = dom.box[o].lo + dom.box[o].length() * i / (per_face - 1);
                if (dom.contains(x)) out.push_back(x);
            }
        }
    }
    if (dom.unit_ball_clip) {
        for (int i = 0; i < 4 * per_face; ++i) {
            const double th = 2.0 * M_PI * i / (4 * per_face);
            Vec2 x{std::cos(th), std::sin(th)};
            if (dom.contains(x)) out.push_back(x);
        }
    }
    return out;
}

Vec2 uniform_in(const SpatialDomain& dom, std::mt19937_64& rng, bool open) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int tries = 0; tries < 100000; ++tries) {
        Vec2 x{0.0, 0.0};
        for (int k = 0; k < dom.dim(); ++k) x[k] = dom.box[k].lo + dom.box[k].length() * u01(rng);
        if (open ? open_contains(dom, x) : dom.contains(x)) return x;
    }
    throw NumericalError("rejection sampling failed: empty domain");
}

std::array<double, 3> uniform_ball3(std::mt19937_64& rng, double radius) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        std::array<double, 3> r{u(rng), u(rng), u(rng)};
        if (r[0] * r[0] + r[1] * r[1] + r[2] * r[2] < 1.0) {
            for (double& v : r) v *= radius;
            return r;
        }
    }
}

constexpr int kMaxCounterexamples = 20;

}  // namespace

WeightBase weight_catalog(const std::string& kind, int spatial_dim) {
    if (spatial_dim != 1 && spatial_dim != 2) throw InputError("spatial_dim must be 1 or 2");
    const bool two = spatial_dim == 2;
    WeightBase b;
    b.name = kind;
    if (kind == "unit-ball") {
        b.d = bowl_weight(spatial_dim);
        b.omega1.box.assign(spatial_dim, Interval{-1.0, 1.0});
        b.omega1.unit_ball_clip = true;
        b.in_exceptional = [](const Vec2& x) { return x[0] * x[0] + x[1] * x[1] < 0.04; };
        b.exceptional_desc = "B(0, 0.2)";
        b.sup_norm = 1.0;
        return b;
    }
    if (kind == "unit-interval") {
        // the product of sines has critical points at the corners of the square
        if (two) throw InputError("unit-interval weight is one-dimensional");
        b.d.name = "sine";
        b.d.spatial_dim = 1;
        b.d.value = [](const Vec2& x) { return std::sin(M_PI * x[0]); };
        b.d.gradient = [](const Vec2& x) { return Vec2{M_PI * std::cos(M_PI * x[0]), 0.0}; };
        b.d.hessian = [](const Vec2& x) { return Mat2{{{-M_PI * M_PI * std::sin(M_PI * x[0]), 0.0}, {0.0, 0.0}}}; };
        b.omega1.box = {Interval{0.0, 1.0}};
        b.in_exceptional = [](const Vec2& x) { return std::abs(x[0] - 0.5) < 0.1; };
        b.exceptional_desc = "(0.4, 0.6)";
        b.sup_norm = 1.0;
        return b;
    }
    if (kind == "interval-extended") {
        if (two) throw InputError("interval-extended weight is one-dimensional");
        // x (L - x) e^{kx} peaks at xc; normalized to sup 1.
        const double L = 1.3, xc = 1.1;
        const double kap = (2.0 * xc - L) / (xc * (L - xc));
        const double M = xc * (L - xc) * std::exp(kap * xc);
        b.d.name = "interval-extended";
        b.d.spatial_dim = 1;
        b.d.value = [=](const Vec2& x) { return x[0] * (L - x[0]) * std::exp(kap * x[0]) / M; };
        b.d.gradient = [=](const Vec2& x) {
            const double z = x[0], q = z * (L - z);
            return Vec2{(L - 2.0 * z + kap * q) * std::exp(kap * z) / M, 0.0};
        };
        b.d.hessian = [=](const Vec2& x) {
            const double z = x[0], q = z * (L - z), q1 = L - 2.0 * z;
            const double v = (-2.0 + 2.0 * kap * q1 + kap * kap * q) * std::exp(kap * z) / M;
            return Mat2{{{v, 0.0}, {0.0, 0.0}}};
        };
        b.omega1.box = {Interval{0.0, L}};
        b.in_exceptional = [](const Vec2& x) { return x[0] > 1.05 && x[0] < 1.25; };
        b.exceptional_desc = "(1.05, 1.25)";
        b.sup_norm = 1.0;
        return b;
    }
    throw InputError("unsupported geometry '" + kind + "'");
}

WeightBaseCheck verify_weight_base(const WeightBase& base, int samples, std::uint64_t seed) {
    WeightBaseCheck out;
    std::mt19937_64 rng(seed);
    auto fail = [&](const std::string& what, const Vec2& x) {
        if (out.failures.size() < kMaxCounterexamples)
            out.failures.push_back(what + " at (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) + ")");
    };
    for (int i = 0; i < samples; ++i) {
        Vec2 x = uniform_in(base.omega1, rng, true);
        ++out.interior;
        if (!(base.d.value(x) > 0.0)) fail("d <= 0 inside Omega1", x);
        if (base.d.value(x) > base.sup_norm * (1.0 + 1e-12)) fail("d exceeds its sup norm", x);
        if (!base.in_exceptional(x)) {
            ++out.gradient;
            if (!(norm2(base.d.gradient(x)) > 0.0)) fail("grad d vanishes outside omega", x);
        }
    }
    const int per_face = std::max(2, samples / 8);
    for (const Vec2& x : boundary_points(base.omega1, per_face)) {
        ++out.boundary;
        if (std::abs(base.d.value(x)) > 1e-12) fail("d != 0 on the boundary of Omega1", x);
        ++out.gradient;
        if (!base.in_exceptional(x) && !(norm2(base.d.gradient(x)) > 0.0)) fail("grad d vanishes on the boundary", x);
    }
    return out;
}

double UCGeometry::offset2(const Point& p) const {
    const double dt = p.t - center[0], da = p.a - center[1], ds = p.tau - center[2];
    return dt * dt + da * da + ds * ds;
}

double UCGeometry::phi(const Point& p) const { return std::exp(lambda * psi(p)); }

bool UCGeometry::in_D(const Point& p) const { return omega().contains(p.x) && phi(p) > mu[0]; }

bool UCGeometry::in_target(const Point& p) const {
    return open_contains(omega0, p.x) && open_contains(omega(), p.x) && offset2(p) < eps * eps / N;
}

bool UCGeometry::near_gamma(const Vec2& x, double dist) const {
    return std::abs(x[gamma.axis] - gamma.coord) <= dist;
}

double UCGeometry::target_radius() const { return eps / std::sqrt(static_cast<double>(N)); }

CarlemanWeight UCGeometry::weight(double s) const {
    CarlemanWeight w;
    w.d = base.d;
    w.beta_w = beta_w;
    w.lambda = lambda;
    w.s = s;
    w.center = center;
    return w;
}

std::array<double, 4> level_values(double lambda, double dnorm, double beta_eps2, int N) {
    std::array<double, 4> mu{};
    for (int k = 1; k <= 4; ++k) mu[k - 1] = std::exp(lambda * ((k * dnorm - beta_eps2) / N));
    return mu;
}

namespace {

double min_d_on(const WeightBase& base, const SpatialDomain& omega0, const SpatialDomain& omega) {
    const int per_axis = omega0.dim() == 1 ? 2001 : 201;
    double dmin = std::numeric_limits<double>::infinity();
    int count = 0;
    for (const Vec2& x : lattice(omega0, per_axis)) {
        if (!omega.contains(x)) continue;
        ++count;
        dmin = std::min(dmin, base.d.value(x));
    }
    if (count == 0) throw InputError("Omega0 has no sampled points inside Omega");
    return dmin;
}

}  // namespace

int minimal_level_count(const WeightBase& base, const SpatialDomain& omega0, const SpatialDomain& omega) {
    const double dmin = min_d_on(base, omega0, omega);
    if (!(dmin > 0.0)) throw InputError("d must be positive on the closure of Omega0");
    const double q = 4.0 * base.sup_norm / dmin;
    return std::max(2, static_cast<int>(std::floor(q)) + 1);
}

UCGeometry build_uc_geometry(const WeightBase& base, const DomainSpec& domain, const SpatialDomain& omega0,
                             const GammaFace& gamma, double eps, std::optional<int> N, double lambda,
                             const std::array<double, 3>& center) {
    domain.validate();
    if (omega0.dim() != domain.spatial_dim()) throw InputError("Omega0 dimension differs from Omega");
    if (base.d.spatial_dim != domain.spatial_dim()) throw InputError("weight base dimension differs from Omega");
    if (!(eps > 0.0)) throw InputError("eps must be positive");
    if (!(lambda > 0.0)) throw InputError("lambda must be positive");
    if (gamma.axis < 0 || gamma.axis >= domain.spatial_dim()) throw InputError("Gamma axis out of range");

    const double margin = std::sqrt(2.0) * eps;
    const double lo[3] = {0.0, 0.0, domain.tau_min};
    const double hi[3] = {domain.t_max, domain.a_max, domain.tau_max};
    const char* names[3] = {"t0", "a0", "tau0"};
    for (int k = 0; k < 3; ++k) {
        if (center[k] < lo[k] + margin - 1e-12 || center[k] > hi[k] - margin + 1e-12)
            throw InputError(std::string(names[k]) + " violates the sqrt(2) eps margin; reduce eps");
    }

    // Omega inside Omega1 and away from omega; the boundary of Omega off Gamma on d = 0.
    const int per_axis = domain.spatial_dim() == 1 ? 401 : 81;
    for (const Vec2& x : lattice(domain.omega, per_axis)) {
        if (!base.omega1.contains(x)) throw InputError("Omega is not contained in Omega1");
        if (base.in_exceptional(x)) throw InputError("Omega meets the exceptional set " + base.exceptional_desc);
    }
    bool gamma_hit = false;
    for (const Vec2& x : boundary_points(domain.omega, per_axis)) {
        if (std::abs(x[gamma.axis] - gamma.coord) <= 1e-12) {
            gamma_hit = true;
            continue;
        }
        if (std::abs(base.d.value(x)) > 1e-9)
            throw InputError("boundary of Omega off Gamma does not lie on the boundary of Omega1");
    }
    if (!gamma_hit) throw InputError("Gamma does not meet the boundary of Omega");

    // Omega0 closure inside Omega union Gamma.
    for (const Vec2& x : lattice(omega0, per_axis)) {
        if (!domain.omega.contains(x)) throw InputError("Omega0 is not contained in Omega");
        if (!open_contains(domain.omega, x)) {
            const bool on_gamma = std::abs(x[gamma.axis] - gamma.coord) <= 1e-12;
            if (!on_gamma) throw InputError("closure of Omega0 touches the boundary of Omega off Gamma");
        }
    }

    UCGeometry g;
    g.base = base;
    g.domain = domain;
    g.omega0 = omega0;
    g.gamma = gamma;
    g.eps = eps;
    g.lambda = lambda;
    g.center = center;

    const double dnorm = base.sup_norm;
    const double dmin = min_d_on(base, omega0, domain.omega);
    if (N) {
        if (*N <= 1) throw InputError("N must exceed 1");
        if (!(dmin > 4.0 * dnorm / *N)) throw InputError("N too small for Omega0");
        g.N = *N;
    } else {
        g.N = 2 * minimal_level_count(base, omega0, domain.omega);
    }
    g.beta_w = 0.75 * dnorm / (eps * eps);
    const double be2 = g.beta_w * eps * eps;
    if (!(2.0 * be2 > dnorm && dnorm > be2)) throw NumericalError("beta_w outside its admissible interval");
    g.mu = level_values(lambda, dnorm, be2, g.N);
    for (int k = 0; k < 3; ++k)
        if (!(g.mu[k] < g.mu[k + 1])) throw NumericalError("level values are not strictly increasing");

    if (domain.spatial_dim() == 1)
        g.strict_subset_note =
            "Gamma is one endpoint; the boundary of Omega0 meets the boundary of Omega only there (checked by sampling)";
    else
        g.strict_subset_note =
            "Gamma is a flat face; openness of the boundary of Omega0 within Gamma is not verified";
    return g;
}

std::vector<std::string> geometry_preset_names() { return {"unit-interval", "unit-ball"}; }

UCGeometry geometry_preset(const std::string& name, int spatial_dim, double lambda) {
    const std::array<double, 3> center{0.5, 0.5, 0.5};
    if (name == "unit-interval") {
        if (spatial_dim != 1) throw InputError("unit-interval geometry is one-dimensional");
        DomainSpec dom = DomainSpec::unit(1);
        SpatialDomain o0;
        o0.box = {Interval{0.75, 1.0}};
        UCGeometry g = build_uc_geometry(weight_catalog("interval-extended", 1), dom, o0, GammaFace{0, 1.0}, 0.3,
                                         std::nullopt, lambda, center);
        g.name = name;
        return g;
    }
    if (name == "unit-ball") {
        // Omega = unit ball cut by the chord x0 = 0.25; Gamma is that chord.
        DomainSpec dom = DomainSpec::unit(spatial_dim);
        dom.omega.box = {Interval{0.25, 1.0}};
        if (spatial_dim == 2) dom.omega.box.push_back(Interval{-1.0, 1.0});
        dom.omega.unit_ball_clip = true;
        SpatialDomain o0;
        o0.box = {Interval{0.25, 0.5}};
        if (spatial_dim == 2) o0.box.push_back(Interval{-0.4, 0.4});
        o0.unit_ball_clip = true;
        UCGeometry g = build_uc_geometry(weight_catalog("unit-ball", spatial_dim), dom, o0, GammaFace{0, 0.25}, 0.3,
                                         std::nullopt, lambda, center);
        g.name = name;
        return g;
    }
    throw InputError("unknown geometry preset '" + name + "'");
}

InclusionReport verify_inclusions(const UCGeometry& geo, int sample_count, std::uint64_t seed,
                                  const GridPtr& grid) {
    InclusionReport rep;
    std::mt19937_64 rng(seed);
    auto record = [&](const char* kind, const Point& p) {
        if (static_cast<int>(rep.counterexamples.size()) < kMaxCounterexamples)
            rep.counterexamples.push_back({kind, p, geo.phi(p)});
    };
    auto at = [&](const Vec2& x, const std::array<double, 3>& r) {
        Point p;
        p.x = x;
        p.t = geo.center[0] + r[0];
        p.a = geo.center[1] + r[1];
        p.tau = geo.center[2] + r[2];
        return p;
    };

    for (int i = 0; i < sample_count; ++i) {
        Vec2 x = uniform_in(geo.omega0, rng, true);
        if (!open_contains(geo.omega(), x)) continue;
        Point p = at(x, uniform_ball3(rng, geo.target_radius()));
        ++rep.target_samples;
        if (!geo.in_D(p) || !(geo.phi(p) > geo.mu[3])) {
            ++rep.target_failures;
            record("target outside {phi > mu4}", p);
        }
    }

    std::uniform_real_distribution<double> u(-2.0 * geo.eps, 2.0 * geo.eps);
    const double r_max2 = 2.0 * geo.eps * geo.eps;
    for (int i = 0; i < sample_count; ++i) {
        Vec2 x = uniform_in(geo.omega(), rng, false);
        Point p = at(x, {u(rng), u(rng), u(rng)});
        if (!geo.in_D(p)) continue;
        ++rep.domain_samples;
        if (!(geo.offset2(p) < r_max2)) {
            ++rep.domain_failures;
            record("D outside B(p, sqrt(2) eps)", p);
        }
    }

    if (!grid) return rep;
    const Grid& g = *grid;
    if (g.spatial_dim() != geo.domain.spatial_dim() || !g.has(AxisRole::t))
        throw InputError("flip check needs a space-time grid over Omega");
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Grid::Index idx = g.unravel(i);
        const Point pi = g.point(idx);
        if (!geo.in_D(pi)) continue;
        for (int k = 0; k < g.rank(); ++k) {
            const Axis& ax = g.axis(k);
            for (int off : {-1, 1}) {
                Point pj;
                const int j = idx[k] + off;
                if (j >= 0 && j < ax.nodes) {
                    Grid::Index jdx = idx;
                    jdx[k] = j;
                    pj = g.point(jdx);
                } else {
                    pj = pi;
                    const double shift = off * ax.h;
                    switch (ax.role) {
                        case AxisRole::x0: pj.x[0] += shift; break;
                        case AxisRole::x1: pj.x[1] += shift; break;
                        case AxisRole::t: pj.t += shift; break;
                        case AxisRole::a: pj.a += shift; break;
                        case AxisRole::tau: pj.tau += shift; break;
                    }
                }
                if (geo.in_D(pj)) continue;
                ++rep.flip_pairs;
                if (geo.phi(pj) <= geo.mu[0]) continue;  // crossed {phi = mu1}
                const double xi = pi.x[geo.gamma.axis] - geo.gamma.coord;
                const double xj = pj.x[geo.gamma.axis] - geo.gamma.coord;
                if (xi * xj <= 0.0) continue;  // crossed Gamma
                ++rep.flip_failures;
                record("boundary flip away from Gamma and {phi = mu1}", pi);
            }
        }
    }
    return rep;
}

double Cutoff::value(double phi) const {
    const double zz = z(phi);
    if (zz <= 0.0) return 0.0;
    if (zz >= 1.0) return 1.0;
    return zz * zz * zz * (10.0 + zz * (-15.0 + 6.0 * zz));
}

double Cutoff::d1(double phi) const {
    const double zz = z(phi);
    if (zz <= 0.0 || zz >= 1.0) return 0.0;
    const double q = zz * (1.0 - zz);
    return 30.0 * q * q / (mu3 - mu2);
}

double Cutoff::d2(double phi) const {
    const double zz = z(phi);
    if (zz <= 0.0 || zz >= 1.0) return 0.0;
    const double w = mu3 - mu2;
    return 60.0 * zz * (1.0 - zz) * (1.0 - 2.0 * zz) / (w * w);
}

ChiDerivatives chi_derivatives(const UCGeometry& geo, const Point& p, double growth) {
    const Cutoff cut{geo.mu[1], geo.mu[2]};
    const double phi = geo.phi(p);
    const double lam = geo.lambda;
    const Vec2 gd = geo.base.d.gradient(p.x);
    const Mat2 hd = geo.base.d.hessian(p.x);
    const double c1 = cut.d1(phi), c2 = cut.d2(phi);
    ChiDerivatives out{};
    out.chi = cut.value(phi);
    Vec2 gphi{lam * phi * gd[0], lam * phi * gd[1]};
    for (int i = 0; i < 2; ++i) {
        out.grad[i] = c1 * gphi[i];
        for (int j = 0; j < 2; ++j) {
            const double hphi = lam * phi * (hd[i][j] + lam * gd[i] * gd[j]);
            out.hess[i][j] = c2 * gphi[i] * gphi[j] + c1 * hphi;
        }
    }
    out.l0_tilde = c1 * lam * phi * geo.weight(0.0).l0_tilde_psi(p, growth);
    return out;
}

Field cutoff_chi(const UCGeometry& geo, const GridPtr& grid) {
    const Cutoff cut{geo.mu[1], geo.mu[2]};
    return Field::sample(grid, [&](const Point& p) { return cut.value(geo.phi(p)); }, "chi");
}

double h10_norm(const Field& u, const std::function<bool(const Point&)>& mask) {
    const Grid& g = u.grid();
    const int n = g.spatial_dim();
    double sum = 0.0;
    auto val = [&](std::size_t f) { return u[f]; };
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Grid::Index idx = g.unravel(i);
        if (!mask(g.point(idx))) continue;
        double e = u[i] * u[i];
        for (int k = 0; k < n; ++k) {
            const double dk = stencil::d1_onesided(g, idx, i, k, val);
            e += dk * dk;
        }
        sum += trapezoid_weight(g, idx) * e;
    }
    return std::sqrt(sum);
}

}  // namespace carleman_lab
