#include "carleman_lab/carleman.hpp"

#include <algorithm>
#include <random>

#include "carleman_lab/errors.hpp"
#include "carleman_lab/operators.hpp"
#include "carleman_lab/parallel.hpp"
#include "carleman_lab/stencil.hpp"

namespace carleman_lab {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double safe_log(double v) { return v > 0.0 ? std::log(v) : neg_inf; }

void require_space_time(const Grid& g) {
    if (!g.has(AxisRole::t) || !g.has(AxisRole::a) || !g.has(AxisRole::tau) || g.spatial_dim() < 1)
        throw InputError("Carleman quantities need a space-time grid (x, t, a, tau)");
}

// Per-node pieces of the conjugated operator.
struct Terms {
    double l0t;     // L0~ w
    double diff;    // -sum a_ij d_i d_j w
    double cross;   // 2 s lambda phi sum a_ij (d_i d) d_j w
    double quad;    // -s^2 lambda^2 phi^2 sigma w
    double lin;     // s lambda^2 phi sigma w
    double hess;    // s lambda phi w sum a_ij d_ij d
    double psi_l0;  // -s lambda phi w L0~ psi
    double a1;      // A1
    double a1_factor;
};

template <class V>
void principal(const Grid& g, const Grid::Index& idx, std::size_t f, const CoefficientSet& c, const Mat2& A,
               double growth, V&& val, double& l0t, double& diff) {
    const int kt = g.find(AxisRole::t), ka = g.find(AxisRole::a), ks = g.find(AxisRole::tau);
    l0t = stencil::d1_onesided(g, idx, f, kt, val) + stencil::d1_onesided(g, idx, f, ka, val) +
          growth * stencil::d1_onesided(g, idx, f, ks, val);
    const int n = c.spatial_dim;
    double k = 0.0;
    for (int i = 0; i < n; ++i) k += A[i][i] * stencil::d2_reflect(g, idx, f, i, val);
    if (n == 2) k += (A[0][1] + A[1][0]) * stencil::d11_reflect(g, idx, f, 0, 1, val);
    diff = -k;
}

Terms expanded_terms(const Grid& g, const Grid::Index& idx, std::size_t f, const std::vector<double>& w,
                     const CarlemanWeight& wt, const CoefficientSet& c, double phi) {
    const Point p = g.point(idx);
    const Mat2 A = c.diffusion(p.x);
    const Vec2 gd = wt.d.gradient(p.x);
    const Mat2 H = wt.d.hessian(p.x);
    const double growth = c.growth(p.tau);
    const int n = c.spatial_dim;
    const double s = wt.s, lam = wt.lambda;
    auto val = [&](std::size_t y) { return w[y]; };

    Terms t{};
    principal(g, idx, f, c, A, growth, val, t.l0t, t.diff);
    double sigma = 0.0, ahess = 0.0, adw = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            sigma += A[i][j] * gd[i] * gd[j];
            ahess += A[i][j] * H[i][j];
        }
    for (int j = 0; j < n; ++j) {
        double ad = 0.0;
        for (int i = 0; i < n; ++i) ad += A[i][j] * gd[i];
        adw += ad * stencil::d1_reflect(g, idx, f, j, val);
    }
    const double l0psi = wt.l0_tilde_psi(p, growth);
    const double wf = w[f];
    t.cross = 2.0 * s * lam * phi * adw;
    t.quad = -s * s * lam * lam * phi * phi * sigma * wf;
    t.lin = s * lam * lam * phi * sigma * wf;
    t.hess = s * lam * phi * wf * ahess;
    t.psi_l0 = -s * lam * phi * wf * l0psi;
    t.a1 = s * lam * lam * phi * sigma + s * lam * phi * ahess - s * lam * phi * l0psi;
    t.a1_factor = sigma + ahess / lam - l0psi / lam;
    return t;
}

std::vector<double> node_phi(const Grid& g, const CarlemanWeight& wt) {
    std::vector<double> phi(g.size());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = wt.phi(g.point(i));
    return phi;
}

void check_inputs(const Field& w, const CarlemanWeight& wt, const CoefficientSet& c) {
    require_space_time(w.grid());
    wt.validate();
    if (w.grid().spatial_dim() != c.spatial_dim) throw InputError("field and coefficients disagree on dimension");
    if (!supported_inside(w, 2))
        throw InputError("support violation: field must vanish on the two outermost node layers");
}

}  // namespace

double log_sum_exp(double la, double lb) {
    if (la == neg_inf) return lb;
    if (lb == neg_inf) return la;
    const double m = std::max(la, lb);
    return m + std::log(std::exp(la - m) + std::exp(lb - m));
}

SigmaField sigma_field(const CoefficientSet& c, const CarlemanWeight& wt, const Grid& grid) {
    auto xs = std::make_shared<const Grid>(grid.spatial_only());
    Field sig(xs, 0.0, "sigma");
    double lo = INFINITY;
    const int n = xs->rank();
    for (std::size_t i = 0; i < sig.size(); ++i) {
        const Vec2 x = xs->point(i).x;
        const Mat2 A = c.diffusion(x);
        const Vec2 gd = wt.d.gradient(x);
        double s = 0.0;
        for (int r = 0; r < n; ++r)
            for (int q = 0; q < n; ++q) s += A[r][q] * gd[r] * gd[q];
        sig[i] = s;
        lo = std::min(lo, s);
    }
    return {std::move(sig), lo};
}

bool supported_inside(const Field& w, int layers) {
    const Grid& g = w.grid();
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] != 0.0 && g.near_face(g.unravel(i), layers)) return false;
    return true;
}

ConjugatedResult conjugated_apply(const Field& w, const CarlemanWeight& wt, const CoefficientSet& c) {
    check_inputs(w, wt, c);
    const Grid& g = w.grid();
    const std::vector<double> phi = node_phi(g, wt);
    const auto& wv = w.values();
    ConjugatedResult r{Field(w.grid_ptr(), 0.0, "P_direct"), Field(w.grid_ptr(), 0.0, "P_expanded")};
    parallel_for(g.size(), [&](std::size_t f) {
        const Grid::Index idx = g.unravel(f);
        if (g.near_face(idx, 1)) return;
        const Point p = g.point(idx);
        const Mat2 A = c.diffusion(p.x);
        const double growth = c.growth(p.tau);
        const double pf = phi[f], s = wt.s;
        // e^{s phi(x)} e^{-s phi(y)} w(y), with the exponent formed locally
        auto val = [&](std::size_t y) { return wv[y] == 0.0 ? 0.0 : std::exp(s * (pf - phi[y])) * wv[y]; };
        double l0t, diff;
        principal(g, idx, f, c, A, growth, val, l0t, diff);
        r.direct[f] = l0t + diff;
        const Terms t = expanded_terms(g, idx, f, wv, wt, c, pf);
        r.expanded[f] = t.l0t + t.diff + t.cross + t.quad + t.lin + t.hess + t.psi_l0;
    });
    r.direct.require_finite("conjugated_apply");
    r.expanded.require_finite("conjugated_apply");
    return r;
}

PDecomposition decompose_P(const Field& w, const CarlemanWeight& wt, const CoefficientSet& c) {
    check_inputs(w, wt, c);
    const Grid& g = w.grid();
    const std::vector<double> phi = node_phi(g, wt);
    PDecomposition d{Field(w.grid_ptr(), 0.0, "P1w"), Field(w.grid_ptr(), 0.0, "P2w"),
                     Field(w.grid_ptr(), 0.0, "Pw"), Field(w.grid_ptr(), 0.0, "a1")};
    parallel_for(g.size(), [&](std::size_t f) {
        const Grid::Index idx = g.unravel(f);
        const Terms t = expanded_terms(g, idx, f, w.values(), wt, c, phi[f]);
        d.a1_factor[f] = t.a1_factor;
        if (g.near_face(idx, 1)) return;
        d.p1[f] = t.diff + t.quad + t.a1 * w[f];
        d.p2[f] = t.l0t + t.cross;
        d.expanded[f] = t.l0t + t.diff + t.cross + t.quad + t.lin + t.hess + t.psi_l0;
    });
    return d;
}

double CarlemanReport::log_lhs() const {
    return log_sum_exp(log_sum_exp(log_lhs_transport, log_lhs_gradient), log_lhs_zeroth);
}

namespace {

// s- and lambda-independent integrand data of one test function.
struct Integrands {
    std::vector<double> psi;
    std::vector<double> l0;    // log(w |L0 u|^2)
    std::vector<double> grad;  // log(w |grad u|^2)
    std::vector<double> zero;  // log(w u^2)
    std::vector<double> rhs;   // log(w |(L0 - K) u|^2)
};

Integrands integrands(const Field& u, const CarlemanWeight& wt, const CoefficientSet& c) {
    check_inputs(u, wt, c);
    const Grid& g = u.grid();
    const Field l0 = apply_L0(u, c);
    const Field k = apply_K(u, c);
    std::vector<Field> du;
    for (int i = 0; i < g.spatial_dim(); ++i) du.push_back(spatial_derivative(u, i));
    Integrands in;
    for (std::size_t f = 0; f < g.size(); ++f) {
        const double gsq = du.size() == 1 ? du[0][f] * du[0][f] : du[0][f] * du[0][f] + du[1][f] * du[1][f];
        const double r = l0[f] - k[f];
        if (l0[f] == 0.0 && gsq == 0.0 && u[f] == 0.0 && r == 0.0) continue;
        const Grid::Index idx = g.unravel(f);
        const double lw = std::log(trapezoid_weight(g, idx));
        in.psi.push_back(wt.psi(g.point(idx)));
        in.l0.push_back(lw + safe_log(l0[f] * l0[f]));
        in.grad.push_back(lw + safe_log(gsq));
        in.zero.push_back(lw + safe_log(u[f] * u[f]));
        in.rhs.push_back(lw + safe_log(r * r));
    }
    return in;
}

CarlemanReport evaluate(const Integrands& in, double s, double lam) {
    LogSum tr, gr, ze, rh;
    const double ls = std::log(s), ll = std::log(lam);
    for (std::size_t i = 0; i < in.psi.size(); ++i) {
        const double lp = lam * in.psi[i];  // log phi
        const double e = 2.0 * s * std::exp(lp);
        tr.add(in.l0[i] - ls - lp + e);
        gr.add(in.grad[i] + ls + 2.0 * ll + lp + e);
        ze.add(in.zero[i] + 3.0 * ls + 4.0 * ll + 3.0 * lp + e);
        rh.add(in.rhs[i] + e);
    }
    CarlemanReport r;
    r.s = s;
    r.lambda = lam;
    r.log_lhs_transport = tr.log_value();
    r.log_lhs_gradient = gr.log_value();
    r.log_lhs_zeroth = ze.log_value();
    r.log_rhs = rh.log_value();
    return r;
}

}  // namespace

LhsComponents carleman_lhs(const Field& u, const CarlemanWeight& wt, const CoefficientSet& c) {
    if (!(wt.s > 0.0)) throw InputError("s must be positive");
    const CarlemanReport r = evaluate(integrands(u, wt, c), wt.s, wt.lambda);
    return {r.log_lhs_transport, r.log_lhs_gradient, r.log_lhs_zeroth};
}

double carleman_rhs(const Field& u, const CarlemanWeight& wt, const CoefficientSet& c) {
    if (!(wt.s > 0.0)) throw InputError("s must be positive");
    return evaluate(integrands(u, wt, c), wt.s, wt.lambda).log_rhs;
}

SweepResult sweep_verify(const std::vector<Field>& bumps, const std::vector<double>& s_values,
                         const std::vector<double>& lambda_values, const CarlemanWeight& weight,
                         const CoefficientSet& c, double divergence_factor) {
    if (bumps.empty() || s_values.empty() || lambda_values.empty()) throw InputError("empty sweep");
    std::vector<double> sv = s_values;
    std::sort(sv.begin(), sv.end());
    for (double s : sv)
        if (!(s > 0.0)) throw InputError("sweep s values must be positive");
    const std::size_t ns = sv.size(), nl = lambda_values.size();

    std::vector<CarlemanReport> rows(bumps.size() * nl * ns);
    parallel_for(bumps.size(), [&](std::size_t b) {
        CarlemanWeight wt = weight;
        wt.lambda = lambda_values.front();
        const Integrands in = integrands(bumps[b], wt, c);
        for (std::size_t l = 0; l < nl; ++l)
            for (std::size_t k = 0; k < ns; ++k) {
                CarlemanReport r = evaluate(in, sv[k], lambda_values[l]);
                r.bump_id = static_cast<int>(b);
                rows[(b * nl + l) * ns + k] = r;
            }
    });

    SweepResult res;
    for (std::size_t b = 0; b < bumps.size(); ++b) {
        const CarlemanReport& first = rows[b * nl * ns];
        if (first.degenerate()) {
            res.skipped.push_back("bump " + std::to_string(b) + ": degenerate test function");
            continue;
        }
        for (std::size_t l = 0; l < nl; ++l) {
            SweepVerdict v{static_cast<int>(b), lambda_values[l], 1.0, false};
            bool finite = true;
            for (std::size_t k = 0; k < ns; ++k) {
                const CarlemanReport& r = rows[(b * nl + l) * ns + k];
                res.rows.push_back(r);
                if (!std::isfinite(r.log_ratio())) finite = false;
            }
            if (ns >= 2) {
                const CarlemanReport& hi = rows[(b * nl + l) * ns + ns - 1];
                const CarlemanReport& lo = rows[(b * nl + l) * ns + ns - 2];
                v.growth = std::exp(hi.log_ratio() - lo.log_ratio());
            }
            v.diverged = !finite || !(v.growth <= divergence_factor);
            res.max_growth = std::max(res.max_growth, v.growth);
            if (v.diverged) res.passed = false;
            res.verdicts.push_back(v);
        }
    }
    if (res.verdicts.empty()) res.passed = false;
    return res;
}

double adjoint_check(const Field& u, const Field& v, const CoefficientSet& c) {
    if (!u.grid().same_layout(v.grid())) throw InputError("adjoint_check: grid mismatch");
    require_space_time(u.grid());
    const Grid& g = u.grid();
    for (const Field* w : {&u, &v})
        for (std::size_t i = 0; i < w->size(); ++i) {
            if ((*w)[i] == 0.0) continue;
            const Grid::Index idx = g.unravel(i);
            for (AxisRole r : {AxisRole::t, AxisRole::a, AxisRole::tau}) {
                const int k = g.find(r);
                if (idx[k] < 2 || idx[k] > g.axis(k).nodes - 3)
                    throw InputError("support violation: fields must vanish near the (t, a, tau) faces");
            }
        }
    const Field ltv = apply_L0_tilde(v, c);
    const Field l0u = apply_L0(u, c);
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        sum += trapezoid_weight(g, g.unravel(i)) * (u[i] * ltv[i] + l0u[i] * v[i]);
    return std::abs(sum);
}

Field sample_bump(const BumpSpec& spec, const GridPtr& grid) {
    const Grid& g = *grid;
    if (static_cast<int>(spec.center.size()) != g.rank() || static_cast<int>(spec.half_width.size()) != g.rank())
        throw InputError("bump needs one center and width per axis");
    // separable: tabulate the 1-D factors first
    std::vector<std::vector<double>> fac(g.rank());
    for (int k = 0; k < g.rank(); ++k) {
        const Axis& ax = g.axis(k);
        fac[k].resize(ax.nodes);
        for (int i = 0; i < ax.nodes; ++i) {
            const double r = (ax.coord(i) - spec.center[k]) / spec.half_width[k];
            const double q = 1.0 - r * r;
            fac[k][i] = std::abs(r) < 1.0 ? q * q * q * q : 0.0;
        }
    }
    Field out(grid, 0.0, "bump");
    for (std::size_t f = 0; f < out.size(); ++f) {
        const Grid::Index idx = g.unravel(f);
        double v = spec.amplitude;
        for (int k = 0; k < g.rank() && v != 0.0; ++k) v *= fac[k][idx[k]];
        out[f] = v;
    }
    return out;
}

std::vector<BumpSpec> random_bumps(const Grid& grid, int count, std::uint64_t seed, const BumpOptions& opt) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<BumpSpec> out;
    for (int b = 0; b < count; ++b) {
        BumpSpec s;
        for (int k = 0; k < grid.rank(); ++k) {
            const Axis& ax = grid.axis(k);
            const double ext = ax.hi - ax.lo;
            s.center.push_back(ax.lo + ext * (opt.center_lo + (opt.center_hi - opt.center_lo) * U(rng)));
            s.half_width.push_back(ext * (opt.width_lo + (opt.width_hi - opt.width_lo) * U(rng)));
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace carleman_lab
