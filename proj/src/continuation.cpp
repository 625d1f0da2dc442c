#include "carleman_lab/continuation.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>

#include "carleman_lab/carleman.hpp"
#include "carleman_lab/errors.hpp"
#include "carleman_lab/stencil.hpp"

namespace carleman_lab {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

// Sparse LDL^T factorization used as a CG preconditioner: CG then acts as
// iterative refinement of the direct solve.
class LdltPreconditioner {
public:
    LdltPreconditioner() = default;
    template <class M>
    explicit LdltPreconditioner(const M& m) {
        compute(m);
    }
    template <class M>
    LdltPreconditioner& analyzePattern(const M& m) {
        ldlt_.analyzePattern(m);
        return *this;
    }
    template <class M>
    LdltPreconditioner& factorize(const M& m) {
        ldlt_.factorize(m);
        return *this;
    }
    template <class M>
    LdltPreconditioner& compute(const M& m) {
        ldlt_.compute(m);
        return *this;
    }
    template <class Rhs>
    Eigen::VectorXd solve(const Rhs& b) const {
        return ldlt_.solve(b);
    }
    Eigen::ComputationInfo info() { return ldlt_.info(); }

private:
    Eigen::SimplicialLDLT<SpMat> ldlt_;
};

template <class Solver>
Eigen::VectorXd run_cg(Solver& cg, const SpMat& A, const Eigen::VectorXd& b, const ReconstructOptions& opt,
                       ContinuationResult& res) {
    cg.setTolerance(opt.tolerance);
    cg.setMaxIterations(opt.max_iterations);
    cg.compute(A);
    if (cg.info() != Eigen::Success) throw NumericalError("preconditioner setup failed");
    Eigen::VectorXd x = cg.solve(b);
    res.iterations = static_cast<int>(cg.iterations());
    res.cg_error = cg.error();
    if (cg.info() != Eigen::Success)
        throw NumericalError("conjugate gradients did not converge in " + std::to_string(opt.max_iterations) +
                             " iterations (relative residual " + std::to_string(cg.error()) + ")");
    return x;
}

double weight_1d(const Axis& ax, int i) { return (i == 0 || i == ax.nodes - 1) ? 0.5 * ax.h : ax.h; }

// Trapezoid weight over every axis except `skip`.
double surface_weight(const Grid& g, const Grid::Index& idx, int skip) {
    double w = 1.0;
    for (int k = 0; k < g.rank(); ++k)
        if (k != skip) w *= weight_1d(g.axis(k), idx[k]);
    return w;
}

struct GammaStencil {
    int axis;
    bool high;
    // one-sided second-order d/dx_axis at the face node: offsets 0, 1, 2 inward
    std::array<double, 3> coef(double h) const {
        const double sg = high ? 1.0 : -1.0;
        return {sg * 3.0 / (2.0 * h), -sg * 4.0 / (2.0 * h), sg * 1.0 / (2.0 * h)};
    }
    std::ptrdiff_t step(const Grid& g) const {
        const auto s = static_cast<std::ptrdiff_t>(g.stride(axis));
        return high ? -s : s;
    }
};

GammaStencil locate_gamma(const Grid& g, const UCGeometry& geo) {
    const int k = geo.gamma.axis;
    if (k >= g.spatial_dim()) throw InputError("Gamma axis is not a spatial axis of the grid");
    const Axis& ax = g.axis(k);
    const double tol = 1e-9 * ax.h;
    if (std::abs(geo.gamma.coord - ax.hi) <= tol) return {k, true};
    if (std::abs(geo.gamma.coord - ax.lo) <= tol) return {k, false};
    throw InputError("Gamma is not aligned with a grid face");
}

}  // namespace

CauchyData extract_cauchy(const Field& u, const UCGeometry& geo, double noise, std::uint64_t seed) {
    if (!(noise >= 0.0)) throw InputError("noise level must be non-negative");
    const Grid& g = u.grid();
    if (!g.has(AxisRole::t)) throw InputError("Cauchy data needs a space-time field");
    u.require_finite("trajectory");
    const GammaStencil gs = locate_gamma(g, geo);
    if (g.axis(gs.axis).nodes < 3) throw InputError("Gamma axis needs at least 3 nodes");

    CauchyData cd;
    cd.grid = u.grid_ptr();
    cd.gamma = geo.gamma;
    cd.high_face = gs.high;
    cd.noise = noise;
    const int face = gs.high ? g.axis(gs.axis).nodes - 1 : 0;
    const int other = g.spatial_dim() == 2 ? 1 - gs.axis : -1;
    auto val = [&](std::size_t f) { return u[f]; };
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Grid::Index idx = g.unravel(i);
        if (idx[gs.axis] != face) continue;
        if (!geo.omega().contains(g.point(idx).x)) continue;
        cd.nodes.push_back(i);
        cd.u.push_back(u[i]);
        cd.du_normal.push_back(stencil::d1_onesided(g, idx, i, gs.axis, val));
        cd.du_tangential.push_back(other >= 0 ? stencil::d1_onesided(g, idx, i, other, val) : 0.0);
    }
    if (cd.nodes.empty()) throw InputError("Gamma has no grid nodes inside Omega");

    if (noise > 0.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (auto* v : {&cd.u, &cd.du_normal, &cd.du_tangential}) {
            double m = 0.0;
            for (double x : *v) m = std::max(m, std::abs(x));
            for (double& x : *v) x += noise * m * U(rng);
        }
    }
    return cd;
}

ContinuationResult reconstruct(const CauchyData& data, const UCGeometry& geo, const CoefficientSet& coeffs,
                               const ReconstructOptions& opt, const Field* truth) {
    if (!(opt.alpha > 0.0)) throw InputError("alpha must be positive");
    if (!(opt.s >= 0.0)) throw InputError("s must be non-negative");
    if (!(opt.penalty > 0.0)) throw InputError("penalty must be positive");
    if (!data.grid) throw InputError("Cauchy data without grid");
    const GridPtr& gp = data.grid;
    const Grid& g = *gp;
    validate_coefficients(coeffs, g);
    if (truth && !truth->grid().same_layout(g)) throw InputError("truth grid mismatch");
    const GammaStencil gs = locate_gamma(g, geo);
    const StepOperator op(g, coeffs);

    const int kt = g.find(AxisRole::t), ka = g.find(AxisRole::a), ks = g.find(AxisRole::tau);
    const std::size_t X = op.spatial().size();
    const std::size_t T = g.axis(kt).nodes, A = g.axis(ka).nodes, S = g.axis(ks).nodes;
    auto flat = [&](std::size_t x, std::size_t n, std::size_t a, std::size_t s) { return ((x * T + n) * A + a) * S + s; };

    // unknowns: nodes of D
    std::vector<long> col(g.size(), -1);
    std::vector<std::size_t> dnodes;
    std::vector<double> phi(g.size());
    double phimax = -1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point p = g.point(i);
        phi[i] = geo.phi(p);
        if (geo.in_D(p)) {
            col[i] = static_cast<long>(dnodes.size());
            dnodes.push_back(i);
            phimax = std::max(phimax, phi[i]);
        }
    }
    const long m = static_cast<long>(dnodes.size());
    if (m == 0) throw InputError("region D contains no grid nodes");

    ContinuationResult res;
    res.unknowns = dnodes.size();

    // residual rows of the step map, restricted to rows whose columns all lie in D
    std::vector<Trip> rtrip;
    std::vector<double> rweight;
    const double ht = op.ht(), half = 0.5 * ht, nua = op.nu_a(), nus = op.nu_tau();
    const Axis& tax = g.axis(kt);
    const Axis& aax = g.axis(ka);
    const Axis& sax = g.axis(ks);
    std::vector<StencilEntry> krow;
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t n = 0; n + 1 < T; ++n) {
        Point pk;
        pk.t = 0.5 * (tax.coord(static_cast<int>(n)) + tax.coord(static_cast<int>(n + 1)));
        for (std::size_t a = 1; a < A; ++a) {
            pk.a = aax.coord(static_cast<int>(a));
            for (std::size_t s = 1; s < S; ++s) {
                pk.tau = sax.coord(static_cast<int>(s));
                const double g1 = op.face_growth(static_cast<int>(s)), g0 = op.face_growth(static_cast<int>(s) - 1);
                for (std::size_t x = 0; x < X; ++x) {
                    const std::size_t self = flat(x, n + 1, a, s);
                    if (col[self] < 0) continue;
                    op.k_row(x, pk, krow);
                    row.clear();
                    row.emplace_back(self, 1.0);
                    auto add_w = [&](std::size_t k, double c) {
                        // c * W(k, a, s), W = T_tau T_a v^n
                        const double cs = c * (1.0 - nus * g1), cm = c * nus * g0;
                        row.emplace_back(flat(k, n, a, s), -cs * (1.0 - nua));
                        row.emplace_back(flat(k, n, a - 1, s), -cs * nua);
                        row.emplace_back(flat(k, n, a, s - 1), -cm * (1.0 - nua));
                        row.emplace_back(flat(k, n, a - 1, s - 1), -cm * nua);
                    };
                    add_w(x, 1.0);
                    for (const auto& e : krow) {
                        row.emplace_back(flat(e.col, n + 1, a, s), -half * e.value);
                        add_w(e.col, half * e.value);
                    }
                    bool inside = true;
                    for (const auto& [f, v] : row)
                        if (col[f] < 0) {
                            inside = false;
                            break;
                        }
                    if (!inside) continue;
                    const int r = static_cast<int>(rweight.size());
                    for (const auto& [f, v] : row) rtrip.emplace_back(r, static_cast<int>(col[f]), v / ht);
                    const double w = std::exp(2.0 * opt.s * (phi[self] - phimax)) * trapezoid_weight(g, g.unravel(self));
                    rweight.push_back(w);
                }
            }
        }
    }
    res.residual_rows = rweight.size();
    SpMat R(static_cast<long>(rweight.size()), m);
    R.setFromTriplets(rtrip.begin(), rtrip.end());  // duplicates are summed

    // data rows: Dirichlet and one-sided normal derivative on Gamma
    std::vector<Trip> dtrip;
    std::vector<double> dweight, dtarget;
    const double hn = g.axis(gs.axis).h;
    const auto cf = gs.coef(hn);
    const std::ptrdiff_t st = gs.step(g);
    for (std::size_t q = 0; q < data.nodes.size(); ++q) {
        const std::size_t i = data.nodes[q];
        if (col[i] < 0) continue;
        const double w = opt.penalty * surface_weight(g, g.unravel(i), gs.axis);
        const int r = static_cast<int>(dweight.size());
        dtrip.emplace_back(r, static_cast<int>(col[i]), 1.0);
        dweight.push_back(w);
        dtarget.push_back(data.u[q]);
        const std::size_t i1 = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + st);
        const std::size_t i2 = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + 2 * st);
        if (col[i1] < 0 || col[i2] < 0) continue;
        const int r2 = static_cast<int>(dweight.size());
        dtrip.emplace_back(r2, static_cast<int>(col[i]), cf[0]);
        dtrip.emplace_back(r2, static_cast<int>(col[i1]), cf[1]);
        dtrip.emplace_back(r2, static_cast<int>(col[i2]), cf[2]);
        dweight.push_back(w);
        dtarget.push_back(data.du_normal[q]);
    }
    if (dweight.empty()) throw InputError("no Cauchy data nodes inside D");
    SpMat P(static_cast<long>(dweight.size()), m);
    P.setFromTriplets(dtrip.begin(), dtrip.end());

    // H10(D): nodal mass plus x-differences between neighbouring D nodes
    std::vector<Trip> gtrip;
    std::vector<double> gweight, mass(m);
    for (long j = 0; j < m; ++j) {
        const std::size_t i = dnodes[j];
        const Grid::Index idx = g.unravel(i);
        const double vol = trapezoid_weight(g, idx);
        mass[j] = vol;
        for (int k = 0; k < g.spatial_dim(); ++k) {
            if (idx[k] + 1 >= g.axis(k).nodes) continue;
            const std::size_t nb = i + g.stride(k);
            if (col[nb] < 0) continue;
            const double h = g.axis(k).h;
            const int r = static_cast<int>(gweight.size());
            gtrip.emplace_back(r, static_cast<int>(j), -1.0 / h);
            gtrip.emplace_back(r, static_cast<int>(col[nb]), 1.0 / h);
            gweight.push_back(vol);
        }
    }
    SpMat G(static_cast<long>(gweight.size()), m);
    G.setFromTriplets(gtrip.begin(), gtrip.end());

    auto diag = [](const std::vector<double>& w) {
        return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())).asDiagonal();
    };
    SpMat Msys = SpMat(R.transpose() * diag(rweight) * R) + SpMat(P.transpose() * diag(dweight) * P);
    SpMat H = SpMat(G.transpose() * diag(gweight) * G);
    for (long j = 0; j < m; ++j) H.coeffRef(j, j) += mass[j];
    Msys += opt.alpha * H;
    Eigen::VectorXd dt = Eigen::Map<const Eigen::VectorXd>(dtarget.data(), static_cast<Eigen::Index>(dtarget.size()));
    Eigen::VectorXd rhs = P.transpose() * (diag(dweight) * dt);

    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    if (rhs.squaredNorm() > 0.0) {
        // symmetric diagonal equilibration: penalty rows and alpha-sized
        // regularization differ by many orders of magnitude
        Eigen::VectorXd dsc = Msys.diagonal().cwiseSqrt().cwiseInverse();
        SpMat Ms = dsc.asDiagonal() * Msys * dsc.asDiagonal();
        Eigen::VectorXd bs = dsc.cwiseProduct(rhs);
        if (opt.preconditioner == Preconditioner::ldlt) {
            Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, LdltPreconditioner> cg;
            v = dsc.cwiseProduct(run_cg(cg, Ms, bs, opt, res));
        } else {
            Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
            v = dsc.cwiseProduct(run_cg(cg, Ms, bs, opt, res));
        }
    }

    std::vector<double> full(g.size(), 0.0);
    for (long j = 0; j < m; ++j) full[dnodes[j]] = v[j];
    res.field = Field(gp, std::move(full), "reconstruction");
    res.field.require_finite("reconstruction");

    Eigen::VectorXd rv = R * v;
    double er = 0.0;
    for (long r = 0; r < rv.size(); ++r) er += rweight[r] * rv[r] * rv[r];
    res.equation_residual = std::sqrt(er);
    Eigen::VectorXd pv = P * v - dt;
    double dm = 0.0;
    for (long r = 0; r < pv.size(); ++r) dm += dweight[r] / opt.penalty * pv[r] * pv[r];
    res.data_mismatch = std::sqrt(dm);
    Eigen::VectorXd gv = G * v;
    double hn2 = 0.0;
    for (long j = 0; j < m; ++j) hn2 += mass[j] * v[j] * v[j];
    for (long r = 0; r < gv.size(); ++r) hn2 += gweight[r] * gv[r] * gv[r];
    res.h10_norm = std::sqrt(hn2);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Grid::Index idx = g.unravel(i);
        if (!geo.in_target(g.point(idx))) continue;
        ++res.target_nodes;
        if (!truth) continue;
        const double w = trapezoid_weight(g, idx), e = res.field[i] - (*truth)[i];
        num += w * e * e;
        den += w * (*truth)[i] * (*truth)[i];
    }
    if (truth) res.interior_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    return res;
}

double decay_bound(double mu3, double mu4, double s) { return std::exp(-2.0 * s * (mu4 - mu3)); }

DecayTable decay_experiment(const Field& u, const UCGeometry& geo, const CoefficientSet& coeffs,
                            std::vector<double> s_values) {
    if (s_values.empty()) throw InputError("empty s list");
    for (double s : s_values)
        if (!(s >= 0.0)) throw InputError("s must be non-negative");
    std::sort(s_values.begin(), s_values.end());
    const Grid& g = u.grid();
    validate_coefficients(coeffs, g);
    const int n = g.spatial_dim();
    auto val = [&](std::size_t f) { return u[f]; };

    // per-node log integrands without the e^{2 s phi} factor
    std::vector<std::pair<double, double>> band, target;  // (log(w f^2), phi)
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Grid::Index idx = g.unravel(i);
        const Point p = g.point(idx);
        const double phi = geo.phi(p);
        const double w = trapezoid_weight(g, idx);
        Vec2 gu{0.0, 0.0};
        for (int k = 0; k < n; ++k) gu[k] = stencil::d1_onesided(g, idx, i, k, val);
        if (phi >= geo.mu[1] && phi <= geo.mu[2]) {
            const ChiDerivatives cd = chi_derivatives(geo, p, coeffs.growth(p.tau));
            const Mat2 A = coeffs.diffusion(p.x);
            const Vec2 b = coeffs.drift(p);
            double c = cd.l0_tilde * u[i];
            for (int k = 0; k < n; ++k) {
                c += b[k] * cd.grad[k] * u[i];
                for (int l = 0; l < n; ++l)
                    c -= A[k][l] * (cd.hess[k][l] * u[i] + cd.grad[k] * gu[l] + cd.grad[l] * gu[k]);
            }
            if (c != 0.0) band.emplace_back(std::log(w * c * c), phi);
        }
        if (geo.in_target(p)) {
            const double e = u[i] * u[i] + gu[0] * gu[0] + gu[1] * gu[1];
            if (e > 0.0) target.emplace_back(std::log(w * e), phi);
        }
    }

    DecayTable tab;
    tab.degenerate = band.empty() || target.empty();
    const double gap = geo.mu[3] - geo.mu[2];
    for (double s : s_values) {
        LogSum nb, nt;
        for (const auto& [l, phi] : band) nb.add(l + 2.0 * s * phi);
        for (const auto& [l, phi] : target) nt.add(l + 2.0 * s * phi);
        DecayRow r;
        r.s = s;
        r.log_bound = -2.0 * s * gap;
        r.bound = decay_bound(geo.mu[2], geo.mu[3], s);
        r.log_measured = nb.log_value() - nt.log_value();
        r.measured = std::exp(r.log_measured);
        tab.rows.push_back(r);
    }
    for (std::size_t k = 1; k < tab.rows.size(); ++k) {
        const DecayRow& r0 = tab.rows.front();
        const DecayRow& r = tab.rows[k];
        if (!(r.bound < tab.rows[k - 1].bound)) tab.bound_decreasing = false;
        if (tab.degenerate) continue;
        const double allowed = r0.log_measured + (r.log_bound - r0.log_bound);
        if (r.log_measured > allowed + 1e-12 * (1.0 + std::abs(allowed))) tab.within_bound = false;
    }
    if (tab.degenerate) tab.within_bound = false;
    return tab;
}

}  // namespace carleman_lab
