#include "carleman_lab/forward.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>

#include "carleman_lab/errors.hpp"
#include "carleman_lab/operators.hpp"
#include "carleman_lab/parallel.hpp"
#include "carleman_lab/stencil.hpp"

namespace carleman_lab {

Field Trajectory::slice(int n) const {
    const Grid& g = u.grid();
    const int kt = g.find(AxisRole::t);
    const std::size_t inner = g.stride(kt);
    const std::size_t outer = g.stride(kt) * static_cast<std::size_t>(g.axis(kt).nodes);
    std::vector<double> v(state->size());
    const std::size_t X = g.size() / outer;
    for (std::size_t x = 0; x < X; ++x)
        std::copy_n(u.values().begin() + static_cast<std::ptrdiff_t>(x * outer + n * inner), inner,
                    v.begin() + static_cast<std::ptrdiff_t>(x * inner));
    return Field(state, std::move(v), "u");
}

StepOperator::StepOperator(const Grid& full, const CoefficientSet& coeffs)
    : spatial_(std::make_shared<const Grid>(full.spatial_only())), coeffs_(&coeffs) {
    const int kt = full.find(AxisRole::t), ka = full.find(AxisRole::a), ks = full.find(AxisRole::tau);
    if (kt < 0 || ka < 0 || ks < 0) throw InputError("step operator needs t, a and tau axes");
    ht_ = full.axis(kt).h;
    ha_ = full.axis(ka).h;
    const Axis& sa = full.axis(ks);
    htau_ = sa.h;
    face_g_.resize(sa.nodes);
    for (int j = 0; j < sa.nodes; ++j) face_g_[j] = coeffs.growth(std::min(sa.coord(j) + 0.5 * htau_, sa.hi));
}

double StepOperator::cfl() const {
    double gmax = 0.0;
    for (double g : face_g_) gmax = std::max(gmax, g);
    return ht_ * std::max(1.0 / ha_, gmax / htau_);
}

void StepOperator::k_row(std::size_t xflat, Point p, std::vector<StencilEntry>& row) const {
    row.clear();
    const Grid& g = *spatial_;
    const int n = g.rank();
    const Grid::Index idx = g.unravel(xflat);
    for (int k = 0; k < n; ++k) p.x[k] = g.axis(k).coord(idx[k]);
    const Mat2 A = coeffs_->diffusion(p.x);
    const Vec2 b = coeffs_->drift(p);
    const double c = coeffs_->reaction(p);
    auto add = [&](std::size_t col, double v) {
        for (auto& e : row)
            if (e.col == col) {
                e.value += v;
                return;
            }
        row.push_back({col, v});
    };
    add(xflat, -c);
    for (int k = 0; k < n; ++k) {
        const double h = g.axis(k).h;
        const std::size_t lo = stencil::reflect(g, idx, xflat, k, -1);
        const std::size_t hi = stencil::reflect(g, idx, xflat, k, +1);
        add(lo, A[k][k] / (h * h) + b[k] / (2.0 * h));
        add(xflat, -2.0 * A[k][k] / (h * h));
        add(hi, A[k][k] / (h * h) - b[k] / (2.0 * h));
    }
    if (n == 2) {
        const double w = (A[0][1] + A[1][0]) / (4.0 * g.axis(0).h * g.axis(1).h);
        for (int o0 : {-1, 1})
            for (int o1 : {-1, 1}) {
                Grid::Index j = idx;
                j[0] = stencil::mirror(idx[0] + o0, g.axis(0).nodes);
                j[1] = stencil::mirror(idx[1] + o1, g.axis(1).nodes);
                add(g.ravel(j), o0 * o1 * w);
            }
    }
    for (const auto& e : row)
        if (!std::isfinite(e.value)) throw NumericalError("non-finite coefficient in K");
}

namespace {

struct Layout {
    std::size_t X, A, S, T;
    std::size_t state(std::size_t x, std::size_t a, std::size_t s) const { return (x * A + a) * S + s; }
};

// Solve (I - h/2 K) w = rhs on one (a, tau) line.
class LineSolver {
public:
    LineSolver(const StepOperator& op, int dim) : op_(op), dim_(dim) {}

    void solve(const std::vector<std::vector<StencilEntry>>& rows, const std::vector<double>& rhs,
               std::vector<double>& w) const {
        const std::size_t m = rhs.size();
        const double half = 0.5 * op_.ht();
        if (dim_ == 1) {
            std::vector<double> lo(m, 0.0), di(m, 0.0), up(m, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                di[i] = 1.0;
                for (const auto& e : rows[i]) {
                    const double v = -half * e.value;
                    if (e.col == i)
                        di[i] += v;
                    else if (e.col + 1 == i)
                        lo[i] += v;
                    else if (e.col == i + 1)
                        up[i] += v;
                }
            }
            // Thomas sweep
            std::vector<double> cp(m), dp(m);
            cp[0] = up[0] / di[0];
            dp[0] = rhs[0] / di[0];
            for (std::size_t i = 1; i < m; ++i) {
                const double piv = di[i] - lo[i] * cp[i - 1];
                if (piv == 0.0 || !std::isfinite(piv)) throw NumericalError("tridiagonal solve broke down");
                cp[i] = up[i] / piv;
                dp[i] = (rhs[i] - lo[i] * dp[i - 1]) / piv;
            }
            w.assign(m, 0.0);
            w[m - 1] = dp[m - 1];
            for (std::size_t i = m - 1; i-- > 0;) w[i] = dp[i] - cp[i] * w[i + 1];
            return;
        }
        std::vector<Eigen::Triplet<double>> trip;
        for (std::size_t i = 0; i < m; ++i) {
            trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
            for (const auto& e : rows[i])
                trip.emplace_back(static_cast<int>(i), static_cast<int>(e.col), -half * e.value);
        }
        Eigen::SparseMatrix<double, Eigen::RowMajor> M(static_cast<int>(m), static_cast<int>(m));
        M.setFromTriplets(trip.begin(), trip.end());
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>> solver;
        solver.setTolerance(1e-14);
        solver.setMaxIterations(2000);
        solver.compute(M);
        Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(m));
        Eigen::VectorXd x = solver.solve(b);
        if (b.squaredNorm() > 0.0 && solver.info() != Eigen::Success)
            throw NumericalError("linear-solve non-convergence in diffusion step");
        w.assign(x.data(), x.data() + m);
        if (b.squaredNorm() == 0.0) std::fill(w.begin(), w.end(), 0.0);
    }

private:
    const StepOperator& op_;
    int dim_;
};

}  // namespace

Trajectory solve_forward(const ForwardProblem& pb) {
    if (!pb.grid) throw InputError("forward problem without grid");
    if (!pb.initial) throw InputError("forward problem without initial data");
    const Grid& full = *pb.grid;
    const CoefficientSet& c = pb.coeffs;
    validate_coefficients(c, full);
    if (pb.source && !pb.source->grid().same_layout(full)) throw InputError("source grid mismatch");

    const StepOperator op(full, c);
    if (op.cfl() > 1.0 + 1e-12)
        throw InputError("CFL violation: h_t*max(1/h_a, max g/h_tau) = " + std::to_string(op.cfl()) +
                         " > 1");

    Trajectory tr;
    tr.state = state_grid(full);
    const Grid& sg = *tr.state;
    const int kt = full.find(AxisRole::t), ka = full.find(AxisRole::a), ks = full.find(AxisRole::tau);
    const Axis& tax = full.axis(kt);
    const Axis& aax = full.axis(ka);
    const Axis& sax = full.axis(ks);
    const Layout L{op.spatial().size(), static_cast<std::size_t>(aax.nodes),
                   static_cast<std::size_t>(sax.nodes), static_cast<std::size_t>(tax.nodes)};
    const int dim = full.spatial_dim();

    std::vector<double> U(full.size(), 0.0);
    auto store = [&](const std::vector<double>& u, std::size_t n) {
        const std::size_t inner = L.A * L.S;
        for (std::size_t x = 0; x < L.X; ++x)
            std::copy_n(u.begin() + static_cast<std::ptrdiff_t>(x * inner), inner,
                        U.begin() + static_cast<std::ptrdiff_t>((x * L.T + n) * inner));
    };
    auto source_at = [&](std::size_t n, std::size_t x, std::size_t a, std::size_t s) {
        return (*pb.source)[((x * L.T + n) * L.A + a) * L.S + s];
    };
    const std::vector<double> wstate = trapezoid_weights(sg);
    auto record = [&](const std::vector<double>& u, double t) {
        double pop = 0.0, mx = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            pop += wstate[i] * u[i];
            mx = std::max(mx, std::abs(u[i]));
        }
        tr.times.push_back(t);
        tr.total_population.push_back(pop);
        tr.max_norm.push_back(mx);
    };

    std::vector<double> u(sg.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = pb.initial(sg.point(i));
    {
        Field p0(tr.state, u);
        p0.require_finite("initial data");
        Field b = birth_integral(p0, c);
        for (std::size_t x = 0; x < L.X; ++x)
            for (std::size_t s = 0; s < L.S; ++s) {
                tr.initial_birth_mismatch =
                    std::max(tr.initial_birth_mismatch, std::abs(u[L.state(x, 0, s)] - b[x * L.S + s]));
            }
        for (std::size_t x = 0; x < L.X; ++x)
            for (std::size_t a = 0; a < L.A; ++a)
                tr.initial_inflow_mismatch = std::max(tr.initial_inflow_mismatch, std::abs(u[L.state(x, a, 0)]));
    }
    store(u, 0);
    record(u, 0.0);

    const LineSolver lines(op, dim);
    const double nua = op.nu_a(), nus = op.nu_tau();
    std::vector<double> ua(u.size()), ut(u.size()), un(u.size());

    for (std::size_t n = 0; n + 1 < L.T; ++n) {
        const double t0 = tax.coord(static_cast<int>(n)), t1 = tax.coord(static_cast<int>(n + 1));
        const double th = 0.5 * (t0 + t1);

        // transport in a, then in tau (flux form)
        for (std::size_t x = 0; x < L.X; ++x)
            for (std::size_t a = 0; a < L.A; ++a)
                for (std::size_t s = 0; s < L.S; ++s) {
                    const std::size_t i = L.state(x, a, s);
                    ua[i] = a == 0 ? u[i] : u[i] - nua * (u[i] - u[L.state(x, a - 1, s)]);
                }
        for (std::size_t x = 0; x < L.X; ++x)
            for (std::size_t a = 0; a < L.A; ++a)
                for (std::size_t s = 0; s < L.S; ++s) {
                    const std::size_t i = L.state(x, a, s);
                    ut[i] = s == 0 ? ua[i]
                                   : ua[i] - nus * (op.face_growth(static_cast<int>(s)) * ua[i] -
                                                    op.face_growth(static_cast<int>(s) - 1) * ua[i - 1]);
                }

        // Crank-Nicolson for K, line by line in x
        parallel_for(L.A * L.S, [&](std::size_t line) {
            const std::size_t a = line / L.S, s = line % L.S;
            Point p;
            p.t = th;
            p.a = aax.coord(static_cast<int>(a));
            p.tau = sax.coord(static_cast<int>(s));
            std::vector<std::vector<StencilEntry>> rows(L.X);
            std::vector<double> rhs(L.X), w;
            for (std::size_t x = 0; x < L.X; ++x) {
                op.k_row(x, p, rows[x]);
                double kv = 0.0;
                for (const auto& e : rows[x]) kv += e.value * ut[L.state(e.col, a, s)];
                rhs[x] = ut[L.state(x, a, s)] + 0.5 * op.ht() * kv;
                if (pb.source) rhs[x] += 0.5 * op.ht() * (source_at(n, x, a, s) + source_at(n + 1, x, a, s));
            }
            lines.solve(rows, rhs, w);
            for (std::size_t x = 0; x < L.X; ++x) un[L.state(x, a, s)] = w[x];
        });

        // boundary refresh: birth from the previous step, then inflow
        if (pb.age_boundary) {
            for (std::size_t x = 0; x < L.X; ++x)
                for (std::size_t s = 0; s < L.S; ++s) {
                    Point p = sg.point(L.state(x, 0, s));
                    p.t = t1;
                    un[L.state(x, 0, s)] = pb.age_boundary(p);
                }
        } else {
            Field b = birth_integral(Field(tr.state, u), c);
            for (std::size_t x = 0; x < L.X; ++x)
                for (std::size_t s = 0; s < L.S; ++s) un[L.state(x, 0, s)] = b[x * L.S + s];
        }
        for (std::size_t x = 0; x < L.X; ++x)
            for (std::size_t a = 0; a < L.A; ++a) {
                double v = 0.0;
                if (pb.size_boundary) {
                    Point p = sg.point(L.state(x, a, 0));
                    p.t = t1;
                    v = pb.size_boundary(p);
                }
                un[L.state(x, a, 0)] = v;
            }

        for (double v : un)
            if (!std::isfinite(v)) throw NumericalError("forward solve produced non-finite values");
        u.swap(un);
        store(u, n + 1);
        record(u, t1);
    }
    tr.u = Field(pb.grid, std::move(U), "u");
    return tr;
}

Field mms_source(const Field& u_star, const CoefficientSet& coeffs) {
    Field l0 = apply_L0(u_star, coeffs);
    Field k = apply_K(u_star, coeffs);
    for (std::size_t i = 0; i < l0.size(); ++i) l0[i] -= k[i];
    return Field(u_star.grid_ptr(), std::move(l0.values()), "f");
}

ManufacturedCase manufactured_case(const std::string& name) {
    constexpr double pi = 3.14159265358979323846;
    ManufacturedCase mc;
    mc.name = name;
    mc.domain = DomainSpec::unit(1);
    if (name == "diffusion") {
        // no transport: u* constant in (a, tau) and g constant
        mc.coeffs = coefficient_preset("logistic-growth", 1);
        mc.coeffs.growth = [](double) { return 0.5; };
        mc.coeffs.growth_derivative = [](double) { return 0.0; };
        mc.solution = [pi](const Point& p) { return std::cos(pi * p.x[0]) * std::exp(-p.t); };
    } else if (name == "transport") {
        // K u* = 0: x-independent u* and c = 0
        mc.coeffs = coefficient_preset("logistic-growth", 1);
        mc.coeffs.reaction = [](const Point&) { return 0.0; };
        mc.solution = [](const Point& p) {
            return std::exp(-0.5 * p.t) * (1.0 + 0.5 * std::sin(2.0 * p.a)) * (1.0 + p.tau * p.tau);
        };
    } else if (name == "combined") {
        mc.coeffs = coefficient_preset("logistic-growth", 1);
        mc.solution = [pi](const Point& p) {
            return (1.0 + 0.5 * std::cos(pi * p.x[0])) * std::exp(-0.5 * p.t) * (1.0 + 0.5 * std::sin(2.0 * p.a)) *
                   (1.0 + p.tau * p.tau);
        };
    } else if (name == "kernel") {
        // the constant is reproduced by every piece of the scheme
        mc.coeffs = coefficient_preset("constant", 1);
        const double beta = 1.0 / (mc.domain.a_max * (mc.domain.tau_max - mc.domain.tau_min));
        mc.coeffs.birth = [beta](const Vec2&, double, double, double) { return beta; };
        mc.solution = [](const Point&) { return 1.0; };
        mc.use_birth = true;
    } else {
        throw InputError("unknown manufactured case '" + name + "'");
    }
    return mc;
}

double fit_order(const std::vector<double>& h, const std::vector<double>& e) {
    const std::size_t n = h.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(h[i]), y = std::log(e[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceStudy convergence_study(const ManufacturedCase& mc, int levels, int base_nodes) {
    if (levels < 3) throw InputError("convergence_study needs levels >= 3");
    ConvergenceStudy st;
    for (int k = 0; k < levels; ++k) {
        const int nodes = (base_nodes - 1) * (1 << k) + 1;
        ForwardProblem pb;
        pb.domain = mc.domain;
        pb.grid = build_grid(mc.domain, {nodes});
        pb.coeffs = mc.coeffs;
        Field exact = Field::sample(pb.grid, mc.solution, "u*");
        pb.source = mms_source(exact, mc.coeffs);
        pb.initial = mc.solution;  // t = 0 in the state points
        if (!mc.use_birth) pb.age_boundary = mc.solution;
        pb.size_boundary = mc.solution;
        Trajectory tr = solve_forward(pb);
        double err = 0.0;
        const Grid& g = *pb.grid;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double d = tr.u[i] - exact[i];
            err += trapezoid_weight(g, g.unravel(i)) * d * d;
        }
        st.nodes.push_back(nodes);
        st.h.push_back(g.axis(0).h);
        st.errors.push_back(std::sqrt(err));
    }
    for (int k = 0; k + 1 < levels; ++k) {
        if (st.errors[k + 1] > st.errors[k])
            st.warnings.push_back("non-monotone error between " + std::to_string(st.nodes[k]) + " and " +
                                  std::to_string(st.nodes[k + 1]) + " nodes");
        st.pair_orders.push_back(st.errors[k + 1] > 0.0 ? std::log2(st.errors[k] / st.errors[k + 1]) : 0.0);
    }
    const bool all_positive =
        std::all_of(st.errors.begin(), st.errors.end(), [](double e) { return e > 0.0; });
    st.fitted_order = all_positive ? fit_order(st.h, st.errors) : 0.0;
    return st;
}

}  // namespace carleman_lab
