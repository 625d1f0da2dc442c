#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "carleman_lab/errors.hpp"
#include "carleman_lab/forward.hpp"
#include "carleman_lab/operators.hpp"

using namespace carleman_lab;

namespace {

ForwardProblem base_problem(int nodes, const std::string& preset = "separable-birth") {
    ForwardProblem pb;
    pb.domain = DomainSpec::unit(1);
    pb.grid = build_grid(pb.domain, {nodes});
    pb.coeffs = coefficient_preset(preset, 1);
    pb.initial = [](const Point& p) {
        double q = p.tau * (1.0 - p.tau);
        return (1.0 + 0.5 * std::cos(M_PI * p.x[0])) * std::exp(-p.a) * 30.0 * q * q;
    };
    return pb;
}

}  // namespace

TEST_CASE("zero data gives a bitwise zero trajectory") {
    for (const char* preset : {"separable-birth", "logistic-growth"}) {
        ForwardProblem pb = base_problem(9, preset);
        pb.initial = [](const Point&) { return 0.0; };
        Trajectory tr = solve_forward(pb);
        std::vector<double> zeros(tr.u.size(), 0.0);
        CHECK(std::memcmp(tr.u.values().data(), zeros.data(), zeros.size() * sizeof(double)) == 0);
        CHECK(tr.steps() == 9);
    }
}

TEST_CASE("zero preservation in two space dimensions") {
    ForwardProblem pb;
    pb.domain = DomainSpec::unit(2);
    pb.grid = build_grid(pb.domain, {5});
    pb.coeffs = coefficient_preset("separable-birth", 2);
    pb.initial = [](const Point&) { return 0.0; };
    Trajectory tr = solve_forward(pb);
    std::vector<double> zeros(tr.u.size(), 0.0);
    CHECK(std::memcmp(tr.u.values().data(), zeros.data(), zeros.size() * sizeof(double)) == 0);
}

TEST_CASE("CFL violation is refused") {
    ForwardProblem pb = base_problem(9);
    pb.grid = build_grid(pb.domain, {9, 5, 9, 9});
    CHECK_THROWS_AS(solve_forward(pb), InputError);
}

TEST_CASE("characteristics oracle") {
    // a = 1, b = 0, c = c0, g = g0, beta = 0, x-constant data:
    // u = p0 exp(-c0 t) on {a > t, tau > g0 t}, zero elsewhere.
    const double c0 = 0.7, g0 = 0.5;
    double err[2];
    int counts[2] = {33, 65};
    for (int k = 0; k < 2; ++k) {
        ForwardProblem pb;
        pb.domain = DomainSpec::unit(1);
        pb.grid = build_grid(pb.domain, {5, counts[k], counts[k], counts[k]});
        pb.coeffs = coefficient_preset("constant", 1);
        pb.coeffs.reaction = [c0](const Point&) { return c0; };
        pb.coeffs.growth = [g0](double) { return g0; };
        pb.initial = [](const Point&) { return 2.0; };
        Trajectory tr = solve_forward(pb);
        const Grid& g = *pb.grid;
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            Point p = g.point(i);
            // stay O(1) away from the two characteristic fronts
            if (p.t < 0.25 || p.a < p.t + 0.2 || p.tau < g0 * p.t + 0.2) continue;
            worst = std::max(worst, std::abs(tr.u[i] - 2.0 * std::exp(-c0 * p.t)));
        }
        err[k] = worst;
    }
    CHECK(err[1] < 0.02);
    CHECK(err[1] < err[0]);
}

TEST_CASE("mms_source examples") {
    auto g = build_grid(DomainSpec::unit(1), {9});
    CoefficientSet c = coefficient_preset("constant", 1);
    c.growth = [](double) { return 0.8; };
    CHECK(mms_source(Field(g, 1.0), c).max_abs() <= 1e-14);
    c.reaction = [](const Point&) { return 1.0; };
    Field f = mms_source(Field(g, 1.0), c);
    for (double v : f.values()) CHECK(v == doctest::Approx(1.0));

    // u* = sin(pi x) e^{-t} against the preset coefficients, symbolic oracle
    CoefficientSet lg = coefficient_preset("logistic-growth", 1);
    double worst[2];
    int counts[2] = {17, 33};
    for (int k = 0; k < 2; ++k) {
        auto gk = build_grid(DomainSpec::unit(1), {counts[k], counts[k], 3, 5});
        Field u = Field::sample(gk, [](const Point& p) { return std::sin(M_PI * p.x[0]) * std::exp(-p.t); });
        Field fk = mms_source(u, lg);
        worst[k] = 0.0;
        for (std::size_t i = 0; i < gk->size(); ++i) {
            auto idx = gk->unravel(i);
            if (idx[0] == 0 || idx[0] == counts[k] - 1) continue;
            Point p = gk->point(i);
            const double x = p.x[0], e = std::exp(-p.t), s = std::sin(M_PI * x);
            const double a = 0.2 * (1 + 0.25 * x * x), b = 0.1 * std::cos(M_PI * x), cc = 0.3 + 0.1 * x;
            const double gp = 0.6 * (1 - p.tau);
            const double oracle = -s * e + gp * s * e - (a * (-M_PI * M_PI * s * e) - b * M_PI * std::cos(M_PI * x) * e - cc * s * e);
            worst[k] = std::max(worst[k], std::abs(fk[i] - oracle));
        }
    }
    CHECK(worst[1] < 5e-3);
    CHECK(std::log2(worst[0] / worst[1]) > 1.8);
}

TEST_CASE("manufactured kernel case is reproduced exactly") {
    ConvergenceStudy st = convergence_study(manufactured_case("kernel"), 3, 5);
    for (double e : st.errors) CHECK(e <= 1e-13);
}

TEST_CASE("manufactured convergence orders") {
    SUBCASE("pure diffusion") {
        ConvergenceStudy st = convergence_study(manufactured_case("diffusion"), 3, 9);
        MESSAGE("diffusion errors " << st.errors[0] << " " << st.errors[1] << " " << st.errors[2]);
        CHECK(st.fitted_order >= 1.8);
        CHECK(st.warnings.empty());
    }
    SUBCASE("pure transport") {
        ConvergenceStudy st = convergence_study(manufactured_case("transport"), 3, 9);
        MESSAGE("transport order " << st.fitted_order);
        CHECK(st.fitted_order >= 0.9);
    }
    SUBCASE("fewer than three levels are refused") {
        CHECK_THROWS_AS(convergence_study(manufactured_case("diffusion"), 2, 9), InputError);
    }
}

TEST_CASE("population balance without birth and losses") {
    double rel[2];
    int counts[2] = {17, 33};
    for (int k = 0; k < 2; ++k) {
        ForwardProblem pb;
        pb.domain = DomainSpec::unit(1);
        pb.grid = build_grid(pb.domain, {9, counts[k], counts[k], counts[k]});
        pb.coeffs = coefficient_preset("logistic-growth", 1);
        pb.coeffs.reaction = [](const Point&) { return 0.0; };
        pb.coeffs.drift = [](const Point&) { return Vec2{0.0, 0.0}; };
        pb.initial = [](const Point& p) {
            auto bump = [](double z, double c, double w) {
                double r = (z - c) / w;
                return std::abs(r) < 1 ? std::pow(1 - r * r, 4) : 0.0;
            };
            return bump(p.a, 0.65, 0.25) * bump(p.tau, 0.6, 0.25);
        };
        Trajectory tr = solve_forward(pb);
        const Grid& g = *pb.grid;
        const int na = g.axis(2).nodes, ns = g.axis(3).nodes, nx = g.axis(0).nodes;
        const double hx = g.axis(0).h, ha = g.axis(2).h, hs = g.axis(3).h, ht = g.axis(1).h;
        const double g2 = pb.coeffs.growth(1.0);
        double mismatch = 0.0, total = 0.0;
        for (int n = 0; n + 1 < tr.steps(); ++n) {
            Field s = tr.slice(n);
            double out = 0.0;
            for (int x = 0; x < nx; ++x) {
                const double wx = (x == 0 || x == nx - 1) ? 0.5 * hx : hx;
                for (int j = 0; j < ns; ++j) {
                    const double ws = (j == 0 || j == ns - 1) ? 0.5 * hs : hs;
                    out += wx * ws * s[(static_cast<std::size_t>(x) * na + na - 1) * ns + j];
                }
                for (int i = 0; i < na; ++i) {
                    const double wa = (i == 0 || i == na - 1) ? 0.5 * ha : ha;
                    out += wx * wa * g2 * s[(static_cast<std::size_t>(x) * na + i) * ns + ns - 1];
                }
            }
            const double dP = tr.total_population[n + 1] - tr.total_population[n];
            mismatch += std::abs(dP + ht * out);
            total += ht * out;
        }
        CHECK(total > 0.0);
        rel[k] = mismatch / total;
    }
    MESSAGE("balance discrepancy " << rel[0] << " -> " << rel[1]);
    // first order: the discrepancy halves with h
    CHECK(rel[1] < 0.2);
    CHECK(rel[1] < 0.6 * rel[0]);
}

TEST_CASE("linearity in the initial data") {
    ForwardProblem p1 = base_problem(9);
    ForwardProblem p2 = base_problem(9);
    p2.initial = [](const Point& p) { return std::sin(M_PI * p.tau) * p.a * (1 + p.x[0]); };
    ForwardProblem p3 = base_problem(9);
    const double alpha = -1.7;
    auto f1 = p1.initial, f2 = p2.initial;
    p3.initial = [=](const Point& p) { return alpha * f1(p) + f2(p); };
    Trajectory t1 = solve_forward(p1), t2 = solve_forward(p2), t3 = solve_forward(p3);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < t3.u.size(); ++i) {
        worst = std::max(worst, std::abs(t3.u[i] - (alpha * t1.u[i] + t2.u[i])));
        scale = std::max(scale, std::abs(t3.u[i]));
    }
    CHECK(worst <= 1e-12 * scale);
}

TEST_CASE("initial mismatch is reported, not enforced") {
    ForwardProblem pb = base_problem(9);
    pb.initial = [](const Point&) { return 1.0; };
    Trajectory tr = solve_forward(pb);
    CHECK(tr.initial_inflow_mismatch == doctest::Approx(1.0));
    CHECK(tr.initial_birth_mismatch > 0.0);
}
