#include <doctest.h>

#include <cmath>

#include "carleman_lab/continuation.hpp"
#include "carleman_lab/errors.hpp"

using namespace carleman_lab;

namespace {

double initial_density(const Point& p) {
    const double q = p.tau * (1.0 - p.tau);
    return (1.0 + 0.5 * std::cos(M_PI * p.x[0])) * std::exp(-p.a) * 30.0 * q * q;
}

Trajectory run(const UCGeometry& geo, const std::vector<int>& counts) {
    ForwardProblem pb;
    pb.domain = geo.domain;
    pb.grid = build_grid(pb.domain, counts);
    pb.coeffs = coefficient_preset("separable-birth", geo.domain.spatial_dim());
    pb.initial = initial_density;
    return solve_forward(pb);
}

const UCGeometry& interval() {
    static const UCGeometry g = geometry_preset("unit-interval");
    return g;
}

const Trajectory& interval_run() {
    static const Trajectory tr = run(interval(), {17});
    return tr;
}

const CoefficientSet& birth_coeffs() {
    static const CoefficientSet c = coefficient_preset("separable-birth", 1);
    return c;
}

}  // namespace

TEST_CASE("extract_cauchy basics") {
    const UCGeometry& geo = interval();
    GridPtr g = build_grid(geo.domain, {9});
    CauchyData z = extract_cauchy(Field(g, 0.0), geo);
    CHECK(z.nodes.size() == 9u * 9u * 9u);
    for (std::size_t q = 0; q < z.nodes.size(); ++q) {
        CHECK(z.u[q] == 0.0);
        CHECK(z.du_normal[q] == 0.0);
    }
    CHECK(z.high_face);

    Field c = Field::sample(g, [](const Point& p) { return p.t + p.a * p.tau; });
    CauchyData cd = extract_cauchy(c, geo);
    for (std::size_t q = 0; q < cd.nodes.size(); ++q) {
        CHECK(std::abs(cd.du_normal[q]) <= 1e-12);
        CHECK(cd.u[q] == c[cd.nodes[q]]);
    }

    UCGeometry ball = geometry_preset("unit-ball", 2);
    GridPtr g2 = build_grid(ball.domain, {9});
    CauchyData cb = extract_cauchy(Field::sample(g2, [](const Point& p) { return 1.0 + p.t * p.a; }), ball);
    CHECK_FALSE(cb.high_face);
    for (std::size_t q = 0; q < cb.nodes.size(); ++q) {
        CHECK(std::abs(cb.du_tangential[q]) <= 1e-12);
        CHECK(std::abs(cb.du_normal[q]) <= 1e-12);
    }
}

TEST_CASE("extract_cauchy rejects a misaligned Gamma and bad noise") {
    UCGeometry geo = interval();
    GridPtr g = build_grid(geo.domain, {9});
    geo.gamma.coord = 0.97;
    try {
        extract_cauchy(Field(g, 1.0), geo);
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()) == "Gamma is not aligned with a grid face");
    }
    CHECK_THROWS_AS(extract_cauchy(Field(g, 1.0), interval(), -0.1), InputError);
}

TEST_CASE("one-sided normal derivative against a centered stencil") {
    // the forward solution at x = 1 satisfies u_x = 0, and the one-sided and
    // centered estimates one node inward differ by O(h)
    const UCGeometry& geo = interval();
    double diff[2];
    int counts[2] = {17, 33};
    for (int k = 0; k < 2; ++k) {
        Trajectory tr = run(geo, {counts[k], 9, 9, 9});
        CauchyData cd = extract_cauchy(tr, geo);
        const Grid& g = tr.u.grid();
        const std::size_t sx = g.stride(0);
        const double h = g.axis(0).h;
        double worst = 0.0;
        for (std::size_t q = 0; q < cd.nodes.size(); ++q) {
            const std::size_t i = cd.nodes[q];
            const double centered = (tr.u[i] - tr.u[i - 2 * sx]) / (2.0 * h);
            worst = std::max(worst, std::abs(cd.du_normal[q] - centered));
        }
        diff[k] = worst;
    }
    MESSAGE("one-sided vs centered " << diff[0] << " -> " << diff[1]);
    CHECK(diff[1] < 0.6 * diff[0]);
}

TEST_CASE("noise is seeded and bounded") {
    const Trajectory& tr = interval_run();
    CauchyData a = extract_cauchy(tr, interval(), 0.01, 9);
    CauchyData b = extract_cauchy(tr, interval(), 0.01, 9);
    CauchyData c = extract_cauchy(tr, interval(), 0.0);
    CHECK(a.u == b.u);
    double m = 0.0;
    for (double v : c.u) m = std::max(m, std::abs(v));
    for (std::size_t q = 0; q < a.u.size(); ++q) CHECK(std::abs(a.u[q] - c.u[q]) <= 0.01 * m);
    CHECK(a.u != c.u);
}

TEST_CASE("reconstruction from zero data is zero") {
    const UCGeometry& geo = interval();
    GridPtr g = build_grid(geo.domain, {9});
    CauchyData z = extract_cauchy(Field(g, 0.0), geo);
    for (double alpha : {1e-2, 1e-6}) {
        ReconstructOptions o;
        o.alpha = alpha;
        ContinuationResult r = reconstruct(z, geo, birth_coeffs(), o);
        CHECK(r.field.max_abs() == 0.0);
        CHECK(r.h10_norm == 0.0);
        CHECK(r.interior_error == -1.0);
    }
    ReconstructOptions bad;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(reconstruct(z, geo, birth_coeffs(), bad), InputError);
}

TEST_CASE("reconstruction from exact and noisy data") {
    const UCGeometry& geo = interval();
    const Trajectory& tr = interval_run();
    CauchyData exact = extract_cauchy(tr, geo);
    ReconstructOptions o;
    o.alpha = 1e-6;
    ContinuationResult r = reconstruct(exact, geo, birth_coeffs(), o, &tr.u);
    MESSAGE("exact-data interior error " << r.interior_error);
    CHECK(r.target_nodes > 0);
    CHECK(r.interior_error <= 0.1);
    CHECK(r.equation_residual >= 0.0);
    CHECK(r.data_mismatch >= 0.0);

    ReconstructOptions o3 = o;
    o3.alpha = 1e3 * o.alpha;
    CHECK(r.interior_error <= reconstruct(exact, geo, birth_coeffs(), o3, &tr.u).interior_error);

    CauchyData noisy = extract_cauchy(tr, geo, 0.01, 3);
    ContinuationResult rn = reconstruct(noisy, geo, birth_coeffs(), o3, &tr.u);
    MESSAGE("1% noise interior error " << rn.interior_error);
    CHECK(rn.interior_error <= 0.3);
}

TEST_CASE("equation residual does not increase as alpha decreases") {
    const UCGeometry& geo = interval();
    const Trajectory& tr = interval_run();
    CauchyData exact = extract_cauchy(tr, geo);
    double prev = INFINITY;
    for (double alpha : {1e-2, 1e-4, 1e-6}) {
        ReconstructOptions o;
        o.alpha = alpha;
        const double res = reconstruct(exact, geo, birth_coeffs(), o).equation_residual;
        CHECK(res <= prev);
        prev = res;
    }
}

TEST_CASE("reconstruction is linear in the data") {
    const UCGeometry& geo = interval();
    const Trajectory& tr = interval_run();
    CauchyData d1 = extract_cauchy(tr, geo);
    CauchyData d2 = extract_cauchy(tr, geo, 0.05, 17);
    CauchyData d3 = d1;
    const double c = -2.5;
    for (std::size_t q = 0; q < d3.u.size(); ++q) {
        d3.u[q] = c * d1.u[q] + d2.u[q];
        d3.du_normal[q] = c * d1.du_normal[q] + d2.du_normal[q];
    }
    // the deviation grows like cond ~ 1/alpha; 1e-2 keeps it near rounding
    ReconstructOptions o;
    o.alpha = 1e-2;
    Field r1 = reconstruct(d1, geo, birth_coeffs(), o).field;
    Field r2 = reconstruct(d2, geo, birth_coeffs(), o).field;
    Field r3 = reconstruct(d3, geo, birth_coeffs(), o).field;
    double worst = 0.0;
    for (std::size_t i = 0; i < r3.size(); ++i) worst = std::max(worst, std::abs(r3[i] - (c * r1[i] + r2[i])));
    CHECK(worst <= 1e-8 * r3.max_abs());
}

TEST_CASE("iteration cap is reported") {
    const UCGeometry& geo = interval();
    CauchyData exact = extract_cauchy(interval_run(), geo);
    ReconstructOptions o;
    o.alpha = 1e-6;
    o.preconditioner = Preconditioner::jacobi;
    o.max_iterations = 5;
    CHECK_THROWS_AS(reconstruct(exact, geo, birth_coeffs(), o), NumericalError);
}

TEST_CASE("decay bound examples") {
    const double mu3 = std::exp(0.65), mu4 = std::exp(0.9);
    CHECK(mu3 == doctest::Approx(1.9155).epsilon(1e-4));
    const double b10 = decay_bound(mu3, mu4, 10.0);
    CHECK(b10 == doctest::Approx(std::exp(-20.0 * (mu4 - mu3))).epsilon(1e-15));
    CHECK(b10 == doctest::Approx(1.9e-5).epsilon(0.03));
    CHECK(decay_bound(mu3, mu4, 0.0) == 1.0);
    CHECK(decay_bound(mu3, mu4, 20.0) == doctest::Approx(b10 * b10).epsilon(1e-13));
}

TEST_CASE("decay experiment on a forward solution") {
    const UCGeometry& geo = interval();
    DecayTable t = decay_experiment(interval_run().u, geo, birth_coeffs(), {10, 0, 2, 5, 20});
    REQUIRE(t.rows.size() == 5);
    CHECK(t.rows[0].s == 0.0);
    CHECK(t.rows[0].bound == 1.0);
    CHECK(t.passed());
    const double slope = -2.0 * (geo.mu[3] - geo.mu[2]);
    for (const DecayRow& r : t.rows) {
        CHECK(r.log_bound == doctest::Approx(slope * r.s).epsilon(1e-14));
        CHECK(std::isfinite(r.log_measured));
    }

    GridPtr g = interval_run().u.grid_ptr();
    DecayTable z = decay_experiment(Field(g, 0.0), geo, birth_coeffs(), {0, 1});
    CHECK(z.degenerate);
    CHECK_FALSE(z.passed());
    CHECK_THROWS_AS(decay_experiment(Field(g, 0.0), geo, birth_coeffs(), {}), InputError);
}
