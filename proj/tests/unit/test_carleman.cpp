#include <doctest.h>

#include <cmath>

#include "carleman_lab/carleman.hpp"
#include "carleman_lab/errors.hpp"
#include "carleman_lab/forward.hpp"
#include "carleman_lab/operators.hpp"

using namespace carleman_lab;

namespace {

CarlemanWeight sweep_weight(double s, double lam) {
    CarlemanWeight w;
    w.d = ramp_weight(0.75, 0.25, 1.0, 1);
    w.beta_w = 0.25;
    w.s = s;
    w.lambda = lam;
    return w;
}

BumpSpec centered_bump(double half_width) {
    BumpSpec b;
    b.center = {0.5, 0.5, 0.5, 0.5};
    b.half_width.assign(4, half_width);
    return b;
}

// Lw = L0~ w - a w_xx with the library stencils, for comparison.
Field principal_L(const Field& w, const CoefficientSet& c) {
    Field lt = apply_L0_tilde(w, c);
    CoefficientSet k = c;
    k.drift = [](const Point&) { return Vec2{0, 0}; };
    k.reaction = [](const Point&) { return 0.0; };
    Field kk = apply_K(w, k);
    for (std::size_t i = 0; i < lt.size(); ++i) lt[i] -= kk[i];
    return lt;
}

bool off_outer_layer(const Grid& g, std::size_t f) { return !g.near_face(g.unravel(f), 1); }

}  // namespace

TEST_CASE("eval_weight examples") {
    CarlemanWeight w = sweep_weight(1.0, 2.0);
    Point p;
    p.x[0] = 0.3;
    p.t = 0.5;
    p.a = 0.5;
    p.tau = 0.5;
    WeightValue v = eval_weight(w, p);
    CHECK(v.psi == doctest::Approx(w.d.value(p.x)));
    CHECK(v.phi == doctest::Approx(std::exp(2.0 * w.d.value(p.x))));

    CarlemanWeight b;
    b.d = bowl_weight(1);
    b.beta_w = 1.0;
    b.center = {0.0, 0.0, 0.0};
    // x = 0, squared offsets 0.5 + 0.3 + 0.2 = 1
    Point q;
    q.t = std::sqrt(0.5);
    q.a = std::sqrt(0.3);
    q.tau = std::sqrt(0.2);
    v = eval_weight(b, q);
    CHECK(v.psi == doctest::Approx(0.0).epsilon(1e-15).scale(1.0));
    CHECK(v.phi == doctest::Approx(1.0));
}

TEST_CASE("sigma_field examples") {
    auto g = build_grid(DomainSpec::unit(1), {9, 3, 3, 3});
    CoefficientSet c = coefficient_preset("constant", 1);
    CarlemanWeight w;
    w.d = bowl_weight(1);
    SigmaField sf = sigma_field(c, w, *g);
    for (std::size_t i = 0; i < sf.sigma.size(); ++i) {
        const double x = sf.sigma.grid().point(i).x[0];
        CHECK(sf.sigma[i] == doctest::Approx(4.0 * x * x));
    }
    CHECK(sf.sigma0 == 0.0);
    w.d = ramp_weight(1.0, 0.0, 0.0, 1);
    const SigmaField ramp = sigma_field(c, w, *g);
    for (double v : ramp.sigma.values()) CHECK(v == 1.0);

    auto g2 = build_grid(DomainSpec::unit(2), {4, 4, 3, 3, 3});
    CoefficientSet c2 = coefficient_preset("constant", 2);
    c2.diffusion = [](const Vec2&) { return Mat2{{{2.0, 1.0}, {1.0, 2.0}}}; };
    w.d = ramp_weight(1.0, 0.0, 0.0, 2);
    const SigmaField mat = sigma_field(c2, w, *g2);
    for (double v : mat.sigma.values()) CHECK(v == 2.0);
}

TEST_CASE("conjugation degenerate cases") {
    auto g = build_grid(DomainSpec::unit(1), {11});
    CoefficientSet c = coefficient_preset("logistic-growth", 1);
    Field w = sample_bump(centered_bump(0.3), g);
    Field L = principal_L(w, c);

    SUBCASE("s = 0") {
        ConjugatedResult r = conjugated_apply(w, sweep_weight(0.0, 1.0), c);
        PDecomposition d = decompose_P(w, sweep_weight(0.0, 1.0), c);
        Field lt = apply_L0_tilde(w, c);
        for (std::size_t f = 0; f < w.size(); ++f) {
            if (!off_outer_layer(*g, f)) continue;
            CHECK(r.direct[f] == doctest::Approx(L[f]).epsilon(1e-13).scale(1.0));
            CHECK(r.expanded[f] == doctest::Approx(L[f]).epsilon(1e-13).scale(1.0));
            CHECK(d.p2[f] == doctest::Approx(lt[f]).epsilon(1e-13).scale(1.0));
            CHECK(d.p1[f] == doctest::Approx(L[f] - lt[f]).epsilon(1e-13).scale(1.0));
        }
    }
    SUBCASE("constant phi") {
        CarlemanWeight k;
        k.d = ramp_weight(0.0, 0.0, 0.0, 1);
        k.beta_w = 0.0;
        k.s = 7.0;
        k.lambda = 3.0;
        ConjugatedResult r = conjugated_apply(w, k, c);
        for (std::size_t f = 0; f < w.size(); ++f) {
            if (!off_outer_layer(*g, f)) continue;
            CHECK(r.direct[f] == doctest::Approx(L[f]).epsilon(1e-13).scale(1.0));
            CHECK(r.expanded[f] == doctest::Approx(L[f]).epsilon(1e-13).scale(1.0));
        }
    }
    SUBCASE("support violation") {
        Field wide = sample_bump(centered_bump(0.49), g);
        CHECK_THROWS_AS(conjugated_apply(wide, sweep_weight(1.0, 1.0), c), InputError);
    }
}

TEST_CASE("P1 + P2 regroups the expanded form exactly") {
    auto g = build_grid(DomainSpec::unit(1), {13});
    CoefficientSet c = coefficient_preset("logistic-growth", 1);
    BumpOptions o;
    auto specs = random_bumps(*g, 3, 99, o);
    for (const auto& bs : specs) {
        Field w = sample_bump(bs, g);
        PDecomposition d = decompose_P(w, sweep_weight(4.0, 2.0), c);
        const double scale = d.expanded.max_abs();
        CHECK(scale > 0.0);
        double worst = 0.0;
        for (std::size_t f = 0; f < w.size(); ++f) worst = std::max(worst, std::abs(d.p1[f] + d.p2[f] - d.expanded[f]));
        CHECK(worst <= 1e-12 * scale);
    }
    Field zero(g, 0.0);
    PDecomposition z = decompose_P(zero, sweep_weight(4.0, 2.0), c);
    CHECK(z.p1.max_abs() == 0.0);
    CHECK(z.p2.max_abs() == 0.0);
}

TEST_CASE("a1_factor does not depend on s") {
    auto g = build_grid(DomainSpec::unit(1), {9});
    CoefficientSet c = coefficient_preset("logistic-growth", 1);
    Field w = sample_bump(centered_bump(0.3), g);
    PDecomposition d4 = decompose_P(w, sweep_weight(4.0, 2.0), c);
    PDecomposition d64 = decompose_P(w, sweep_weight(64.0, 2.0), c);
    CHECK(d4.a1_factor.values() == d64.a1_factor.values());
}

TEST_CASE("direct and expanded conjugation agree at second order") {
    CoefficientSet c = coefficient_preset("logistic-growth", 1);
    BumpSpec b = centered_bump(0.36);
    double err[2];
    int counts[2] = {17, 33};
    for (int k = 0; k < 2; ++k) {
        auto g = build_grid(DomainSpec::unit(1), {counts[k]});
        ConjugatedResult r = conjugated_apply(sample_bump(b, g), sweep_weight(4.0, 2.0), c);
        double m = 0.0;
        for (std::size_t f = 0; f < r.direct.size(); ++f) m = std::max(m, std::abs(r.direct[f] - r.expanded[f]));
        err[k] = m;
    }
    CHECK(std::log2(err[0] / err[1]) >= 1.8);
}

TEST_CASE("Carleman integrals: zero, homogeneity, positivity") {
    auto g = build_grid(DomainSpec::unit(1), {11});
    CoefficientSet c = coefficient_preset("logistic-growth", 1);
    CarlemanWeight w = sweep_weight(8.0, 2.0);
    Field zero(g, 0.0);
    LhsComponents z = carleman_lhs(zero, w, c);
    CHECK(std::exp(z.log_transport) == 0.0);
    CHECK(std::exp(z.log_gradient) == 0.0);
    CHECK(std::exp(z.log_zeroth) == 0.0);
    CHECK(std::exp(carleman_rhs(zero, w, c)) == 0.0);

    Field u = sample_bump(centered_bump(0.3), g);
    Field u2 = u;
    for (auto& v : u2.values()) v *= 2.0;
    LhsComponents a = carleman_lhs(u, w, c), b = carleman_lhs(u2, w, c);
    CHECK(std::exp(b.log_transport - a.log_transport) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::exp(b.log_gradient - a.log_gradient) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::exp(b.log_zeroth - a.log_zeroth) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::exp(carleman_rhs(u2, w, c) - carleman_rhs(u, w, c)) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::isfinite(a.log_transport));
    CHECK(std::isfinite(a.log_zeroth));
}

TEST_CASE("Carleman integrals match an analytic-derivative quadrature") {
    // Independent oracle: exact derivatives of the bump, finer trapezoid grid.
    CoefficientSet c = coefficient_preset("logistic-growth", 1);
    CarlemanWeight w = sweep_weight(2.0, 1.0);
    const double cw = 0.3, cx = 0.5;
    auto k1 = [&](double z) {
        double r = (z - cx) / cw;
        return std::abs(r) < 1 ? std::pow(1 - r * r, 4) : 0.0;
    };
    auto k1p = [&](double z) {
        double r = (z - cx) / cw;
        return std::abs(r) < 1 ? -8.0 * r / cw * std::pow(1 - r * r, 3) : 0.0;
    };
    auto k1pp = [&](double z) {
        double r = (z - cx) / cw;
        return std::abs(r) < 1 ? (-8.0 / (cw * cw)) * (std::pow(1 - r * r, 3) - 6.0 * r * r * std::pow(1 - r * r, 2)) : 0.0;
    };
    const int M = 49;
    double o_tr = 0, o_gr = 0, o_ze = 0, o_rhs = 0;
    const double h = 1.0 / (M - 1);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            for (int k = 0; k < M; ++k)
                for (int l = 0; l < M; ++l) {
                    const double x = i * h, t = j * h, a = k * h, s = l * h;
                    const double fx = k1(x), ft = k1(t), fa = k1(a), fs = k1(s);
                    const double u = fx * ft * fa * fs;
                    if (u == 0.0) continue;
                    Point p;
                    p.x[0] = x;
                    p.t = t;
                    p.a = a;
                    p.tau = s;
                    const double g = c.growth(s);
                    const double l0 = fx * (k1p(t) * fa * fs + ft * k1p(a) * fs + g * ft * fa * k1p(s)) + c.growth_derivative(s) * u;
                    const double ux = k1p(x) * ft * fa * fs, uxx = k1pp(x) * ft * fa * fs;
                    const double K = c.diffusion(p.x)[0][0] * uxx - c.drift(p)[0] * ux - c.reaction(p) * u;
                    const double phi = w.phi(p), e = std::exp(2.0 * w.s * phi), wq = std::pow(h, 4);
                    o_tr += wq * l0 * l0 / (w.s * phi) * e;
                    o_gr += wq * w.s * phi * ux * ux * e;
                    o_ze += wq * std::pow(w.s, 3) * std::pow(phi, 3) * u * u * e;
                    o_rhs += wq * (l0 - K) * (l0 - K) * e;
                }
    BumpSpec b = centered_bump(cw);
    double rel[2][4];
    int counts[2] = {17, 33};
    for (int k = 0; k < 2; ++k) {
        auto g = build_grid(DomainSpec::unit(1), {counts[k]});
        Field u = sample_bump(b, g);
        LhsComponents lhs = carleman_lhs(u, w, c);
        rel[k][0] = std::abs(std::exp(lhs.log_transport) / o_tr - 1.0);
        rel[k][1] = std::abs(std::exp(lhs.log_gradient) / o_gr - 1.0);
        rel[k][2] = std::abs(std::exp(lhs.log_zeroth) / o_ze - 1.0);
        rel[k][3] = std::abs(std::exp(carleman_rhs(u, w, c)) / o_rhs - 1.0);
    }
    for (int j = 0; j < 4; ++j) {
        CHECK(rel[1][j] < 0.05);
        CHECK(rel[1][j] < 0.5 * rel[0][j]);
    }
}

TEST_CASE("sweep_verify") {
    auto g = build_grid(DomainSpec::unit(1), {17, 13, 13, 13});
    CoefficientSet c = coefficient_preset("logistic-growth", 1);
    CarlemanWeight w = sweep_weight(1.0, 1.0);
    SUBCASE("zero test function is skipped") {
        SweepResult r = sweep_verify({Field(g, 0.0)}, {4, 8}, {1}, w, c);
        REQUIRE(r.skipped.size() == 1);
        CHECK(r.skipped[0].find("degenerate test function") != std::string::npos);
        CHECK(r.rows.empty());
    }
    SUBCASE("single bump over s0..16 s0 stays bounded") {
        Field u = sample_bump(random_bumps(*g, 1, 5)[0], g);
        SweepResult r = sweep_verify({u}, {4, 8, 16, 32, 64}, {1, 2}, w, c);
        CHECK(r.passed);
        CHECK(r.rows.size() == 10);
        for (const auto& row : r.rows) CHECK(std::isfinite(row.log_ratio()));
        for (const auto& v : r.verdicts) CHECK(v.growth <= 1.5);
    }
    SUBCASE("rows are ordered by bump, lambda, s") {
        auto specs = random_bumps(*g, 2, 8);
        SweepResult r = sweep_verify({sample_bump(specs[0], g), sample_bump(specs[1], g)}, {8, 4}, {2, 1}, w, c);
        REQUIRE(r.rows.size() == 8);
        CHECK(r.rows[0].bump_id == 0);
        CHECK(r.rows[0].lambda == 2.0);
        CHECK(r.rows[0].s == 4.0);
        CHECK(r.rows[1].s == 8.0);
        CHECK(r.rows[7].bump_id == 1);
    }
}

TEST_CASE("adjoint identity") {
    CoefficientSet c = coefficient_preset("constant", 1);
    c.growth = [](double) { return 0.7; };
    auto g = build_grid(DomainSpec::unit(1), {5, 17, 17, 17});
    BumpSpec b = centered_bump(0.3);
    BumpSpec b2 = b;
    b2.center = {0.5, 0.45, 0.55, 0.5};
    Field u = sample_bump(b, g), v = sample_bump(b2, g);
    CHECK(adjoint_check(Field(g, 0.0), v, c) == 0.0);
    CHECK(adjoint_check(u, Field(g, 0.0), c) == 0.0);
    CHECK(adjoint_check(u, v, c) <= 1e-14);

    // g = tau: int u L0~ u -> -1/2 int u^2
    c.growth = [](double tau) { return tau; };
    c.growth_derivative = [](double) { return 1.0; };
    double gap[2];
    int counts[2] = {17, 33};
    for (int k = 0; k < 2; ++k) {
        auto gk = build_grid(DomainSpec::unit(1), {5, counts[k], counts[k], counts[k]});
        Field w = sample_bump(b, gk);
        Field lt = apply_L0_tilde(w, c);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t f = 0; f < w.size(); ++f) {
            const double q = trapezoid_weight(*gk, gk->unravel(f));
            lhs += q * w[f] * lt[f];
            rhs += -0.5 * q * w[f] * w[f];
        }
        gap[k] = std::abs(lhs - rhs);
    }
    CHECK(gap[1] < gap[0]);
    CHECK(std::log2(gap[0] / gap[1]) > 1.8);
    CHECK_THROWS_AS(adjoint_check(Field(g, 1.0), Field(g, 1.0), c), InputError);
}
