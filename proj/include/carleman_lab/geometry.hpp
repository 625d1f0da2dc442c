#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "carleman_lab/grid.hpp"
#include "carleman_lab/weight.hpp"

namespace carleman_lab {

struct WeightBase {
    std::string name;
    WeightFunction d;
    SpatialDomain omega1;                            // domain of validity
    std::function<bool(const Vec2&)> in_exceptional;  // omega, where grad d may vanish
    std::string exceptional_desc;
    double sup_norm = 1.0;  // max of d over the closure of omega1
};

// Kinds: "unit-ball" (d = 1 - |x|^2), "unit-interval" (d = sin(pi x) on (0,1)),
// "interval-extended" (d on (0, 1.3) with its critical point at 1.1).
WeightBase weight_catalog(const std::string& kind, int spatial_dim = 1);

struct WeightBaseCheck {
    int interior = 0;
    int boundary = 0;
    int gradient = 0;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

// Samples d > 0 inside omega1, d = 0 on its boundary, |grad d| > 0 off omega.
WeightBaseCheck verify_weight_base(const WeightBase& base, int samples, std::uint64_t seed = 1);

// Gamma = {x_axis = coord} restricted to the closure of Omega.
struct GammaFace {
    int axis = 0;
    double coord = 1.0;
};

struct UCGeometry {
    std::string name;
    WeightBase base;
    DomainSpec domain;  // Omega with T, a_max, tau interval
    SpatialDomain omega0;
    GammaFace gamma;
    double eps = 0.3;
    int N = 2;
    double beta_w = 1.0;
    double lambda = 1.0;
    std::array<double, 3> center{0.5, 0.5, 0.5};
    std::array<double, 4> mu{};
    std::string strict_subset_note;

    const SpatialDomain& omega() const { return domain.omega; }
    double offset2(const Point& p) const;
    double psi(const Point& p) const { return base.d.value(p.x) - beta_w * offset2(p); }
    double phi(const Point& p) const;
    bool in_D(const Point& p) const;       // x in closure(Omega), phi > mu1
    bool in_target(const Point& p) const;  // x in Omega0, |r| < eps / sqrt(N)
    bool near_gamma(const Vec2& x, double dist) const;
    double target_radius() const;
    CarlemanWeight weight(double s) const;
};

std::array<double, 4> level_values(double lambda, double dnorm, double beta_eps2, int N);

// Smallest N > 1 with d > 4 |d| / N on the sampled closure of Omega0.
int minimal_level_count(const WeightBase& base, const SpatialDomain& omega0, const SpatialDomain& omega);

// N absent: the minimal count, doubled. beta_w is the midpoint 0.75 |d| / eps^2.
UCGeometry build_uc_geometry(const WeightBase& base, const DomainSpec& domain, const SpatialDomain& omega0,
                             const GammaFace& gamma, double eps, std::optional<int> N, double lambda,
                             const std::array<double, 3>& center);

// Shipped geometries: "unit-interval" and "unit-ball".
std::vector<std::string> geometry_preset_names();
UCGeometry geometry_preset(const std::string& name, int spatial_dim = 1, double lambda = 1.0);

struct Counterexample {
    std::string kind;
    Point p;
    double phi;
};

struct InclusionReport {
    int target_samples = 0;
    int target_failures = 0;
    int domain_samples = 0;  // sampled points that fell in D
    int domain_failures = 0;
    int flip_pairs = 0;
    int flip_failures = 0;
    std::vector<Counterexample> counterexamples;
    bool passed() const { return target_failures == 0 && domain_failures == 0 && flip_failures == 0; }
};

// Random checks of the inclusion chain plus boundary-flip checks on `grid`
// (skipped when grid is null).
InclusionReport verify_inclusions(const UCGeometry& geo, int sample_count, std::uint64_t seed,
                                  const GridPtr& grid = nullptr);

// Quintic smoothstep cut-off in phi.
struct Cutoff {
    double mu2;
    double mu3;

    double z(double phi) const { return (phi - mu2) / (mu3 - mu2); }
    double value(double phi) const;
    double d1(double phi) const;  // d chi / d phi
    double d2(double phi) const;
};

struct ChiDerivatives {
    double chi;
    Vec2 grad;
    Mat2 hess;
    double l0_tilde;  // (d_t + d_a + g d_tau) chi
};

ChiDerivatives chi_derivatives(const UCGeometry& geo, const Point& p, double growth);

Field cutoff_chi(const UCGeometry& geo, const GridPtr& grid);

// (|u|^2 + |grad_x u|^2) integrated over nodes where mask holds; square root.
double h10_norm(const Field& u, const std::function<bool(const Point&)>& mask);

}  // namespace carleman_lab
