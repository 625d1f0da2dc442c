#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "carleman_lab/grid.hpp"

namespace carleman_lab {

// Model data of the structured population equation.
//   diffusion: a_ij(x), symmetric
//   drift:     b_k(x,t,a,tau)
//   reaction:  c(x,t,a,tau)
//   growth:    g(tau) > 0 with analytic derivative
//   birth:     beta(x, a, tau, tau_src), integrated against u(x,t,a,tau_src)
struct CoefficientSet {
    std::string name;
    int spatial_dim = 1;
    std::function<Mat2(const Vec2&)> diffusion;
    std::function<Vec2(const Point&)> drift;
    std::function<double(const Point&)> reaction;
    std::function<double(double)> growth;
    std::function<double(double)> growth_derivative;
    std::function<double(const Vec2&, double, double, double)> birth;
    double sigma1 = 1.0;
};

std::vector<std::string> coefficient_preset_names();

// Throws InputError naming the preset when it is unknown.
CoefficientSet coefficient_preset(const std::string& name, int spatial_dim);

// Structural checks: symmetry of a at x-nodes, g > 0 and finite data at nodes.
void validate_coefficients(const CoefficientSet& coeffs, const Grid& grid);

struct EllipticityEstimate {
    double estimate = 0.0;
    bool meets_declared = false;
};

// Minimum of xi^T A(x) xi over sampled x in Omega and unit xi. Throws
// NumericalError when the estimate is not positive.
EllipticityEstimate check_ellipticity(const CoefficientSet& coeffs, const SpatialDomain& omega,
                                      int sample_count, std::uint64_t seed = 7);

// Smallest eigenvalue of the n x n leading block of A.
double min_eigenvalue(const Mat2& A, int n);

// Piecewise-linear table of one coordinate, loaded from a two-column CSV.
struct Table1D {
    std::vector<double> coord;
    std::vector<double> value;

    double operator()(double s) const;
    double slope(double s) const;
};

Table1D load_table_csv(const std::string& path);

// Replace parts of `base` by tabulated data. Keys: diffusion (x0 -> isotropic
// a), drift (x0 -> b_0), reaction (x0 -> c), growth (tau -> g). Each value
// is a CSV path; tabulated functions depend on their single coordinate only.
CoefficientSet with_tables(CoefficientSet base,
                           const std::vector<std::pair<std::string, std::string>>& tables);

}  // namespace carleman_lab
