#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "carleman_lab/coefficients.hpp"
#include "carleman_lab/forward.hpp"
#include "carleman_lab/geometry.hpp"

namespace carleman_lab {

// Traces on Gamma of a space-time field. Node arrays follow the order of
// `nodes` (flat indices into the space-time grid).
struct CauchyData {
    GridPtr grid;
    GammaFace gamma;
    bool high_face = true;  // Gamma is the upper face of its axis
    std::vector<std::size_t> nodes;
    std::vector<double> u;
    std::vector<double> du_normal;      // d/dx_axis, one-sided second order
    std::vector<double> du_tangential;  // d/dx of the other axis (zero for n = 1)
    double noise = 0.0;
};

// noise: relative level; each trace gets level * max|trace| * U(-1, 1).
CauchyData extract_cauchy(const Field& u, const UCGeometry& geo, double noise = 0.0, std::uint64_t seed = 1);
inline CauchyData extract_cauchy(const Trajectory& tr, const UCGeometry& geo, double noise = 0.0,
                                 std::uint64_t seed = 1) {
    return extract_cauchy(tr.u, geo, noise, seed);
}

enum class Preconditioner { ldlt, jacobi };

struct ReconstructOptions {
    double s = 8.0;
    double alpha = 1e-6;
    double penalty = 1e6;  // data rows relative to the weighted residual rows
    double tolerance = 1e-13;
    int max_iterations = 400000;
    // jacobi needs O(1/sqrt(alpha)) iterations on these systems
    Preconditioner preconditioner = Preconditioner::ldlt;
};

struct ContinuationResult {
    Field field;  // zero outside D
    double equation_residual = 0.0;  // Carleman-weighted, normalized by max e^{2 s phi} on D
    double data_mismatch = 0.0;
    double interior_error = -1.0;  // relative L2 on the target region; -1 without truth
    double h10_norm = 0.0;
    int iterations = 0;
    double cg_error = 0.0;
    std::size_t unknowns = 0;
    std::size_t residual_rows = 0;
    std::size_t target_nodes = 0;
};

// Quasi-reversibility: minimizes the weighted residual of the discrete step
// map on D, a penalty on the Cauchy data and alpha |v|^2_{H10(D)}.
ContinuationResult reconstruct(const CauchyData& data, const UCGeometry& geo, const CoefficientSet& coeffs,
                               const ReconstructOptions& opt, const Field* truth = nullptr);

double decay_bound(double mu3, double mu4, double s);

struct DecayRow {
    double s;
    double bound;
    double log_bound;
    double measured;
    double log_measured;
};

struct DecayTable {
    std::vector<DecayRow> rows;  // sorted by s
    bool bound_decreasing = true;
    bool within_bound = true;  // measured(s) <= measured(s_min) bound(s) / bound(s_min)
    bool degenerate = false;   // zero commutator or zero target norm
    bool passed() const { return bound_decreasing && within_bound && !degenerate; }
};

// measured = weighted commutator norm on {mu2 <= phi <= mu3} over the
// weighted H10 norm on the target region, both with e^{2 s phi}.
DecayTable decay_experiment(const Field& u, const UCGeometry& geo, const CoefficientSet& coeffs,
                            std::vector<double> s_values);

}  // namespace carleman_lab
