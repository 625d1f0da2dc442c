#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "carleman_lab/coefficients.hpp"
#include "carleman_lab/grid.hpp"

namespace carleman_lab {

using PointFunction = std::function<double(const Point&)>;

struct ForwardProblem {
    DomainSpec domain;
    GridPtr grid;  // space-time grid (x..., t, a, tau)
    CoefficientSet coeffs;
    PointFunction initial;        // p(x, a, tau)
    std::optional<Field> source;  // f on `grid`; absent means homogeneous
    // Manufactured-solution hooks. When set they replace the birth law at
    // a = 0 and the zero inflow at tau = tau_min.
    PointFunction age_boundary;
    PointFunction size_boundary;
};

struct Trajectory {
    Field u;  // on the space-time grid
    GridPtr state;
    std::vector<double> times;
    std::vector<double> total_population;
    std::vector<double> max_norm;
    double initial_birth_mismatch = 0.0;   // max |p(x,0,tau) - B[p](x,tau)|
    double initial_inflow_mismatch = 0.0;  // max |p(x,a,tau_min)|

    int steps() const { return static_cast<int>(times.size()); }
    Field slice(int n) const;
};

struct StencilEntry {
    std::size_t col;
    double value;
};

// Pieces of one time step shared by the forward solver and the
// reconstruction residual: upwind transport factors and the x-rows of K.
class StepOperator {
public:
    StepOperator(const Grid& full, const CoefficientSet& coeffs);

    const Grid& spatial() const { return *spatial_; }
    const GridPtr& spatial_ptr() const { return spatial_; }
    double ht() const { return ht_; }
    double nu_a() const { return ht_ / ha_; }
    double nu_tau() const { return ht_ / htau_; }
    // g at the face tau_j + h/2, capped at tau_max (outflow face).
    double face_growth(int j) const { return face_g_[j]; }
    double cfl() const;

    // Row of K at spatial node xflat, coefficients evaluated at p (its x is
    // overwritten). Mirror ghosts are folded into the row.
    void k_row(std::size_t xflat, Point p, std::vector<StencilEntry>& row) const;

private:
    GridPtr spatial_;
    const CoefficientSet* coeffs_;
    double ht_, ha_, htau_;
    std::vector<double> face_g_;
};

// Splitting per step: upwind in a, conservative upwind in tau, Crank-Nicolson
// for K in x, birth at a = 0 from the previous step, zero inflow at tau_min.
Trajectory solve_forward(const ForwardProblem& problem);

// f = L0 u* - K u*.
Field mms_source(const Field& u_star, const CoefficientSet& coeffs);

struct ManufacturedCase {
    std::string name;
    DomainSpec domain;
    CoefficientSet coeffs;
    PointFunction solution;
    bool use_birth = false;  // true: the birth law supplies a = 0 values
};

// Cases: "diffusion", "transport", "combined", "kernel".
ManufacturedCase manufactured_case(const std::string& name);

struct ConvergenceStudy {
    std::vector<int> nodes;  // per axis
    std::vector<double> h;
    std::vector<double> errors;       // space-time trapezoid L2
    std::vector<double> pair_orders;  // log2(e_k / e_{k+1})
    double fitted_order = 0.0;        // least squares slope of log e vs log h
    std::vector<std::string> warnings;
};

// Joint refinement with base_nodes, 2 base_nodes - 1, ... on every axis.
ConvergenceStudy convergence_study(const ManufacturedCase& mc, int levels, int base_nodes = 9);

double fit_order(const std::vector<double>& h, const std::vector<double>& errors);

}  // namespace carleman_lab
