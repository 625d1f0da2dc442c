#pragma once

#include "carleman_lab/coefficients.hpp"
#include "carleman_lab/grid.hpp"

namespace carleman_lab {

// K u = sum a_ij d_i d_j u - sum b_k d_k u - c u. Centered differences with
// mirror ghosts at the x faces (homogeneous Neumann condition).
Field apply_K(const Field& u, const CoefficientSet& coeffs);

// L0 u = d_t u + d_a u + d_tau(g u), discretized as L0~ u + g'(tau) u.
Field apply_L0(const Field& u, const CoefficientSet& coeffs);

// L0~ u = d_t u + d_a u + g d_tau u. Centered inside, one-sided at faces.
Field apply_L0_tilde(const Field& u, const CoefficientSet& coeffs);

// Trapezoid value of int int beta(x,a,tau,s) u(x,[t],a,s) ds da for every
// remaining node (x, [t], tau). The result lives on the grid without the a axis.
Field birth_integral(const Field& u, const CoefficientSet& coeffs);

// Centered d/dx_k (k = 0 or 1) with mirror ghosts.
Field spatial_derivative(const Field& u, int k);

}  // namespace carleman_lab
