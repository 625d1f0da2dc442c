#pragma once

#include <array>
#include <functional>
#include <string>

#include "carleman_lab/grid.hpp"

namespace carleman_lab {

// Spatial weight base d(x) with analytic derivatives.
struct WeightFunction {
    std::string name;
    int spatial_dim = 1;
    std::function<double(const Vec2&)> value;
    std::function<Vec2(const Vec2&)> gradient;
    std::function<Mat2(const Vec2&)> hessian;
};

// d = slope (x0 - anchor) - curvature/2 (x0 - anchor)^2, a one-directional ramp.
WeightFunction ramp_weight(double slope, double curvature, double anchor, int spatial_dim);

// d = 1 - |x|^2.
WeightFunction bowl_weight(int spatial_dim);

// psi = d(x) - beta_w |(t,a,tau) - center|^2, phi = exp(lambda psi).
struct CarlemanWeight {
    WeightFunction d;
    double beta_w = 1.0;
    double lambda = 1.0;
    double s = 1.0;
    std::array<double, 3> center{0.5, 0.5, 0.5};

    // lambda > 0; s, beta_w >= 0 (zero values are degenerate but allowed).
    void validate() const;
    double offset2(const Point& p) const;
    double psi(const Point& p) const { return d.value(p.x) - beta_w * offset2(p); }
    double phi(const Point& p) const;
    // L0~ psi = -2 beta_w ((t - t0) + (a - a0) + g(tau) (tau - tau0))
    double l0_tilde_psi(const Point& p, double g) const;
};

struct WeightValue {
    double psi;
    double phi;
};

WeightValue eval_weight(const CarlemanWeight& w, const Point& p);

}  // namespace carleman_lab
