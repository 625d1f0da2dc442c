#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "carleman_lab/coefficients.hpp"
#include "carleman_lab/grid.hpp"
#include "carleman_lab/weight.hpp"

namespace carleman_lab {

// Streaming log-sum-exp: accumulates sum exp(l_i) without overflow.
class LogSum {
public:
    void add(double log_term) {
        if (log_term == -std::numeric_limits<double>::infinity()) return;
        if (log_term <= max_) {
            sum_ += std::exp(log_term - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
            max_ = log_term;
        }
    }
    void merge(const LogSum& o) {
        if (o.sum_ == 0.0) return;
        add(o.max_ + std::log(o.sum_));
    }
    double log_value() const {
        return sum_ == 0.0 ? -std::numeric_limits<double>::infinity() : max_ + std::log(sum_);
    }
    double value() const { return std::exp(log_value()); }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

double log_sum_exp(double la, double lb);

struct SigmaField {
    Field sigma;  // sigma(x) = sum a_ij d_i d d_j d on the spatial grid
    double sigma0;
};

SigmaField sigma_field(const CoefficientSet& coeffs, const CarlemanWeight& weight, const Grid& grid);

// Zero on the two outermost node layers of every axis.
bool supported_inside(const Field& w, int layers = 2);

struct ConjugatedResult {
    Field direct;    // e^{s phi} L (e^{-s phi} w)
    Field expanded;  // the expanded conjugation formula
};

// L = L0~ - sum a_ij d_i d_j. Values are set on nodes off the outermost
// layer; the outermost layer is left at zero.
ConjugatedResult conjugated_apply(const Field& w, const CarlemanWeight& weight, const CoefficientSet& coeffs);

struct PDecomposition {
    Field p1;
    Field p2;
    Field expanded;
    Field a1_factor;  // A1 / (s lambda^2 phi)
};

PDecomposition decompose_P(const Field& w, const CarlemanWeight& weight, const CoefficientSet& coeffs);

// Natural logs of the weighted integrals (-inf for an exact zero).
struct CarlemanReport {
    int bump_id = 0;
    double s = 0.0;
    double lambda = 0.0;
    double log_lhs_transport = 0.0;
    double log_lhs_gradient = 0.0;
    double log_lhs_zeroth = 0.0;
    double log_rhs = 0.0;

    double log_lhs() const;
    bool degenerate() const { return std::isinf(log_rhs) && log_rhs < 0; }
    double log_ratio() const { return log_lhs() - log_rhs; }
    double ratio() const { return std::exp(log_ratio()); }
};

struct LhsComponents {
    double log_transport;
    double log_gradient;
    double log_zeroth;
};

LhsComponents carleman_lhs(const Field& u, const CarlemanWeight& weight, const CoefficientSet& coeffs);
double carleman_rhs(const Field& u, const CarlemanWeight& weight, const CoefficientSet& coeffs);  // log

struct SweepVerdict {
    int bump_id;
    double lambda;
    double growth;  // ratio(s_max) / ratio(previous s)
    bool diverged;
};

struct SweepResult {
    std::vector<CarlemanReport> rows;  // ordered by (bump, lambda, s)
    std::vector<SweepVerdict> verdicts;
    std::vector<std::string> skipped;  // degenerate bumps
    double max_growth = 0.0;
    bool passed = true;
};

// The weight's own s and lambda are replaced by the sweep values.
SweepResult sweep_verify(const std::vector<Field>& bumps, const std::vector<double>& s_values,
                         const std::vector<double>& lambda_values, const CarlemanWeight& weight,
                         const CoefficientSet& coeffs, double divergence_factor = 1.5);

// |int u L0~v + int (L0 u) v|, trapezoid rule.
double adjoint_check(const Field& u, const Field& v, const CoefficientSet& coeffs);

// Tensor-product kernel prod_k (1 - r_k^2)^4 for |r_k| < 1, r_k = (z_k - c_k)/w_k.
struct BumpSpec {
    std::vector<double> center;      // one per grid axis
    std::vector<double> half_width;  // one per grid axis
    double amplitude = 1.0;
};

Field sample_bump(const BumpSpec& spec, const GridPtr& grid);

struct BumpOptions {
    double center_lo = 0.4;  // fractions of each axis extent
    double center_hi = 0.6;
    double width_lo = 0.2;
    double width_hi = 0.3;
};

std::vector<BumpSpec> random_bumps(const Grid& grid, int count, std::uint64_t seed,
                                   const BumpOptions& opt = {});

}  // namespace carleman_lab
