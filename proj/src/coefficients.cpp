#include "carleman_lab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "carleman_lab/errors.hpp"

namespace carleman_lab {

namespace {

constexpr double pi = std::numbers::pi;

CoefficientSet constant_preset(int n) {
    CoefficientSet c;
    c.name = "constant";
    c.spatial_dim = n;
    c.diffusion = [](const Vec2&) { return Mat2{{{1.0, 0.0}, {0.0, 1.0}}}; };
    c.drift = [](const Point&) { return Vec2{0.0, 0.0}; };
    c.reaction = [](const Point&) { return 0.0; };
    c.growth = [](double) { return 1.0; };
    c.growth_derivative = [](double) { return 0.0; };
    c.birth = [](const Vec2&, double, double, double) { return 0.0; };
    c.sigma1 = 1.0;
    return c;
}

CoefficientSet logistic_preset(int n) {
    CoefficientSet c;
    c.name = "logistic-growth";
    c.spatial_dim = n;
    if (n == 1) {
        c.diffusion = [](const Vec2& x) {
            double a = 0.2 * (1.0 + 0.25 * x[0] * x[0]);
            return Mat2{{{a, 0.0}, {0.0, a}}};
        };
        c.drift = [](const Point& p) { return Vec2{0.1 * std::cos(pi * p.x[0]), 0.0}; };
        c.sigma1 = 0.2;
    } else {
        c.diffusion = [](const Vec2& x) {
            double a = 0.2 * (1.0 + 0.25 * (x[0] * x[0] + x[1] * x[1]));
            return Mat2{{{a, 0.02}, {0.02, a}}};
        };
        c.drift = [](const Point& p) {
            return Vec2{0.1 * std::cos(pi * p.x[0]), 0.05 * std::sin(pi * p.x[1])};
        };
        c.sigma1 = 0.18;
    }
    c.reaction = [](const Point& p) { return 0.3 + 0.1 * p.x[0]; };
    c.growth = [](double tau) { return 0.3 + 0.6 * tau * (1.0 - 0.5 * tau); };
    c.growth_derivative = [](double tau) { return 0.6 * (1.0 - tau); };
    c.birth = [](const Vec2&, double, double, double) { return 0.0; };
    return c;
}

// Newborns enter with size profile q; fertility a*exp(-2a). B0 normalizes
// so that the age profile exp(-a) is reproduced at age zero.
CoefficientSet separable_birth_preset(int n) {
    CoefficientSet c = logistic_preset(n);
    c.name = "separable-birth";
    const double b0 = 9.0 / (1.0 - 4.0 * std::exp(-3.0));
    c.birth = [b0](const Vec2&, double a, double tau, double) {
        double q = tau * (1.0 - tau);
        return b0 * a * std::exp(-2.0 * a) * 30.0 * q * q;
    };
    return c;
}

}  // namespace

std::vector<std::string> coefficient_preset_names() {
    return {"constant", "logistic-growth", "separable-birth"};
}

CoefficientSet coefficient_preset(const std::string& name, int spatial_dim) {
    if (spatial_dim < 1 || spatial_dim > 2) throw InputError("spatial_dim must be 1 or 2");
    if (name == "constant") return constant_preset(spatial_dim);
    if (name == "logistic-growth") return logistic_preset(spatial_dim);
    if (name == "separable-birth") return separable_birth_preset(spatial_dim);
    throw InputError("unknown coefficient preset '" + name + "'");
}

void validate_coefficients(const CoefficientSet& c, const Grid& grid) {
    if (!c.diffusion || !c.drift || !c.reaction || !c.growth || !c.growth_derivative || !c.birth)
        throw InputError("coefficient set '" + c.name + "' is incomplete");
    if (!(c.sigma1 > 0.0)) throw InputError("sigma1 must be positive");
    const int n = c.spatial_dim;
    if (grid.spatial_dim() != 0 && grid.spatial_dim() != n)
        throw InputError("coefficient dimension does not match grid");

    const Grid xs = grid.spatial_only();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Point p = xs.point(i);
        Mat2 A = c.diffusion(p.x);
        for (int r = 0; r < n; ++r)
            for (int q = 0; q < n; ++q) {
                if (!std::isfinite(A[r][q])) throw NumericalError("non-finite diffusion coefficient");
                if (A[r][q] != A[q][r]) throw InputError("diffusion matrix is not symmetric");
            }
    }
    int kt = grid.find(AxisRole::tau);
    if (kt >= 0) {
        const Axis& ax = grid.axis(kt);
        for (int j = 0; j < ax.nodes; ++j) {
            double tau = ax.coord(j);
            double g = c.growth(tau);
            if (!std::isfinite(g) || !std::isfinite(c.growth_derivative(tau)))
                throw NumericalError("non-finite growth modulus");
            if (!(g > 0.0)) throw InputError("growth modulus g must be positive on [tau_min, tau_max]");
        }
    }
}

double min_eigenvalue(const Mat2& A, int n) {
    if (n == 1) return A[0][0];
    double m = 0.5 * (A[0][0] + A[1][1]);
    double d = 0.5 * (A[0][0] - A[1][1]);
    return m - std::sqrt(d * d + A[0][1] * A[1][0]);
}

EllipticityEstimate check_ellipticity(const CoefficientSet& c, const SpatialDomain& omega,
                                      int sample_count, std::uint64_t seed) {
    if (sample_count < 1) throw InputError("sample_count must be >= 1");
    const int n = omega.dim();
    std::mt19937_64 rng(seed);
    double best = INFINITY;
    int taken = 0;
    int attempts = 0;
    while (taken < sample_count) {
        if (++attempts > 1000 * sample_count) throw InputError("could not sample Omega");
        Vec2 x{};
        for (int k = 0; k < n; ++k) {
            std::uniform_real_distribution<double> u(omega.box[k].lo, omega.box[k].hi);
            x[k] = u(rng);
        }
        if (!omega.contains(x, 0.0)) continue;
        ++taken;
        best = std::min(best, min_eigenvalue(c.diffusion(x), n));
    }
    if (!(best > 0.0)) throw NumericalError("non-elliptic diffusion: estimate " + std::to_string(best));
    return {best, best >= c.sigma1 - 1e-10};
}

double Table1D::operator()(double s) const {
    if (s <= coord.front()) return value.front();
    if (s >= coord.back()) return value.back();
    auto it = std::upper_bound(coord.begin(), coord.end(), s);
    std::size_t k = static_cast<std::size_t>(it - coord.begin()) - 1;
    double w = (s - coord[k]) / (coord[k + 1] - coord[k]);
    return (1.0 - w) * value[k] + w * value[k + 1];
}

double Table1D::slope(double s) const {
    auto it = std::upper_bound(coord.begin(), coord.end(), s);
    std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - coord.begin() - 1, 0)), coord.size() - 2);
    return (value[k + 1] - value[k]) / (coord[k + 1] - coord[k]);
}

Table1D load_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open coefficient table " + path);
    Table1D t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double c, v;
        if (!(ss >> c >> v)) continue;  // header row
        t.coord.push_back(c);
        t.value.push_back(v);
    }
    if (t.coord.size() < 2) throw InputError("coefficient table " + path + " needs at least two rows");
    for (std::size_t k = 1; k < t.coord.size(); ++k)
        if (!(t.coord[k] > t.coord[k - 1]))
            throw InputError("coefficient table " + path + " must have increasing coordinates");
    return t;
}

CoefficientSet with_tables(CoefficientSet c,
                           const std::vector<std::pair<std::string, std::string>>& tables) {
    for (const auto& [key, path] : tables) {
        Table1D t = load_table_csv(path);
        if (key == "diffusion") {
            c.diffusion = [t](const Vec2& x) {
                double a = t(x[0]);
                return Mat2{{{a, 0.0}, {0.0, a}}};
            };
            c.sigma1 = *std::min_element(t.value.begin(), t.value.end());
        } else if (key == "drift") {
            c.drift = [t](const Point& p) { return Vec2{t(p.x[0]), 0.0}; };
        } else if (key == "reaction") {
            c.reaction = [t](const Point& p) { return t(p.x[0]); };
        } else if (key == "growth") {
            c.growth = [t](double tau) { return t(tau); };
            c.growth_derivative = [t](double tau) { return t.slope(tau); };
        } else {
            throw InputError("unknown tabulated coefficient '" + key + "'");
        }
        c.name += "+" + key + "-table";
    }
    return c;
}

}  // namespace carleman_lab
