#pragma once

#include <cstddef>

#include "carleman_lab/grid.hpp"

// Finite-difference stencils over a Grid. Values are read through a callable
// val(flat_index) so the same stencil serves plain fields and conjugated
// products like exp(s(phi(x) - phi(y))) w(y).
namespace carleman_lab::stencil {

inline int mirror(int j, int n) {
    if (j < 0) return -j;
    if (j > n - 1) return 2 * (n - 1) - j;
    return j;
}

// Flat index of the node shifted by `off` along axis k, mirrored at the
// faces (ghost node i = -1 reads node 1).
inline std::size_t reflect(const Grid& g, const Grid::Index& idx, std::size_t flat, int k, int off) {
    const int j = mirror(idx[k] + off, g.axis(k).nodes);
    return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(flat) +
                                    static_cast<std::ptrdiff_t>(j - idx[k]) *
                                        static_cast<std::ptrdiff_t>(g.stride(k)));
}

// First derivative along axis k: centered inside, second-order one-sided at
// the two faces.
template <class V>
double d1_onesided(const Grid& g, const Grid::Index& idx, std::size_t flat, int k, V&& val) {
    const Axis& ax = g.axis(k);
    const std::size_t s = g.stride(k);
    const int i = idx[k];
    if (i == 0) return (-3.0 * val(flat) + 4.0 * val(flat + s) - val(flat + 2 * s)) / (2.0 * ax.h);
    if (i == ax.nodes - 1)
        return (3.0 * val(flat) - 4.0 * val(flat - s) + val(flat - 2 * s)) / (2.0 * ax.h);
    return (val(flat + s) - val(flat - s)) / (2.0 * ax.h);
}

// Centered first derivative with mirror ghosts (zero on the faces).
template <class V>
double d1_reflect(const Grid& g, const Grid::Index& idx, std::size_t flat, int k, V&& val) {
    const Axis& ax = g.axis(k);
    return (val(reflect(g, idx, flat, k, +1)) - val(reflect(g, idx, flat, k, -1))) / (2.0 * ax.h);
}

template <class V>
double d2_reflect(const Grid& g, const Grid::Index& idx, std::size_t flat, int k, V&& val) {
    const Axis& ax = g.axis(k);
    return (val(reflect(g, idx, flat, k, +1)) - 2.0 * val(flat) + val(reflect(g, idx, flat, k, -1))) /
           (ax.h * ax.h);
}

// Mixed derivative d_k d_l, k != l, mirrored independently per axis.
template <class V>
double d11_reflect(const Grid& g, const Grid::Index& idx, std::size_t flat, int k, int l, V&& val) {
    auto at = [&](int ok, int ol) {
        std::size_t f1 = reflect(g, idx, flat, k, ok);
        Grid::Index j = idx;
        j[k] = mirror(idx[k] + ok, g.axis(k).nodes);
        return val(reflect(g, j, f1, l, ol));
    };
    return (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * g.axis(k).h * g.axis(l).h);
}

}  // namespace carleman_lab::stencil
