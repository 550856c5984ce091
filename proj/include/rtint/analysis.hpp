#pragma once

#include "rtint/mesh.hpp"
#include "rtint/vec3.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rtint {

// lumped vertex weights: a quarter of each incident tet's volume
inline std::vector<double> vertex_weights(const VolumeMesh& m) {
    std::vector<double> w(m.num_vertices(), 0.0);
    for (int t = 0; t < m.num_tets(); ++t)
        for (int k = 0; k < 4; ++k) w[m.tets[t].v[k]] += 0.25 * m.tet_volume[t];
    return w;
}

// relative L2 difference of two nodal fields over the mesh (lumped quadrature)
inline double relative_l2_diff(const VolumeMesh& m, const std::vector<double>& a,
                               const std::vector<double>& b) {
    if (static_cast<int>(a.size()) != m.num_vertices() ||
        static_cast<int>(b.size()) != m.num_vertices())
        throw std::invalid_argument("relative_l2_diff: field size mismatch");
    const auto w = vertex_weights(m);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < m.num_vertices(); ++i) {
        const double d = a[i] - b[i];
        num += w[i] * d * d;
        den += w[i] * b[i] * b[i];
    }
    if (!(den > 0.0)) throw std::runtime_error("relative_l2_diff: zero reference field");
    return std::sqrt(num / den);
}

// P1 samples of a nodal field at arbitrary points; points outside the source
// mesh keep the nearest computed value flag off and contribute zero
inline std::vector<double> sample_field_at(const VolumeMesh& src, const PointLocator& loc,
                                           const std::vector<double>& field,
                                           const std::vector<Vec3>& points,
                                           int* outside_count = nullptr) {
    std::vector<double> out(points.size(), 0.0);
    int misses = 0;
    for (size_t k = 0; k < points.size(); ++k) {
        if (auto hit = loc.locate(points[k])) {
            double v = 0.0;
            for (int c = 0; c < 4; ++c) v += hit->bary[c] * field[src.tets[hit->tet].v[c]];
            out[k] = v;
        } else {
            ++misses;
        }
    }
    if (outside_count) *outside_count = misses;
    return out;
}

// slope of the least-squares line through (x_i, y_i)
inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares_slope: need >= 2 matched points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (std::abs(den) < 1e-300) throw std::runtime_error("least_squares_slope: degenerate x data");
    return (n * sxy - sx * sy) / den;
}

} // namespace rtint
