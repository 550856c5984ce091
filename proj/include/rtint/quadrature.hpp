#pragma once

#include "rtint/vec3.hpp"

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rtint {

// Symmetric Gaussian quadrature on the reference tetrahedron / triangle.
// Barycentric coordinates, weights normalized to sum to 1 (multiply by the
// element measure). All points are strictly interior.

struct TetQuadPoint {
    std::array<double, 4> bary;
    double weight;
};

struct TriQuadPoint {
    std::array<double, 3> bary;
    double weight;
};

namespace detail {

inline std::vector<TetQuadPoint> make_tet_rule_deg1() {
    // centroid, exact to degree 1 (deep far field only)
    return {TetQuadPoint{{0.25, 0.25, 0.25, 0.25}, 1.0}};
}

inline std::vector<TetQuadPoint> make_tet_rule_deg2() {
    // Keast, 4 points, exact to degree 2.
    const double a = 0.5854101966249685;
    const double b = 0.1381966011250105;
    std::vector<TetQuadPoint> pts;
    for (int i = 0; i < 4; ++i) {
        std::array<double, 4> c{b, b, b, b};
        c[i] = a;
        pts.push_back({c, 0.25});
    }
    return pts;
}

inline std::vector<TetQuadPoint> make_tet_rule_deg5() {
    // Keast, 14 points, exact to degree 5.
    std::vector<TetQuadPoint> pts;
    const double w1 = 0.1126879257180162, b1 = 0.3108859192633005;
    const double a1 = 1.0 - 3.0 * b1;
    const double w2 = 0.0734930431163619, b2 = 0.0927352503108912;
    const double a2 = 1.0 - 3.0 * b2;
    const double w3 = 0.0425460207770812, b3 = 0.0455037041256497;
    const double c3 = 0.5 - b3;
    for (int i = 0; i < 4; ++i) {
        std::array<double, 4> c{b1, b1, b1, b1};
        c[i] = a1;
        pts.push_back({c, w1});
    }
    for (int i = 0; i < 4; ++i) {
        std::array<double, 4> c{b2, b2, b2, b2};
        c[i] = a2;
        pts.push_back({c, w2});
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            std::array<double, 4> c{c3, c3, c3, c3};
            c[i] = b3;
            c[j] = b3;
            pts.push_back({c, w3});
        }
    }
    return pts;
}

inline std::vector<TriQuadPoint> make_tri_rule_deg2() {
    // 3 interior points, exact to degree 2.
    const double a = 2.0 / 3.0, b = 1.0 / 6.0;
    std::vector<TriQuadPoint> pts;
    for (int i = 0; i < 3; ++i) {
        std::array<double, 3> c{b, b, b};
        c[i] = a;
        pts.push_back({c, 1.0 / 3.0});
    }
    return pts;
}

inline std::vector<TriQuadPoint> make_tri_rule_deg5() {
    // Radon, 7 points, exact to degree 5.
    std::vector<TriQuadPoint> pts;
    pts.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 0.225});
    const double a1 = 0.0597158717897698, b1 = 0.4701420641051151, w1 = 0.1323941527885062;
    const double a2 = 0.7974269853530873, b2 = 0.1012865073234563, w2 = 0.1259391805448272;
    for (int i = 0; i < 3; ++i) {
        std::array<double, 3> c{b1, b1, b1};
        c[i] = a1;
        pts.push_back({c, w1});
    }
    for (int i = 0; i < 3; ++i) {
        std::array<double, 3> c{b2, b2, b2};
        c[i] = a2;
        pts.push_back({c, w2});
    }
    return pts;
}

} // namespace detail

inline const std::vector<TetQuadPoint>& tet_rule(int degree) {
    static const std::vector<TetQuadPoint> deg1 = detail::make_tet_rule_deg1();
    static const std::vector<TetQuadPoint> deg2 = detail::make_tet_rule_deg2();
    static const std::vector<TetQuadPoint> deg5 = detail::make_tet_rule_deg5();
    if (degree == 1) return deg1;
    if (degree == 2) return deg2;
    if (degree == 5) return deg5;
    throw std::invalid_argument("tet_rule: degree must be 1, 2, or 5");
}

inline const std::vector<TriQuadPoint>& tri_rule(int degree) {
    static const std::vector<TriQuadPoint> deg2 = detail::make_tri_rule_deg2();
    static const std::vector<TriQuadPoint> deg5 = detail::make_tri_rule_deg5();
    if (degree == 2) return deg2;
    if (degree == 5) return deg5;
    throw std::invalid_argument("tri_rule: degree must be 2 or 5");
}

inline Vec3 bary_point(const std::array<Vec3, 4>& v, const std::array<double, 4>& b) {
    return b[0] * v[0] + b[1] * v[1] + b[2] * v[2] + b[3] * v[3];
}

inline Vec3 bary_point(const std::array<Vec3, 3>& v, const std::array<double, 3>& b) {
    return b[0] * v[0] + b[1] * v[1] + b[2] * v[2];
}

} // namespace rtint
