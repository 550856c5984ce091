#pragma once

#include "rtint/quadrature.hpp"
#include "rtint/vec3.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtint {

// Tetrahedral volume mesh with region tags. Immutable after finalize();
// all queries are read-only and safe for concurrent use.
struct VolumeMesh {
    struct Tet {
        std::array<int, 4> v;
        int region = 0;
    };
    struct BoundaryFace {
        int tet = -1;
        int face = -1; // local face index = opposite local vertex
        int label = -1;
    };

    std::vector<Vec3> vertices;
    std::vector<Tet> tets;

    // Built by finalize():
    std::vector<std::array<int, 4>> neighbor; // tet across face f, -1 on the boundary
    std::vector<double> tet_volume;
    std::vector<int> vertex_tet_offset; // CSR incidence vertex -> tets
    std::vector<int> vertex_tet_list;
    std::vector<double> vertex_h; // average incident edge length
    std::vector<BoundaryFace> boundary_faces;
    Vec3 bbox_lo, bbox_hi;
    double diameter = 0.0;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_tets() const { return static_cast<int>(tets.size()); }

    std::array<Vec3, 4> tet_points(int t) const {
        const auto& k = tets[t].v;
        return {vertices[k[0]], vertices[k[1]], vertices[k[2]], vertices[k[3]]};
    }

    static double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
        return dot(b - a, cross(c - a, d - a)) / 6.0;
    }

    // Local face f is {v[(f+1)%4], v[(f+2)%4], v[(f+3)%4]} (opposite vertex f).
    static std::array<int, 3> face_vertices(const Tet& t, int f) {
        return {t.v[(f + 1) % 4], t.v[(f + 2) % 4], t.v[(f + 3) % 4]};
    }

    // Outward normal of local face f, not normalized.
    Vec3 face_normal(int t, int f) const {
        auto fv = face_vertices(tets[t], f);
        Vec3 n = cross(vertices[fv[1]] - vertices[fv[0]], vertices[fv[2]] - vertices[fv[0]]);
        // orient away from the opposite vertex
        if (dot(n, vertices[tets[t].v[f]] - vertices[fv[0]]) > 0.0) n = -1.0 * n;
        return n;
    }

    std::array<double, 4> barycentric(int t, const Vec3& p) const {
        auto pts = tet_points(t);
        const double v = tet_volume[t];
        std::array<double, 4> b;
        b[0] = signed_volume(p, pts[1], pts[2], pts[3]) / v;
        b[1] = signed_volume(pts[0], p, pts[2], pts[3]) / v;
        b[2] = signed_volume(pts[0], pts[1], p, pts[3]) / v;
        b[3] = 1.0 - b[0] - b[1] - b[2];
        return b;
    }

    void finalize() {
        const int nt = num_tets();
        const int nv = num_vertices();
        if (nv == 0 || nt == 0) throw std::runtime_error("VolumeMesh: empty mesh");

        bbox_lo = bbox_hi = vertices[0];
        for (const Vec3& p : vertices) {
            for (int d = 0; d < 3; ++d) {
                bbox_lo[d] = std::min(bbox_lo[d], p[d]);
                bbox_hi[d] = std::max(bbox_hi[d], p[d]);
            }
        }
        diameter = dist(bbox_lo, bbox_hi);

        tet_volume.resize(nt);
        for (int t = 0; t < nt; ++t) {
            auto& k = tets[t].v;
            for (int m = 0; m < 4; ++m)
                if (k[m] < 0 || k[m] >= nv)
                    throw std::runtime_error("VolumeMesh: tet " + std::to_string(t) +
                                             " references vertex " + std::to_string(k[m]) +
                                             " of " + std::to_string(nv));
            double v = signed_volume(vertices[k[0]], vertices[k[1]], vertices[k[2]], vertices[k[3]]);
            if (v < 0.0) { // consistent positive orientation
                std::swap(k[1], k[2]);
                v = -v;
            }
            const double scale = std::pow(diameter, 3);
            if (!(v > 1e-14 * scale))
                throw std::runtime_error("VolumeMesh: degenerate tet " + std::to_string(t));
            tet_volume[t] = v;
        }

        // face adjacency
        neighbor.assign(nt, {-1, -1, -1, -1});
        std::map<std::array<int, 3>, std::pair<int, int>> face_map;
        for (int t = 0; t < nt; ++t) {
            for (int f = 0; f < 4; ++f) {
                auto fv = face_vertices(tets[t], f);
                std::sort(fv.begin(), fv.end());
                auto it = face_map.find(fv);
                if (it == face_map.end()) {
                    face_map[fv] = {t, f};
                } else {
                    auto [t2, f2] = it->second;
                    if (t2 < 0)
                        throw std::runtime_error("VolumeMesh: face shared by more than 2 tets");
                    neighbor[t][f] = t2;
                    neighbor[t2][f2] = t;
                    it->second = {-1, -1};
                }
            }
        }
        boundary_faces.clear();
        for (int t = 0; t < nt; ++t)
            for (int f = 0; f < 4; ++f)
                if (neighbor[t][f] < 0) boundary_faces.push_back({t, f, -1});

        // vertex -> tet incidence (CSR)
        vertex_tet_offset.assign(nv + 1, 0);
        for (const auto& t : tets)
            for (int m = 0; m < 4; ++m) ++vertex_tet_offset[t.v[m] + 1];
        for (int i = 0; i < nv; ++i) vertex_tet_offset[i + 1] += vertex_tet_offset[i];
        vertex_tet_list.resize(vertex_tet_offset[nv]);
        std::vector<int> cursor(vertex_tet_offset.begin(), vertex_tet_offset.end() - 1);
        for (int t = 0; t < nt; ++t)
            for (int m = 0; m < 4; ++m) vertex_tet_list[cursor[tets[t].v[m]]++] = t;

        // local mesh size h_i = average incident edge length
        vertex_h.assign(nv, 0.0);
        std::vector<int> edge_count(nv, 0);
        for (const auto& t : tets) {
            for (int a = 0; a < 4; ++a) {
                for (int b = a + 1; b < 4; ++b) {
                    const double len = dist(vertices[t.v[a]], vertices[t.v[b]]);
                    vertex_h[t.v[a]] += len;
                    vertex_h[t.v[b]] += len;
                    ++edge_count[t.v[a]];
                    ++edge_count[t.v[b]];
                }
            }
        }
        for (int i = 0; i < nv; ++i)
            if (edge_count[i] > 0) vertex_h[i] /= edge_count[i];
    }

    std::pair<int, int> tets_of_vertex(int v) const {
        return {vertex_tet_offset[v], vertex_tet_offset[v + 1]};
    }
};

// Triangular boundary mesh with per-triangle labels and outward unit normals.
struct SurfaceMesh {
    struct Tri {
        std::array<int, 3> v;
        int label = 0;
    };

    std::vector<Vec3> vertices;
    std::vector<Tri> triangles;
    std::vector<Vec3> normals; // unit, outward w.r.t. the domain
    std::vector<double> areas;

    std::vector<int> vertex_tri_offset; // CSR incidence vertex -> triangles
    std::vector<int> vertex_tri_list;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }

    std::array<Vec3, 3> tri_points(int t) const {
        const auto& k = triangles[t].v;
        return {vertices[k[0]], vertices[k[1]], vertices[k[2]]};
    }

    Vec3 tri_centroid(int t) const {
        auto p = tri_points(t);
        return (p[0] + p[1] + p[2]) / 3.0;
    }

    // Computes areas and unit normals trusting the triangle winding (normal of
    // (v0, v1, v2) by the right-hand rule). For generated meshes whose winding
    // is known to be outward; the flip test below is only valid for star-shaped
    // domains.
    void finalize() {
        const int nt = num_triangles();
        const int nv = num_vertices();
        normals.resize(nt);
        areas.resize(nt);
        double total_area = 0.0;
        for (int t = 0; t < nt; ++t) total_area += 0.5 * norm(cross(
            vertices[triangles[t].v[1]] - vertices[triangles[t].v[0]],
            vertices[triangles[t].v[2]] - vertices[triangles[t].v[0]]));
        for (int t = 0; t < nt; ++t) {
            auto& k = triangles[t].v;
            for (int m = 0; m < 3; ++m)
                if (k[m] < 0 || k[m] >= nv)
                    throw std::runtime_error("SurfaceMesh: triangle " + std::to_string(t) +
                                             " references vertex " + std::to_string(k[m]));
            Vec3 n = cross(vertices[k[1]] - vertices[k[0]], vertices[k[2]] - vertices[k[0]]);
            const double a2 = norm(n);
            if (!(a2 > 1e-14 * total_area))
                throw std::runtime_error("SurfaceMesh: zero-area triangle " + std::to_string(t));
            areas[t] = 0.5 * a2;
            normals[t] = n / a2;
        }
        build_incidence();
    }

    // Computes areas and unit normals; orientation is flipped so normals point
    // away from the given interior reference point.
    void finalize(const Vec3& interior_point) {
        const int nt = num_triangles();
        const int nv = num_vertices();
        normals.resize(nt);
        areas.resize(nt);
        double total_area = 0.0;
        for (int t = 0; t < nt; ++t) total_area += 0.5 * norm(cross(
            vertices[triangles[t].v[1]] - vertices[triangles[t].v[0]],
            vertices[triangles[t].v[2]] - vertices[triangles[t].v[0]]));
        for (int t = 0; t < nt; ++t) {
            auto& k = triangles[t].v;
            for (int m = 0; m < 3; ++m)
                if (k[m] < 0 || k[m] >= nv)
                    throw std::runtime_error("SurfaceMesh: triangle " + std::to_string(t) +
                                             " references vertex " + std::to_string(k[m]));
            Vec3 n = cross(vertices[k[1]] - vertices[k[0]], vertices[k[2]] - vertices[k[0]]);
            const double a2 = norm(n);
            if (!(a2 > 1e-14 * total_area))
                throw std::runtime_error("SurfaceMesh: zero-area triangle " + std::to_string(t));
            areas[t] = 0.5 * a2;
            n = n / a2;
            if (dot(n, tri_centroid(t) - interior_point) < 0.0) {
                std::swap(k[1], k[2]);
                n = -1.0 * n;
            }
            normals[t] = n;
        }
        build_incidence();
    }

private:
    void build_incidence() {
        const int nv = num_vertices();
        vertex_tri_offset.assign(nv + 1, 0);
        for (const auto& t : triangles)
            for (int m = 0; m < 3; ++m) ++vertex_tri_offset[t.v[m] + 1];
        for (int i = 0; i < nv; ++i) vertex_tri_offset[i + 1] += vertex_tri_offset[i];
        vertex_tri_list.resize(vertex_tri_offset[nv]);
        std::vector<int> cursor(vertex_tri_offset.begin(), vertex_tri_offset.end() - 1);
        for (int t = 0; t < num_triangles(); ++t)
            for (int m = 0; m < 3; ++m) vertex_tri_list[cursor[triangles[t].v[m]]++] = t;
    }
};

namespace detail {

inline std::string next_data_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        auto pos = line.find('#');
        if (pos != std::string::npos) line.erase(pos);
        if (line.find_first_not_of(" \t\r\n") != std::string::npos) return line;
    }
    throw std::runtime_error("mesh file: unexpected end of file");
}

} // namespace detail

// Text format: header "tetmesh <N> <M>", then N lines "v x y z",
// then M lines "t i0 i1 i2 i3 region". 0-based indices.
inline VolumeMesh load_volume_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open volume mesh file: " + path);
    VolumeMesh mesh;
    std::string tag;
    {
        std::istringstream hs(detail::next_data_line(in));
        long n = 0, m = 0;
        hs >> tag >> n >> m;
        if (!hs || tag != "tetmesh" || n <= 0 || m <= 0)
            throw std::runtime_error("volume mesh: bad header in " + path);
        mesh.vertices.reserve(n);
        mesh.tets.reserve(m);
        for (long i = 0; i < n; ++i) {
            std::istringstream ls(detail::next_data_line(in));
            Vec3 p;
            ls >> tag >> p.x >> p.y >> p.z;
            if (!ls || tag != "v")
                throw std::runtime_error("volume mesh: malformed vertex line " + std::to_string(i));
            mesh.vertices.push_back(p);
        }
        for (long i = 0; i < m; ++i) {
            std::istringstream ls(detail::next_data_line(in));
            VolumeMesh::Tet t;
            ls >> tag >> t.v[0] >> t.v[1] >> t.v[2] >> t.v[3] >> t.region;
            if (!ls || tag != "t")
                throw std::runtime_error("volume mesh: malformed tet line " + std::to_string(i));
            mesh.tets.push_back(t);
        }
    }
    mesh.finalize();
    return mesh;
}

// Text format: header "trimesh <L> <K> ix iy iz" (interior reference point),
// then L lines "v x y z", then K lines "f i0 i1 i2 label".
inline SurfaceMesh load_surface_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open surface mesh file: " + path);
    SurfaceMesh mesh;
    Vec3 interior;
    std::string tag;
    {
        std::istringstream hs(detail::next_data_line(in));
        long n = 0, k = 0;
        hs >> tag >> n >> k >> interior.x >> interior.y >> interior.z;
        if (!hs || tag != "trimesh" || n <= 0 || k <= 0)
            throw std::runtime_error("surface mesh: bad header in " + path);
        for (long i = 0; i < n; ++i) {
            std::istringstream ls(detail::next_data_line(in));
            Vec3 p;
            ls >> tag >> p.x >> p.y >> p.z;
            if (!ls || tag != "v")
                throw std::runtime_error("surface mesh: malformed vertex line " + std::to_string(i));
            mesh.vertices.push_back(p);
        }
        for (long i = 0; i < k; ++i) {
            std::istringstream ls(detail::next_data_line(in));
            SurfaceMesh::Tri t;
            ls >> tag >> t.v[0] >> t.v[1] >> t.v[2] >> t.label;
            if (!ls || tag != "f")
                throw std::runtime_error("surface mesh: malformed or unlabeled triangle line " +
                                         std::to_string(i));
            mesh.triangles.push_back(t);
        }
    }
    mesh.finalize(interior);
    return mesh;
}

// Point location over a VolumeMesh: uniform-grid candidate lists with a
// walk-through-adjacency refinement and a brute-force fallback. Face ties are
// resolved by accepting the first containing tet (P1 values agree by continuity).
class PointLocator {
public:
    explicit PointLocator(const VolumeMesh& mesh, double tol_rel = 1e-10)
        : mesh_(&mesh), tol_(tol_rel) {
        const int nt = mesh.num_tets();
        const int n = std::max(1, static_cast<int>(std::cbrt(static_cast<double>(nt) / 4.0)));
        nx_ = ny_ = nz_ = n;
        lo_ = mesh.bbox_lo;
        Vec3 ext = mesh.bbox_hi - mesh.bbox_lo;
        hx_ = std::max(ext.x, 1e-300) / nx_;
        hy_ = std::max(ext.y, 1e-300) / ny_;
        hz_ = std::max(ext.z, 1e-300) / nz_;
        cells_.resize(static_cast<size_t>(nx_) * ny_ * nz_);
        for (int t = 0; t < nt; ++t) {
            auto pts = mesh.tet_points(t);
            Vec3 blo = pts[0], bhi = pts[0];
            for (int m = 1; m < 4; ++m)
                for (int d = 0; d < 3; ++d) {
                    blo[d] = std::min(blo[d], pts[m][d]);
                    bhi[d] = std::max(bhi[d], pts[m][d]);
                }
            int i0, j0, k0, i1, j1, k1;
            cell_of(blo, i0, j0, k0);
            cell_of(bhi, i1, j1, k1);
            for (int i = i0; i <= i1; ++i)
                for (int j = j0; j <= j1; ++j)
                    for (int k = k0; k <= k1; ++k) cells_[idx(i, j, k)].push_back(t);
        }
    }

    struct Hit {
        int tet = -1;
        std::array<double, 4> bary{};
    };

    // Returns nullopt when p is outside the mesh.
    std::optional<Hit> locate(const Vec3& p) const {
        int i, j, k;
        cell_of(p, i, j, k);
        const double tol = tol_;
        for (int t : cells_[idx(i, j, k)]) {
            auto b = mesh_->barycentric(t, p);
            if (b[0] >= -tol && b[1] >= -tol && b[2] >= -tol && b[3] >= -tol) return Hit{t, b};
        }
        // widen to neighbor cells (points on cell boundaries, roundoff)
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj)
                for (int dk = -1; dk <= 1; ++dk) {
                    if (di == 0 && dj == 0 && dk == 0) continue;
                    int ii = i + di, jj = j + dj, kk = k + dk;
                    if (ii < 0 || jj < 0 || kk < 0 || ii >= nx_ || jj >= ny_ || kk >= nz_) continue;
                    for (int t : cells_[idx(ii, jj, kk)]) {
                        auto b = mesh_->barycentric(t, p);
                        if (b[0] >= -tol && b[1] >= -tol && b[2] >= -tol && b[3] >= -tol)
                            return Hit{t, b};
                    }
                }
        return std::nullopt;
    }

    const VolumeMesh& mesh() const { return *mesh_; }

private:
    void cell_of(const Vec3& p, int& i, int& j, int& k) const {
        i = std::clamp(static_cast<int>((p.x - lo_.x) / hx_), 0, nx_ - 1);
        j = std::clamp(static_cast<int>((p.y - lo_.y) / hy_), 0, ny_ - 1);
        k = std::clamp(static_cast<int>((p.z - lo_.z) / hz_), 0, nz_ - 1);
    }
    size_t idx(int i, int j, int k) const {
        return (static_cast<size_t>(i) * ny_ + j) * nz_ + k;
    }

    const VolumeMesh* mesh_;
    double tol_;
    int nx_, ny_, nz_;
    Vec3 lo_;
    double hx_, hy_, hz_;
    std::vector<std::vector<int>> cells_;
};

// P1 hat function of vertex j at point y; nullopt when y is outside the mesh
// (used by the kappa = +infinity extension of the transport kernels).
inline std::optional<double> hat_eval(const PointLocator& loc, int j, const Vec3& y) {
    auto hit = loc.locate(y);
    if (!hit) return std::nullopt;
    const auto& tv = loc.mesh().tets[hit->tet].v;
    for (int m = 0; m < 4; ++m)
        if (tv[m] == j) return hit->bary[m];
    return 0.0;
}

// Quadrature rule mapped onto a physical tet: (point, weight) pairs whose
// weights sum to the tet volume.
inline std::vector<std::pair<Vec3, double>> tet_quadrature(const std::array<Vec3, 4>& pts,
                                                           double volume, int degree) {
    const auto& rule = tet_rule(degree);
    std::vector<std::pair<Vec3, double>> out;
    out.reserve(rule.size());
    for (const auto& q : rule) out.emplace_back(bary_point(pts, q.bary), q.weight * volume);
    return out;
}

inline std::vector<std::pair<Vec3, double>> tet_quadrature(const VolumeMesh& mesh, int t,
                                                           int degree) {
    return tet_quadrature(mesh.tet_points(t), mesh.tet_volume[t], degree);
}

} // namespace rtint
