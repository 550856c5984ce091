#pragma once

#include "rtint/absorption.hpp"
#include "rtint/mesh.hpp"
#include "rtint/vec3.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rtint {

// Optical depth of a straight segment. `blocked` is the kappa = +infinity
// extension: the segment leaves the domain, so the attenuation is exactly 0.
struct DepthResult {
    double value = 0.0;
    bool blocked = false;

    double attenuation() const { return blocked ? 0.0 : std::exp(-value); }
};

inline DepthResult operator+(const DepthResult& a, const DepthResult& b) {
    return {a.value + b.value, a.blocked || b.blocked};
}

// |y-x| * int_0^1 kappa(sy+(1-s)x) ds, per band.
class DepthEvaluator {
public:
    virtual ~DepthEvaluator() = default;
    virtual DepthResult depth(const Vec3& x, const Vec3& y, int band) const = 0;
};

// ---------------------------------------------------------------------------
// Exact element-by-element traversal (kappa is piecewise constant per region,
// so the line integral is a sum of kappa * chord-length terms).
class MeshTraversalDepth : public DepthEvaluator {
public:
    MeshTraversalDepth(const VolumeMesh& mesh, const PointLocator& locator,
                       const AbsorptionModel& model)
        : mesh_(&mesh), locator_(&locator), model_(&model) {}

    DepthResult depth(const Vec3& x, const Vec3& y, int band) const override {
        const double len = dist(x, y);
        if (!(len > 0.0)) return {0.0, false};
        const Vec3 d = (y - x) / len;
        // endpoints may sit on faces of the mesh; start a hair inside
        const double eps_len = 1e-9 * len;
        const double s_end = len - eps_len;

        auto hit = locator_->locate(x + eps_len * d);
        if (!hit) return {0.0, true};
        int tet = hit->tet;

        double s_cur = eps_len;
        double acc = 0.0;
        const double tol = 1e-12 * mesh_->diameter;
        const int max_steps = mesh_->num_tets() + 16;
        for (int step = 0; step < max_steps; ++step) {
            // exit parameter through the current tet
            double s_exit = std::numeric_limits<double>::infinity();
            int exit_face = -1;
            for (int f = 0; f < 4; ++f) {
                const Vec3 n = mesh_->face_normal(tet, f);
                const double dn = dot(n, d);
                if (dn <= 0.0) continue;
                const Vec3 q0 = mesh_->vertices[VolumeMesh::face_vertices(mesh_->tets[tet], f)[0]];
                const double s_f = dot(n, q0 - x) / dn;
                if (s_f >= s_cur - tol && s_f < s_exit) {
                    s_exit = s_f;
                    exit_face = f;
                }
            }
            const double kappa = model_->kappa(band, mesh_->tets[tet].region);
            if (exit_face < 0 || s_exit >= s_end) {
                acc += kappa * (len - std::min(s_cur, s_end));
                return {acc, false};
            }
            acc += kappa * std::max(0.0, s_exit - s_cur);
            s_cur = std::max(s_cur, s_exit);
            const int next = mesh_->neighbor[tet][exit_face];
            if (next >= 0) {
                tet = next;
                continue;
            }
            // left the mesh; re-locate slightly past the face to distinguish a
            // genuine exit from a grazing touch of a non-convex boundary
            auto rehit = locator_->locate(x + (s_cur + 8.0 * tol) * d);
            if (!rehit) return {acc, true};
            tet = rehit->tet;
            s_cur += 8.0 * tol;
        }
        // traversal got stuck (should not happen on valid meshes); fall back to
        // dense midpoint sampling with point location
        return sampled_depth(x, y, band, len, d);
    }

private:
    DepthResult sampled_depth(const Vec3& x, const Vec3& /*y*/, int band, double len,
                              const Vec3& d) const {
        const int n = 512;
        const double h = len / n;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            auto hit = locator_->locate(x + (i + 0.5) * h * d);
            if (!hit) return {acc, true};
            acc += h * model_->kappa(band, mesh_->tets[hit->tet].region);
        }
        return {acc, false};
    }

    const VolumeMesh* mesh_;
    const PointLocator* locator_;
    const AbsorptionModel* model_;
};

// ---------------------------------------------------------------------------
// Exact depth for domains described by axis-aligned boxes: an outer box, a set
// of carved-out boxes (outside the domain, kappa = +infinity), and a set of
// disjoint region boxes overriding the default region id. Used by the built-in
// scenarios; equals the mesh traversal up to roundoff on the generated meshes.
struct AxisBox {
    Vec3 lo, hi;

    bool contains(const Vec3& p, double tol) const {
        return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol &&
               p.z >= lo.z - tol && p.z <= hi.z + tol;
    }

    // fraction of the segment [a,b] inside the box, in [0,1]
    double clip_fraction(const Vec3& a, const Vec3& b) const {
        double t0 = 0.0, t1 = 1.0;
        for (int d = 0; d < 3; ++d) {
            const double da = a[d], db = b[d];
            const double dir = db - da;
            if (std::abs(dir) < 1e-300) {
                if (da < lo[d] || da > hi[d]) return 0.0;
                continue;
            }
            double ta = (lo[d] - da) / dir;
            double tb = (hi[d] - da) / dir;
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 >= t1) return 0.0;
        }
        return t1 - t0;
    }

    // length of the intersection of segment [a,b] with the box
    double clip_length(const Vec3& a, const Vec3& b) const {
        const double f = clip_fraction(a, b);
        return f > 0.0 ? f * dist(a, b) : 0.0;
    }
};

struct DomainGeometry {
    AxisBox outer;
    std::vector<AxisBox> carved;                    // removed from the domain
    std::vector<std::pair<AxisBox, int>> regions;   // region-id overrides
    int default_region = 0;

    bool inside(const Vec3& p, double tol) const {
        if (!outer.contains(p, tol)) return false;
        for (const auto& c : carved)
            if (c.contains(p, -tol)) return false;
        return true;
    }

    int region_of(const Vec3& p) const {
        for (const auto& [box, id] : regions)
            if (box.contains(p, 0.0)) return id;
        return default_region;
    }
};

class BoxRegionDepth : public DepthEvaluator {
public:
    BoxRegionDepth(const DomainGeometry& geom, const AbsorptionModel& model)
        : geom_(geom), model_(&model) {
        tol_ = 1e-9 * dist(geom.outer.lo, geom.outer.hi);
        const int nb = model.num_bands();
        k0_.resize(nb);
        dk_.resize(geom_.regions.size() * nb);
        for (int b = 0; b < nb; ++b) {
            k0_[b] = model.kappa(b, geom_.default_region);
            for (std::size_t r = 0; r < geom_.regions.size(); ++r)
                dk_[r * nb + b] = model.kappa(b, geom_.regions[r].second) - k0_[b];
        }
    }

    DepthResult depth(const Vec3& x, const Vec3& y, int band) const override {
        if (!geom_.outer.contains(x, tol_) || !geom_.outer.contains(y, tol_)) return {0.0, true};
        const double len = dist(x, y);
        const double frac_tol = 4.0 * tol_ / std::max(len, tol_);
        for (const auto& c : geom_.carved)
            if (c.clip_fraction(x, y) > frac_tol) return {0.0, true};
        double acc = k0_[band] * len;
        const int nb = static_cast<int>(k0_.size());
        for (std::size_t r = 0; r < geom_.regions.size(); ++r) {
            const double f = geom_.regions[r].first.clip_fraction(x, y);
            if (f > 0.0) acc += dk_[r * nb + band] * f * len;
        }
        return {acc, false};
    }

    const DomainGeometry& geometry() const { return geom_; }

private:
    DomainGeometry geom_;
    const AbsorptionModel* model_;
    double tol_;
    std::vector<double> k0_;   // default-region kappa per band
    std::vector<double> dk_;   // kappa difference per (region override, band)
};

inline DepthResult optical_depth(const DepthEvaluator& eval, const Vec3& x, const Vec3& y,
                                 int band) {
    return eval.depth(x, y, band);
}

// ---------------------------------------------------------------------------
// Boundary exit point x_Sigma = x - tau * omega (first boundary hit along
// -omega), via tet walking. Tangent-ray ties are broken by nudging the start
// point inward by 1e-12 * diameter.
struct ExitPoint {
    Vec3 point;
    double tau = 0.0;
    int boundary_tet = -1;
    int boundary_face = -1;
    int label = -1;
};

inline std::optional<ExitPoint> exit_point(const VolumeMesh& mesh, const PointLocator& locator,
                                           const Vec3& x, const Vec3& omega) {
    const Vec3 d = -1.0 * normalized(omega);
    auto hit = locator.locate(x);
    if (!hit) return std::nullopt;
    int tet = hit->tet;
    // inward nudge, toward the containing tet's centroid
    auto pts = mesh.tet_points(tet);
    const Vec3 centroid = 0.25 * (pts[0] + pts[1] + pts[2] + pts[3]);
    const Vec3 p0 = x + (1e-12 * mesh.diameter) * normalized(centroid - x + Vec3{0, 0, 0});

    double s_cur = 0.0;
    const double tol = 1e-12 * mesh.diameter;
    const int max_steps = mesh.num_tets() + 16;
    for (int step = 0; step < max_steps; ++step) {
        double s_exit = std::numeric_limits<double>::infinity();
        int exit_face = -1;
        for (int f = 0; f < 4; ++f) {
            const Vec3 n = mesh.face_normal(tet, f);
            const double dn = dot(n, d);
            if (dn <= 0.0) continue;
            const Vec3 q0 = mesh.vertices[VolumeMesh::face_vertices(mesh.tets[tet], f)[0]];
            const double s_f = dot(n, q0 - p0) / dn;
            if (s_f >= s_cur - tol && s_f < s_exit) {
                s_exit = s_f;
                exit_face = f;
            }
        }
        if (exit_face < 0) return std::nullopt; // degenerate
        const int next = mesh.neighbor[tet][exit_face];
        s_cur = std::max(s_cur, s_exit);
        if (next < 0) {
            ExitPoint out;
            out.point = p0 + s_cur * d;
            out.tau = dist(x, out.point);
            out.boundary_tet = tet;
            out.boundary_face = exit_face;
            for (const auto& bf : mesh.boundary_faces)
                if (bf.tet == tet && bf.face == exit_face) {
                    out.label = bf.label;
                    break;
                }
            return out;
        }
        tet = next;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Planar reflectors.

// 2D index over the triangles of one boundary label, for point-in-patch tests.
// Crossings are clipped strictly to the triangulated patch.
class PatchIndex {
public:
    PatchIndex() = default;

    PatchIndex(const SurfaceMesh& surf, int label, const Vec3& plane_point,
               const Vec3& plane_normal) {
        n_ = normalized(plane_normal);
        p_ = plane_point;
        // in-plane orthonormal basis
        Vec3 a = std::abs(n_.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        u_ = normalized(cross(n_, a));
        v_ = cross(n_, u_);

        double scale = 0.0;
        for (int t = 0; t < surf.num_triangles(); ++t) {
            if (surf.triangles[t].label != label) continue;
            auto pts = surf.tri_points(t);
            std::array<std::array<double, 2>, 3> uv;
            for (int m = 0; m < 3; ++m) {
                const Vec3 r = pts[m] - p_;
                if (std::abs(dot(r, n_)) > 1e-7 * (norm(r) + 1.0))
                    throw std::runtime_error("PatchIndex: patch triangle not on the reflector plane");
                uv[m] = {dot(r, u_), dot(r, v_)};
                scale = std::max({scale, std::abs(uv[m][0]), std::abs(uv[m][1])});
            }
            tris_.push_back(uv);
        }
        if (tris_.empty()) throw std::runtime_error("PatchIndex: no triangles carry the patch label");
        scale_ = std::max(scale, 1e-300);

        lo_ = {1e300, 1e300};
        hi_ = {-1e300, -1e300};
        for (const auto& t : tris_)
            for (const auto& q : t) {
                lo_[0] = std::min(lo_[0], q[0]);
                lo_[1] = std::min(lo_[1], q[1]);
                hi_[0] = std::max(hi_[0], q[0]);
                hi_[1] = std::max(hi_[1], q[1]);
            }
        ncell_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(tris_.size()) / 2.0)));
        cells_.resize(static_cast<size_t>(ncell_) * ncell_);
        for (size_t t = 0; t < tris_.size(); ++t) {
            double tlo0 = 1e300, tlo1 = 1e300, thi0 = -1e300, thi1 = -1e300;
            for (const auto& q : tris_[t]) {
                tlo0 = std::min(tlo0, q[0]);
                tlo1 = std::min(tlo1, q[1]);
                thi0 = std::max(thi0, q[0]);
                thi1 = std::max(thi1, q[1]);
            }
            int i0 = cell_coord(tlo0, 0), i1 = cell_coord(thi0, 0);
            int j0 = cell_coord(tlo1, 1), j1 = cell_coord(thi1, 1);
            for (int i = i0; i <= i1; ++i)
                for (int j = j0; j <= j1; ++j)
                    cells_[static_cast<size_t>(i) * ncell_ + j].push_back(static_cast<int>(t));
        }
    }

    bool contains(const Vec3& point) const {
        const Vec3 r = point - p_;
        const double a = dot(r, u_), b = dot(r, v_);
        if (a < lo_[0] - eps() || a > hi_[0] + eps() || b < lo_[1] - eps() || b > hi_[1] + eps())
            return false;
        const int i = cell_coord(a, 0), j = cell_coord(b, 1);
        for (int t : cells_[static_cast<size_t>(i) * ncell_ + j])
            if (inside_tri(tris_[t], a, b)) return true;
        return false;
    }

private:
    double eps() const { return 1e-12 * scale_; }

    int cell_coord(double x, int axis) const {
        const double lo = lo_[axis], hi = hi_[axis];
        const double w = std::max(hi - lo, 1e-300);
        return std::clamp(static_cast<int>((x - lo) / w * ncell_), 0, ncell_ - 1);
    }

    bool inside_tri(const std::array<std::array<double, 2>, 3>& t, double a, double b) const {
        const double x0 = t[0][0], y0 = t[0][1];
        const double d00 = t[1][0] - x0, d01 = t[1][1] - y0;
        const double d10 = t[2][0] - x0, d11 = t[2][1] - y0;
        const double det = d00 * d11 - d01 * d10;
        if (std::abs(det) < 1e-300) return false;
        const double l1 = ((a - x0) * d11 - (b - y0) * d10) / det;
        const double l2 = (-(a - x0) * d01 + (b - y0) * d00) / det;
        const double tol = 1e-12 * scale_ / std::sqrt(std::abs(det) + 1e-300);
        return l1 >= -tol && l2 >= -tol && l1 + l2 <= 1.0 + tol;
    }

    Vec3 p_, n_, u_, v_;
    std::vector<std::array<std::array<double, 2>, 3>> tris_;
    std::array<double, 2> lo_{}, hi_{};
    int ncell_ = 1;
    double scale_ = 1.0;
    std::vector<std::vector<int>> cells_;
};

struct PlanarReflector {
    Vec3 point;
    Vec3 normal; // unit
    int label = -1;
    double reflectance = 0.0; // R0 in [0,1]
    std::shared_ptr<const PatchIndex> patch;

    double signed_dist(const Vec3& x) const { return dot(x - point, normal); }
};

inline Vec3 mirror_point(const Vec3& x, const PlanarReflector& r) {
    return x - (2.0 * r.signed_dist(x)) * r.normal;
}

// Specular reflection point x' on the reflector's triangulated patch such that
// [x, x'] reflects into [x', y]; none when the unfolded segment misses the
// patch or x and y are on opposite sides of the plane.
inline std::optional<Vec3> reflection_point(const Vec3& x, const Vec3& y,
                                            const PlanarReflector& r) {
    const double sx = r.signed_dist(x);
    const double sy = r.signed_dist(y);
    // x on the plane reflects into itself (t = 0); y on the plane does not
    if (sx * sy < 0.0 || sy == 0.0) return std::nullopt;
    const double t = sx / (sx + sy); // crossing of [mirror(x), y] with the plane
    if (!(t >= 0.0 && t < 1.0 - 1e-12)) return std::nullopt;
    const Vec3 xbar = mirror_point(x, r);
    const Vec3 xp = xbar + t * (y - xbar);
    if (r.patch && !r.patch->contains(xp)) return std::nullopt;
    if (!r.patch) return std::nullopt;
    return xp;
}

struct ReflectorSet {
    std::vector<PlanarReflector> reflectors;

    int size() const { return static_cast<int>(reflectors.size()); }
    const PlanarReflector& operator[](int i) const { return reflectors[i]; }

    void build_patches(const SurfaceMesh& surf) {
        for (auto& r : reflectors)
            r.patch = std::make_shared<PatchIndex>(surf, r.label, r.point, r.normal);
    }

    // Hypothesis-1 sanity check: pairs of reflectors whose planes face each
    // other (a point of one patch lies on the reflective side of the other and
    // vice versa) can exchange rays; only single-bounce physics is computed.
    std::vector<std::pair<int, int>> mutually_visible_pairs(const SurfaceMesh& surf) const {
        std::vector<std::pair<int, int>> out;
        auto side_sample = [&](const PlanarReflector& r, const PlanarReflector& other) {
            for (int t = 0; t < surf.num_triangles(); ++t) {
                if (surf.triangles[t].label != other.label) continue;
                if (std::abs(r.signed_dist(surf.tri_centroid(t))) > 1e-9) return true;
            }
            return false;
        };
        for (int i = 0; i < size(); ++i)
            for (int j = i + 1; j < size(); ++j)
                if (side_sample(reflectors[i], reflectors[j]) &&
                    side_sample(reflectors[j], reflectors[i]))
                    out.emplace_back(i, j);
        return out;
    }
};

// Single-bounce specular path through one reflector.
struct OpticalPath {
    Vec3 bounce;                         // x'_n
    std::array<Vec3, 3> points;          // x, x', y
    double length = 0.0;                 // |x-x'| + |x'-y|
    std::vector<DepthResult> depth_per_band;
};

// At most one path per reflector (Hypothesis 1: planar reflectors, one bounce).
inline std::vector<OpticalPath> reflected_paths(const Vec3& x, const Vec3& y,
                                                const ReflectorSet& reflectors,
                                                const DepthEvaluator& depth, int num_bands) {
    std::vector<OpticalPath> out;
    for (const auto& r : reflectors.reflectors) {
        auto xp = reflection_point(x, y, r);
        if (!xp) continue;
        OpticalPath path;
        path.bounce = *xp;
        path.points = {x, *xp, y};
        path.length = dist(x, *xp) + dist(*xp, y);
        path.depth_per_band.reserve(num_bands);
        for (int b = 0; b < num_bands; ++b)
            path.depth_per_band.push_back(depth.depth(x, *xp, b) + depth.depth(*xp, y, b));
        out.push_back(std::move(path));
    }
    return out;
}

inline AxisBox mirror_box(const AxisBox& b, int axis, double plane) {
    AxisBox out = b;
    out.lo[axis] = 2.0 * plane - b.hi[axis];
    out.hi[axis] = 2.0 * plane - b.lo[axis];
    return out;
}

// Fast single-bounce transport for a mirror covering an entire face of a box
// domain: unfold the reflected path x -> x' -> y into the straight segment
// from the image point x_bar to y, evaluated in the geometry extended by its
// own mirror image. Patch holes (carved boxes touching the mirror plane) are
// handled by the carved-box block test of the unfolded geometry. Produces the
// same values as the generic reflection_point + two-segment path.
struct FastMirror {
    int axis = 0;
    double plane = 0.0;
    double reflectance = 0.0;
    BoxRegionDepth unfolded;

    FastMirror(int axis_, double plane_, double r0, const DomainGeometry& unfolded_geom,
               const AbsorptionModel& model)
        : axis(axis_), plane(plane_), reflectance(r0), unfolded(unfolded_geom, model) {}
};

// Applicable when the reflector plane is axis-aligned and coincides with a
// face of the outer box (the patch then spans that whole face minus carved
// holes); returns nothing otherwise.
inline std::optional<FastMirror> make_fast_mirror(const DomainGeometry& g,
                                                  const PlanarReflector& r,
                                                  const AbsorptionModel& model) {
    int axis = -1;
    for (int d = 0; d < 3; ++d)
        if (std::abs(r.normal[d]) > 1.0 - 1e-12) axis = d;
    if (axis < 0) return std::nullopt;
    const double plane = r.point[axis];
    const double tol = 1e-9 * dist(g.outer.lo, g.outer.hi);
    const bool at_lo = std::abs(plane - g.outer.lo[axis]) < tol;
    const bool at_hi = std::abs(plane - g.outer.hi[axis]) < tol;
    if (!at_lo && !at_hi) return std::nullopt;

    DomainGeometry u = g;
    if (at_lo)
        u.outer.lo[axis] = 2.0 * plane - g.outer.hi[axis];
    else
        u.outer.hi[axis] = 2.0 * plane - g.outer.lo[axis];
    for (const auto& c : g.carved) u.carved.push_back(mirror_box(c, axis, plane));
    for (const auto& [box, id] : g.regions) u.regions.emplace_back(mirror_box(box, axis, plane), id);
    return FastMirror(axis, plane, r.reflectance, u, model);
}

} // namespace rtint
