#pragma once

#include "rtint/absorption.hpp"
#include "rtint/entry_generator.hpp"
#include "rtint/mesh.hpp"
#include "rtint/transport.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

namespace rtint {

inline constexpr double inv_4pi = 1.0 / (4.0 * std::numbers::pi);

// Emitted boundary intensity Q0 >= 0 per label; zero on reflector labels.
struct SourceField {
    std::vector<std::pair<int, double>> q0_per_label;

    double value(int label) const {
        for (const auto& [l, q] : q0_per_label)
            if (l == label) return q;
        return 0.0;
    }
};

// Everything the entry generators need for one frequency band.
struct KernelContext {
    const VolumeMesh* vol = nullptr;
    const SurfaceMesh* surf = nullptr;
    const AbsorptionModel* model = nullptr;
    const ReflectorSet* reflectors = nullptr;
    const DepthEvaluator* depth = nullptr;
    // when set, replaces the generic reflected-path machinery with unfolded
    // straight-segment evaluation (box geometries with face mirrors only)
    const std::vector<FastMirror>* fast_mirrors = nullptr;
    std::set<int> emitting_labels; // labels where Q0 may be nonzero
    int band = 0;
    double r_near_factor = 2.0; // near-field radius = factor * local mesh size
    double r_far_factor = 10.0; // centroid rule beyond factor * element size

    double r_near(int vertex) const { return r_near_factor * vol->vertex_h[vertex]; }
};

namespace detail {

// Per-thread scratch for batched row evaluation (stamped position maps).
struct KernelScratch {
    std::vector<int> pos;
    std::vector<uint32_t> pos_stamp;
    std::vector<uint32_t> elem_stamp;
    uint32_t stamp = 0;

    void prepare(size_t npoints, size_t nelems) {
        if (pos.size() < npoints) {
            pos.resize(npoints);
            pos_stamp.assign(npoints, 0);
        }
        if (elem_stamp.size() < nelems) elem_stamp.assign(nelems, 0);
        ++stamp;
        if (stamp == 0) { // wrapped
            std::fill(pos_stamp.begin(), pos_stamp.end(), 0);
            std::fill(elem_stamp.begin(), elem_stamp.end(), 0);
            stamp = 1;
        }
    }
};

inline KernelScratch& kernel_scratch() {
    thread_local KernelScratch s;
    return s;
}

} // namespace detail

// Direct plus single-bounce reflected transport factor between a target point
// and a quadrature point (the bracket of the volume integrand, without kappa).
inline double transport_factor(const KernelContext& ctx, const Vec3& xi, const Vec3& y) {
    double g = 0.0;
    const DepthResult dd = ctx.depth->depth(xi, y, ctx.band);
    if (!dd.blocked) g += std::exp(-dd.value) / dist2(xi, y);
    if (ctx.fast_mirrors) {
        for (const auto& fm : *ctx.fast_mirrors) {
            const double sx = xi[fm.axis] - fm.plane;
            const double sy = y[fm.axis] - fm.plane;
            // a target on the plane still sees its image (equal to the direct
            // term); only opposite-side and in-plane source points are skipped
            if (sx * sy < 0.0 || sy == 0.0) continue;
            Vec3 xbar = xi;
            xbar[fm.axis] = 2.0 * fm.plane - xi[fm.axis];
            const DepthResult d = fm.unfolded.depth(xbar, y, ctx.band);
            if (d.blocked) continue;
            g += fm.reflectance * std::exp(-d.value) / dist2(xbar, y);
        }
        return g;
    }
    if (ctx.reflectors) {
        for (const auto& r : ctx.reflectors->reflectors) {
            if (r.reflectance <= 0.0) continue;
            auto xp = reflection_point(xi, y, r);
            if (!xp) continue;
            const DepthResult d1 = ctx.depth->depth(xi, *xp, ctx.band);
            if (d1.blocked) continue;
            const DepthResult d2 = ctx.depth->depth(*xp, y, ctx.band);
            if (d2.blocked) continue;
            const double len = dist(xi, *xp) + dist(*xp, y);
            g += r.reflectance * std::exp(-(d1.value + d2.value)) / (len * len);
        }
    }
    return g;
}

// Transport factor plus its analytic gradient in y. Each unblocked path
// contributes R exp(-tau)/L^2 with d tau/dy = kappa(y) u and dL/dy = u along
// the arrival direction u, so the gradient costs no extra depth evaluations.
// kappa_y is the absorption at y for the current band.
inline double transport_factor_grad(const KernelContext& ctx, const Vec3& xi, const Vec3& y,
                                    double kappa_y, Vec3& grad) {
    double g = 0.0;
    grad = Vec3{0.0, 0.0, 0.0};
    {
        const DepthResult dd = ctx.depth->depth(xi, y, ctx.band);
        if (!dd.blocked) {
            const double r2 = dist2(xi, y);
            const double r = std::sqrt(r2);
            const double f = std::exp(-dd.value) / r2;
            g += f;
            grad = grad - (f * (kappa_y + 2.0 / r) / r) * (y - xi);
        }
    }
    if (ctx.fast_mirrors) {
        for (const auto& fm : *ctx.fast_mirrors) {
            const double sx = xi[fm.axis] - fm.plane;
            const double sy = y[fm.axis] - fm.plane;
            if (sx * sy < 0.0 || sy == 0.0) continue;
            Vec3 xbar = xi;
            xbar[fm.axis] = 2.0 * fm.plane - xi[fm.axis];
            const DepthResult d = fm.unfolded.depth(xbar, y, ctx.band);
            if (d.blocked) continue;
            const double r2 = dist2(xbar, y);
            const double r = std::sqrt(r2);
            const double f = fm.reflectance * std::exp(-d.value) / r2;
            g += f;
            grad = grad - (f * (kappa_y + 2.0 / r) / r) * (y - xbar);
        }
        return g;
    }
    if (ctx.reflectors) {
        for (const auto& r : ctx.reflectors->reflectors) {
            if (r.reflectance <= 0.0) continue;
            auto xp = reflection_point(xi, y, r);
            if (!xp) continue;
            const DepthResult d1 = ctx.depth->depth(xi, *xp, ctx.band);
            if (d1.blocked) continue;
            const DepthResult d2 = ctx.depth->depth(*xp, y, ctx.band);
            if (d2.blocked) continue;
            const double len = dist(xi, *xp) + dist(*xp, y);
            const double f = r.reflectance * std::exp(-(d1.value + d2.value)) / (len * len);
            g += f;
            const double seg = dist(*xp, y);
            if (seg > 0.0) grad = grad - (f * (kappa_y + 2.0 / len) / seg) * (y - *xp);
        }
    }
    return g;
}

// Surface source factor at emitting point y with outward normal n: squared
// one-sided cosine over distance squared, direct and reflected.
inline double surface_factor(const KernelContext& ctx, const Vec3& xi, const Vec3& y,
                             const Vec3& n) {
    double g = 0.0;
    const Vec3 d = xi - y;
    const double dn = dot(d, n);
    if (dn < 0.0) {
        const DepthResult dd = ctx.depth->depth(xi, y, ctx.band);
        if (!dd.blocked) {
            const double r2 = norm2(d);
            g += dn * dn / (r2 * r2) * std::exp(-dd.value);
        }
    }
    if (ctx.fast_mirrors) {
        for (const auto& fm : *ctx.fast_mirrors) {
            const double sx = xi[fm.axis] - fm.plane;
            const double sy = y[fm.axis] - fm.plane;
            if (sx * sy < 0.0 || sy == 0.0) continue;
            Vec3 xbar = xi;
            xbar[fm.axis] = 2.0 * fm.plane - xi[fm.axis];
            const double t = sx / (sx + sy);
            const Vec3 xp = xbar + t * (y - xbar);
            const Vec3 dp = xp - y;
            const double dpn = dot(dp, n);
            if (dpn >= 0.0) continue;
            const DepthResult dr = fm.unfolded.depth(xbar, y, ctx.band);
            if (dr.blocked) continue;
            g += fm.reflectance * dpn * dpn / (norm2(dp) * dist2(xbar, y)) *
                 std::exp(-dr.value);
        }
        return g;
    }
    if (ctx.reflectors) {
        for (const auto& r : ctx.reflectors->reflectors) {
            if (r.reflectance <= 0.0) continue;
            auto xp = reflection_point(xi, y, r);
            if (!xp) continue;
            const Vec3 dp = *xp - y;
            const double dpn = dot(dp, n);
            if (dpn >= 0.0) continue;
            const DepthResult d1 = ctx.depth->depth(xi, *xp, ctx.band);
            if (d1.blocked) continue;
            const DepthResult d2 = ctx.depth->depth(*xp, y, ctx.band);
            if (d2.blocked) continue;
            const double len = dist(xi, *xp) + dist(*xp, y);
            g += r.reflectance * dpn * dpn / (norm2(dp) * len * len) *
                 std::exp(-(d1.value + d2.value));
        }
    }
    return g;
}

// Nontangential limit of the one-sided source kernel when the target sits on
// the emitting surface itself: the integrand concentrates at the target, and
// the element integral tends to w^l(xi) * (vertex angle)/2 -- a contribution
// pointwise quadrature misses entirely because the in-plane cosine vanishes.
// Image patches of reflectors whose plane passes through the target touch it
// at the mirrored angle, so they scale the limit by their reflectance.
inline double source_concentration(const KernelContext& ctx, const Vec3& xi,
                                   const std::array<Vec3, 3>& pts, int local) {
    const double tol = 1e-9 * ctx.vol->diameter;
    if (dist2(xi, pts[local]) > tol * tol) return 0.0;
    const Vec3 e1 = pts[(local + 1) % 3] - pts[local];
    const Vec3 e2 = pts[(local + 2) % 3] - pts[local];
    const double angle = std::atan2(norm(cross(e1, e2)), dot(e1, e2));
    double gain = 1.0;
    if (ctx.fast_mirrors) {
        for (const auto& fm : *ctx.fast_mirrors)
            if (std::abs(xi[fm.axis] - fm.plane) <= tol) gain += fm.reflectance;
    } else if (ctx.reflectors) {
        for (const auto& r : ctx.reflectors->reflectors)
            if (r.reflectance > 0.0 && std::abs(r.signed_dist(xi)) <= tol && r.patch &&
                r.patch->contains(xi))
                gain += r.reflectance;
    }
    return 0.5 * angle * gain;
}

// ---------------------------------------------------------------------------
// G_kappa: volume-to-volume operator. Entry (i, j) is the quadrature
// approximation of (1/4pi) int_Omega kappa(y) [direct + reflected] w^j(y) dy
// over supp(w^j); the degree-5 rule is used for tets within the near-field
// radius of the target vertex, degree 2 at mid range, and the centroid rule
// for tets many element sizes away (relative error there ~ (h/d)^2).
class VolumeKernel : public EntryGenerator {
public:
    explicit VolumeKernel(KernelContext ctx) : ctx_(ctx) {
        if (!ctx_.vol || !ctx_.model || !ctx_.depth)
            throw std::invalid_argument("VolumeKernel: incomplete context");
    }

    int num_rows() const override { return ctx_.vol->num_vertices(); }
    int num_cols() const override { return ctx_.vol->num_vertices(); }

    double entry(int i, int j) const override {
        count_evaluations(1);
        const VolumeMesh& m = *ctx_.vol;
        const Vec3 xi = m.vertices[i];
        const double rnear = ctx_.r_near(i);
        double acc = 0.0;
        auto [t0, t1] = m.tets_of_vertex(j);
        for (int ti = t0; ti < t1; ++ti) {
            const int t = m.vertex_tet_list[ti];
            const auto& tet = m.tets[t];
            const auto pts = m.tet_points(t);
            const int deg = pick_degree(xi, pts, rnear, m.tet_volume[t]);
            const double kap = ctx_.model->kappa(ctx_.band, tet.region);
            const double wk = m.tet_volume[t] * kap;
            int local = 0;
            while (tet.v[local] != j) ++local;
            if (deg == 1) {
                // centroid value plus analytic gradient: integrates the hat-
                // weighted kernel to second order with one path evaluation
                const Vec3 c = 0.25 * (pts[0] + pts[1] + pts[2] + pts[3]);
                Vec3 gf;
                const double fc = transport_factor_grad(ctx_, xi, c, kap, gf);
                acc += 0.25 * wk * (fc + 0.2 * dot(gf, pts[local] - c));
                continue;
            }
            for (const auto& q : tet_rule(deg)) {
                const Vec3 y = bary_point(pts, q.bary);
                acc += q.weight * wk * q.bary[local] * transport_factor(ctx_, xi, y);
            }
        }
        return inv_4pi * acc;
    }

    // Amortized over the shared tets of neighboring columns.
    void row(int i, std::span<const int> cols, double* out) const override {
        count_evaluations(static_cast<long long>(cols.size()));
        const VolumeMesh& m = *ctx_.vol;
        auto& ws = detail::kernel_scratch();
        ws.prepare(m.num_vertices(), m.num_tets());
        for (size_t k = 0; k < cols.size(); ++k) {
            ws.pos[cols[k]] = static_cast<int>(k);
            ws.pos_stamp[cols[k]] = ws.stamp;
            out[k] = 0.0;
        }
        const Vec3 xi = m.vertices[i];
        const double rnear = ctx_.r_near(i);
        for (int j : cols) {
            auto [t0, t1] = m.tets_of_vertex(j);
            for (int ti = t0; ti < t1; ++ti) {
                const int t = m.vertex_tet_list[ti];
                if (ws.elem_stamp[t] == ws.stamp) continue;
                ws.elem_stamp[t] = ws.stamp;
                const auto& tet = m.tets[t];
                const auto pts = m.tet_points(t);
                const int deg = pick_degree(xi, pts, rnear, m.tet_volume[t]);
                const double kap = ctx_.model->kappa(ctx_.band, tet.region);
                const double wk = inv_4pi * m.tet_volume[t] * kap;
                if (deg == 1) {
                    const Vec3 c = 0.25 * (pts[0] + pts[1] + pts[2] + pts[3]);
                    Vec3 gf;
                    const double fc = transport_factor_grad(ctx_, xi, c, kap, gf);
                    for (int mloc = 0; mloc < 4; ++mloc) {
                        const int jj = tet.v[mloc];
                        if (ws.pos_stamp[jj] == ws.stamp)
                            out[ws.pos[jj]] +=
                                0.25 * wk * (fc + 0.2 * dot(gf, pts[mloc] - c));
                    }
                    continue;
                }
                for (const auto& q : tet_rule(deg)) {
                    const Vec3 y = bary_point(pts, q.bary);
                    const double g = q.weight * wk * transport_factor(ctx_, xi, y);
                    for (int mloc = 0; mloc < 4; ++mloc) {
                        const int jj = tet.v[mloc];
                        if (ws.pos_stamp[jj] == ws.stamp) out[ws.pos[jj]] += g * q.bary[mloc];
                    }
                }
            }
        }
    }

    void col(int j, std::span<const int> rows, double* out) const override {
        count_evaluations(static_cast<long long>(rows.size()));
        const VolumeMesh& m = *ctx_.vol;
        for (size_t k = 0; k < rows.size(); ++k) out[k] = 0.0;
        auto [t0, t1] = m.tets_of_vertex(j);
        for (int ti = t0; ti < t1; ++ti) {
            const int t = m.vertex_tet_list[ti];
            const auto& tet = m.tets[t];
            const auto pts = m.tet_points(t);
            const double kap = ctx_.model->kappa(ctx_.band, tet.region);
            const double wk = inv_4pi * m.tet_volume[t] * kap;
            const Vec3 c = 0.25 * (pts[0] + pts[1] + pts[2] + pts[3]);
            int local = 0;
            while (tet.v[local] != j) ++local;
            for (size_t k = 0; k < rows.size(); ++k) {
                const int i = rows[k];
                const Vec3 xi = m.vertices[i];
                const int deg = pick_degree(xi, pts, ctx_.r_near(i), m.tet_volume[t]);
                if (deg == 1) {
                    Vec3 gf;
                    const double fc = transport_factor_grad(ctx_, xi, c, kap, gf);
                    out[k] += 0.25 * wk * (fc + 0.2 * dot(gf, pts[local] - c));
                    continue;
                }
                double acc = 0.0;
                for (const auto& q : tet_rule(deg)) {
                    const Vec3 y = bary_point(pts, q.bary);
                    acc += q.weight * q.bary[local] * transport_factor(ctx_, xi, y);
                }
                out[k] += wk * acc;
            }
        }
    }

    const KernelContext& context() const { return ctx_; }

private:
    int pick_degree(const Vec3& xi, const std::array<Vec3, 4>& pts, double rnear,
                    double vol_t) const {
        double d2 = dist2(xi, pts[0]);
        for (int m = 1; m < 4; ++m) d2 = std::min(d2, dist2(xi, pts[m]));
        if (d2 < rnear * rnear) return 5;
        // element size ~ edge length ~ 2 * cbrt(volume)
        const double rfar = ctx_.r_far_factor * 2.0 * std::cbrt(vol_t);
        return d2 > rfar * rfar ? 1 : 2;
    }

    KernelContext ctx_;
};

// ---------------------------------------------------------------------------
// S^E: surface-to-volume source operator. Entry (i, l) integrates the source
// kernel against the surface hat function w~^l over the emitting triangles.
// Columns of non-emitting vertices are zero.
class SurfaceKernel : public EntryGenerator {
public:
    explicit SurfaceKernel(KernelContext ctx) : ctx_(ctx) {
        if (!ctx_.vol || !ctx_.surf || !ctx_.model || !ctx_.depth)
            throw std::invalid_argument("SurfaceKernel: incomplete context");
    }

    int num_rows() const override { return ctx_.vol->num_vertices(); }
    int num_cols() const override { return ctx_.surf->num_vertices(); }

    double entry(int i, int l) const override {
        count_evaluations(1);
        const SurfaceMesh& s = *ctx_.surf;
        const Vec3 xi = ctx_.vol->vertices[i];
        const double rnear = ctx_.r_near(i);
        double acc = 0.0;
        for (int ti = s.vertex_tri_offset[l]; ti < s.vertex_tri_offset[l + 1]; ++ti) {
            const int t = s.vertex_tri_list[ti];
            if (!ctx_.emitting_labels.contains(s.triangles[t].label)) continue;
            const auto pts = s.tri_points(t);
            const auto& rule = tri_rule(near_tri(xi, pts, rnear) ? 5 : 2);
            int local = 0;
            while (s.triangles[t].v[local] != l) ++local;
            for (const auto& q : rule) {
                const Vec3 y = bary_point(pts, q.bary);
                acc += q.weight * s.areas[t] * q.bary[local] *
                       surface_factor(ctx_, xi, y, s.normals[t]);
            }
            acc += source_concentration(ctx_, xi, pts, local);
        }
        return inv_4pi * acc;
    }

    void row(int i, std::span<const int> cols, double* out) const override {
        count_evaluations(static_cast<long long>(cols.size()));
        const SurfaceMesh& s = *ctx_.surf;
        auto& ws = detail::kernel_scratch();
        ws.prepare(s.num_vertices(), s.num_triangles());
        for (size_t k = 0; k < cols.size(); ++k) {
            ws.pos[cols[k]] = static_cast<int>(k);
            ws.pos_stamp[cols[k]] = ws.stamp;
            out[k] = 0.0;
        }
        const Vec3 xi = ctx_.vol->vertices[i];
        const double rnear = ctx_.r_near(i);
        for (int l : cols) {
            for (int ti = s.vertex_tri_offset[l]; ti < s.vertex_tri_offset[l + 1]; ++ti) {
                const int t = s.vertex_tri_list[ti];
                if (ws.elem_stamp[t] == ws.stamp) continue;
                ws.elem_stamp[t] = ws.stamp;
                if (!ctx_.emitting_labels.contains(s.triangles[t].label)) continue;
                const auto pts = s.tri_points(t);
                const auto& rule = tri_rule(near_tri(xi, pts, rnear) ? 5 : 2);
                const double wa = inv_4pi * s.areas[t];
                for (const auto& q : rule) {
                    const Vec3 y = bary_point(pts, q.bary);
                    const double g = q.weight * wa * surface_factor(ctx_, xi, y, s.normals[t]);
                    for (int mloc = 0; mloc < 3; ++mloc) {
                        const int ll = s.triangles[t].v[mloc];
                        if (ws.pos_stamp[ll] == ws.stamp) out[ws.pos[ll]] += g * q.bary[mloc];
                    }
                }
                for (int mloc = 0; mloc < 3; ++mloc) {
                    const int ll = s.triangles[t].v[mloc];
                    if (ws.pos_stamp[ll] != ws.stamp) continue;
                    const double c = source_concentration(ctx_, xi, pts, mloc);
                    if (c != 0.0) out[ws.pos[ll]] += inv_4pi * c;
                }
            }
        }
    }

    void col(int l, std::span<const int> rows, double* out) const override {
        count_evaluations(static_cast<long long>(rows.size()));
        const SurfaceMesh& s = *ctx_.surf;
        for (size_t k = 0; k < rows.size(); ++k) out[k] = 0.0;
        for (int ti = s.vertex_tri_offset[l]; ti < s.vertex_tri_offset[l + 1]; ++ti) {
            const int t = s.vertex_tri_list[ti];
            if (!ctx_.emitting_labels.contains(s.triangles[t].label)) continue;
            const auto pts = s.tri_points(t);
            int local = 0;
            while (s.triangles[t].v[local] != l) ++local;
            const double wa = inv_4pi * s.areas[t];
            for (size_t k = 0; k < rows.size(); ++k) {
                const int i = rows[k];
                const Vec3 xi = ctx_.vol->vertices[i];
                const auto& rule = tri_rule(near_tri(xi, pts, ctx_.r_near(i)) ? 5 : 2);
                double acc = 0.0;
                for (const auto& q : rule) {
                    const Vec3 y = bary_point(pts, q.bary);
                    acc += q.weight * q.bary[local] * surface_factor(ctx_, xi, y, s.normals[t]);
                }
                out[k] += wa * acc + inv_4pi * source_concentration(ctx_, xi, pts, local);
            }
        }
    }

    const KernelContext& context() const { return ctx_; }

private:
    static bool near_tri(const Vec3& xi, const std::array<Vec3, 3>& pts, double rnear) {
        double d2 = dist2(xi, pts[0]);
        for (int m = 1; m < 3; ++m) d2 = std::min(d2, dist2(xi, pts[m]));
        return d2 < rnear * rnear;
    }

    KernelContext ctx_;
};

// Nodal expansion Q0(y) = sum_l Q0_l w~^l(y) of a per-label source field:
// vertices of emitting triangles carry the (area-weighted) label value.
inline std::vector<double> nodal_source(const SurfaceMesh& surf, const SourceField& q0,
                                        const std::set<int>& emitting_labels) {
    std::vector<double> out(surf.num_vertices(), 0.0);
    std::vector<double> weight(surf.num_vertices(), 0.0);
    for (int t = 0; t < surf.num_triangles(); ++t) {
        const int label = surf.triangles[t].label;
        if (!emitting_labels.contains(label)) continue;
        const double q = q0.value(label);
        for (int m = 0; m < 3; ++m) {
            const int v = surf.triangles[t].v[m];
            out[v] += surf.areas[t] * q;
            weight[v] += surf.areas[t];
        }
    }
    for (int v = 0; v < surf.num_vertices(); ++v)
        if (weight[v] > 0.0) out[v] /= weight[v];
    return out;
}

// S^E_i = sum_l S^E_{i,l} Q0_l for explicitly given entries (test/oracle path;
// the production path is the compressed operator's matvec).
inline std::vector<double> assemble_source_vector(const SurfaceKernel& kernel,
                                                  const std::vector<double>& q0_nodal) {
    if (static_cast<int>(q0_nodal.size()) != kernel.num_cols())
        throw std::invalid_argument("assemble_source_vector: dimension mismatch");
    std::vector<double> out(kernel.num_rows(), 0.0);
    std::vector<int> cols(kernel.num_cols());
    for (int l = 0; l < kernel.num_cols(); ++l) cols[l] = l;
    std::vector<double> rowbuf(kernel.num_cols());
    for (int i = 0; i < kernel.num_rows(); ++i) {
        kernel.row(i, cols, rowbuf.data());
        double acc = 0.0;
        for (int l = 0; l < kernel.num_cols(); ++l) acc += rowbuf[l] * q0_nodal[l];
        out[i] = acc;
    }
    return out;
}

} // namespace rtint
