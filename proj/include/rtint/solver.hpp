#pragma once

#include "rtint/hmatrix.hpp"
#include "rtint/kernels.hpp"
#include "rtint/planck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtint {

struct ProblemSetup {
    const VolumeMesh* vol = nullptr;
    const SurfaceMesh* surf = nullptr;
    const AbsorptionModel* model = nullptr;
    const ReflectorSet* reflectors = nullptr; // may be null
    const std::vector<FastMirror>* fast_mirrors = nullptr; // may be null
    const DepthEvaluator* depth = nullptr;
    SourceField q0;
    std::set<int> emitting_labels;
};

struct SolveConfig {
    double tol = 1e-8;
    int max_iters = 50;
    double t_initial = 0.0;
    double eta = 2.0;
    double eps = 1e-4;
    int leaf_size = 64;
    int workers = 1;
    double r_near_factor = 2.0;
    double r_far_factor = 10.0;
};

struct TraceRow {
    int iter = 0;
    double dt_sup = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    std::string verdict; // increasing / decreasing / steady / mixed
    double seconds = 0.0;
};

// Volume-weighted average over the tets incident to each vertex of a
// per-region table; the nodal coefficients of a region-wise constant field.
inline std::vector<double> nodal_region_average(const VolumeMesh& m,
                                                const std::vector<double>& per_region) {
    std::vector<double> out(m.num_vertices(), 0.0), w(m.num_vertices(), 0.0);
    for (int t = 0; t < m.num_tets(); ++t) {
        const double v = m.tet_volume[t];
        const double val = per_region.at(m.tets[t].region);
        for (int k = 0; k < 4; ++k) {
            const int j = m.tets[t].v[k];
            out[j] += v * val;
            w[j] += v;
        }
    }
    for (int j = 0; j < m.num_vertices(); ++j)
        if (w[j] > 0.0) out[j] /= w[j];
    return out;
}

// The compressed operators for one problem: one volume H-matrix per distinct
// kappa table (bands sharing kappa share the operator) and the precomputed
// boundary source vector S^E * Q0 per representative band.
struct AssembledOperators {
    std::vector<int> group;                // band -> representative band
    std::vector<HMatrix> g_volume;         // indexed by band, filled at representatives
    std::vector<std::vector<double>> se;   // indexed by band, filled at representatives
    CompressionReport volume_report;       // aggregated over representatives
    CompressionReport surface_report;
    double assembly_seconds = 0.0;

    const HMatrix& g(int band) const { return g_volume[group[band]]; }
    const std::vector<double>& source(int band) const { return se[group[band]]; }
};

inline AssembledOperators assemble_operators(const ProblemSetup& p, const SolveConfig& cfg) {
    if (!p.vol || !p.surf || !p.model || !p.depth)
        throw std::invalid_argument("assemble_operators: incomplete problem setup");
    const auto t0 = std::chrono::steady_clock::now();

    AssembledOperators ops;
    ops.group = p.model->kappa_group();
    const int nb = p.model->num_bands();
    ops.g_volume.resize(nb);
    ops.se.resize(nb);

    const ClusterTree vol_tree(p.vol->vertices, cfg.leaf_size);
    const ClusterTree surf_tree(p.surf->vertices, cfg.leaf_size);
    const std::vector<double> q0_nodal = nodal_source(*p.surf, p.q0, p.emitting_labels);

    auto accumulate = [](CompressionReport& dst, const CompressionReport& src) {
        dst.stored_entries += src.stored_entries;
        dst.full_entries += src.full_entries;
        dst.entry_evaluations += src.entry_evaluations;
        dst.dense_leaves += src.dense_leaves;
        dst.admissible_leaves += src.admissible_leaves;
        dst.downgraded_leaves += src.downgraded_leaves;
        for (const auto& [lvl, r] : src.max_rank_per_level) {
            auto& m = dst.max_rank_per_level[lvl];
            m = std::max(m, r);
        }
    };

    for (int b = 0; b < nb; ++b) {
        if (ops.group[b] != b) continue;
        KernelContext ctx;
        ctx.vol = p.vol;
        ctx.surf = p.surf;
        ctx.model = p.model;
        ctx.reflectors = p.reflectors;
        ctx.fast_mirrors =
            (p.fast_mirrors && !p.fast_mirrors->empty()) ? p.fast_mirrors : nullptr;
        ctx.depth = p.depth;
        ctx.emitting_labels = p.emitting_labels;
        ctx.band = b;
        ctx.r_near_factor = cfg.r_near_factor;
        ctx.r_far_factor = cfg.r_far_factor;

        const VolumeKernel gk(ctx);
        ops.g_volume[b] = HMatrix::assemble(gk, vol_tree, vol_tree, cfg.eta, cfg.eps, cfg.workers);
        accumulate(ops.volume_report, ops.g_volume[b].report());

        const SurfaceKernel sk(ctx);
        const HMatrix hs =
            HMatrix::assemble(sk, vol_tree, surf_tree, cfg.eta, cfg.eps, cfg.workers);
        accumulate(ops.surface_report, hs.report());
        ops.se[b] = hs.matvec(q0_nodal);
    }
    ops.assembly_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return ops;
}

struct SolveResult {
    std::vector<std::vector<double>> j_band; // [band][vertex], band-integrated
    std::vector<double> temperature;         // [vertex]
    std::vector<TraceRow> trace;
    std::string verdict; // overall direction of the temperature iteration
    bool converged = false;
    int iterations = 0;
    double budget_residual = 0.0; // sup-norm of the relative nodal energy budget
    double solve_seconds = 0.0;
};

namespace detail {

// Grey fast path applies when the single band starts at zero and reaches far
// enough into the Wien tail for the current temperature scale.
inline bool grey_band(const AbsorptionModel& model, double t_scale) {
    return model.num_bands() == 1 && model.band(0).lo <= 0.0 &&
           model.band(0).hi >= 35.0 * std::max(t_scale, 0.0);
}

} // namespace detail

inline SolveResult solve(const ProblemSetup& p, const AssembledOperators& ops,
                         const SolveConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    const VolumeMesh& m = *p.vol;
    const AbsorptionModel& model = *p.model;
    const int nb = model.num_bands();
    const int nv = m.num_vertices();

    // nodal absorption data
    std::vector<std::vector<double>> albedo_n(nb), coeff_n(nb);
    for (int b = 0; b < nb; ++b) {
        albedo_n[b] = nodal_region_average(m, model.albedo_row(b));
        std::vector<double> c(model.num_regions());
        for (int r = 0; r < model.num_regions(); ++r)
            c[r] = model.kappa(b, r) * (1.0 - model.albedo(b, r));
        coeff_n[b] = nodal_region_average(m, c);
    }

    SolveResult res;
    res.j_band.assign(nb, std::vector<double>(nv, 0.0));
    res.temperature.assign(nv, std::max(cfg.t_initial, 0.0));

    std::vector<double> t_new(nv), s(nv), bb(nv);
    std::vector<Band> node_bands(nb);
    std::vector<double> node_coeff(nb), node_j(nb);
    for (int b = 0; b < nb; ++b) node_bands[b] = model.band(b);

    const double vtol = 1e-14;
    bool any_inc = false, any_dec = false;
    double prev_dt = -1.0;

    for (int it = 1; it <= cfg.max_iters; ++it) {
        const auto it_start = std::chrono::steady_clock::now();

        // J_b <- S^E_b + G_b [ a J_b + (1 - a) B_b(T) ]
        for (int b = 0; b < nb; ++b) {
            const Band& band = node_bands[b];
            const bool grey = detail::grey_band(model, *std::max_element(res.temperature.begin(),
                                                                         res.temperature.end()));
            for (int j = 0; j < nv; ++j) {
                const double T = res.temperature[j];
                bb[j] = grey ? kSigma * T * T * T * T : band_planck(band, T);
                const double a = albedo_n[b][j];
                s[j] = a * res.j_band[b][j] + (1.0 - a) * bb[j];
            }
            std::vector<double> jn = ops.g(b).matvec(s);
            const std::vector<double>& se = ops.source(b);
            for (int j = 0; j < nv; ++j) res.j_band[b][j] = se[j] + jn[j];
        }

        // nodal temperature from the energy budget
        const bool grey_total =
            detail::grey_band(model, *std::max_element(res.temperature.begin(),
                                                       res.temperature.end()));
        for (int j = 0; j < nv; ++j) {
            double csum = 0.0;
            for (int b = 0; b < nb; ++b) {
                node_coeff[b] = coeff_n[b][j];
                node_j[b] = res.j_band[b][j];
                csum += node_coeff[b];
            }
            if (csum <= 0.0)
                throw std::runtime_error(
                    "solve: temperature undetermined at vertex " + std::to_string(j) +
                    " (kappa * (1 - albedo) vanishes in every band)");
            if (grey_total) {
                t_new[j] = grey_temperature(std::max(node_j[0], 0.0));
            } else {
                t_new[j] = solve_temperature(node_bands, node_coeff, node_j);
            }
            if (!std::isfinite(t_new[j]))
                throw std::runtime_error("solve: non-finite temperature at iteration " +
                                         std::to_string(it) + ", vertex " + std::to_string(j));
        }

        double dt_sup = 0.0, t_min = t_new[0], t_max = t_new[0], scale = 0.0;
        bool inc = false, dec = false;
        for (int j = 0; j < nv; ++j) {
            const double d = t_new[j] - res.temperature[j];
            dt_sup = std::max(dt_sup, std::abs(d));
            t_min = std::min(t_min, t_new[j]);
            t_max = std::max(t_max, t_new[j]);
            scale = std::max(scale, std::abs(t_new[j]));
            if (d > vtol * std::max(scale, 1e-300)) inc = true;
            if (d < -vtol * std::max(scale, 1e-300)) dec = true;
        }
        any_inc = any_inc || inc;
        any_dec = any_dec || dec;

        TraceRow row;
        row.iter = it;
        row.dt_sup = dt_sup;
        row.t_min = t_min;
        row.t_max = t_max;
        row.verdict = (inc && dec) ? "mixed" : inc ? "increasing" : dec ? "decreasing" : "steady";
        row.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - it_start).count();
        res.trace.push_back(row);

        res.temperature = t_new;
        res.iterations = it;
        // stop on the estimated distance to the limit, not the step size: for
        // a contraction with factor q the remaining gap is ~ dt * q / (1 - q)
        double gap = dt_sup;
        if (prev_dt > 0.0 && dt_sup > 0.0) {
            const double q = std::min(dt_sup / prev_dt, 0.995);
            gap = dt_sup * q / (1.0 - q);
        }
        prev_dt = dt_sup;
        if (scale > 0.0 && dt_sup <= cfg.tol * scale && gap <= cfg.tol * scale) {
            res.converged = true;
            break;
        }
        if (scale == 0.0 && dt_sup == 0.0) {
            res.converged = true;
            break;
        }
    }

    res.verdict = (any_inc && any_dec) ? "mixed" : any_inc ? "increasing"
                                       : any_dec           ? "decreasing"
                                                           : "steady";

    // relative sup-norm of the nodal energy budget at the computed state
    const bool grey_total = detail::grey_band(
        model, *std::max_element(res.temperature.begin(), res.temperature.end()));
    double worst = 0.0;
    for (int j = 0; j < nv; ++j) {
        double r = 0.0, sc = 0.0;
        for (int b = 0; b < nb; ++b) {
            const double T = res.temperature[j];
            const double bint =
                grey_total ? kSigma * T * T * T * T : band_planck(node_bands[b], T);
            r += coeff_n[b][j] * (res.j_band[b][j] - bint);
            sc += coeff_n[b][j] * (std::abs(res.j_band[b][j]) + bint);
        }
        if (sc > 0.0) worst = std::max(worst, std::abs(r) / sc);
    }
    res.budget_residual = worst;
    res.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

// ---------------------------------------------------------------------------
// P1 samples of a nodal field along a segment; samples outside the mesh are
// flagged rather than extrapolated.
struct ProbeSample {
    double s = 0.0; // arc-length parameter from the segment start
    Vec3 point;
    double value = 0.0;
    bool inside = false;
};

inline std::vector<ProbeSample> probe_line(const VolumeMesh& m, const PointLocator& loc,
                                           const std::vector<double>& field, const Vec3& a,
                                           const Vec3& b, int samples) {
    if (static_cast<int>(field.size()) != m.num_vertices())
        throw std::invalid_argument("probe_line: field size does not match mesh");
    if (samples < 2) throw std::invalid_argument("probe_line: need at least 2 samples");
    std::vector<ProbeSample> out(samples);
    const double len = dist(a, b);
    for (int k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) / (samples - 1);
        ProbeSample& ps = out[k];
        ps.s = t * len;
        ps.point = a + t * (b - a);
        if (auto hit = loc.locate(ps.point)) {
            ps.inside = true;
            double v = 0.0;
            for (int c = 0; c < 4; ++c) v += hit->bary[c] * field[m.tets[hit->tet].v[c]];
            ps.value = v;
        }
    }
    return out;
}

} // namespace rtint
