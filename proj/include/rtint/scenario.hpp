#pragma once

#include "rtint/absorption.hpp"
#include "rtint/kernels.hpp"
#include "rtint/mesh.hpp"
#include "rtint/transport.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtint {

// ---------------------------------------------------------------------------
// Structured tetrahedral mesher for axis-aligned box domains: uniform grid,
// cells outside the domain skipped, each remaining cell split into six tets
// sharing the main diagonal (conforming across cells).

struct BoxMeshSpec {
    DomainGeometry geometry;
    double cell = 1.0; // target edge length; per-axis counts are rounded
    // label for a boundary face given its centroid and outward unit normal
    std::function<int(const Vec3&, const Vec3&)> boundary_label;
};

struct GeneratedMesh {
    VolumeMesh vol;
    SurfaceMesh surf;
};

inline GeneratedMesh generate_box_mesh(const BoxMeshSpec& spec) {
    const AxisBox& box = spec.geometry.outer;
    const Vec3 ext = box.hi - box.lo;
    int n[3];
    for (int d = 0; d < 3; ++d) {
        n[d] = std::max(1, static_cast<int>(std::lround(ext[d] / spec.cell)));
    }
    const double h[3] = {ext.x / n[0], ext.y / n[1], ext.z / n[2]};

    auto grid_id = [&](int i, int j, int k) {
        return (static_cast<long long>(i) * (n[1] + 1) + j) * (n[2] + 1) + k;
    };
    auto grid_point = [&](int i, int j, int k) {
        return Vec3{box.lo.x + i * h[0], box.lo.y + j * h[1], box.lo.z + k * h[2]};
    };

    GeneratedMesh out;
    std::map<long long, int> vid;
    auto vertex = [&](int i, int j, int k) {
        const long long g = grid_id(i, j, k);
        auto it = vid.find(g);
        if (it != vid.end()) return it->second;
        const int id = static_cast<int>(out.vol.vertices.size());
        out.vol.vertices.push_back(grid_point(i, j, k));
        vid.emplace(g, id);
        return id;
    };

    // the six tets of the Kuhn split of a cube, as paths along the main
    // diagonal; corner bit order (dx, dy, dz) -> dx + 2 dy + 4 dz
    static const int axis_perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    static const int axis_bit[3] = {1, 2, 4};

    for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
            for (int k = 0; k < n[2]; ++k) {
                const Vec3 center = grid_point(i, j, k) + 0.5 * Vec3{h[0], h[1], h[2]};
                if (!spec.geometry.inside(center, 0.0)) continue;
                const int region = spec.geometry.region_of(center);
                int corner[8];
                for (int b = 0; b < 8; ++b)
                    corner[b] = vertex(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
                for (const auto& perm : axis_perm) {
                    VolumeMesh::Tet t;
                    t.v[0] = corner[0];
                    t.v[1] = corner[axis_bit[perm[0]]];
                    t.v[2] = corner[axis_bit[perm[0]] | axis_bit[perm[1]]];
                    t.v[3] = corner[7];
                    t.region = region;
                    out.vol.tets.push_back(t);
                }
            }
    out.vol.finalize();

    // boundary triangles, labeled geometrically, wound to the outward normal
    std::vector<int> surf_vid(out.vol.num_vertices(), -1);
    auto surf_vertex = [&](int v) {
        if (surf_vid[v] < 0) {
            surf_vid[v] = static_cast<int>(out.surf.vertices.size());
            out.surf.vertices.push_back(out.vol.vertices[v]);
        }
        return surf_vid[v];
    };
    for (auto& bf : out.vol.boundary_faces) {
        auto fv = VolumeMesh::face_vertices(out.vol.tets[bf.tet], bf.face);
        const Vec3 a = out.vol.vertices[fv[0]], b = out.vol.vertices[fv[1]],
                   c = out.vol.vertices[fv[2]];
        const Vec3 outward = out.vol.face_normal(bf.tet, bf.face);
        if (dot(cross(b - a, c - a), outward) < 0.0) std::swap(fv[1], fv[2]);
        const Vec3 centroid = (a + b + c) / 3.0;
        bf.label =
            spec.boundary_label ? spec.boundary_label(centroid, normalized(outward)) : 0;
        SurfaceMesh::Tri tri;
        for (int m = 0; m < 3; ++m) tri.v[m] = surf_vertex(fv[m]);
        tri.label = bf.label;
        out.surf.triangles.push_back(tri);
    }
    out.surf.finalize();
    return out;
}

// ---------------------------------------------------------------------------
// A fully wired problem instance: meshes, physics, reflectors, transport.
// Non-movable because the locator and depth evaluator point into the meshes.

struct Scenario {
    std::string name;
    VolumeMesh vol;
    SurfaceMesh surf;
    AbsorptionModel model;
    ReflectorSet reflectors;
    SourceField q0;
    std::set<int> emitting_labels;
    std::optional<DomainGeometry> geometry; // set for generated box domains
    std::vector<FastMirror> fast_mirrors;   // filled when every mirror qualifies
    std::unique_ptr<PointLocator> locator;
    std::unique_ptr<DepthEvaluator> depth;

    Scenario() = default;
    Scenario(const Scenario&) = delete;
    Scenario& operator=(const Scenario&) = delete;

    // builds the locator, the depth evaluator, and the reflector patches;
    // call once after all data members are set
    void finalize_runtime() {
        locator = std::make_unique<PointLocator>(vol);
        if (geometry)
            depth = std::make_unique<BoxRegionDepth>(*geometry, model);
        else
            depth = std::make_unique<MeshTraversalDepth>(vol, *locator, model);
        if (!reflectors.reflectors.empty()) reflectors.build_patches(surf);
        // use unfolded-path transport when every mirror sits on an outer face
        fast_mirrors.clear();
        if (geometry && !reflectors.reflectors.empty()) {
            for (const auto& r : reflectors.reflectors) {
                auto fm = make_fast_mirror(*geometry, r, model);
                if (!fm) {
                    fast_mirrors.clear();
                    break;
                }
                fast_mirrors.push_back(std::move(*fm));
            }
        }
    }
};

using ScenarioPtr = std::unique_ptr<Scenario>;

// ---------------------------------------------------------------------------
// Built-in void-duct benchmark geometry: container D = (0,60)x(0,100)x(0,60)
// with the source cube C = (0,10)^3 removed; its three faces inside D radiate
// Q0 = 0.1. The duct (0,10)x(10,100)x(0,10) is near-transparent in the
// two-region variants. Boundary labels: 0 plain, 1 source, 2/3/4 the
// x=0 / y=0 / z=0 mirror planes.

inline constexpr int kLabelPlain = 0;
inline constexpr int kLabelSource = 1;
inline constexpr int kLabelMirrorX = 2;
inline constexpr int kLabelMirrorY = 3;
inline constexpr int kLabelMirrorZ = 4;

namespace detail {

inline int duct_boundary_label(const Vec3& c, const Vec3&) {
    const double tol = 1e-9 * 100.0;
    auto near = [&](double a, double b) { return std::abs(a - b) < tol; };
    if (near(c.x, 10.0) && c.y < 10.0 && c.z < 10.0) return kLabelSource;
    if (near(c.y, 10.0) && c.x < 10.0 && c.z < 10.0) return kLabelSource;
    if (near(c.z, 10.0) && c.x < 10.0 && c.y < 10.0) return kLabelSource;
    if (near(c.x, 0.0)) return kLabelMirrorX;
    if (near(c.y, 0.0)) return kLabelMirrorY;
    if (near(c.z, 0.0)) return kLabelMirrorZ;
    return kLabelPlain;
}

inline int duct_sym_boundary_label(const Vec3& c, const Vec3&) {
    const double tol = 1e-9 * 100.0;
    auto near = [&](double a, double b) { return std::abs(a - b) < tol; };
    const double ax = std::abs(c.x);
    if (near(ax, 10.0) && c.y < 10.0 && c.z < 10.0) return kLabelSource;
    if (near(c.y, 10.0) && ax < 10.0 && c.z < 10.0) return kLabelSource;
    if (near(c.z, 10.0) && ax < 10.0 && c.y < 10.0) return kLabelSource;
    return kLabelPlain;
}

} // namespace detail

// grey band wide enough for the Wien tail at the benchmark's temperature scale
inline Band duct_grey_band() { return Band{0.0, 20.0}; }

// test 1: one mirror (x=0), uniform kappa = 0.1
// test 2: one mirror (x=0), two-region kappa {0.1, 1e-4}
// test 3: three mirrors (x=0, y=0, z=0), two-region kappa
// cells_per_10: grid cells per 10 length units (2 -> N ~ 3.5K, 6 -> N ~ 83K)
inline ScenarioPtr make_duct_scenario(int test, int cells_per_10, bool reflective = true) {
    if (test < 1 || test > 3) throw std::invalid_argument("make_duct_scenario: test must be 1..3");
    if (cells_per_10 < 1) throw std::invalid_argument("make_duct_scenario: bad resolution");
    auto s = std::make_unique<Scenario>();
    s->name = "kobayashi-test" + std::to_string(test);

    DomainGeometry g;
    g.outer = {{0, 0, 0}, {60, 100, 60}};
    g.carved.push_back({{0, 0, 0}, {10, 10, 10}});
    g.default_region = 0;
    const bool two_region = test >= 2;
    if (two_region) g.regions.push_back({{{0, 10, 0}, {10, 100, 10}}, 1});

    BoxMeshSpec spec;
    spec.geometry = g;
    spec.cell = 10.0 / cells_per_10;
    spec.boundary_label = detail::duct_boundary_label;
    GeneratedMesh gm = generate_box_mesh(spec);
    s->vol = std::move(gm.vol);
    s->surf = std::move(gm.surf);
    s->geometry = g;

    std::vector<double> kappa = two_region ? std::vector<double>{0.1, 1e-4}
                                           : std::vector<double>{0.1};
    std::vector<double> albedo(kappa.size(), 0.0);
    s->model = AbsorptionModel({duct_grey_band()}, {kappa}, {albedo});

    s->q0.q0_per_label = {{kLabelSource, 0.1}};
    s->emitting_labels = {kLabelSource};

    if (reflective) {
        auto mirror = [](int label, const Vec3& n) {
            PlanarReflector r;
            r.point = {0, 0, 0};
            r.normal = n;
            r.label = label;
            r.reflectance = 1.0;
            return r;
        };
        s->reflectors.reflectors.push_back(mirror(kLabelMirrorX, {1, 0, 0}));
        if (test == 3) {
            s->reflectors.reflectors.push_back(mirror(kLabelMirrorY, {0, 1, 0}));
            s->reflectors.reflectors.push_back(mirror(kLabelMirrorZ, {0, 0, 1}));
        }
    }
    s->finalize_runtime();
    return s;
}

// test-1 domain extended by its x < 0 mirror image, mirrored source cube,
// no reflective condition: the reference for the reflection-equivalence check
inline ScenarioPtr make_duct_symmetrized_scenario(int cells_per_10) {
    auto s = std::make_unique<Scenario>();
    s->name = "kobayashi-test1-sym";

    DomainGeometry g;
    g.outer = {{-60, 0, 0}, {60, 100, 60}};
    g.carved.push_back({{0, 0, 0}, {10, 10, 10}});
    g.carved.push_back({{-10, 0, 0}, {0, 10, 10}});
    g.default_region = 0;

    BoxMeshSpec spec;
    spec.geometry = g;
    spec.cell = 10.0 / cells_per_10;
    spec.boundary_label = detail::duct_sym_boundary_label;
    GeneratedMesh gm = generate_box_mesh(spec);
    s->vol = std::move(gm.vol);
    s->surf = std::move(gm.surf);
    s->geometry = g;

    s->model = AbsorptionModel({duct_grey_band()}, {{0.1}}, {{0.0}});
    s->q0.q0_per_label = {{kLabelSource, 0.1}};
    s->emitting_labels = {kLabelSource};
    s->finalize_runtime();
    return s;
}

// ---------------------------------------------------------------------------
// Config file: sections in brackets, one "key = value" per line, '#' comments.
// Repeatable keys: band, source, reflector, probe. Grammar documented in the
// README; serialize() followed by parse() reproduces the config exactly.

struct BandSpec {
    double lo = 0.0, hi = 0.0;
    std::vector<double> kappa, albedo;
};

struct ReflectorSpec {
    int label = -1;
    Vec3 normal, point;
    double reflectance = 0.0;
};

struct ProbeSpec {
    std::string name;
    Vec3 a, b;
    int samples = 101;
};

struct ScenarioConfig {
    // [scenario]
    std::string name = "custom";
    std::string builtin;       // kobayashi-test{1,2,3}[-norc], kobayashi-test1-sym
    int cells_per_10 = 2;      // resolution of built-in scenarios
    std::string volume_mesh;   // custom scenarios: mesh file paths
    std::string surface_mesh;
    // [bands] band = lo hi | kappa per region | albedo per region
    std::vector<BandSpec> bands;
    // [source] source = label q0
    std::vector<std::pair<int, double>> sources;
    // [reflector] reflector = label nx ny nz px py pz R0
    std::vector<ReflectorSpec> reflectors;
    // [solver]
    double t_initial = 0.0;
    double tol = 1e-8;
    int max_iters = 50;
    // [hmatrix]
    double eta = 2.0;
    double eps = 1e-4;
    int leaf_size = 64;
    double r_near_factor = 2.0;
    double r_far_factor = 10.0;
    // [output] probe = name x0 y0 z0 x1 y1 z1 samples ; field = 0|1
    std::vector<ProbeSpec> probes;
    bool field_dump = true;

    static ScenarioConfig parse(std::istream& in);
    static ScenarioConfig load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open config file: " + path);
        return parse(f);
    }
    void serialize(std::ostream& out) const;
    void save(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write config file: " + path);
        serialize(f);
    }
    std::vector<std::string> validate() const;
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
    std::istringstream in(s);
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    std::string rest;
    in.clear();
    if (in >> rest) throw std::runtime_error("config: trailing junk in " + what + ": " + s);
    return out;
}

} // namespace detail

inline ScenarioConfig ScenarioConfig::parse(std::istream& in) {
    ScenarioConfig c;
    c.bands.clear();
    std::string line, section;
    std::vector<std::string> errors;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            if (section == "scenario") {
                if (key == "name") c.name = value;
                else if (key == "builtin") c.builtin = value;
                else if (key == "cells_per_10") c.cells_per_10 = std::stoi(value);
                else if (key == "volume_mesh") c.volume_mesh = value;
                else if (key == "surface_mesh") c.surface_mesh = value;
                else throw std::runtime_error("unknown key '" + key + "'");
            } else if (section == "bands") {
                if (key != "band") throw std::runtime_error("unknown key '" + key + "'");
                std::vector<std::string> parts;
                std::string v = value;
                size_t pos;
                while ((pos = v.find('|')) != std::string::npos) {
                    parts.push_back(v.substr(0, pos));
                    v.erase(0, pos + 1);
                }
                parts.push_back(v);
                if (parts.size() != 3)
                    throw std::runtime_error("band needs 'lo hi | kappa... | albedo...'");
                const auto range = detail::parse_doubles(parts[0], "band range");
                if (range.size() != 2) throw std::runtime_error("band range needs two numbers");
                BandSpec b;
                b.lo = range[0];
                b.hi = range[1];
                b.kappa = detail::parse_doubles(parts[1], "band kappa");
                b.albedo = detail::parse_doubles(parts[2], "band albedo");
                c.bands.push_back(std::move(b));
            } else if (section == "source") {
                if (key != "source") throw std::runtime_error("unknown key '" + key + "'");
                const auto v = detail::parse_doubles(value, "source");
                if (v.size() != 2) throw std::runtime_error("source needs 'label q0'");
                c.sources.emplace_back(static_cast<int>(v[0]), v[1]);
            } else if (section == "reflector") {
                if (key != "reflector") throw std::runtime_error("unknown key '" + key + "'");
                const auto v = detail::parse_doubles(value, "reflector");
                if (v.size() != 8)
                    throw std::runtime_error("reflector needs 'label nx ny nz px py pz R0'");
                ReflectorSpec r;
                r.label = static_cast<int>(v[0]);
                r.normal = {v[1], v[2], v[3]};
                r.point = {v[4], v[5], v[6]};
                r.reflectance = v[7];
                c.reflectors.push_back(r);
            } else if (section == "solver") {
                if (key == "t_initial") c.t_initial = std::stod(value);
                else if (key == "tol") c.tol = std::stod(value);
                else if (key == "max_iters") c.max_iters = std::stoi(value);
                else throw std::runtime_error("unknown key '" + key + "'");
            } else if (section == "hmatrix") {
                if (key == "eta") c.eta = std::stod(value);
                else if (key == "eps") c.eps = std::stod(value);
                else if (key == "leaf_size") c.leaf_size = std::stoi(value);
                else if (key == "r_near_factor") c.r_near_factor = std::stod(value);
                else if (key == "r_far_factor") c.r_far_factor = std::stod(value);
                else throw std::runtime_error("unknown key '" + key + "'");
            } else if (section == "output") {
                if (key == "probe") {
                    std::istringstream ps(value);
                    ProbeSpec p;
                    ps >> p.name >> p.a.x >> p.a.y >> p.a.z >> p.b.x >> p.b.y >> p.b.z >>
                        p.samples;
                    if (!ps) throw std::runtime_error(
                        "probe needs 'name x0 y0 z0 x1 y1 z1 samples'");
                    c.probes.push_back(std::move(p));
                } else if (key == "field") {
                    c.field_dump = std::stoi(value) != 0;
                } else {
                    throw std::runtime_error("unknown key '" + key + "'");
                }
            } else {
                throw std::runtime_error("unknown section '" + section + "'");
            }
        } catch (const std::exception& e) {
            errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!errors.empty()) {
        std::string msg = "config validation failed:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw std::runtime_error(msg);
    }
    return c;
}

inline void ScenarioConfig::serialize(std::ostream& out) const {
    using detail::fmt_double;
    out << "[scenario]\n";
    out << "name = " << name << "\n";
    if (!builtin.empty()) out << "builtin = " << builtin << "\n";
    out << "cells_per_10 = " << cells_per_10 << "\n";
    if (!volume_mesh.empty()) out << "volume_mesh = " << volume_mesh << "\n";
    if (!surface_mesh.empty()) out << "surface_mesh = " << surface_mesh << "\n";
    out << "\n[bands]\n";
    for (const auto& b : bands) {
        out << "band = " << fmt_double(b.lo) << " " << fmt_double(b.hi) << " |";
        for (double k : b.kappa) out << " " << fmt_double(k);
        out << " |";
        for (double a : b.albedo) out << " " << fmt_double(a);
        out << "\n";
    }
    out << "\n[source]\n";
    for (const auto& [l, q] : sources) out << "source = " << l << " " << fmt_double(q) << "\n";
    out << "\n[reflector]\n";
    for (const auto& r : reflectors)
        out << "reflector = " << r.label << " " << fmt_double(r.normal.x) << " "
            << fmt_double(r.normal.y) << " " << fmt_double(r.normal.z) << " "
            << fmt_double(r.point.x) << " " << fmt_double(r.point.y) << " "
            << fmt_double(r.point.z) << " " << fmt_double(r.reflectance) << "\n";
    out << "\n[solver]\n";
    out << "t_initial = " << fmt_double(t_initial) << "\n";
    out << "tol = " << fmt_double(tol) << "\n";
    out << "max_iters = " << max_iters << "\n";
    out << "\n[hmatrix]\n";
    out << "eta = " << fmt_double(eta) << "\n";
    out << "eps = " << fmt_double(eps) << "\n";
    out << "leaf_size = " << leaf_size << "\n";
    out << "r_near_factor = " << fmt_double(r_near_factor) << "\n";
    out << "r_far_factor = " << fmt_double(r_far_factor) << "\n";
    out << "\n[output]\n";
    for (const auto& p : probes)
        out << "probe = " << p.name << " " << fmt_double(p.a.x) << " " << fmt_double(p.a.y)
            << " " << fmt_double(p.a.z) << " " << fmt_double(p.b.x) << " " << fmt_double(p.b.y)
            << " " << fmt_double(p.b.z) << " " << p.samples << "\n";
    out << "field = " << (field_dump ? 1 : 0) << "\n";
}

inline std::vector<std::string> ScenarioConfig::validate() const {
    std::vector<std::string> errors;
    if (builtin.empty()) {
        if (volume_mesh.empty()) errors.push_back("scenario: volume_mesh is required");
        if (surface_mesh.empty()) errors.push_back("scenario: surface_mesh is required");
        if (bands.empty()) errors.push_back("bands: at least one band is required");
        size_t nreg = bands.empty() ? 0 : bands[0].kappa.size();
        for (size_t b = 0; b < bands.size(); ++b) {
            const auto& band = bands[b];
            if (!(band.hi > band.lo))
                errors.push_back("bands: band " + std::to_string(b) + " is empty or inverted");
            if (b > 0 && band.lo < bands[b - 1].hi)
                errors.push_back("bands: band " + std::to_string(b) + " overlaps its predecessor");
            if (band.kappa.size() != nreg || band.albedo.size() != nreg)
                errors.push_back("bands: band " + std::to_string(b) +
                                 " has inconsistent region table sizes");
            for (double k : band.kappa)
                if (!(k > 0.0))
                    errors.push_back("bands: band " + std::to_string(b) + " has kappa <= 0");
            for (double a : band.albedo)
                if (!(a >= 0.0 && a <= 1.0))
                    errors.push_back("bands: band " + std::to_string(b) +
                                     " has albedo outside [0,1]");
        }
        if (sources.empty()) errors.push_back("source: at least one emitting label is required");
        for (const auto& [l, q] : sources)
            if (q < 0.0) errors.push_back("source: Q0 must be >= 0 for label " + std::to_string(l));
        for (const auto& r : reflectors) {
            if (!(norm(r.normal) > 0.0))
                errors.push_back("reflector: zero normal for label " + std::to_string(r.label));
            if (r.reflectance < 0.0 || r.reflectance > 1.0)
                errors.push_back("reflector: R0 outside [0,1] for label " +
                                 std::to_string(r.label));
        }
    } else {
        const std::string& b = builtin;
        if (b != "kobayashi-test1" && b != "kobayashi-test2" && b != "kobayashi-test3" &&
            b != "kobayashi-test1-norc" && b != "kobayashi-test1-sym")
            errors.push_back("scenario: unknown builtin '" + b + "'");
        if (cells_per_10 < 1) errors.push_back("scenario: cells_per_10 must be >= 1");
    }
    if (!(tol > 0.0)) errors.push_back("solver: tol must be > 0");
    if (max_iters < 1) errors.push_back("solver: max_iters must be >= 1");
    if (t_initial < 0.0) errors.push_back("solver: t_initial must be >= 0");
    if (!(eta > 0.0)) errors.push_back("hmatrix: eta must be > 0");
    if (!(eps > 0.0 && eps < 1.0)) errors.push_back("hmatrix: eps must be in (0,1)");
    if (leaf_size < 1) errors.push_back("hmatrix: leaf_size must be >= 1");
    if (!(r_near_factor >= 0.0)) errors.push_back("hmatrix: r_near_factor must be >= 0");
    if (!(r_far_factor > 0.0)) errors.push_back("hmatrix: r_far_factor must be > 0");
    for (const auto& p : probes)
        if (p.samples < 2)
            errors.push_back("output: probe '" + p.name + "' needs at least 2 samples");
    return errors;
}

// Builds the scenario a config describes: one of the built-in generated
// domains, or meshes loaded from files with physics taken from the config.
inline ScenarioPtr build_scenario(const ScenarioConfig& cfg) {
    {
        const auto errors = cfg.validate();
        if (!errors.empty()) {
            std::string msg = "config validation failed:";
            for (const auto& e : errors) msg += "\n  " + e;
            throw std::runtime_error(msg);
        }
    }
    if (!cfg.builtin.empty()) {
        if (cfg.builtin == "kobayashi-test1") return make_duct_scenario(1, cfg.cells_per_10);
        if (cfg.builtin == "kobayashi-test2") return make_duct_scenario(2, cfg.cells_per_10);
        if (cfg.builtin == "kobayashi-test3") return make_duct_scenario(3, cfg.cells_per_10);
        if (cfg.builtin == "kobayashi-test1-norc")
            return make_duct_scenario(1, cfg.cells_per_10, /*reflective=*/false);
        if (cfg.builtin == "kobayashi-test1-sym")
            return make_duct_symmetrized_scenario(cfg.cells_per_10);
        throw std::runtime_error("unknown builtin scenario: " + cfg.builtin);
    }

    auto s = std::make_unique<Scenario>();
    s->name = cfg.name;
    s->vol = load_volume_mesh(cfg.volume_mesh);
    s->surf = load_surface_mesh(cfg.surface_mesh);

    std::vector<Band> bands;
    std::vector<std::vector<double>> kappa, albedo;
    for (const auto& b : cfg.bands) {
        bands.push_back({b.lo, b.hi});
        kappa.push_back(b.kappa);
        albedo.push_back(b.albedo);
    }
    s->model = AbsorptionModel(std::move(bands), std::move(kappa), std::move(albedo));

    std::set<int> surf_labels;
    for (const auto& t : s->surf.triangles) surf_labels.insert(t.label);
    std::vector<std::string> errors;
    for (const auto& [l, q] : cfg.sources) {
        if (!surf_labels.contains(l))
            errors.push_back("source: label " + std::to_string(l) +
                             " does not exist in the surface mesh");
        s->q0.q0_per_label.emplace_back(l, q);
        s->emitting_labels.insert(l);
    }
    for (const auto& r : cfg.reflectors) {
        if (!surf_labels.contains(r.label)) {
            errors.push_back("reflector: label " + std::to_string(r.label) +
                             " does not exist in the surface mesh");
            continue;
        }
        PlanarReflector pr;
        pr.point = r.point;
        pr.normal = normalized(r.normal);
        pr.label = r.label;
        pr.reflectance = r.reflectance;
        s->reflectors.reflectors.push_back(pr);
    }
    for (const auto& t : s->vol.tets)
        if (t.region < 0 || t.region >= s->model.num_regions()) {
            errors.push_back("mesh: tet region " + std::to_string(t.region) +
                             " has no entry in the band tables");
            break;
        }
    if (!errors.empty()) {
        std::string msg = "config validation failed:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw std::runtime_error(msg);
    }
    s->finalize_runtime();
    return s;
}

// The effective config of a built-in scenario (bands, source, reflectors
// spelled out) so that solve runs can serialize exactly what they did.
inline ScenarioConfig builtin_config(const std::string& builtin, int cells_per_10) {
    ScenarioConfig c;
    c.name = builtin;
    c.builtin = builtin;
    c.cells_per_10 = cells_per_10;
    const Band g = duct_grey_band();
    const bool two_region = builtin == "kobayashi-test2" || builtin == "kobayashi-test3";
    BandSpec b;
    b.lo = g.lo;
    b.hi = g.hi;
    b.kappa = two_region ? std::vector<double>{0.1, 1e-4} : std::vector<double>{0.1};
    b.albedo.assign(b.kappa.size(), 0.0);
    c.bands = {b};
    c.sources = {{kLabelSource, 0.1}};
    if (builtin == "kobayashi-test1" || builtin == "kobayashi-test2" ||
        builtin == "kobayashi-test3") {
        c.reflectors.push_back({kLabelMirrorX, {1, 0, 0}, {0, 0, 0}, 1.0});
        if (builtin == "kobayashi-test3") {
            c.reflectors.push_back({kLabelMirrorY, {0, 1, 0}, {0, 0, 0}, 1.0});
            c.reflectors.push_back({kLabelMirrorZ, {0, 0, 1}, {0, 0, 0}, 1.0});
        }
    }
    c.probes = {{"j-axis-x", {0, 25, 25}, {60, 25, 25}, 121},
                {"j-duct-y", {5, 0, 5}, {5, 100, 5}, 201}};
    return c;
}

} // namespace rtint
