#pragma once

#include "rtint/mesh.hpp"
#include "rtint/solver.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rtint {

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write output file: " + path);
    return f;
}

} // namespace detail

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
    out << "iter,dT_sup,Tmin,Tmax,verdict,seconds\n";
    for (const auto& r : trace)
        out << r.iter << "," << r.dt_sup << "," << r.t_min << "," << r.t_max << "," << r.verdict
            << "," << r.seconds << "\n";
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
    auto f = detail::open_out(path);
    write_trace_csv(f, trace);
}

// samples outside the mesh keep their coordinates but an empty value field
inline void write_probe_csv(std::ostream& out, const std::vector<ProbeSample>& samples) {
    out << "s,x,y,z,value,inside\n";
    for (const auto& p : samples) {
        out << p.s << "," << p.point.x << "," << p.point.y << "," << p.point.z << ",";
        if (p.inside) out << p.value;
        out << "," << (p.inside ? 1 : 0) << "\n";
    }
}

inline void write_probe_csv(const std::string& path, const std::vector<ProbeSample>& samples) {
    auto f = detail::open_out(path);
    write_probe_csv(f, samples);
}

using NamedField = std::pair<std::string, const std::vector<double>*>;

inline void write_field_csv(const std::string& path, const VolumeMesh& mesh,
                            const std::vector<NamedField>& fields) {
    auto f = detail::open_out(path);
    f << "x,y,z";
    for (const auto& [name, vals] : fields) {
        if (static_cast<int>(vals->size()) != mesh.num_vertices())
            throw std::invalid_argument("write_field_csv: field '" + name + "' size mismatch");
        f << "," << name;
    }
    f << "\n";
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        const Vec3& p = mesh.vertices[i];
        f << p.x << "," << p.y << "," << p.z;
        for (const auto& [name, vals] : fields) f << "," << (*vals)[i];
        f << "\n";
    }
}

// legacy-ASCII unstructured grid (tet cells, scalar point data)
inline void write_vtk(const std::string& path, const VolumeMesh& mesh,
                      const std::vector<NamedField>& fields, const std::string& title = "field") {
    auto f = detail::open_out(path);
    f << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    f << "POINTS " << mesh.num_vertices() << " double\n";
    for (const Vec3& p : mesh.vertices) f << p.x << " " << p.y << " " << p.z << "\n";
    f << "CELLS " << mesh.num_tets() << " " << 5LL * mesh.num_tets() << "\n";
    for (const auto& t : mesh.tets)
        f << "4 " << t.v[0] << " " << t.v[1] << " " << t.v[2] << " " << t.v[3] << "\n";
    f << "CELL_TYPES " << mesh.num_tets() << "\n";
    for (int t = 0; t < mesh.num_tets(); ++t) f << "10\n";
    if (!fields.empty()) {
        f << "POINT_DATA " << mesh.num_vertices() << "\n";
        for (const auto& [name, vals] : fields) {
            if (static_cast<int>(vals->size()) != mesh.num_vertices())
                throw std::invalid_argument("write_vtk: field '" + name + "' size mismatch");
            f << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : *vals) f << v << "\n";
        }
    }
}

struct BenchRow {
    long long n = 0;              // vertex count
    double surface_cl = 0.0;      // surface compression level
    double volume_cl = 0.0;       // volume compression level
    double assembly_seconds = 0.0;
    double solve_seconds = 0.0;
    double normalized_cpu = 0.0;  // 1e5 * cpu / (N * N^{1/3} * ln N)
};

inline double normalized_cpu(long long n, double cpu_seconds) {
    const double nd = static_cast<double>(n);
    return 1e5 * cpu_seconds / (nd * std::cbrt(nd) * std::log(nd));
}

inline void write_bench_tsv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "N\tsurface_CL\tvolume_CL\tassembly_s\tsolve_s\tnormalized_cpu\n";
    for (const auto& r : rows)
        out << r.n << "\t" << r.surface_cl << "\t" << r.volume_cl << "\t" << r.assembly_seconds
            << "\t" << r.solve_seconds << "\t" << r.normalized_cpu << "\n";
}

inline void write_bench_tsv(const std::string& path, const std::vector<BenchRow>& rows) {
    auto f = detail::open_out(path);
    write_bench_tsv(f, rows);
}

} // namespace rtint
