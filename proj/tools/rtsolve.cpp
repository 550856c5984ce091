#include <rtint/rtint.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace rtint;

namespace {

struct Options {
    std::string config_path;
    std::string scenario = "kobayashi-test3";
    std::string out_dir = "out";
    std::string cells = "2"; // resolution(s) of built-in scenarios, comma separated
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    double eta = -1.0;
    double eps = -1.0;
    int leaf_size = -1;
};

std::vector<int> parse_cells(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const int c = std::stoi(tok);
        if (c < 1) throw std::runtime_error("--cells entries must be >= 1");
        out.push_back(c);
    }
    if (out.empty()) throw std::runtime_error("--cells must name at least one resolution");
    return out;
}

ScenarioConfig effective_config(const Options& opt, int cells) {
    ScenarioConfig cfg = opt.config_path.empty() ? builtin_config(opt.scenario, cells)
                                                 : ScenarioConfig::load(opt.config_path);
    if (!opt.config_path.empty() && !cfg.builtin.empty() && cells > 0) cfg.cells_per_10 = cells;
    if (opt.eta > 0.0) cfg.eta = opt.eta;
    if (opt.eps > 0.0) cfg.eps = opt.eps;
    if (opt.leaf_size > 0) cfg.leaf_size = opt.leaf_size;
    return cfg;
}

SolveConfig solve_config(const ScenarioConfig& cfg, int workers) {
    SolveConfig sc;
    sc.tol = cfg.tol;
    sc.max_iters = cfg.max_iters;
    sc.t_initial = cfg.t_initial;
    sc.eta = cfg.eta;
    sc.eps = cfg.eps;
    sc.leaf_size = cfg.leaf_size;
    sc.r_near_factor = cfg.r_near_factor;
    sc.workers = workers;
    return sc;
}

void warn_mutually_visible(const Scenario& s) {
    const auto pairs = s.reflectors.mutually_visible_pairs(s.surf);
    for (const auto& [i, j] : pairs)
        std::cerr << "warning: reflector patches " << s.reflectors[i].label << " and "
                  << s.reflectors[j].label
                  << " can see each other; only single-bounce reflection is computed\n";
}

struct RunOutput {
    ScenarioPtr scenario;
    AssembledOperators ops;
    SolveResult result;
};

RunOutput run_scenario(const ScenarioConfig& cfg, int workers, bool verbose = true) {
    RunOutput out;
    out.scenario = build_scenario(cfg);
    warn_mutually_visible(*out.scenario);
    const SolveConfig sc = solve_config(cfg, workers);
    ProblemSetup p;
    p.vol = &out.scenario->vol;
    p.surf = &out.scenario->surf;
    p.model = &out.scenario->model;
    p.reflectors = out.scenario->reflectors.reflectors.empty() ? nullptr : &out.scenario->reflectors;
    p.fast_mirrors = &out.scenario->fast_mirrors;
    p.depth = out.scenario->depth.get();
    p.q0 = out.scenario->q0;
    p.emitting_labels = out.scenario->emitting_labels;
    if (verbose)
        std::cout << out.scenario->name << ": N = " << out.scenario->vol.num_vertices()
                  << " vertices, " << out.scenario->vol.num_tets() << " tets\n";
    out.ops = assemble_operators(p, sc);
    if (verbose)
        std::cout << "  assembled in " << out.ops.assembly_seconds
                  << " s (volume C.L. " << out.ops.volume_report.ratio() << ", surface C.L. "
                  << out.ops.surface_report.ratio() << ")\n";
    out.result = solve(p, out.ops, sc);
    if (verbose)
        std::cout << "  solved in " << out.result.solve_seconds << " s, "
                  << out.result.iterations << " iterations, "
                  << (out.result.converged ? "converged" : "NOT converged") << ", verdict "
                  << out.result.verdict << "\n";
    return out;
}

void write_run_outputs(const fs::path& dir, const ScenarioConfig& cfg, const RunOutput& run) {
    fs::create_directories(dir);
    cfg.save((dir / "effective_config.txt").string());
    write_trace_csv((dir / "trace.csv").string(), run.result.trace);
    const Scenario& s = *run.scenario;
    for (const auto& p : cfg.probes) {
        const auto samples =
            probe_line(s.vol, *s.locator, run.result.j_band[0], p.a, p.b, p.samples);
        write_probe_csv((dir / (p.name + ".csv")).string(), samples);
    }
    if (cfg.field_dump) {
        std::vector<NamedField> fields;
        fields.emplace_back("T", &run.result.temperature);
        std::vector<std::string> names(run.result.j_band.size());
        for (size_t b = 0; b < run.result.j_band.size(); ++b) {
            names[b] = "J_band" + std::to_string(b);
            fields.emplace_back(names[b], &run.result.j_band[b]);
        }
        write_vtk((dir / "field.vtk").string(), s.vol, fields, s.name);
        write_field_csv((dir / "field.csv").string(), s.vol, fields);
    }
}

int cmd_solve(const Options& opt) {
    const auto cells = parse_cells(opt.cells);
    const ScenarioConfig cfg = effective_config(opt, cells.front());
    const RunOutput run = run_scenario(cfg, opt.workers);
    write_run_outputs(opt.out_dir, cfg, run);
    std::cout << "outputs written to " << opt.out_dir << "\n";
    return run.result.converged ? 0 : 1;
}

int cmd_bench(const Options& opt) {
    const auto cells = parse_cells(opt.cells);
    if (cells.size() < 2) throw std::runtime_error("bench needs at least 2 resolutions (--cells)");
    std::vector<BenchRow> rows;
    for (int c : cells) {
        const ScenarioConfig cfg = effective_config(opt, c);
        const RunOutput run = run_scenario(cfg, opt.workers);
        BenchRow row;
        row.n = run.scenario->vol.num_vertices();
        row.surface_cl = run.ops.surface_report.ratio();
        row.volume_cl = run.ops.volume_report.ratio();
        row.assembly_seconds = run.ops.assembly_seconds;
        row.solve_seconds = run.result.solve_seconds;
        row.normalized_cpu = normalized_cpu(row.n, row.assembly_seconds + row.solve_seconds);
        rows.push_back(row);
    }
    fs::create_directories(opt.out_dir);
    write_bench_tsv((fs::path(opt.out_dir) / "bench.tsv").string(), rows);
    write_bench_tsv(std::cout, rows);
    return 0;
}

int cmd_compare_sym(const Options& opt) {
    const auto cells = parse_cells(opt.cells);
    Options base = opt;
    if (base.config_path.empty() && base.scenario == "kobayashi-test3")
        base.scenario = "kobayashi-test1";
    const ScenarioConfig cfg = effective_config(base, cells.front());
    if (cfg.builtin.empty() || cfg.builtin.rfind("kobayashi-test1", 0) != 0)
        throw std::runtime_error("compare-sym supports the one-reflector builtin kobayashi-test1");

    const RunOutput rc = run_scenario(cfg, opt.workers);
    if (rc.scenario->reflectors.size() != 1)
        throw std::runtime_error("compare-sym requires exactly one reflector, got " +
                                 std::to_string(rc.scenario->reflectors.size()));

    ScenarioConfig sym_cfg = cfg;
    sym_cfg.builtin = "kobayashi-test1-sym";
    sym_cfg.name = sym_cfg.builtin;
    sym_cfg.reflectors.clear();
    const RunOutput sym = run_scenario(sym_cfg, opt.workers);

    ScenarioConfig norc_cfg = cfg;
    norc_cfg.builtin = "kobayashi-test1-norc";
    norc_cfg.name = norc_cfg.builtin;
    norc_cfg.reflectors.clear();
    const RunOutput norc = run_scenario(norc_cfg, opt.workers);

    // symmetrized solution restricted to the original domain
    const auto sym_on_orig = sample_field_at(sym.scenario->vol, *sym.scenario->locator,
                                             sym.result.j_band[0], rc.scenario->vol.vertices);
    const double diff_rc = relative_l2_diff(rc.scenario->vol, rc.result.j_band[0], sym_on_orig);
    const double diff_norc =
        relative_l2_diff(rc.scenario->vol, norc.result.j_band[0], sym_on_orig);

    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);
    for (const auto& p : cfg.probes) {
        std::ofstream f(dir / ("compare_" + p.name + ".csv"));
        f << "s,x,y,z,rc,symmetrized,no_rc\n";
        const auto a = probe_line(rc.scenario->vol, *rc.scenario->locator, rc.result.j_band[0],
                                  p.a, p.b, p.samples);
        const auto b = probe_line(sym.scenario->vol, *sym.scenario->locator, sym.result.j_band[0],
                                  p.a, p.b, p.samples);
        const auto c = probe_line(norc.scenario->vol, *norc.scenario->locator,
                                  norc.result.j_band[0], p.a, p.b, p.samples);
        for (size_t k = 0; k < a.size(); ++k)
            f << a[k].s << "," << a[k].point.x << "," << a[k].point.y << "," << a[k].point.z
              << "," << a[k].value << "," << b[k].value << "," << c[k].value << "\n";
    }
    std::ofstream report(dir / "compare_sym.txt");
    report << "relative_l2_rc_vs_symmetrized = " << diff_rc << "\n";
    report << "relative_l2_norc_vs_symmetrized = " << diff_norc << "\n";
    std::cout << "relative L2, RC vs symmetrized:    " << diff_rc << "\n";
    std::cout << "relative L2, no-RC vs symmetrized: " << diff_norc << "\n";
    return 0;
}

int cmd_error_ladder(const Options& opt) {
    const auto cells = parse_cells(opt.cells);
    if (cells.size() < 3)
        throw std::runtime_error("error-ladder needs at least 3 resolutions (--cells), "
                                 "finest last as the reference");
    std::vector<RunOutput> runs;
    for (int c : cells) runs.push_back(run_scenario(effective_config(opt, c), opt.workers));
    const RunOutput& ref = runs.back();

    std::vector<double> log_h, log_err;
    fs::create_directories(opt.out_dir);
    std::ofstream tsv(fs::path(opt.out_dir) / "error_ladder.tsv");
    tsv << "N\th\tl2_error\n";
    for (size_t k = 0; k + 1 < runs.size(); ++k) {
        const auto& run = runs[k];
        const auto ref_on_coarse =
            sample_field_at(ref.scenario->vol, *ref.scenario->locator, ref.result.j_band[0],
                            run.scenario->vol.vertices);
        const double err =
            relative_l2_diff(run.scenario->vol, run.result.j_band[0], ref_on_coarse);
        if (!(err > 0.0))
            throw std::runtime_error("error-ladder: zero error row (identical meshes?) at N = " +
                                     std::to_string(run.scenario->vol.num_vertices()));
        const double n = run.scenario->vol.num_vertices();
        const double h = std::pow(n, -1.0 / 3.0);
        tsv << run.scenario->vol.num_vertices() << "\t" << h << "\t" << err << "\n";
        log_h.push_back(std::log(h));
        log_err.push_back(std::log(err));
    }
    if (log_h.size() >= 2) {
        const double slope = least_squares_slope(log_h, log_err);
        std::cout << "log-log slope of L2 error vs h: " << slope << "\n";
        tsv << "# slope = " << slope << "\n";
    } else {
        std::cout << "one ladder point; no slope\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"radiative transfer with reflective boundaries: "
                 "integral formulation, H-matrix compressed"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "config file (see README for the grammar)");
        sub->add_option("--scenario", opt.scenario,
                        "built-in scenario: kobayashi-test1|test2|test3, "
                        "kobayashi-test1-norc, kobayashi-test1-sym");
        sub->add_option("--cells", opt.cells,
                        "built-in mesh resolution(s): grid cells per 10 length units, "
                        "comma separated for ladders");
        sub->add_option("--workers", opt.workers, "worker threads for assembly");
        sub->add_option("--eta", opt.eta, "admissibility parameter");
        sub->add_option("--eps", opt.eps, "ACA stopping tolerance");
        sub->add_option("--leaf-size", opt.leaf_size, "cluster tree leaf size");
        sub->add_option("--out-dir", opt.out_dir, "output directory");
    };

    auto* solve = app.add_subcommand("solve", "solve one scenario, write field/trace/probes");
    auto* bench = app.add_subcommand("bench", "mesh ladder benchmark: compression and timing per resolution");
    auto* csym = app.add_subcommand("compare-sym",
                                    "reflective run vs symmetrized-domain run on one mirror");
    auto* ladder = app.add_subcommand("error-ladder", "L2 error vs h against the finest mesh");
    for (auto* sub : {solve, bench, csym, ladder}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(opt);
        if (bench->parsed()) return cmd_bench(opt);
        if (csym->parsed()) return cmd_compare_sym(opt);
        if (ladder->parsed()) return cmd_error_ladder(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        const std::string msg = e.what();
        if (msg.rfind("cannot open", 0) == 0) return 2;
        return 1;
    }
    return 0;
}
