// Command-line front end: run single simulations, parameter sweeps, the grid
// refinement study, and post-hoc analysis of stored run artifacts.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "cardem/config.hpp"
#include "cardem/coupler.hpp"
#include "cardem/io.hpp"
#include "cardem/version.hpp"

namespace fs = std::filesystem;
using namespace cardem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> presets;
    std::vector<std::string> sets;
    std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "base configuration file");
    cmd->add_option("--preset", args.presets,
                    "named config fragment (s1..s4, hyperkalemia-severe, ...) or path");
    cmd->add_option("--set", args.sets, "override, e.g. --set ischemia.severity=20");
    cmd->add_option("--out", args.out, "output directory (overrides run.output_dir)");
}

fs::path preset_path(const std::string& name, const std::string& config_path) {
    if (fs::exists(name)) return name;
    std::vector<fs::path> candidates;
    if (!config_path.empty())
        candidates.push_back(fs::path(config_path).parent_path() / "presets" /
                             (name + ".cfg"));
    candidates.push_back(fs::path("configs") / "presets" / (name + ".cfg"));
    for (const auto& c : candidates)
        if (fs::exists(c)) return c;
    throw std::runtime_error("preset not found: " + name);
}

RunConfig build_config(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg.merge_file(args.config_path);
    for (const auto& p : args.presets) cfg.merge_file(preset_path(p, args.config_path));
    for (const auto& s : args.sets) cfg.set(s);
    if (!args.out.empty()) cfg.set("run.output_dir", args.out);
    return cfg;
}

ParameterSet load_dataset(const SimulationConfig& sim, const std::string& config_path) {
    fs::path p = sim.dataset_path;
    if (!fs::exists(p) && !config_path.empty() && p.is_relative()) {
        fs::path near_config = fs::path(config_path).parent_path() / p;
        if (fs::exists(near_config)) p = near_config;
    }
    return ParameterSet::load(p);
}

// Incomplete artifacts are removed on failure; diagnostic error/ output from
// the aborted run is kept.
void remove_partial_outputs(const fs::path& out) {
    if (out.empty() || !fs::exists(out)) return;
    for (const char* sub : {"traces", "maps", "fields", "plots", "scenario"})
        fs::remove_all(out / sub);
    fs::remove(out / "summary.json");
    fs::remove(out / "manifest.json");
}

int cmd_run(const CommonArgs& args) {
    RunConfig cfg = build_config(args);
    SimulationConfig sim = cfg.resolve();
    ParameterSet dataset = load_dataset(sim, args.config_path);
    std::vector<std::string> stage_log;
    try {
        RunResult res = run_simulation(sim, dataset, cfg.echo(),
                                       sim.debug_stage_log ? &stage_log : nullptr);
        if (sim.debug_stage_log && !sim.output_dir.empty()) {
            std::ofstream log(fs::path(sim.output_dir) / "stage_log.txt");
            for (const auto& s : stage_log) log << s << "\n";
        }
        for (const auto& p : res.probes) {
            ProbeSummary s = summarize_probe(p);
            std::cout << p.name << ": RP=" << format_double(s.rp) << " mV";
            if (s.at) std::cout << " AT=" << format_double(*s.at) << " ms";
            if (s.rt) std::cout << " RT=" << format_double(*s.rt) << " ms";
            if (s.apd) std::cout << " APD=" << format_double(*s.apd) << " ms";
            std::cout << " lambda=[" << format_double(s.lambda_min) << ","
                      << format_double(s.lambda_max) << "]\n";
        }
        std::cout << "done in " << res.diag.wall_ms / 1000.0 << " s ("
                  << res.diag.steps << " steps)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        remove_partial_outputs(sim.output_dir);
        return 1;
    }
}

int cmd_sweep(const CommonArgs& args, const std::string& axis_name) {
    RunConfig cfg = build_config(args);
    SimulationConfig sim = cfg.resolve();
    ParameterSet dataset = load_dataset(sim, args.config_path);
    SweepAxis axis = sweep_axis_from_string(axis_name);
    SweepResult sweep = run_sweep(sim, axis, dataset, cfg.echo());
    int failures = 0;
    for (const auto& m : sweep.members) {
        if (m.failed) {
            ++failures;
            std::cerr << m.label << ": FAILED: " << m.error << "\n";
            continue;
        }
        std::cout << m.label << ":";
        for (const auto& p : m.result.probes) {
            ProbeSummary s = summarize_probe(p);
            std::cout << "  " << p.name
                      << " APD=" << (s.apd ? format_double(*s.apd) : "n/a");
        }
        std::cout << "\n";
    }
    return failures == 0 ? 0 : 1;
}

int cmd_analyze(const std::vector<std::string>& run_dirs, const std::string& baseline,
                const std::string& out) {
    std::vector<std::pair<std::string, std::vector<ProbeSeries>>> loaded;
    int baseline_index = 0;
    for (const auto& dir : run_dirs) {
        std::vector<ProbeSeries> series;
        fs::path traces = fs::path(dir) / "traces";
        if (!fs::exists(traces)) {
            std::cerr << "analyze: no traces/ in " << dir << "\n";
            return 1;
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(traces))
            if (entry.path().extension() == ".csv") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) series.push_back(read_trace_csv(f));
        if (!baseline.empty() && fs::equivalent(dir, baseline))
            baseline_index = static_cast<int>(loaded.size());
        loaded.emplace_back(fs::path(dir).filename().string(), std::move(series));
    }
    if (loaded.empty()) {
        std::cerr << "analyze: no runs given\n";
        return 1;
    }
    std::vector<std::pair<std::string, const std::vector<ProbeSeries>*>> runs;
    for (const auto& [label, series] : loaded) runs.emplace_back(label, &series);
    auto rows = summarize_runs(runs, baseline_index);
    fs::path outdir = out.empty() ? fs::path("analysis") : fs::path(out);
    write_comparison_csv(outdir / "comparison.csv", rows);
    write_comparison_json(outdir / "comparison.json", rows);
    std::cout << "wrote " << (outdir / "comparison.csv").string() << " ("
              << rows.size() << " rows)\n";
    return 0;
}

// Picks the mechanical resolution for a refinement-study grid: the divisor
// of nx whose quotient is closest to the configured mechanical size.
int pick_mech_nx(int nx, int target) {
    int best = nx, best_err = std::abs(nx - target);
    for (int r = 1; r <= nx; ++r) {
        if (nx % r != 0) continue;
        int mech = nx / r;
        int err = std::abs(mech - target);
        if (err < best_err || (err == best_err && mech < best)) {
            best = mech;
            best_err = err;
        }
    }
    return best;
}

int cmd_validate_grid(const CommonArgs& args) {
    RunConfig cfg = build_config(args);
    SimulationConfig base = cfg.resolve();
    ParameterSet dataset = load_dataset(base, args.config_path);

    const std::vector<int> grid_nx = {20, 24, 28, 32, 50};
    std::vector<RunResult> results;
    std::vector<int> mech_used;
    for (int nx : grid_nx) {
        SimulationConfig sim = base;
        sim.nx = sim.ny = nx;
        sim.mech_nx = sim.mech_ny = pick_mech_nx(nx, base.mech_nx);
        sim.fields_every_ms = 0;
        if (!base.output_dir.empty())
            sim.output_dir = (fs::path(base.output_dir) /
                              ("grid_" + std::to_string((nx + 1) * (nx + 1))))
                                 .string();
        std::cout << "grid " << (nx + 1) * (nx + 1) << " dofs (nx=" << nx
                  << ", mech=" << sim.mech_nx << ") ..." << std::flush;
        results.push_back(run_simulation(sim, dataset, cfg.echo()));
        std::cout << " " << results.back().diag.wall_ms / 1000.0 << " s\n";
        mech_used.push_back(sim.mech_nx);
    }

    const auto& ref = results.back().probe("M2");
    std::cout << "\ndofs    mech   deviation(aligned)   deviation(equal-time)\n";
    std::vector<double> deviations;
    for (size_t i = 0; i < results.size(); ++i) {
        const auto& s = results[i].probe("M2");
        double dev = trace_deviation(ref.t, ref.v, s.t, s.v, true);
        double dev_raw = trace_deviation(ref.t, ref.v, s.t, s.v, false);
        deviations.push_back(dev);
        std::printf("%-7d %-6d %-20.4f %.4f\n", (grid_nx[i] + 1) * (grid_nx[i] + 1),
                    mech_used[i], dev * 100.0, dev_raw * 100.0);
    }
    if (!base.output_dir.empty()) {
        std::ofstream out(fs::path(base.output_dir) / "grid_validation.csv");
        out << "dofs,mech_nx,deviation_aligned,deviation_equal_time\n";
        for (size_t i = 0; i < results.size(); ++i) {
            const auto& s = results[i].probe("M2");
            out << (grid_nx[i] + 1) * (grid_nx[i] + 1) << "," << mech_used[i] << ","
                << format_double(deviations[i]) << ","
                << format_double(trace_deviation(ref.t, ref.v, s.t, s.v, false)) << "\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled cardiac electro-mechanics simulator"};
    app.require_subcommand(0, 1);
    bool version = false;
    app.add_flag("--version", version, "print engine and dataset versions");

    CommonArgs run_args, sweep_args, grid_args;
    std::string sweep_axis;
    std::vector<std::string> analyze_runs;
    std::string analyze_baseline, analyze_out;

    CLI::App* run = app.add_subcommand("run", "run one simulation");
    add_common(run, run_args);
    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    add_common(sweep, sweep_args);
    sweep->add_option("--axis", sweep_axis, "ko | fatp | region")->required();
    CLI::App* analyze = app.add_subcommand("analyze", "summarize stored run artifacts");
    analyze->add_option("--run", analyze_runs, "run output directory")->required();
    analyze->add_option("--baseline", analyze_baseline, "baseline run directory");
    analyze->add_option("--out", analyze_out, "output directory for the summary");
    CLI::App* grid = app.add_subcommand("validate-grid", "grid refinement study");
    add_common(grid, grid_args);

    CLI11_PARSE(app, argc, argv);

    if (version) {
        std::cout << "cardem " << kEngineVersion << "\n";
        try {
            ParameterSet ds = ParameterSet::load("data/baseline.params");
            std::cout << "dataset " << ds.version() << " (fnv1a64 " << std::hex
                      << ds.checksum() << std::dec << ")\n";
        } catch (const std::exception&) {
            std::cout << "dataset (not loaded)\n";
        }
        return 0;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_axis);
        if (analyze->parsed()) return cmd_analyze(analyze_runs, analyze_baseline, analyze_out);
        if (grid->parsed()) return cmd_validate_grid(grid_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::cerr << app.help() << "\n";
    return 2;
}
