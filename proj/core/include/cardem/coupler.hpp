#pragma once

#include <filesystem>

#include "cardem/config.hpp"
#include "cardem/params.hpp"
#include "cardem/postprocess.hpp"

namespace cardem {

struct RunDiagnostics {
    int steps = 0;
    long newton_iterations = 0;
    int newton_max_iterations = 0;
    double wall_ms = 0.0;
    double v_min_seen = 0.0, v_max_seen = 0.0;
};

struct RunResult {
    std::vector<ProbeSeries> probes;
    IsochroneMap maps;
    std::vector<double> sample_times;
    RunDiagnostics diag;
    std::filesystem::path outdir;

    const ProbeSeries& probe(const std::string& name) const;
};

// One coupled electro-mechanical simulation. Artifacts are written when
// cfg.output_dir is set; results are always returned in memory.
// config_echo is embedded verbatim in the manifest. stage_log (optional)
// records the per-step module ordering for debugging.
RunResult run_simulation(const SimulationConfig& cfg, const ParameterSet& dataset,
                         const std::string& config_echo = "",
                         std::vector<std::string>* stage_log = nullptr);

enum class SweepAxis { ko, fatp, region };
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepMember {
    std::string label;
    bool failed = false;
    std::string error;
    RunResult result;
};
struct SweepResult {
    std::vector<SweepMember> members;
    int baseline_index = 0;
};

// Independent runs along one parameter axis plus a comparison summary
// against the first (baseline) member. Member failures are isolated.
SweepResult run_sweep(const SimulationConfig& base, SweepAxis axis,
                      const ParameterSet& dataset, const std::string& config_echo = "");

} // namespace cardem
