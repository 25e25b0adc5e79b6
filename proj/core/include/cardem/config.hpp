#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cardem/ischemia.hpp"
#include "cardem/mechanics.hpp"
#include "cardem/monodomain.hpp"
#include "cardem/scenario.hpp"

namespace cardem {

// Fully resolved, typed simulation setup consumed by the coupler.
struct SimulationConfig {
    // meshes
    int nx = 50, ny = 50;
    int mech_nx = 10, mech_ny = 10;
    double fiber_angle_rad = 0.0;
    // time stepping
    double end_time_ms = 500.0;
    double dt_ms = 0.02;
    bool substep = false;           // reaction substepping inside diffusion steps
    double diffusion_dt_ms = 0.1;
    double relax_ms = 1000.0;       // unstimulated pre-relaxation of cell states
    // outputs
    double trace_every_ms = 1.0;
    double fields_every_ms = 0.0;   // 0 disables field frames
    std::string output_dir;         // empty: keep results in memory only
    bool debug_stage_log = false;
    unsigned seed = 12345;
    enum class Cache { automatic, on, off } cache_factorization = Cache::automatic;
    // scenario
    std::string scenario_name = "s3";
    ScenarioFlags flags = ScenarioFlags::s3();
    bool mechanics_enabled = true;  // master switch (flags unchanged)
    // stimulus, ischemia, probes
    StimulusSpec stimulus;
    IschemicScenario ischemia;
    bool transition_auto = true;    // width = 2 electrical element widths
    std::vector<std::pair<std::string, Vec2>> probes{{"M1", {0.1875, 0.1875}},
                                                     {"M2", {0.5, 0.5}}};
    // mechanics
    DirichletBC bc;
    NewtonSettings newton;
    // dataset
    std::string dataset_path = "data/baseline.params";

    int refinement_ratio() const { return nx / mech_nx; }
    void validate() const;
};

// INI-style configuration: [section] headers and key = value lines, '#' or
// ';' comments. Every key has a built-in default; files, preset fragments
// and --set overrides are applied on top, and unknown keys are rejected.
class RunConfig {
public:
    RunConfig(); // defaults

    static RunConfig from_file(const std::filesystem::path& path);
    void merge_file(const std::filesystem::path& path);
    // "section.key=value" (the --set syntax)
    void set(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    std::string get_raw(const std::string& key) const;
    // Deterministic, sorted echo of every effective value.
    std::string echo() const;

    SimulationConfig resolve() const;

private:
    std::map<std::string, std::string> values_;
    void check_key(const std::string& key) const;
};

// Accepts a trailing '%' (divides by 100).
double parse_double_with_percent(const std::string& s);

} // namespace cardem
