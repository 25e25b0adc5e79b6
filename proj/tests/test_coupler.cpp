#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cardem/coupler.hpp"
#include "cardem/io.hpp"

using namespace cardem;
namespace fs = std::filesystem;

namespace {

const ParameterSet& dataset() {
    static ParameterSet ds =
        ParameterSet::load(CARDEM_SOURCE_DIR "/data/baseline.params");
    return ds;
}

// Small, fast tissue configuration for coupling tests.
SimulationConfig small_config(const std::string& preset, double t_end = 20.0) {
    SimulationConfig c;
    c.nx = c.ny = 10;
    c.mech_nx = c.mech_ny = 5;
    c.end_time_ms = t_end;
    c.dt_ms = 0.05;
    c.relax_ms = 200.0;
    c.trace_every_ms = 1.0;
    c.scenario_name = preset;
    c.flags = ScenarioFlags::preset(preset);
    c.mechanics_enabled = c.flags.needs_mechanics();
    c.stimulus.region = {0.0, 0.0, 0.2, 0.2};
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("unstimulated tissue stays at rest") {
    SimulationConfig c = small_config("s1", 25.0);
    c.stimulus.amplitude_mA_cm3 = 0.0;
    RunResult r = run_simulation(c, dataset());
    for (const auto& p : r.probes) {
        double v0 = p.v.front();
        for (double v : p.v) CHECK(std::abs(v - v0) < 1e-6);
        for (double l : p.lambda) CHECK(l == doctest::Approx(1.0));
    }
}

TEST_CASE("stage ordering follows the two-step scheme") {
    SimulationConfig c = small_config("s3", 0.25);
    c.relax_ms = 10.0;
    c.dt_ms = 0.05;
    std::vector<std::string> log;
    run_simulation(c, dataset(), "", &log);
    // per step: membrane ODEs at v^n, tension, equilibrium, then the PDE
    std::vector<std::string> expect = {"gates", "concentrations", "tension", "mechanics",
                                       "monodomain"};
    REQUIRE(log.size() % 5 == 0);
    REQUIRE(log.size() / 5 == 5); // 0.25 ms at dt 0.05
    for (size_t i = 0; i < log.size(); ++i) CHECK(log[i] == expect[i % 5]);
}

TEST_CASE("substep mode interleaves reaction substeps") {
    SimulationConfig c = small_config("s2", 0.2);
    c.relax_ms = 10.0;
    c.substep = true;
    c.dt_ms = 0.05;
    c.diffusion_dt_ms = 0.1;
    std::vector<std::string> log;
    run_simulation(c, dataset(), "", &log);
    std::vector<std::string> expect = {"gates", "concentrations", "gates",
                                       "concentrations", "tension", "mechanics",
                                       "monodomain"};
    REQUIRE(log.size() == 2 * expect.size());
    for (size_t i = 0; i < log.size(); ++i) CHECK(log[i] == expect[i % expect.size()]);
}

TEST_CASE("S1 equals mechanics-disabled S2 nodewise") {
    SimulationConfig s1 = small_config("s1", 15.0);
    SimulationConfig s2 = small_config("s2", 15.0);
    s2.mechanics_enabled = false; // master switch off, flags unchanged
    RunResult r1 = run_simulation(s1, dataset());
    RunResult r2 = run_simulation(s2, dataset());
    for (size_t p = 0; p < r1.probes.size(); ++p) {
        REQUIRE(r1.probes[p].v.size() == r2.probes[p].v.size());
        for (size_t i = 0; i < r1.probes[p].v.size(); ++i)
            CHECK(std::abs(r1.probes[p].v[i] - r2.probes[p].v[i]) <= 1e-12);
    }
}

TEST_CASE("deterministic artifacts on repeated runs") {
    fs::path base = fs::temp_directory_path() / "cardem_test_det";
    fs::remove_all(base);
    SimulationConfig c = small_config("s3", 10.0);
    c.relax_ms = 50.0;
    for (const char* sub : {"a", "b"}) {
        SimulationConfig ci = c;
        ci.output_dir = (base / sub).string();
        run_simulation(ci, dataset(), "echo");
    }
    for (const char* f : {"traces/M1.csv", "traces/M2.csv", "maps/isochrones.csv"}) {
        std::string a = slurp(base / "a" / f), b = slurp(base / "b" / f);
        REQUIRE(!a.empty());
        CHECK(a == b);
    }
    fs::remove_all(base);
}

TEST_CASE("ischemic scenario shifts the local resting state") {
    SimulationConfig c = small_config("s1", 5.0);
    c.ischemia.kind = IschemiaKind::hyperkalemia;
    c.ischemia.severity = 20.0;
    c.ischemia.region = {0.05, 0.05, 0.45, 0.45};
    c.transition_auto = false;
    c.ischemia.transition_width = 0.1;
    c.probes = {{"in", {0.25, 0.25}}, {"out", {0.8, 0.8}}};
    c.stimulus.amplitude_mA_cm3 = 0.0;
    RunResult r = run_simulation(c, dataset());
    CHECK(r.probe("in").inside_ischemic);
    CHECK_FALSE(r.probe("out").inside_ischemic);
    CHECK(r.probe("in").v.front() > -60.0);
    CHECK(r.probe("out").v.front() < -80.0);
}

TEST_CASE("run artifacts are written and the manifest carries the dataset") {
    fs::path dir = fs::temp_directory_path() / "cardem_test_artifacts";
    fs::remove_all(dir);
    SimulationConfig c = small_config("s3", 5.0);
    c.relax_ms = 20.0;
    c.output_dir = dir.string();
    c.fields_every_ms = 2.0;
    run_simulation(c, dataset(), "key = value\n");
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "traces" / "M1.csv"));
    CHECK(fs::exists(dir / "maps" / "isochrones.csv"));
    CHECK(fs::exists(dir / "maps" / "isochrones.vtk"));
    CHECK(fs::exists(dir / "scenario" / "parameters.vtk"));
    CHECK(fs::exists(dir / "plots" / "v.svg"));
    CHECK(fs::exists(dir / "summary.json"));
    int frames = 0;
    for (auto& e : fs::directory_iterator(dir / "fields"))
        if (e.path().extension() == ".vtk") ++frames;
    CHECK(frames >= 4); // v_* and mech_* at 0 and cadence
    std::string manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("checksum_fnv1a64") != std::string::npos);
    CHECK(manifest.find("key = value") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("sweep isolates member failures and writes a comparison") {
    fs::path dir = fs::temp_directory_path() / "cardem_test_sweep";
    fs::remove_all(dir);
    SimulationConfig c = small_config("s2", 4.0);
    c.relax_ms = 20.0;
    c.ischemia.kind = IschemiaKind::hyperkalemia;
    c.ischemia.region = {0.05, 0.05, 0.45, 0.45};
    c.output_dir = dir.string();
    SweepResult sr = run_sweep(c, SweepAxis::ko, dataset());
    REQUIRE(sr.members.size() == 3);
    for (const auto& m : sr.members) CHECK_FALSE(m.failed);
    CHECK(fs::exists(dir / "comparison.csv"));
    CHECK(fs::exists(dir / "sweep_index.json"));
    CHECK(fs::exists(dir / "sweep_M1_v.svg"));
    fs::remove_all(dir);
}
