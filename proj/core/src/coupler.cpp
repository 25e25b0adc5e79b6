#include "cardem/coupler.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include "cardem/io.hpp"
#include "cardem/ionic.hpp"
#include "cardem/tension.hpp"
#include "cardem/version.hpp"

namespace cardem {

namespace {

using Clock = std::chrono::steady_clock;

struct RelaxedStates {
    std::map<std::pair<double, double>, CellState> cells;
    std::map<std::pair<double, double>, TensionState> tension;

    const CellState& cell(double k_o, double f_atp, const IonicParams& p,
                          const CellState& initial, double relax_ms) {
        auto key = std::make_pair(k_o, f_atp);
        auto it = cells.find(key);
        if (it != cells.end()) return it->second;
        SingleCell sc(p, initial, k_o, f_atp);
        if (relax_ms > 0) sc.relax(relax_ms, 0.1);
        return cells.emplace(key, sc.state()).first->second;
    }

    const TensionState& tension_state(double k_o, double f_atp, double ca_rest,
                                      const TensionParams& tp) {
        auto key = std::make_pair(k_o, f_atp);
        auto it = tension.find(key);
        if (it != tension.end()) return it->second;
        TensionState ts;
        for (int i = 0; i < 2000; ++i) ts = step_tension(ts, 1.0, ca_rest, 1.0, 0.0, tp);
        return tension.emplace(key, ts).first->second;
    }
};

std::string checksum_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_probe_plots(const std::filesystem::path& dir,
                       const std::vector<ProbeSeries>& probes) {
    struct Quantity {
        const char* file;
        const char* title;
        const char* ylabel;
        const std::vector<double>& (*get)(const ProbeSeries&);
    };
    static const Quantity quantities[] = {
        {"v.svg", "Membrane potential", "v (mV)",
         [](const ProbeSeries& s) -> const std::vector<double>& { return s.v; }},
        {"ca.svg", "Intracellular calcium", "Ca_i (mM)",
         [](const ProbeSeries& s) -> const std::vector<double>& { return s.ca; }},
        {"ta.svg", "Active tension", "T_A (kPa)",
         [](const ProbeSeries& s) -> const std::vector<double>& { return s.ta; }},
        {"lambda.svg", "Fiber stretch", "lambda",
         [](const ProbeSeries& s) -> const std::vector<double>& { return s.lambda; }},
        {"dlambda.svg", "Stretch rate", "dlambda/dt (1/ms)",
         [](const ProbeSeries& s) -> const std::vector<double>& { return s.lambda_rate; }},
    };
    for (const auto& q : quantities) {
        std::vector<PlotSeries> series;
        for (const auto& p : probes) series.push_back({p.name, &p.t, &q.get(p)});
        write_svg_plot(dir / q.file, q.title, "t (ms)", q.ylabel, series);
    }
}

nlohmann::json summary_json(const std::vector<ProbeSeries>& probes) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& p : probes) {
        ProbeSummary s = summarize_probe(p);
        nlohmann::json obj;
        obj["probe"] = s.probe;
        obj["inside_ischemic_region"] = p.inside_ischemic;
        obj["rp_mV"] = s.rp;
        obj["at_ms"] = s.at ? nlohmann::json(*s.at) : nlohmann::json(nullptr);
        obj["rt_ms"] = s.rt ? nlohmann::json(*s.rt) : nlohmann::json(nullptr);
        obj["apd_ms"] = s.apd ? nlohmann::json(*s.apd) : nlohmann::json(nullptr);
        obj["lambda_min"] = s.lambda_min;
        obj["lambda_max"] = s.lambda_max;
        obj["max_abs_dlambda_dt"] = s.max_abs_lambda_rate;
        j.push_back(std::move(obj));
    }
    return j;
}

} // namespace

const ProbeSeries& RunResult::probe(const std::string& name) const {
    for (const auto& p : probes)
        if (p.name == name) return p;
    throw std::invalid_argument("no probe named " + name);
}

RunResult run_simulation(const SimulationConfig& cfg, const ParameterSet& dataset,
                         const std::string& config_echo,
                         std::vector<std::string>* stage_log) {
    cfg.validate();
    const auto t_start = Clock::now();

    const QuadMesh elec = QuadMesh::unit_square(cfg.nx, cfg.ny, MeshLevel::electrical);
    const QuadMesh mech = QuadMesh::unit_square(cfg.mech_nx, cfg.mech_ny,
                                                MeshLevel::mechanical);
    const GridTransfer transfer = GridTransfer::between(mech, elec);
    const FiberField fibers = FiberField::from_angle(cfg.fiber_angle_rad);

    const IonicParams ionic = IonicParams::from_dataset(dataset);
    const CellState initial = IonicParams::initial_state(dataset);
    const TensionParams tension_params = TensionParams::from_dataset(dataset);
    const MaterialParams material = MaterialParams::from_dataset(dataset);
    const ConductivityParams cond = ConductivityParams::from_dataset(dataset);

    IschemicScenario scenario = cfg.ischemia;
    if (cfg.transition_auto) scenario.transition_width = 2.0 * elec.hx();
    scenario.validate();

    const int n_nodes = elec.num_nodes();
    const int n_qp = mech.num_elements() * 4;

    // Spatial parameter fields and relaxed initial states (deduplicated by
    // parameter value; plateau and healthy nodes share one relaxation).
    Eigen::VectorXd ko_node(n_nodes), fatp_node(n_nodes);
    for (int k = 0; k < n_nodes; ++k) {
        LocalParams lp = parameter_field(scenario, elec.node(k));
        ko_node[k] = lp.k_o;
        fatp_node[k] = lp.f_atp;
    }

    RelaxedStates relaxed;
    std::vector<CellState> cells(n_nodes);
    Eigen::VectorXd v(n_nodes);
    for (int k = 0; k < n_nodes; ++k) {
        cells[k] = relaxed.cell(ko_node[k], fatp_node[k], ionic, initial, cfg.relax_ms);
        v[k] = cells[k].v;
    }

    // Quadrature-point tension states on the mechanical mesh.
    const auto& rule = QuadratureRule::gauss2x2();
    std::vector<Vec2> qp_pos(n_qp);
    for (int e = 0; e < mech.num_elements(); ++e) {
        Vec2 origin = mech.element_origin(e);
        for (int q = 0; q < 4; ++q)
            qp_pos[4 * e + q] =
                origin + Vec2{(rule.points[q].x() + 1.0) * 0.5 * mech.hx(),
                              (rule.points[q].y() + 1.0) * 0.5 * mech.hy()};
    }
    std::vector<TensionState> tension(n_qp);
    Eigen::VectorXd ta_qp = Eigen::VectorXd::Zero(n_qp);
    for (int i = 0; i < n_qp; ++i) {
        LocalParams lp = parameter_field(scenario, qp_pos[i]);
        double ca_rest =
            relaxed.cell(lp.k_o, lp.f_atp, ionic, initial, cfg.relax_ms).ca_i();
        tension[i] = relaxed.tension_state(lp.k_o, lp.f_atp, ca_rest, tension_params);
        ta_qp[i] = active_tension_value(tension[i], 1.0, tension_params);
    }

    MechanicsSolver mech_solver(mech, fibers, material, cfg.bc, cfg.newton);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * mech.num_nodes());
    Eigen::VectorXd u_prev = u;
    Eigen::VectorXd lambda_qp = Eigen::VectorXd::Ones(n_qp);
    Eigen::VectorXd lambda_rate_qp = Eigen::VectorXd::Zero(n_qp);
    DeformationSnapshot snapshot;
    DisplacementField velocity_field;

    MonodomainSolver::Settings msettings;
    msettings.cache_factorization =
        cfg.cache_factorization == SimulationConfig::Cache::on ||
        (cfg.cache_factorization == SimulationConfig::Cache::automatic &&
         !cfg.mechanics_enabled);
    MonodomainSolver pde(elec, fibers, cond, msettings);

    // Nodal views of the mechanical state for the stretch-gated current and
    // for probe sampling.
    Eigen::VectorXd lambda_elec = Eigen::VectorXd::Ones(n_nodes);
    Eigen::VectorXd lambda_mech_nodal = Eigen::VectorXd::Ones(mech.num_nodes());
    Eigen::VectorXd lrate_mech_nodal = Eigen::VectorXd::Zero(mech.num_nodes());
    Eigen::VectorXd ta_mech_nodal = Eigen::VectorXd::Zero(mech.num_nodes());
    Eigen::VectorXd ca_nodal(n_nodes);
    for (int k = 0; k < n_nodes; ++k) ca_nodal[k] = cells[k].ca_i();

    const double dt_outer = cfg.substep ? cfg.diffusion_dt_ms : cfg.dt_ms;
    const int n_sub = cfg.substep
                          ? std::max(1, static_cast<int>(std::llround(cfg.diffusion_dt_ms /
                                                                      cfg.dt_ms)))
                          : 1;
    const double dt_ode = dt_outer / n_sub;
    const int n_steps = static_cast<int>(std::llround(cfg.end_time_ms / dt_outer));
    const int per_trace =
        std::max(1, static_cast<int>(std::llround(cfg.trace_every_ms / dt_outer)));
    const int per_fields =
        cfg.fields_every_ms > 0
            ? std::max(1, static_cast<int>(std::llround(cfg.fields_every_ms / dt_outer)))
            : 0;
    const int n_samples = n_steps / per_trace + 1;

    RunResult result;
    result.outdir = cfg.output_dir;
    result.sample_times.reserve(n_samples);
    for (const auto& [name, pos] : cfg.probes) {
        ProbeSeries s;
        s.name = name;
        s.position = pos;
        s.inside_ischemic = classify_probe_inside(pos, scenario);
        result.probes.push_back(std::move(s));
    }
    Eigen::MatrixXd history(n_nodes, n_samples);
    int sample_count = 0;

    const bool writing = !cfg.output_dir.empty();
    const std::filesystem::path out = cfg.output_dir;
    if (writing) std::filesystem::create_directories(out);

    auto deformed_points = [&](const QuadMesh& m) {
        std::vector<Vec2> pts(m.num_nodes());
        for (int k = 0; k < m.num_nodes(); ++k) {
            Vec2 x = m.node(k);
            pts[k] = (cfg.mechanics_enabled && !snapshot.field.empty())
                         ? snapshot.field.deformed(x)
                         : x;
        }
        return pts;
    };

    auto record_sample = [&](double t) {
        result.sample_times.push_back(t);
        history.col(sample_count) = v;
        for (auto& series : result.probes) {
            series.t.push_back(t);
            series.v.push_back(elec.eval(v, series.position));
            series.ca.push_back(elec.eval(ca_nodal, series.position));
            series.ta.push_back(mech.eval(ta_mech_nodal, series.position));
            series.lambda.push_back(mech.eval(lambda_mech_nodal, series.position));
            series.lambda_rate.push_back(mech.eval(lrate_mech_nodal, series.position));
        }
        ++sample_count;
    };

    auto write_field_frame = [&](double t) {
        if (!writing) return;
        char label[32];
        std::snprintf(label, sizeof label, "%07.1f", t);
        auto pts = deformed_points(elec);
        write_structured_vtk(out / "fields" / (std::string("v_") + label + ".vtk"), elec,
                             pts, {{"v_mV", v}});
        write_field_csv(out / "fields" / (std::string("v_") + label + ".csv"), elec, pts,
                        "v_mV", v);
        // mechanical frame: per-element J and lambda on the deformed grid
        Eigen::VectorXd j_cell(mech.num_elements()), l_cell(mech.num_elements());
        for (int e = 0; e < mech.num_elements(); ++e) {
            double js = 0, ls = 0;
            for (int q = 0; q < 4; ++q) {
                js += cfg.mechanics_enabled && !snapshot.J.empty() ? snapshot.J[4 * e + q]
                                                                   : 1.0;
                ls += lambda_qp[4 * e + q];
            }
            j_cell[e] = js / 4;
            l_cell[e] = ls / 4;
        }
        write_structured_vtk(out / "fields" / (std::string("mech_") + label + ".vtk"),
                             mech, deformed_points(mech), {},
                             {{"J", j_cell}, {"lambda", l_cell}});
    };

    // recover qp tension/stretch data to mechanical nodes for probe sampling
    auto refresh_mech_nodal = [&]() {
        ta_mech_nodal = recover_nodal_from_qp(mech, ta_qp);
        lambda_mech_nodal = recover_nodal_from_qp(mech, lambda_qp);
        lrate_mech_nodal = recover_nodal_from_qp(mech, lambda_rate_qp);
        lambda_elec = cfg.mechanics_enabled ? transfer.prolong(lambda_mech_nodal)
                                            : Eigen::VectorXd::Ones(n_nodes);
    };

    refresh_mech_nodal();
    record_sample(0.0);
    if (per_fields > 0) write_field_frame(0.0);

    Eigen::VectorXd i_ion(n_nodes);
    RunDiagnostics& diag = result.diag;
    diag.v_min_seen = v.minCoeff();
    diag.v_max_seen = v.maxCoeff();

    auto log_stage = [&](const char* tag) {
        if (stage_log) stage_log->push_back(tag);
    };

    int step = 0;
    try {
        for (step = 0; step < n_steps; ++step) {
            const double t = step * dt_outer;

            // (1a) membrane ODEs at frozen v^n
            Eigen::VectorXd i_app = cfg.stimulus.nodal_current(elec, t, cond);
            for (int k = 0; k < n_nodes; ++k) cells[k].v = v[k];
            for (int s = 0; s < n_sub; ++s) {
                for (int k = 0; k < n_nodes; ++k)
                    step_gates_implicit(cells[k], dt_ode, ionic);
                log_stage("gates");
                for (int k = 0; k < n_nodes; ++k)
                    step_concentrations_explicit(cells[k], dt_ode, ionic, ko_node[k],
                                                 i_app[k]);
                log_stage("concentrations");
            }
            for (int k = 0; k < n_nodes; ++k) ca_nodal[k] = cells[k].ca_i();

            // tension ODEs at lambda^n, rate^n
            for (int i = 0; i < n_qp; ++i) {
                double ca = elec.eval(ca_nodal, qp_pos[i]);
                tension[i] = step_tension(tension[i], dt_outer, ca, lambda_qp[i],
                                          lambda_rate_qp[i], tension_params);
                ta_qp[i] = active_tension_value(tension[i], lambda_qp[i], tension_params);
            }
            log_stage("tension");

            // (1b) quasi-static equilibrium with the fresh tension
            if (cfg.mechanics_enabled) {
                auto res = mech_solver.solve(
                    u, std::span<const double>(ta_qp.data(), n_qp));
                u = res.u;
                snapshot = mech_solver.snapshot(
                    u, std::span<const double>(lambda_qp.data(), n_qp), dt_outer);
                lambda_qp = Eigen::Map<Eigen::VectorXd>(snapshot.lambda.data(), n_qp);
                lambda_rate_qp =
                    Eigen::Map<Eigen::VectorXd>(snapshot.lambda_rate.data(), n_qp);
                velocity_field =
                    DisplacementField(&mech, convective_velocity(u, u_prev, dt_outer));
                u_prev = u;
                diag.newton_iterations += res.iterations;
                diag.newton_max_iterations =
                    std::max(diag.newton_max_iterations, res.iterations);
                log_stage("mechanics");
            }
            refresh_mech_nodal();

            // (2) reaction-diffusion step with F^{n+1}
            for (int k = 0; k < n_nodes; ++k)
                i_ion[k] = total_ionic_current(cells[k], lambda_elec[k], ko_node[k],
                                               fatp_node[k], ionic, cfg.flags);
            pde.step(v, i_ion, i_app, dt_outer, cfg.flags,
                     cfg.mechanics_enabled ? &snapshot.field : nullptr,
                     cfg.mechanics_enabled ? &velocity_field : nullptr);
            log_stage("monodomain");

            diag.v_min_seen = std::min(diag.v_min_seen, v.minCoeff());
            diag.v_max_seen = std::max(diag.v_max_seen, v.maxCoeff());

            if ((step + 1) % per_trace == 0) record_sample((step + 1) * dt_outer);
            if (per_fields > 0 && (step + 1) % per_fields == 0)
                write_field_frame((step + 1) * dt_outer);
        }
    } catch (const std::exception& e) {
        if (writing) {
            nlohmann::json err;
            err["time_ms"] = step * dt_outer;
            err["step"] = step;
            err["message"] = e.what();
            if (auto* ne = dynamic_cast<const NewtonError*>(&e))
                err["residual_history"] = ne->residual_history;
            std::filesystem::create_directories(out / "error");
            std::ofstream(out / "error" / "error_report.json") << err.dump(2) << "\n";
            for (const auto& series : result.probes)
                write_trace_csv(out / "error" / (series.name + "_last_good.csv"), series);
            write_field_csv(out / "error" / "v_last_good.csv", elec, deformed_points(elec),
                            "v_mV", v);
        }
        throw std::runtime_error(std::string(e.what()) + " (at t=" +
                                 format_double(step * dt_outer) + " ms, step " +
                                 std::to_string(step) + ")");
    }

    diag.steps = n_steps;
    result.maps = compute_isochrones(result.sample_times, history);
    diag.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - t_start).count();

    if (writing) {
        for (const auto& series : result.probes)
            write_trace_csv(out / "traces" / (series.name + ".csv"), series);

        write_isochrone_csv(out / "maps" / "isochrones.csv", elec, result.maps);
        std::vector<Vec2> refpts(n_nodes);
        for (int k = 0; k < n_nodes; ++k) refpts[k] = elec.node(k);
        write_structured_vtk(out / "maps" / "isochrones.vtk", elec, refpts,
                             {{"at_ms", result.maps.at},
                              {"rt_ms", result.maps.rt},
                              {"apd_ms", result.maps.apd}});
        write_structured_vtk(out / "scenario" / "parameters.vtk", elec, refpts,
                             {{"K_o_mM", ko_node}, {"f_ATP", fatp_node}});
        write_probe_plots(out / "plots", result.probes);

        std::ofstream(out / "summary.json") << summary_json(result.probes).dump(2) << "\n";

        nlohmann::json manifest;
        manifest["engine_version"] = kEngineVersion;
        manifest["dataset"] = {{"path", dataset.origin()},
                               {"version", dataset.version()},
                               {"checksum_fnv1a64", checksum_hex(dataset.checksum())}};
        manifest["config_echo"] = config_echo;
        manifest["scenario"] = cfg.scenario_name;
        manifest["flags"] = {{"feedback_diffusion", cfg.flags.mechanics_feedback_in_diffusion},
                             {"include_isac", cfg.flags.include_i_sac},
                             {"include_convection", cfg.flags.include_convection},
                             {"mechanics_enabled", cfg.mechanics_enabled}};
        manifest["diagnostics"] = {{"steps", diag.steps},
                                   {"newton_iterations", diag.newton_iterations},
                                   {"newton_max_iterations", diag.newton_max_iterations},
                                   {"wall_ms", diag.wall_ms},
                                   {"v_min_mV", diag.v_min_seen},
                                   {"v_max_mV", diag.v_max_seen},
                                   {"isochrone_never_activated", result.maps.never_activated},
                                   {"isochrone_never_repolarized", result.maps.never_repolarized}};
        std::ofstream(out / "manifest.json") << manifest.dump(2) << "\n";
    }
    return result;
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "ko") return SweepAxis::ko;
    if (s == "fatp") return SweepAxis::fatp;
    if (s == "region") return SweepAxis::region;
    throw std::invalid_argument("unknown sweep axis: " + s + " (want ko|fatp|region)");
}

SweepResult run_sweep(const SimulationConfig& base, SweepAxis axis,
                      const ParameterSet& dataset, const std::string& config_echo) {
    struct Member {
        std::string label;
        SimulationConfig cfg;
    };
    std::vector<Member> plan;
    auto with = [&](const std::string& label, auto mutate) {
        Member m{label, base};
        mutate(m.cfg);
        if (!base.output_dir.empty())
            m.cfg.output_dir = (std::filesystem::path(base.output_dir) / label).string();
        plan.push_back(std::move(m));
    };

    switch (axis) {
    case SweepAxis::ko:
        for (double ko : {5.4, 12.0, 20.0})
            with("ko_" + format_double(ko), [&](SimulationConfig& c) {
                c.ischemia.kind = IschemiaKind::hyperkalemia;
                c.ischemia.severity = ko;
            });
        break;
    case SweepAxis::fatp:
        for (double f : {0.0, 0.001, 0.003, 0.005})
            with("fatp_" + format_double(f * 100) + "pct", [&](SimulationConfig& c) {
                c.ischemia.kind = IschemiaKind::hypoxia;
                c.ischemia.severity = f;
            });
        break;
    case SweepAxis::region:
        with("region_default", [&](SimulationConfig& c) {
            c.ischemia.region = {0.1563, 0.1563, 0.25, 0.25};
        });
        with("region_grown", [&](SimulationConfig& c) {
            c.ischemia.region = {0.0938, 0.0938, 0.3125, 0.3125};
        });
        break;
    }

    SweepResult out;
    for (const auto& m : plan) {
        SweepMember member;
        member.label = m.label;
        try {
            member.result = run_simulation(m.cfg, dataset, config_echo);
        } catch (const std::exception& e) {
            member.failed = true;
            member.error = e.what();
        }
        out.members.push_back(std::move(member));
    }

    if (!base.output_dir.empty()) {
        const std::filesystem::path dir = base.output_dir;
        std::vector<std::pair<std::string, const std::vector<ProbeSeries>*>> runs;
        for (const auto& m : out.members)
            if (!m.failed) runs.emplace_back(m.label, &m.result.probes);
        if (!runs.empty()) {
            auto rows = summarize_runs(runs, 0);
            write_comparison_csv(dir / "comparison.csv", rows);
            write_comparison_json(dir / "comparison.json", rows);
        }
        // probe traces overlaid across sweep members
        for (const auto& probe : base.probes) {
            std::vector<PlotSeries> series;
            for (const auto& m : out.members) {
                if (m.failed) continue;
                const auto& s = m.result.probe(probe.first);
                series.push_back({m.label, &s.t, &s.v});
            }
            if (!series.empty())
                write_svg_plot(dir / ("sweep_" + probe.first + "_v.svg"),
                               "Membrane potential at " + probe.first, "t (ms)", "v (mV)",
                               series);
        }
        nlohmann::json index;
        index["baseline"] = out.members.empty() ? "" : out.members.front().label;
        for (const auto& m : out.members)
            index["members"].push_back({{"label", m.label},
                                        {"failed", m.failed},
                                        {"error", m.error}});
        std::ofstream(dir / "sweep_index.json") << index.dump(2) << "\n";
    }
    return out;
}

} // namespace cardem
