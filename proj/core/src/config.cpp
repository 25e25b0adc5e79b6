#include "cardem/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cardem {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"run.end_time_ms", "500"},
        {"run.dt_ms", "0.02"},
        {"run.substep", "false"},
        {"run.diffusion_dt_ms", "0.1"},
        {"run.relax_ms", "1000"},
        {"run.trace_every_ms", "1"},
        {"run.fields_every_ms", "0"},
        {"run.output_dir", ""},
        {"run.debug_stage_log", "false"},
        {"run.seed", "12345"},
        {"run.cache_factorization", "auto"},
        {"mesh.nx", "50"},
        {"mesh.ny", "50"},
        {"mesh.mech_nx", "10"},
        {"mesh.mech_ny", "10"},
        {"fibers.angle_deg", "0"},
        {"scenario.preset", "s3"},
        {"scenario.feedback_diffusion", "true"},
        {"scenario.include_isac", "true"},
        {"scenario.include_convection", "false"},
        {"scenario.mechanics", "auto"},
        {"stimulus.x0", "0"},
        {"stimulus.y0", "0"},
        {"stimulus.x1", "0.0625"},
        {"stimulus.y1", "0.0625"},
        {"stimulus.amplitude_mA_cm3", "200"},
        {"stimulus.start_ms", "0"},
        {"stimulus.duration_ms", "2"},
        {"ischemia.kind", "none"},
        {"ischemia.severity", "5.4"},
        {"ischemia.x0", "0.1563"},
        {"ischemia.y0", "0.1563"},
        {"ischemia.x1", "0.25"},
        {"ischemia.y1", "0.25"},
        {"ischemia.transition_width", "auto"},
        {"ischemia.blend_order", "5"},
        {"mechanics.bc_edge", "left_bottom"},
        {"mechanics.bc_ux", "0"},
        {"mechanics.bc_uy", "0"},
        {"mechanics.newton_tol_abs", "1e-9"},
        {"mechanics.newton_tol_rel", "1e-8"},
        {"mechanics.newton_max_iter", "50"},
        {"dataset.path", "data/baseline.params"},
    };
    return defaults;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw std::invalid_argument("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

Vec2 parse_point(const std::string& key, const std::string& v) {
    auto comma = v.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("config: key '" + key + "' expects 'x, y'");
    return {std::stod(trim(v.substr(0, comma))), std::stod(trim(v.substr(comma + 1)))};
}

} // namespace

double parse_double_with_percent(const std::string& s) {
    std::string t = trim(s);
    bool pct = !t.empty() && t.back() == '%';
    if (pct) t.pop_back();
    size_t pos = 0;
    double v = std::stod(t, &pos);
    if (pos != trim(t).size())
        throw std::invalid_argument("not a number: '" + s + "'");
    return pct ? v / 100.0 : v;
}

RunConfig::RunConfig() : values_(default_values()) {
    values_["probes.M1"] = "0.1875, 0.1875";
    values_["probes.M2"] = "0.5, 0.5";
}

void RunConfig::check_key(const std::string& key) const {
    if (key.rfind("probes.", 0) == 0) return; // probe names are free-form
    if (!default_values().count(key))
        throw std::invalid_argument("config: unknown key '" + key + "'");
}

void RunConfig::set(const std::string& key, const std::string& value) {
    check_key(key);
    if (key.rfind("probes.", 0) == 0 && trim(value).empty()) {
        values_.erase(key);
        return;
    }
    values_[key] = trim(value);
}

void RunConfig::set(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must be key=value: '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void RunConfig::merge_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                         ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        try {
            set(key, line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    }
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    RunConfig cfg;
    cfg.merge_file(path);
    return cfg;
}

std::string RunConfig::get_raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    return it->second;
}

std::string RunConfig::echo() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
}

SimulationConfig RunConfig::resolve() const {
    SimulationConfig c;
    auto num = [&](const char* key) { return parse_double_with_percent(get_raw(key)); };
    c.end_time_ms = num("run.end_time_ms");
    c.dt_ms = num("run.dt_ms");
    c.substep = parse_bool("run.substep", get_raw("run.substep"));
    c.diffusion_dt_ms = num("run.diffusion_dt_ms");
    c.relax_ms = num("run.relax_ms");
    c.trace_every_ms = num("run.trace_every_ms");
    c.fields_every_ms = num("run.fields_every_ms");
    c.output_dir = get_raw("run.output_dir");
    c.debug_stage_log = parse_bool("run.debug_stage_log", get_raw("run.debug_stage_log"));
    c.seed = static_cast<unsigned>(num("run.seed"));
    {
        std::string cache = get_raw("run.cache_factorization");
        if (cache == "auto")
            c.cache_factorization = SimulationConfig::Cache::automatic;
        else
            c.cache_factorization = parse_bool("run.cache_factorization", cache)
                                        ? SimulationConfig::Cache::on
                                        : SimulationConfig::Cache::off;
    }
    c.nx = static_cast<int>(num("mesh.nx"));
    c.ny = static_cast<int>(num("mesh.ny"));
    c.mech_nx = static_cast<int>(num("mesh.mech_nx"));
    c.mech_ny = static_cast<int>(num("mesh.mech_ny"));
    c.fiber_angle_rad = num("fibers.angle_deg") * M_PI / 180.0;

    c.scenario_name = get_raw("scenario.preset");
    if (c.scenario_name == "custom") {
        c.flags.mechanics_feedback_in_diffusion =
            parse_bool("scenario.feedback_diffusion", get_raw("scenario.feedback_diffusion"));
        c.flags.include_i_sac =
            parse_bool("scenario.include_isac", get_raw("scenario.include_isac"));
        c.flags.include_convection =
            parse_bool("scenario.include_convection", get_raw("scenario.include_convection"));
    } else {
        c.flags = ScenarioFlags::preset(c.scenario_name);
    }
    {
        std::string mech = get_raw("scenario.mechanics");
        if (mech == "auto")
            c.mechanics_enabled = c.flags.needs_mechanics();
        else
            c.mechanics_enabled = parse_bool("scenario.mechanics", mech);
    }

    c.stimulus.region = {num("stimulus.x0"), num("stimulus.y0"), num("stimulus.x1"),
                         num("stimulus.y1")};
    c.stimulus.amplitude_mA_cm3 = num("stimulus.amplitude_mA_cm3");
    c.stimulus.start_ms = num("stimulus.start_ms");
    c.stimulus.duration_ms = num("stimulus.duration_ms");

    c.ischemia.kind = ischemia_kind_from_string(get_raw("ischemia.kind"));
    c.ischemia.severity = num("ischemia.severity");
    c.ischemia.region = {num("ischemia.x0"), num("ischemia.y0"), num("ischemia.x1"),
                         num("ischemia.y1")};
    c.ischemia.blend_order = static_cast<int>(num("ischemia.blend_order"));
    {
        std::string w = get_raw("ischemia.transition_width");
        if (w == "auto") {
            c.transition_auto = true;
        } else {
            c.transition_auto = false;
            c.ischemia.transition_width = parse_double_with_percent(w);
        }
    }

    c.probes.clear();
    for (const auto& [k, v] : values_)
        if (k.rfind("probes.", 0) == 0)
            c.probes.emplace_back(k.substr(7), parse_point(k, v));

    {
        std::string e = get_raw("mechanics.bc_edge");
        if (e == "all") c.bc.edge = DirichletBC::Edge::all;
        else if (e == "left_bottom") c.bc.edge = DirichletBC::Edge::left_bottom;
        else if (e == "left") c.bc.edge = DirichletBC::Edge::left;
        else if (e == "right") c.bc.edge = DirichletBC::Edge::right;
        else if (e == "bottom") c.bc.edge = DirichletBC::Edge::bottom;
        else if (e == "top") c.bc.edge = DirichletBC::Edge::top;
        else throw std::invalid_argument("config: bad mechanics.bc_edge '" + e + "'");
    }
    c.bc.value = {num("mechanics.bc_ux"), num("mechanics.bc_uy")};
    c.newton.tol_abs = num("mechanics.newton_tol_abs");
    c.newton.tol_rel = num("mechanics.newton_tol_rel");
    c.newton.max_iter = static_cast<int>(num("mechanics.newton_max_iter"));

    c.dataset_path = get_raw("dataset.path");
    c.validate();
    return c;
}

void SimulationConfig::validate() const {
    if (!(end_time_ms > 0)) throw std::invalid_argument("end_time_ms must be > 0");
    if (!(dt_ms > 0)) throw std::invalid_argument("dt_ms must be > 0");
    if (substep && !(diffusion_dt_ms >= dt_ms))
        throw std::invalid_argument("diffusion_dt_ms must be >= dt_ms");
    if (nx < 2 || ny < 2 || mech_nx < 1 || mech_ny < 1)
        throw std::invalid_argument("mesh sizes too small");
    if (nx % mech_nx != 0 || ny % mech_ny != 0 || nx / mech_nx != ny / mech_ny)
        throw std::invalid_argument(
            "electrical mesh must be an exact r x r refinement of the mechanical mesh");
    for (const auto& [name, p] : probes)
        if (p.x() < 0 || p.x() > 1 || p.y() < 0 || p.y() > 1)
            throw std::invalid_argument("probe " + name + " outside the unit square");
    ischemia.validate();
    if (!(trace_every_ms > 0)) throw std::invalid_argument("trace_every_ms must be > 0");
}

} // namespace cardem
