#include "cardem/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cardem {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

double parse_double(const std::string& s) {
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

} // namespace

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_structured_vtk(const std::filesystem::path& path, const QuadMesh& mesh,
                          const std::vector<Vec2>& points,
                          const std::vector<VtkScalars>& point_data,
                          const std::vector<VtkScalars>& cell_data) {
    if (static_cast<int>(points.size()) != mesh.num_nodes())
        throw std::invalid_argument("write_structured_vtk: points size mismatch");
    auto out = open_out(path);
    out << "# vtk DataFile Version 3.0\ncardem field export\nASCII\n";
    out << "DATASET STRUCTURED_GRID\n";
    out << "DIMENSIONS " << mesh.nx() + 1 << " " << mesh.ny() + 1 << " 1\n";
    out << "POINTS " << mesh.num_nodes() << " double\n";
    for (const auto& p : points)
        out << format_double(p.x()) << " " << format_double(p.y()) << " 0\n";
    if (!point_data.empty()) {
        out << "POINT_DATA " << mesh.num_nodes() << "\n";
        for (const auto& f : point_data) {
            out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (int i = 0; i < f.values.size(); ++i)
                out << format_double(f.values[i]) << "\n";
        }
    }
    if (!cell_data.empty()) {
        out << "CELL_DATA " << mesh.num_elements() << "\n";
        for (const auto& f : cell_data) {
            out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (int i = 0; i < f.values.size(); ++i)
                out << format_double(f.values[i]) << "\n";
        }
    }
}

void write_trace_csv(const std::filesystem::path& path, const ProbeSeries& s) {
    auto out = open_out(path);
    out << "time_ms,v_mV,Ca_i_mM,T_A_kPa,lambda,dlambda_dt\n";
    for (size_t i = 0; i < s.t.size(); ++i) {
        out << format_double(s.t[i]) << "," << format_double(s.v[i]) << ","
            << format_double(s.ca[i]) << "," << format_double(s.ta[i]) << ","
            << format_double(s.lambda[i]) << "," << format_double(s.lambda_rate[i])
            << "\n";
    }
}

ProbeSeries read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace: " + path.string());
    ProbeSeries s;
    s.name = path.stem().string();
    std::string line;
    if (!std::getline(in, line) || line != "time_ms,v_mV,Ca_i_mM,T_A_kPa,lambda,dlambda_dt")
        throw std::runtime_error("bad trace header in " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cols = split(line, ',');
        if (cols.size() != 6) throw std::runtime_error("bad trace row in " + path.string());
        s.t.push_back(parse_double(cols[0]));
        s.v.push_back(parse_double(cols[1]));
        s.ca.push_back(parse_double(cols[2]));
        s.ta.push_back(parse_double(cols[3]));
        s.lambda.push_back(parse_double(cols[4]));
        s.lambda_rate.push_back(parse_double(cols[5]));
    }
    return s;
}

void write_isochrone_csv(const std::filesystem::path& path, const QuadMesh& mesh,
                         const IsochroneMap& map) {
    auto out = open_out(path);
    out << "x,y,at_ms,rt_ms,apd_ms\n";
    for (int k = 0; k < mesh.num_nodes(); ++k) {
        Vec2 p = mesh.node(k);
        out << format_double(p.x()) << "," << format_double(p.y()) << ","
            << format_double(map.at[k]) << "," << format_double(map.rt[k]) << ","
            << format_double(map.apd[k]) << "\n";
    }
}

IsochroneMap read_isochrone_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open isochrone csv: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "x,y,at_ms,rt_ms,apd_ms")
        throw std::runtime_error("bad isochrone header in " + path.string());
    std::vector<double> at, rt, apd;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cols = split(line, ',');
        if (cols.size() != 5)
            throw std::runtime_error("bad isochrone row in " + path.string());
        at.push_back(parse_double(cols[2]));
        rt.push_back(parse_double(cols[3]));
        apd.push_back(parse_double(cols[4]));
    }
    IsochroneMap map;
    map.at = Eigen::Map<Eigen::VectorXd>(at.data(), at.size());
    map.rt = Eigen::Map<Eigen::VectorXd>(rt.data(), rt.size());
    map.apd = Eigen::Map<Eigen::VectorXd>(apd.data(), apd.size());
    return map;
}

void write_field_csv(const std::filesystem::path& path, const QuadMesh& mesh,
                     const std::vector<Vec2>& points, const std::string& name,
                     const Eigen::VectorXd& values) {
    auto out = open_out(path);
    out << "x,y," << name << "\n";
    for (int k = 0; k < mesh.num_nodes(); ++k)
        out << format_double(points[k].x()) << "," << format_double(points[k].y()) << ","
            << format_double(values[k]) << "\n";
}

namespace {

const char* kComparisonHeader =
    "run,probe,rp_mV,at_ms,rt_ms,apd_ms,lambda_min,lambda_max,max_abs_dlambda_dt,"
    "d_apd_pct,d_rp_pct,d_at_pct,d_rt_pct,d_stretch_pct,d_lambda_rate_pct";

double opt_nan(const std::optional<double>& o) {
    return o ? *o : std::numeric_limits<double>::quiet_NaN();
}

} // namespace

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<ComparisonRow>& rows) {
    auto out = open_out(path);
    out << kComparisonHeader << "\n";
    for (const auto& r : rows) {
        out << r.run_label << "," << r.probe << "," << format_double(r.summary.rp) << ","
            << format_double(opt_nan(r.summary.at)) << ","
            << format_double(opt_nan(r.summary.rt)) << ","
            << format_double(opt_nan(r.summary.apd)) << ","
            << format_double(r.summary.lambda_min) << ","
            << format_double(r.summary.lambda_max) << ","
            << format_double(r.summary.max_abs_lambda_rate) << ","
            << format_double(r.d_apd_pct) << "," << format_double(r.d_rp_pct) << ","
            << format_double(r.d_at_pct) << "," << format_double(r.d_rt_pct) << ","
            << format_double(r.d_stretch_pct) << ","
            << format_double(r.d_lambda_rate_pct) << "\n";
    }
}

void write_comparison_json(const std::filesystem::path& path,
                           const std::vector<ComparisonRow>& rows) {
    nlohmann::json j = nlohmann::json::array();
    auto put = [](nlohmann::json& obj, const char* key, double v) {
        if (std::isfinite(v))
            obj[key] = v;
        else
            obj[key] = nullptr;
    };
    for (const auto& r : rows) {
        nlohmann::json obj;
        obj["run"] = r.run_label;
        obj["probe"] = r.probe;
        put(obj, "rp_mV", r.summary.rp);
        put(obj, "at_ms", opt_nan(r.summary.at));
        put(obj, "rt_ms", opt_nan(r.summary.rt));
        put(obj, "apd_ms", opt_nan(r.summary.apd));
        put(obj, "lambda_min", r.summary.lambda_min);
        put(obj, "lambda_max", r.summary.lambda_max);
        put(obj, "max_abs_dlambda_dt", r.summary.max_abs_lambda_rate);
        put(obj, "d_apd_pct", r.d_apd_pct);
        put(obj, "d_rp_pct", r.d_rp_pct);
        put(obj, "d_at_pct", r.d_at_pct);
        put(obj, "d_rt_pct", r.d_rt_pct);
        put(obj, "d_stretch_pct", r.d_stretch_pct);
        put(obj, "d_lambda_rate_pct", r.d_lambda_rate_pct);
        j.push_back(std::move(obj));
    }
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<PlotSeries>& series) {
    const int width = 860, height = 520;
    const int ml = 70, mr = 180, mt = 40, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (double x : *s.x) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
        for (double y : *s.y) {
            if (!std::isfinite(y)) continue;
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) ymax = ymin + 1;
    double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-size=\"16\">" << title << "</text>\n";
    // axes
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
        << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        double xv = xmin + (xmax - xmin) * i / 5.0;
        double yv = ymin + (ymax - ymin) * i / 5.0;
        out << "<text x=\"" << px(xv) << "\" y=\"" << height - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(std::round(xv * 100) / 100)
            << "</text>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(std::round(yv * 1000) / 1000)
            << "</text>\n";
        out << "<line x1=\"" << px(xv) << "\" y1=\"" << mt << "\" x2=\"" << px(xv)
            << "\" y2=\"" << mt + ph << "\" stroke=\"#dddddd\"/>\n";
        out << "<line x1=\"" << ml << "\" y1=\"" << py(yv) << "\" x2=\"" << ml + pw
            << "\" y2=\"" << py(yv) << "\" stroke=\"#dddddd\"/>\n";
    }
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n";
    out << "<text x=\"18\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << mt + ph / 2 << ")\">" << ylabel << "</text>\n";

    int ci = 0;
    for (const auto& s : series) {
        const char* color = colors[ci % 8];
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x->size(); ++i) {
            double y = (*s.y)[i];
            if (!std::isfinite(y)) continue;
            out << px((*s.x)[i]) << "," << py(y) << " ";
        }
        out << "\"/>\n";
        out << "<line x1=\"" << width - mr + 14 << "\" y1=\"" << mt + 14 + 18 * ci
            << "\" x2=\"" << width - mr + 40 << "\" y2=\"" << mt + 14 + 18 * ci
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << width - mr + 46 << "\" y=\"" << mt + 18 + 18 * ci
            << "\" font-size=\"12\">" << s.label << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
}

} // namespace cardem
