#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cardem/mesh.hpp"
#include "cardem/postprocess.hpp"

namespace cardem {

// Canonical shortest-round-trip formatting used in every text artifact so
// that repeated runs produce byte-identical files.
std::string format_double(double x);

// Legacy-VTK structured grid with optional point and per-cell scalars.
struct VtkScalars {
    std::string name;
    Eigen::VectorXd values;
};
void write_structured_vtk(const std::filesystem::path& path, const QuadMesh& mesh,
                          const std::vector<Vec2>& points,
                          const std::vector<VtkScalars>& point_data,
                          const std::vector<VtkScalars>& cell_data = {});

void write_trace_csv(const std::filesystem::path& path, const ProbeSeries& s);
ProbeSeries read_trace_csv(const std::filesystem::path& path);

void write_isochrone_csv(const std::filesystem::path& path, const QuadMesh& mesh,
                         const IsochroneMap& map);
IsochroneMap read_isochrone_csv(const std::filesystem::path& path);

void write_field_csv(const std::filesystem::path& path, const QuadMesh& mesh,
                     const std::vector<Vec2>& points, const std::string& name,
                     const Eigen::VectorXd& values);

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<ComparisonRow>& rows);
void write_comparison_json(const std::filesystem::path& path,
                           const std::vector<ComparisonRow>& rows);

// Multi-series SVG line plot.
struct PlotSeries {
    std::string label;
    const std::vector<double>* x = nullptr;
    const std::vector<double>* y = nullptr;
};
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<PlotSeries>& series);

} // namespace cardem
