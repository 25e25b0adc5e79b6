#pragma once

#include <string>

#include "cardem/mesh.hpp"

namespace cardem {

enum class IschemiaKind { none, hyperkalemia, hypoxia };

IschemiaKind ischemia_kind_from_string(const std::string& s);
std::string to_string(IschemiaKind k);

struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool contains(const Vec2& x) const {
        return x.x() >= x0 && x.x() <= x1 && x.y() >= y0 && x.y() <= y1;
    }
};

// Exact signed distance to the rectangle boundary, negative inside.
double box_signed_distance(const Vec2& x, const Rect& r);

// Monotone C^1 (or C^2, order 5) polynomial blend on [0,1].
double smoothstep(double t, int order);

// A single square ischemic subregion with a regularized transition band.
// The severity is K_o in mM for hyperkalemia and the open-channel fraction
// f_ATP (dimensionless) for hypoxia.
struct IschemicScenario {
    IschemiaKind kind = IschemiaKind::none;
    Rect region{0.1563, 0.1563, 0.25, 0.25};
    double severity = 5.4;
    double transition_width = 0.04; // total band width across the interface
    int blend_order = 5;
    double healthy_ko = 5.4;  // mM
    double healthy_fatp = 0.0;

    void validate() const;
};

struct LocalParams {
    double k_o;
    double f_atp;
};

// Spatially blended (K_o, f_ATP) at a reference point.
LocalParams parameter_field(const IschemicScenario& scenario, const Vec2& x);

// Geometric membership of a probe point in the ischemic region.
bool classify_probe_inside(const Vec2& x, const IschemicScenario& scenario);

} // namespace cardem
