#include "cardem/ischemia.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cardem {

IschemiaKind ischemia_kind_from_string(const std::string& s) {
    if (s == "none") return IschemiaKind::none;
    if (s == "hyperkalemia") return IschemiaKind::hyperkalemia;
    if (s == "hypoxia") return IschemiaKind::hypoxia;
    throw std::invalid_argument("unknown ischemia kind: " + s);
}

std::string to_string(IschemiaKind k) {
    switch (k) {
    case IschemiaKind::none: return "none";
    case IschemiaKind::hyperkalemia: return "hyperkalemia";
    case IschemiaKind::hypoxia: return "hypoxia";
    }
    return "?";
}

double box_signed_distance(const Vec2& x, const Rect& r) {
    Vec2 c{0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1)};
    Vec2 half{0.5 * (r.x1 - r.x0), 0.5 * (r.y1 - r.y0)};
    Vec2 q{std::abs(x.x() - c.x()) - half.x(), std::abs(x.y() - c.y()) - half.y()};
    Vec2 qp{std::max(q.x(), 0.0), std::max(q.y(), 0.0)};
    return qp.norm() + std::min(std::max(q.x(), q.y()), 0.0);
}

double smoothstep(double t, int order) {
    t = std::clamp(t, 0.0, 1.0);
    switch (order) {
    case 1: return t;
    case 3: return t * t * (3.0 - 2.0 * t);
    case 5: return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    default: throw std::invalid_argument("smoothstep: order must be 1, 3 or 5");
    }
}

void IschemicScenario::validate() const {
    if (kind == IschemiaKind::none) return;
    if (region.x0 < 0 || region.y0 < 0 || region.x1 > 1 || region.y1 > 1 ||
        region.x0 >= region.x1 || region.y0 >= region.y1)
        throw std::invalid_argument("ischemic region must be a nonempty box in [0,1]^2");
    if (transition_width < 0)
        throw std::invalid_argument("transition_width must be >= 0");
    if (kind == IschemiaKind::hyperkalemia && (severity < 5.4 || severity > 20.0))
        throw std::invalid_argument("hyperkalemia severity outside 5.4-20 mM");
    if (kind == IschemiaKind::hypoxia && (severity < 0.0 || severity > 0.005))
        throw std::invalid_argument("hypoxia severity outside 0-0.5%");
}

LocalParams parameter_field(const IschemicScenario& sc, const Vec2& x) {
    LocalParams healthy{sc.healthy_ko, sc.healthy_fatp};
    if (sc.kind == IschemiaKind::none) return healthy;

    double severe_ko = sc.kind == IschemiaKind::hyperkalemia ? sc.severity : sc.healthy_ko;
    double severe_fatp = sc.kind == IschemiaKind::hypoxia ? sc.severity : sc.healthy_fatp;

    double d = box_signed_distance(x, sc.region);
    double w = sc.transition_width;
    double blend; // 0 = severe, 1 = healthy
    if (w <= 0.0) {
        blend = d > 0.0 ? 1.0 : 0.0;
    } else {
        blend = smoothstep((d + 0.5 * w) / w, sc.blend_order);
    }
    return {severe_ko + (healthy.k_o - severe_ko) * blend,
            severe_fatp + (healthy.f_atp - severe_fatp) * blend};
}

bool classify_probe_inside(const Vec2& x, const IschemicScenario& sc) {
    if (sc.kind == IschemiaKind::none) return false;
    return sc.region.contains(x);
}

} // namespace cardem
