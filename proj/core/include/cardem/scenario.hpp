#pragma once

#include <stdexcept>
#include <string>

namespace cardem {

// Coupling switches for the four simulation situations. S1 runs the
// electrical model on the static reference grid; S2 adds the deformation
// feedback in the diffusion operator; S3 adds the stretch-activated current;
// S4 adds the convective transport term.
struct ScenarioFlags {
    bool mechanics_feedback_in_diffusion = false;
    bool include_i_sac = false;
    bool include_convection = false;

    // Mechanics must be solved whenever any feedback path consumes it.
    bool needs_mechanics() const {
        return mechanics_feedback_in_diffusion || include_i_sac || include_convection;
    }

    static ScenarioFlags s1() { return {false, false, false}; }
    static ScenarioFlags s2() { return {true, false, false}; }
    static ScenarioFlags s3() { return {true, true, false}; }
    static ScenarioFlags s4() { return {true, true, true}; }

    static ScenarioFlags preset(const std::string& name) {
        if (name == "s1") return s1();
        if (name == "s2") return s2();
        if (name == "s3") return s3();
        if (name == "s4") return s4();
        throw std::invalid_argument("unknown scenario preset: " + name);
    }

    bool operator==(const ScenarioFlags&) const = default;
};

} // namespace cardem
