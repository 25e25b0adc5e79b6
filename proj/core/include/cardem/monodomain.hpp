#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <memory>
#include <optional>

#include "cardem/ischemia.hpp"
#include "cardem/mechanics.hpp"
#include "cardem/mesh.hpp"
#include "cardem/params.hpp"
#include "cardem/scenario.hpp"

namespace cardem {

// Tissue conductivities and the scaling constants that turn them into
// diffusivities (cm^2/ms) and applied currents (pA/pF).
struct ConductivityParams {
    double sigma_l = 1.2e-3;  // S/cm
    double sigma_t = 2.5562e-4;
    double chi = 1400.0;      // 1/cm
    double cm_area = 1.0;     // uF/cm^2

    double d_l() const { return sigma_l / (chi * cm_area * 1e-6) * 1e-3; }
    double d_t() const { return sigma_t / (chi * cm_area * 1e-6) * 1e-3; }
    // mA/cm^3 -> pA/pF
    double current_scale() const { return 1e3 / (chi * cm_area); }

    void validate() const;
    static ConductivityParams from_dataset(const ParameterSet& ds);
};

// \hat D = J F^{-1} D F^{-T}
Mat2 pullback_conductivity(const Mat2& F, double J, const Mat2& D);

// D(x) on the deformed domain built from the pushed-forward fiber direction.
Mat2 deformed_conductivity(const Mat2& F, const Vec2& a_l_ref, double d_l, double d_t);

// Closed form of pullback(deformed_conductivity): J (d_t C^{-1} +
// (d_l - d_t)/I4l a_l a_l^T). Symmetric positive definite for det F > 0.
Mat2 reference_conductivity(const Mat2& F, double J, const Vec2& a_l_ref, double d_l,
                            double d_t);

// Backward-difference velocity of the deformed nodal coordinates.
Eigen::VectorXd convective_velocity(const Eigen::VectorXd& x_now,
                                    const Eigen::VectorXd& x_prev, double dt);

struct StimulusSpec {
    Rect region{0.0, 0.0, 0.0625, 0.0625};
    double amplitude_mA_cm3 = 200.0;
    double start_ms = 0.0;
    double duration_ms = 2.0;

    bool active(double t) const { return t >= start_ms && t < start_ms + duration_ms; }
    // Nodal applied-current vector in pA/pF at time t.
    Eigen::VectorXd nodal_current(const QuadMesh& mesh, double t,
                                  const ConductivityParams& cond) const;
};

// One IMEX Euler step of the reference-domain reaction-diffusion system:
// (M_J/dt + K + C_conv) v^{n+1} = (M_J/dt) v^n + M_J (I_app - I_ion).
// Diffusion (and convection) implicit, reaction explicit, lumped J-weighted
// mass.
struct MonodomainSettings {
    bool cache_factorization = false; // valid only while the operator is static
    double v_min = -150.0, v_max = 250.0;
};

class MonodomainSolver {
public:
    using Settings = MonodomainSettings;

    MonodomainSolver(const QuadMesh& mesh, FiberField fibers, ConductivityParams cond,
                     Settings settings = {});

    // deformation == nullptr means the reference configuration. velocity (on
    // the mechanical mesh, interpolated here) is only used with convection.
    void step(Eigen::VectorXd& v, const Eigen::VectorXd& i_ion,
              const Eigen::VectorXd& i_app, double dt, const ScenarioFlags& flags,
              const DisplacementField* deformation = nullptr,
              const DisplacementField* velocity = nullptr);

    const Eigen::VectorXd& lumped_mass_j() const { return mass_; }
    const QuadMesh& mesh() const { return *mesh_; }

private:
    const QuadMesh* mesh_;
    FiberField fibers_;
    ConductivityParams cond_;
    Settings settings_;
    Mat2 d_ref_;

    // Precomputed assembly machinery.
    std::vector<Vec2> qp_position_;          // 4 per element
    std::array<std::array<double, 4>, 4> shape_value_{};
    std::array<std::array<Vec2, 4>, 4> shape_grad_{};
    SpMat lhs_;
    std::vector<int> scatter_;               // 16 positions per element
    std::vector<int> diag_pos_;
    Eigen::VectorXd mass_;

    Eigen::SimplicialLDLT<SpMat> ldlt_;
    Eigen::SparseLU<SpMat> lu_;
    bool pattern_analyzed_ = false;
    bool factor_valid_ = false;
    bool last_symmetric_ = true;
    double last_dt_ = -1.0;

    void assemble(double dt, const ScenarioFlags& flags, const DisplacementField* def,
                  const DisplacementField* vel);
};

} // namespace cardem
