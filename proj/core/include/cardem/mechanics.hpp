#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "cardem/mesh.hpp"
#include "cardem/params.hpp"

namespace cardem {

struct MaterialParams {
    double b_l = 15.0, b_t = 6.0, b_lt = 12.0; // exponents of the passive energy
    double k_bulk = 50.0;                      // kPa

    static MaterialParams from_dataset(const ParameterSet& ds);
};

struct InvertedElementError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NewtonError : std::runtime_error {
    NewtonError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

struct Kinematics {
    Mat2 F, C, strain; // strain = (C - I)/2
    double J;
};
// Builds F = I + Grad u and derived measures; throws InvertedElementError if
// det F <= 0.
Kinematics kinematics(const Mat2& grad_u);

struct FiberInvariants {
    double i4l, i4t, i8lt;
};
FiberInvariants invariants_fiber(const Mat2& C, const FiberField& fibers);

double fiber_stretch(const Mat2& C, const Vec2& a_l);

double passive_energy(const Mat2& C, const FiberField& fibers, const MaterialParams& mp);
Mat2 passive_stress(const Mat2& C, const FiberField& fibers, const MaterialParams& mp);

double volumetric_energy(const Mat2& C, double k_bulk);
Mat2 volumetric_stress(const Mat2& C, double k_bulk);

// Closed form T_A (a_l x a_l) / I4l of the pulled-back fiber stress.
Mat2 active_stress(double t_a, const Mat2& F, const Vec2& a_l);

// Fourth-order material tangent dS/dE in 2D, including the active part for a
// fixed T_A field.
struct Tangent4 {
    double c[2][2][2][2] = {};
    double& operator()(int i, int j, int k, int l) { return c[i][j][k][l]; }
    double operator()(int i, int j, int k, int l) const { return c[i][j][k][l]; }
};
Tangent4 material_tangent(const Mat2& C, const FiberField& fibers,
                          const MaterialParams& mp, double t_a);

Mat2 total_stress(const Mat2& C, const FiberField& fibers, const MaterialParams& mp,
                  double t_a);

// Nodal displacement field on the mechanical mesh with pointwise evaluation.
class DisplacementField {
public:
    DisplacementField() = default;
    DisplacementField(const QuadMesh* mesh, Eigen::VectorXd u)
        : mesh_(mesh), u_(std::move(u)) {}

    const Eigen::VectorXd& dofs() const { return u_; }
    const QuadMesh& mesh() const { return *mesh_; }
    bool empty() const { return mesh_ == nullptr; }

    Vec2 displacement(const Vec2& x) const;
    Mat2 grad(const Vec2& x) const;
    Vec2 deformed(const Vec2& x) const { return x + displacement(x); }

private:
    const QuadMesh* mesh_ = nullptr;
    Eigen::VectorXd u_;
};

struct DirichletBC {
    enum class Edge { left, right, bottom, top, left_bottom, all };
    Edge edge = Edge::left_bottom;
    Vec2 value = Vec2::Zero();
};

struct NewtonSettings {
    double tol_abs = 1e-9;
    double tol_rel = 1e-8;
    int max_iter = 50;
    int max_backtrack = 10;
    bool fd_tangent = false; // finite-difference tangent, for debugging
};

// Per-quadrature deformation data produced by the equilibrium solve and
// consumed by the electrical model and the tension ODEs.
struct DeformationSnapshot {
    DisplacementField field;
    std::vector<Mat2> F;        // element-major, 4 per element
    std::vector<double> J;
    std::vector<double> lambda;
    std::vector<double> lambda_rate;
};

class MechanicsSolver {
public:
    MechanicsSolver(const QuadMesh& mesh, FiberField fibers, MaterialParams mp,
                    DirichletBC bc = {}, NewtonSettings settings = {});

    struct Result {
        Eigen::VectorXd u;
        int iterations = 0;
        std::vector<double> residual_history;
    };
    // Quasi-static equilibrium for the given active tension field (one value
    // per quadrature point, element-major). Throws NewtonError on failure.
    Result solve(const Eigen::VectorXd& u_initial, std::span<const double> t_a) const;

    Eigen::VectorXd residual(const Eigen::VectorXd& u, std::span<const double> t_a) const;
    SpMat tangent(const Eigen::VectorXd& u, std::span<const double> t_a) const;

    // Builds the per-quadrature snapshot; lambda_rate is the backward
    // difference against prev_lambda (zeros => rate 0).
    DeformationSnapshot snapshot(const Eigen::VectorXd& u,
                                 std::span<const double> prev_lambda, double dt) const;

    int num_qp() const { return mesh_->num_elements() * 4; }
    const QuadMesh& mesh() const { return *mesh_; }
    const FiberField& fibers() const { return fibers_; }
    const std::vector<int>& constrained_dofs() const { return fixed_dofs_; }

private:
    const QuadMesh* mesh_;
    FiberField fibers_;
    MaterialParams mp_;
    DirichletBC bc_;
    NewtonSettings settings_;
    std::vector<int> fixed_dofs_;
    std::vector<double> fixed_values_;

    void apply_bc_values(Eigen::VectorXd& u) const;
    double free_norm(const Eigen::VectorXd& r) const;
};

} // namespace cardem
