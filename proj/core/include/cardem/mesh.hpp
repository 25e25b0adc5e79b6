#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <functional>

namespace cardem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using SpMat = Eigen::SparseMatrix<double>;

// Bilinear shape functions on the reference square [-1,1]^2, nodes ordered
// counter-clockwise: (-1,-1), (1,-1), (1,1), (-1,1).
struct ShapeEval {
    std::array<double, 4> value{};
    std::array<Vec2, 4> grad{}; // d/dxi, d/deta
};
ShapeEval shape_eval(double xi, double eta);

// 2x2 Gauss rule on [-1,1]^2 (weights are all 1).
struct QuadratureRule {
    static constexpr int size = 4;
    std::array<Vec2, 4> points;
    static const QuadratureRule& gauss2x2();
};

enum class MeshLevel { electrical, mechanical };

// Structured tensor-product quadrilateral mesh of the unit square.
class QuadMesh {
public:
    static QuadMesh unit_square(int nx, int ny, MeshLevel level);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    MeshLevel level() const { return level_; }

    int num_nodes() const { return (nx_ + 1) * (ny_ + 1); }
    int num_elements() const { return nx_ * ny_; }

    int node_index(int i, int j) const { return j * (nx_ + 1) + i; }
    Vec2 node(int k) const {
        int i = k % (nx_ + 1), j = k / (nx_ + 1);
        return {i * hx_, j * hy_};
    }
    std::array<int, 4> element_nodes(int e) const {
        int i = e % nx_, j = e / nx_;
        return {node_index(i, j), node_index(i + 1, j), node_index(i + 1, j + 1),
                node_index(i, j + 1)};
    }
    Vec2 element_origin(int e) const {
        int i = e % nx_, j = e / nx_;
        return {i * hx_, j * hy_};
    }

    // Element containing X and the reference coordinates of X inside it.
    // Points on element boundaries are assigned to the lower-index element.
    struct Location {
        int element;
        double xi, eta;
    };
    Location locate(const Vec2& x) const;

    // Bilinear interpolation of a nodal scalar field.
    double eval(const Eigen::VectorXd& nodal, const Vec2& x) const;

    // Shape gradients in physical coordinates (constant per rectangle axis).
    Vec2 physical_grad(const Vec2& ref_grad) const {
        return {ref_grad.x() * 2.0 / hx_, ref_grad.y() * 2.0 / hy_};
    }
    double jacobian_det() const { return hx_ * hy_ / 4.0; }

private:
    int nx_ = 0, ny_ = 0;
    double hx_ = 0, hy_ = 0;
    MeshLevel level_ = MeshLevel::electrical;
};

// Unit fiber frame in the reference configuration.
struct FiberField {
    Vec2 a_l{1.0, 0.0};
    Vec2 a_t{0.0, 1.0};

    static FiberField from_angle(double radians);
    void validate() const;
};

// Consistent mass matrix; weight_at_qp (if given) multiplies the integrand,
// e.g. with the deformation Jacobian. Total unweighted mass equals the
// domain area.
SpMat assemble_mass(const QuadMesh& mesh,
                    const std::function<double(int, int)>& weight_at_qp = {});
Eigen::VectorXd lumped_mass(const QuadMesh& mesh,
                            const std::function<double(int, int)>& weight_at_qp = {});

// Stiffness with a per-quadrature 2x2 symmetric PSD coefficient tensor.
// A nonsymmetric coefficient is rejected. The result is exactly symmetric.
SpMat assemble_stiffness(const QuadMesh& mesh,
                         const std::function<Mat2(int, int)>& coeff_at_qp);

// Transfer between two nesting levels of the same square: the fine mesh must
// be an exact r x r refinement of the coarse one.
class GridTransfer {
public:
    static GridTransfer between(const QuadMesh& coarse, const QuadMesh& fine);

    int ratio() const { return r_; }
    // Exact bilinear injection coarse -> fine.
    Eigen::VectorXd prolong(const Eigen::VectorXd& coarse_nodal) const;
    // Pointwise restriction at coincident nodes fine -> coarse.
    Eigen::VectorXd restrict_(const Eigen::VectorXd& fine_nodal) const;

private:
    const QuadMesh* coarse_ = nullptr;
    const QuadMesh* fine_ = nullptr;
    int r_ = 1;
};

// Recover per-quadrature-point values (2x2 Gauss layout, element-major) to
// nodes by elementwise bilinear extrapolation averaged over sharing elements.
Eigen::VectorXd recover_nodal_from_qp(const QuadMesh& mesh,
                                      const Eigen::VectorXd& qp_values);

} // namespace cardem
