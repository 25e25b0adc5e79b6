#include "cardem/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cardem {

ShapeEval shape_eval(double xi, double eta) {
    if (xi < -1.0 - 1e-12 || xi > 1.0 + 1e-12 || eta < -1.0 - 1e-12 || eta > 1.0 + 1e-12)
        throw std::domain_error("shape_eval: reference coordinates outside [-1,1]^2");
    ShapeEval s;
    const double xm = 1.0 - xi, xp = 1.0 + xi, em = 1.0 - eta, ep = 1.0 + eta;
    s.value = {0.25 * xm * em, 0.25 * xp * em, 0.25 * xp * ep, 0.25 * xm * ep};
    s.grad[0] = {-0.25 * em, -0.25 * xm};
    s.grad[1] = {0.25 * em, -0.25 * xp};
    s.grad[2] = {0.25 * ep, 0.25 * xp};
    s.grad[3] = {-0.25 * ep, 0.25 * xm};
    return s;
}

const QuadratureRule& QuadratureRule::gauss2x2() {
    static const QuadratureRule rule = [] {
        QuadratureRule r;
        const double g = 1.0 / std::sqrt(3.0);
        r.points = {Vec2{-g, -g}, Vec2{g, -g}, Vec2{g, g}, Vec2{-g, g}};
        return r;
    }();
    return rule;
}

QuadMesh QuadMesh::unit_square(int nx, int ny, MeshLevel level) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("QuadMesh: nx, ny must be >= 1");
    QuadMesh m;
    m.nx_ = nx;
    m.ny_ = ny;
    m.hx_ = 1.0 / nx;
    m.hy_ = 1.0 / ny;
    m.level_ = level;
    return m;
}

QuadMesh::Location QuadMesh::locate(const Vec2& x) const {
    if (x.x() < -1e-12 || x.x() > 1.0 + 1e-12 || x.y() < -1e-12 || x.y() > 1.0 + 1e-12)
        throw std::domain_error("QuadMesh::locate: point outside the unit square");
    int i = std::min(static_cast<int>(std::floor(x.x() / hx_)), nx_ - 1);
    int j = std::min(static_cast<int>(std::floor(x.y() / hy_)), ny_ - 1);
    i = std::max(i, 0);
    j = std::max(j, 0);
    Location loc;
    loc.element = j * nx_ + i;
    loc.xi = 2.0 * (x.x() - i * hx_) / hx_ - 1.0;
    loc.eta = 2.0 * (x.y() - j * hy_) / hy_ - 1.0;
    loc.xi = std::clamp(loc.xi, -1.0, 1.0);
    loc.eta = std::clamp(loc.eta, -1.0, 1.0);
    return loc;
}

double QuadMesh::eval(const Eigen::VectorXd& nodal, const Vec2& x) const {
    Location loc = locate(x);
    ShapeEval s = shape_eval(loc.xi, loc.eta);
    auto nodes = element_nodes(loc.element);
    double v = 0.0;
    for (int a = 0; a < 4; ++a) v += s.value[a] * nodal[nodes[a]];
    return v;
}

FiberField FiberField::from_angle(double radians) {
    FiberField f;
    f.a_l = {std::cos(radians), std::sin(radians)};
    f.a_t = {-std::sin(radians), std::cos(radians)};
    return f;
}

void FiberField::validate() const {
    if (std::abs(a_l.norm() - 1.0) > 1e-10 || std::abs(a_t.norm() - 1.0) > 1e-10 ||
        std::abs(a_l.dot(a_t)) > 1e-10)
        throw std::invalid_argument("FiberField: directions must be unit and orthogonal");
}

namespace {

void check_element_area(const QuadMesh& mesh) {
    if (!(mesh.jacobian_det() > 0.0))
        throw std::runtime_error("assembly: degenerate element");
}

} // namespace

SpMat assemble_mass(const QuadMesh& mesh,
                    const std::function<double(int, int)>& weight_at_qp) {
    check_element_area(mesh);
    const auto& rule = QuadratureRule::gauss2x2();
    const double detj = mesh.jacobian_det();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.num_elements() * 16);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto nodes = mesh.element_nodes(e);
        Eigen::Matrix4d me = Eigen::Matrix4d::Zero();
        for (int q = 0; q < rule.size; ++q) {
            ShapeEval s = shape_eval(rule.points[q].x(), rule.points[q].y());
            double w = detj * (weight_at_qp ? weight_at_qp(e, q) : 1.0);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) me(a, b) += w * s.value[a] * s.value[b];
        }
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) trips.emplace_back(nodes[a], nodes[b], me(a, b));
    }
    SpMat m(mesh.num_nodes(), mesh.num_nodes());
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

Eigen::VectorXd lumped_mass(const QuadMesh& mesh,
                            const std::function<double(int, int)>& weight_at_qp) {
    check_element_area(mesh);
    const auto& rule = QuadratureRule::gauss2x2();
    const double detj = mesh.jacobian_det();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.num_nodes());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto nodes = mesh.element_nodes(e);
        for (int q = 0; q < rule.size; ++q) {
            ShapeEval s = shape_eval(rule.points[q].x(), rule.points[q].y());
            double w = detj * (weight_at_qp ? weight_at_qp(e, q) : 1.0);
            for (int a = 0; a < 4; ++a) m[nodes[a]] += w * s.value[a];
        }
    }
    return m;
}

SpMat assemble_stiffness(const QuadMesh& mesh,
                         const std::function<Mat2(int, int)>& coeff_at_qp) {
    check_element_area(mesh);
    const auto& rule = QuadratureRule::gauss2x2();
    const double detj = mesh.jacobian_det();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.num_elements() * 16);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto nodes = mesh.element_nodes(e);
        Eigen::Matrix4d ke = Eigen::Matrix4d::Zero();
        for (int q = 0; q < rule.size; ++q) {
            ShapeEval s = shape_eval(rule.points[q].x(), rule.points[q].y());
            Mat2 d = coeff_at_qp(e, q);
            double scale = std::max({1.0, std::abs(d(0, 0)), std::abs(d(1, 1))});
            if (std::abs(d(0, 1) - d(1, 0)) > 1e-12 * scale)
                throw std::invalid_argument("assemble_stiffness: nonsymmetric coefficient");
            std::array<Vec2, 4> g;
            for (int a = 0; a < 4; ++a) g[a] = mesh.physical_grad(s.grad[a]);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    ke(a, b) += detj * g[a].dot(d * g[b]);
        }
        ke = 0.5 * (ke + ke.transpose()).eval();
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) trips.emplace_back(nodes[a], nodes[b], ke(a, b));
    }
    SpMat k(mesh.num_nodes(), mesh.num_nodes());
    k.setFromTriplets(trips.begin(), trips.end());
    return k;
}

GridTransfer GridTransfer::between(const QuadMesh& coarse, const QuadMesh& fine) {
    if (fine.nx() % coarse.nx() != 0 || fine.ny() % coarse.ny() != 0)
        throw std::invalid_argument("GridTransfer: meshes are not nested");
    int rx = fine.nx() / coarse.nx(), ry = fine.ny() / coarse.ny();
    if (rx != ry) throw std::invalid_argument("GridTransfer: anisotropic nesting ratio");
    GridTransfer t;
    t.coarse_ = &coarse;
    t.fine_ = &fine;
    t.r_ = rx;
    return t;
}

Eigen::VectorXd GridTransfer::prolong(const Eigen::VectorXd& coarse_nodal) const {
    if (coarse_nodal.size() != coarse_->num_nodes())
        throw std::invalid_argument("GridTransfer::prolong: size mismatch");
    Eigen::VectorXd out(fine_->num_nodes());
    for (int k = 0; k < fine_->num_nodes(); ++k)
        out[k] = coarse_->eval(coarse_nodal, fine_->node(k));
    return out;
}

Eigen::VectorXd GridTransfer::restrict_(const Eigen::VectorXd& fine_nodal) const {
    if (fine_nodal.size() != fine_->num_nodes())
        throw std::invalid_argument("GridTransfer::restrict: size mismatch");
    Eigen::VectorXd out(coarse_->num_nodes());
    for (int j = 0; j <= coarse_->ny(); ++j)
        for (int i = 0; i <= coarse_->nx(); ++i)
            out[coarse_->node_index(i, j)] = fine_nodal[fine_->node_index(i * r_, j * r_)];
    return out;
}

Eigen::VectorXd recover_nodal_from_qp(const QuadMesh& mesh,
                                      const Eigen::VectorXd& qp_values) {
    if (qp_values.size() != mesh.num_elements() * 4)
        throw std::invalid_argument("recover_nodal_from_qp: size mismatch");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(mesh.num_nodes());
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(mesh.num_nodes());
    const double s3 = std::sqrt(3.0);
    // Gauss values are bilinear in scaled coordinates; extrapolate to corners.
    static const std::array<Vec2, 4> corners = {Vec2{-1, -1}, Vec2{1, -1}, Vec2{1, 1},
                                                Vec2{-1, 1}};
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto nodes = mesh.element_nodes(e);
        for (int c = 0; c < 4; ++c) {
            // extrapolation weights live outside [-1,1]; evaluate directly
            const double xi = corners[c].x() * s3, eta = corners[c].y() * s3;
            const std::array<double, 4> w = {
                0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta),
                0.25 * (1 + xi) * (1 + eta), 0.25 * (1 - xi) * (1 + eta)};
            double val = 0.0;
            for (int q = 0; q < 4; ++q) val += w[q] * qp_values[4 * e + q];
            acc[nodes[c]] += val;
            cnt[nodes[c]] += 1.0;
        }
    }
    return acc.array() / cnt.array();
}

} // namespace cardem
