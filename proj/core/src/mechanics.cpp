#include "cardem/mechanics.hpp"

#include <Eigen/SparseLU>
#include <cmath>

namespace cardem {

MaterialParams MaterialParams::from_dataset(const ParameterSet& ds) {
    MaterialParams mp;
    mp.b_l = ds.get("mech.b_l");
    mp.b_t = ds.get("mech.b_t");
    mp.b_lt = ds.get("mech.b_lt");
    mp.k_bulk = ds.get("mech.k_bulk");
    return mp;
}

Kinematics kinematics(const Mat2& grad_u) {
    Kinematics k;
    k.F = Mat2::Identity() + grad_u;
    k.J = k.F.determinant();
    if (!(k.J > 0.0)) throw InvertedElementError("element inversion: det F <= 0");
    k.C = k.F.transpose() * k.F;
    k.strain = 0.5 * (k.C - Mat2::Identity());
    return k;
}

FiberInvariants invariants_fiber(const Mat2& C, const FiberField& fibers) {
    return {fibers.a_l.dot(C * fibers.a_l), fibers.a_t.dot(C * fibers.a_t),
            fibers.a_l.dot(C * fibers.a_t)};
}

double fiber_stretch(const Mat2& C, const Vec2& a_l) {
    return std::sqrt(a_l.dot(C * a_l));
}

namespace {

constexpr double kMaxExponent = 50.0; // e^Q overflow guard

double exponent_q(const FiberInvariants& iv, const MaterialParams& mp) {
    double q = mp.b_l * (iv.i4l - 1.0) * (iv.i4l - 1.0) +
               mp.b_t * (iv.i4t - 1.0) * (iv.i4t - 1.0) + mp.b_lt * iv.i8lt * iv.i8lt;
    if (q > kMaxExponent)
        throw std::runtime_error("passive energy exponent overflow (nonphysical strain)");
    return q;
}

Mat2 sym_outer(const Vec2& a, const Vec2& b) {
    return a * b.transpose() + b * a.transpose();
}

} // namespace

double passive_energy(const Mat2& C, const FiberField& fibers, const MaterialParams& mp) {
    FiberInvariants iv = invariants_fiber(C, fibers);
    return 0.5 * (std::exp(exponent_q(iv, mp)) - 1.0);
}

Mat2 passive_stress(const Mat2& C, const FiberField& fibers, const MaterialParams& mp) {
    FiberInvariants iv = invariants_fiber(C, fibers);
    double eq = std::exp(exponent_q(iv, mp));
    Mat2 ml = fibers.a_l * fibers.a_l.transpose();
    Mat2 mt = fibers.a_t * fibers.a_t.transpose();
    Mat2 mx = sym_outer(fibers.a_l, fibers.a_t);
    return eq * (2.0 * mp.b_l * (iv.i4l - 1.0) * ml + 2.0 * mp.b_t * (iv.i4t - 1.0) * mt +
                 mp.b_lt * iv.i8lt * mx);
}

double volumetric_energy(const Mat2& C, double k_bulk) {
    double det = C.determinant();
    if (!(det > 0.0)) throw InvertedElementError("volumetric_energy: det C <= 0");
    double j = std::sqrt(det);
    return k_bulk * (j - 1.0) * (j - 1.0);
}

Mat2 volumetric_stress(const Mat2& C, double k_bulk) {
    double det = C.determinant();
    if (!(det > 0.0)) throw InvertedElementError("volumetric_stress: det C <= 0");
    double j = std::sqrt(det);
    return 2.0 * k_bulk * (j - 1.0) * j * C.inverse();
}

Mat2 active_stress(double t_a, const Mat2& F, const Vec2& a_l) {
    Mat2 C = F.transpose() * F;
    double i4l = a_l.dot(C * a_l);
    if (!(i4l > 0.0)) throw std::domain_error("active_stress: I4l <= 0");
    return (t_a / i4l) * (a_l * a_l.transpose());
}

Mat2 total_stress(const Mat2& C, const FiberField& fibers, const MaterialParams& mp,
                  double t_a) {
    Mat2 s = passive_stress(C, fibers, mp) + volumetric_stress(C, mp.k_bulk);
    double i4l = fibers.a_l.dot(C * fibers.a_l);
    s += (t_a / i4l) * (fibers.a_l * fibers.a_l.transpose());
    return s;
}

Tangent4 material_tangent(const Mat2& C, const FiberField& fibers,
                          const MaterialParams& mp, double t_a) {
    FiberInvariants iv = invariants_fiber(C, fibers);
    double eq = std::exp(exponent_q(iv, mp));
    Mat2 ml = fibers.a_l * fibers.a_l.transpose();
    Mat2 mt = fibers.a_t * fibers.a_t.transpose();
    Mat2 mx = sym_outer(fibers.a_l, fibers.a_t);
    Mat2 g = 2.0 * mp.b_l * (iv.i4l - 1.0) * ml + 2.0 * mp.b_t * (iv.i4t - 1.0) * mt +
             mp.b_lt * iv.i8lt * mx;

    double det = C.determinant();
    if (!(det > 0.0)) throw InvertedElementError("material_tangent: det C <= 0");
    double j = std::sqrt(det);
    Mat2 cinv = C.inverse();

    Tangent4 t;
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n)
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) {
                    double v = eq * (2.0 * g(m, n) * g(p, q) +
                                     4.0 * mp.b_l * ml(m, n) * ml(p, q) +
                                     4.0 * mp.b_t * mt(m, n) * mt(p, q) +
                                     mp.b_lt * mx(m, n) * mx(p, q));
                    v += 2.0 * mp.k_bulk *
                         ((2.0 * j - 1.0) * j * cinv(m, n) * cinv(p, q) -
                          (j * j - j) * (cinv(m, p) * cinv(q, n) + cinv(m, q) * cinv(p, n)));
                    v += -2.0 * t_a / (iv.i4l * iv.i4l) * ml(m, n) * ml(p, q);
                    t(m, n, p, q) = v;
                }
    return t;
}

Vec2 DisplacementField::displacement(const Vec2& x) const {
    auto loc = mesh_->locate(x);
    ShapeEval s = shape_eval(loc.xi, loc.eta);
    auto nodes = mesh_->element_nodes(loc.element);
    Vec2 u = Vec2::Zero();
    for (int a = 0; a < 4; ++a) {
        u.x() += s.value[a] * u_[2 * nodes[a]];
        u.y() += s.value[a] * u_[2 * nodes[a] + 1];
    }
    return u;
}

Mat2 DisplacementField::grad(const Vec2& x) const {
    auto loc = mesh_->locate(x);
    ShapeEval s = shape_eval(loc.xi, loc.eta);
    auto nodes = mesh_->element_nodes(loc.element);
    Mat2 g = Mat2::Zero();
    for (int a = 0; a < 4; ++a) {
        Vec2 gn = mesh_->physical_grad(s.grad[a]);
        g.row(0) += u_[2 * nodes[a]] * gn.transpose();
        g.row(1) += u_[2 * nodes[a] + 1] * gn.transpose();
    }
    return g;
}

MechanicsSolver::MechanicsSolver(const QuadMesh& mesh, FiberField fibers,
                                 MaterialParams mp, DirichletBC bc,
                                 NewtonSettings settings)
    : mesh_(&mesh), fibers_(fibers), mp_(mp), bc_(bc), settings_(settings) {
    fibers_.validate();
    for (int j = 0; j <= mesh.ny(); ++j)
        for (int i = 0; i <= mesh.nx(); ++i) {
            bool boundary = i == 0 || i == mesh.nx() || j == 0 || j == mesh.ny();
            bool on = (bc.edge == DirichletBC::Edge::all && boundary) ||
                      (bc.edge == DirichletBC::Edge::left_bottom && (i == 0 || j == 0)) ||
                      (bc.edge == DirichletBC::Edge::left && i == 0) ||
                      (bc.edge == DirichletBC::Edge::right && i == mesh.nx()) ||
                      (bc.edge == DirichletBC::Edge::bottom && j == 0) ||
                      (bc.edge == DirichletBC::Edge::top && j == mesh.ny());
            if (on) {
                int n = mesh.node_index(i, j);
                fixed_dofs_.push_back(2 * n);
                fixed_values_.push_back(bc.value.x());
                fixed_dofs_.push_back(2 * n + 1);
                fixed_values_.push_back(bc.value.y());
            }
        }
}

void MechanicsSolver::apply_bc_values(Eigen::VectorXd& u) const {
    for (size_t k = 0; k < fixed_dofs_.size(); ++k) u[fixed_dofs_[k]] = fixed_values_[k];
}

double MechanicsSolver::free_norm(const Eigen::VectorXd& r) const {
    Eigen::VectorXd masked = r;
    for (int d : fixed_dofs_) masked[d] = 0.0;
    return masked.norm();
}

Eigen::VectorXd MechanicsSolver::residual(const Eigen::VectorXd& u,
                                          std::span<const double> t_a) const {
    const auto& rule = QuadratureRule::gauss2x2();
    const double detj = mesh_->jacobian_det();
    Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * mesh_->num_nodes());

    // Physical shape gradients are element independent on a uniform grid.
    std::array<std::array<Vec2, 4>, 4> grads;
    for (int q = 0; q < 4; ++q) {
        ShapeEval s = shape_eval(rule.points[q].x(), rule.points[q].y());
        for (int a = 0; a < 4; ++a) grads[q][a] = mesh_->physical_grad(s.grad[a]);
    }

    for (int e = 0; e < mesh_->num_elements(); ++e) {
        auto nodes = mesh_->element_nodes(e);
        for (int q = 0; q < 4; ++q) {
            Mat2 grad_u = Mat2::Zero();
            for (int a = 0; a < 4; ++a) {
                grad_u.row(0) += u[2 * nodes[a]] * grads[q][a].transpose();
                grad_u.row(1) += u[2 * nodes[a] + 1] * grads[q][a].transpose();
            }
            Kinematics kin = kinematics(grad_u);
            Mat2 s = total_stress(kin.C, fibers_, mp_, t_a[4 * e + q]);
            Mat2 p = kin.F * s; // first Piola-Kirchhoff
            for (int a = 0; a < 4; ++a) {
                r[2 * nodes[a]] += detj * p.row(0).dot(grads[q][a]);
                r[2 * nodes[a] + 1] += detj * p.row(1).dot(grads[q][a]);
            }
        }
    }
    return r;
}

SpMat MechanicsSolver::tangent(const Eigen::VectorXd& u,
                               std::span<const double> t_a) const {
    const int ndof = 2 * mesh_->num_nodes();
    if (settings_.fd_tangent) {
        // Column-by-column forward differences of the residual.
        Eigen::VectorXd r0 = residual(u, t_a);
        std::vector<Eigen::Triplet<double>> trips;
        const double eps = 1e-7;
        for (int dcol = 0; dcol < ndof; ++dcol) {
            Eigen::VectorXd up = u;
            up[dcol] += eps;
            Eigen::VectorXd dr = (residual(up, t_a) - r0) / eps;
            for (int i = 0; i < ndof; ++i)
                if (dr[i] != 0.0) trips.emplace_back(i, dcol, dr[i]);
        }
        SpMat k(ndof, ndof);
        k.setFromTriplets(trips.begin(), trips.end());
        return k;
    }

    const auto& rule = QuadratureRule::gauss2x2();
    const double detj = mesh_->jacobian_det();
    std::array<std::array<Vec2, 4>, 4> grads;
    for (int q = 0; q < 4; ++q) {
        ShapeEval s = shape_eval(rule.points[q].x(), rule.points[q].y());
        for (int a = 0; a < 4; ++a) grads[q][a] = mesh_->physical_grad(s.grad[a]);
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh_->num_elements() * 64);
    for (int e = 0; e < mesh_->num_elements(); ++e) {
        auto nodes = mesh_->element_nodes(e);
        Eigen::Matrix<double, 8, 8> ke = Eigen::Matrix<double, 8, 8>::Zero();
        for (int q = 0; q < 4; ++q) {
            Mat2 grad_u = Mat2::Zero();
            for (int a = 0; a < 4; ++a) {
                grad_u.row(0) += u[2 * nodes[a]] * grads[q][a].transpose();
                grad_u.row(1) += u[2 * nodes[a] + 1] * grads[q][a].transpose();
            }
            Kinematics kin = kinematics(grad_u);
            double ta = t_a[4 * e + q];
            Mat2 s = total_stress(kin.C, fibers_, mp_, ta);
            Tangent4 cm = material_tangent(kin.C, fibers_, mp_, ta);

            // A_iJkL = delta_ik S_JL + F_iM C_MJPL F_kP
            double A[2][2][2][2];
            for (int i = 0; i < 2; ++i)
                for (int jj = 0; jj < 2; ++jj)
                    for (int k = 0; k < 2; ++k)
                        for (int l = 0; l < 2; ++l) {
                            double v = (i == k) ? s(jj, l) : 0.0;
                            for (int m = 0; m < 2; ++m)
                                for (int p = 0; p < 2; ++p)
                                    v += kin.F(i, m) * cm(m, jj, p, l) * kin.F(k, p);
                            A[i][jj][k][l] = v;
                        }

            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    for (int i = 0; i < 2; ++i)
                        for (int k = 0; k < 2; ++k) {
                            double v = 0.0;
                            for (int jj = 0; jj < 2; ++jj)
                                for (int l = 0; l < 2; ++l)
                                    v += grads[q][a][jj] * A[i][jj][k][l] * grads[q][b][l];
                            ke(2 * a + i, 2 * b + k) += detj * v;
                        }
        }
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int i = 0; i < 2; ++i)
                    for (int k = 0; k < 2; ++k)
                        trips.emplace_back(2 * nodes[a] + i, 2 * nodes[b] + k,
                                           ke(2 * a + i, 2 * b + k));
    }
    SpMat k(ndof, ndof);
    k.setFromTriplets(trips.begin(), trips.end());
    return k;
}

MechanicsSolver::Result MechanicsSolver::solve(const Eigen::VectorXd& u_initial,
                                               std::span<const double> t_a) const {
    if (static_cast<int>(t_a.size()) != num_qp())
        throw std::invalid_argument("MechanicsSolver::solve: tension field size mismatch");
    const int ndof = 2 * mesh_->num_nodes();
    Result res;
    res.u = u_initial.size() == ndof ? u_initial : Eigen::VectorXd::Zero(ndof);
    apply_bc_values(res.u);

    auto residual_norm = [&](const Eigen::VectorXd& u, bool& ok) -> double {
        try {
            ok = true;
            return free_norm(residual(u, t_a));
        } catch (const InvertedElementError&) {
            ok = false;
            return std::numeric_limits<double>::infinity();
        }
    };

    bool ok = false;
    double rnorm = residual_norm(res.u, ok);
    if (!ok) throw NewtonError("initial configuration has inverted elements", {});
    const double r0 = rnorm;
    res.residual_history.push_back(rnorm);

    Eigen::SparseLU<SpMat> lu;
    for (int it = 0; it < settings_.max_iter; ++it) {
        if (rnorm <= settings_.tol_abs || rnorm <= settings_.tol_rel * r0) {
            res.iterations = it;
            return res;
        }
        Eigen::VectorXd r = residual(res.u, t_a);
        SpMat k = tangent(res.u, t_a);
        // Constrained rows/columns: identity row, zero rhs.
        for (int d : fixed_dofs_) r[d] = 0.0;
        std::vector<char> isfixed(ndof, 0);
        for (int d : fixed_dofs_) isfixed[d] = 1;
        for (int col = 0; col < k.outerSize(); ++col)
            for (SpMat::InnerIterator itk(k, col); itk; ++itk)
                if (isfixed[itk.row()] || isfixed[itk.col()])
                    itk.valueRef() = (itk.row() == itk.col()) ? 1.0 : 0.0;

        lu.compute(k);
        if (lu.info() != Eigen::Success)
            throw NewtonError("tangent factorization failed", res.residual_history);
        Eigen::VectorXd du = lu.solve(-r);

        // Backtracking on residual increase or element inversion.
        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt <= settings_.max_backtrack; ++bt) {
            Eigen::VectorXd trial = res.u + alpha * du;
            bool trial_ok = false;
            double trial_norm = residual_norm(trial, trial_ok);
            if (trial_ok && trial_norm < rnorm) {
                res.u = trial;
                rnorm = trial_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw NewtonError("line search exhausted", res.residual_history);
        res.residual_history.push_back(rnorm);
    }
    if (rnorm <= settings_.tol_abs || rnorm <= settings_.tol_rel * r0) {
        res.iterations = settings_.max_iter;
        return res;
    }
    throw NewtonError("Newton did not converge in max_iter", res.residual_history);
}

DeformationSnapshot MechanicsSolver::snapshot(const Eigen::VectorXd& u,
                                              std::span<const double> prev_lambda,
                                              double dt) const {
    const auto& rule = QuadratureRule::gauss2x2();
    DeformationSnapshot snap;
    snap.field = DisplacementField(mesh_, u);
    const int nqp = num_qp();
    snap.F.resize(nqp);
    snap.J.resize(nqp);
    snap.lambda.resize(nqp);
    snap.lambda_rate.assign(nqp, 0.0);

    std::array<std::array<Vec2, 4>, 4> grads;
    for (int q = 0; q < 4; ++q) {
        ShapeEval s = shape_eval(rule.points[q].x(), rule.points[q].y());
        for (int a = 0; a < 4; ++a) grads[q][a] = mesh_->physical_grad(s.grad[a]);
    }
    for (int e = 0; e < mesh_->num_elements(); ++e) {
        auto nodes = mesh_->element_nodes(e);
        for (int q = 0; q < 4; ++q) {
            Mat2 grad_u = Mat2::Zero();
            for (int a = 0; a < 4; ++a) {
                grad_u.row(0) += u[2 * nodes[a]] * grads[q][a].transpose();
                grad_u.row(1) += u[2 * nodes[a] + 1] * grads[q][a].transpose();
            }
            Kinematics kin = kinematics(grad_u);
            int idx = 4 * e + q;
            snap.F[idx] = kin.F;
            snap.J[idx] = kin.J;
            snap.lambda[idx] = fiber_stretch(kin.C, fibers_.a_l);
            if (!prev_lambda.empty() && dt > 0.0)
                snap.lambda_rate[idx] = (snap.lambda[idx] - prev_lambda[idx]) / dt;
        }
    }
    return snap;
}

} // namespace cardem
