#include "cardem/monodomain.hpp"

#include <algorithm>
#include <cmath>

#include "cardem/ionic.hpp" // StepSizeError

namespace cardem {

void ConductivityParams::validate() const {
    if (!(sigma_t > 0.0) || !(sigma_l >= sigma_t))
        throw std::invalid_argument("conductivities must satisfy sigma_l >= sigma_t > 0");
    if (!(chi > 0.0) || !(cm_area > 0.0))
        throw std::invalid_argument("chi and membrane capacitance must be positive");
}

ConductivityParams ConductivityParams::from_dataset(const ParameterSet& ds) {
    ConductivityParams c;
    c.sigma_l = ds.get("cond.sigma_l");
    c.sigma_t = ds.get("cond.sigma_t");
    c.chi = ds.get("cond.chi");
    c.cm_area = ds.get("cond.cm_area");
    c.validate();
    return c;
}

Mat2 pullback_conductivity(const Mat2& F, double J, const Mat2& D) {
    if (!(J > 0.0) || std::abs(F.determinant()) < 1e-14)
        throw std::domain_error("pullback_conductivity: singular deformation gradient");
    Mat2 fi = F.inverse();
    Mat2 out = J * fi * D * fi.transpose();
    return 0.5 * (out + out.transpose());
}

Mat2 deformed_conductivity(const Mat2& F, const Vec2& a_l_ref, double d_l, double d_t) {
    double i4l = a_l_ref.dot(F.transpose() * F * a_l_ref);
    Mat2 al_alt = (F * a_l_ref) * (F * a_l_ref).transpose() / i4l;
    return d_t * Mat2::Identity() + (d_l - d_t) * al_alt;
}

Mat2 reference_conductivity(const Mat2& F, double J, const Vec2& a_l_ref, double d_l,
                            double d_t) {
    if (!(J > 0.0)) throw std::domain_error("reference_conductivity: J <= 0");
    Mat2 C = F.transpose() * F;
    double i4l = a_l_ref.dot(C * a_l_ref);
    Mat2 out = J * (d_t * C.inverse() +
                    (d_l - d_t) / i4l * (a_l_ref * a_l_ref.transpose()));
    return 0.5 * (out + out.transpose());
}

Eigen::VectorXd convective_velocity(const Eigen::VectorXd& x_now,
                                    const Eigen::VectorXd& x_prev, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("convective_velocity: dt must be > 0");
    if (x_now.size() != x_prev.size())
        throw std::invalid_argument("convective_velocity: size mismatch");
    return (x_now - x_prev) / dt;
}

Eigen::VectorXd StimulusSpec::nodal_current(const QuadMesh& mesh, double t,
                                            const ConductivityParams& cond) const {
    Eigen::VectorXd i = Eigen::VectorXd::Zero(mesh.num_nodes());
    if (!active(t)) return i;
    const double amp = amplitude_mA_cm3 * cond.current_scale();
    for (int k = 0; k < mesh.num_nodes(); ++k)
        if (region.contains(mesh.node(k))) i[k] = amp;
    return i;
}

MonodomainSolver::MonodomainSolver(const QuadMesh& mesh, FiberField fibers,
                                   ConductivityParams cond, Settings settings)
    : mesh_(&mesh), fibers_(fibers), cond_(cond), settings_(settings) {
    fibers_.validate();
    cond_.validate();
    d_ref_ = cond_.d_t() * Mat2::Identity() +
             (cond_.d_l() - cond_.d_t()) * (fibers_.a_l * fibers_.a_l.transpose());

    const auto& rule = QuadratureRule::gauss2x2();
    qp_position_.resize(mesh.num_elements() * 4);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        Vec2 origin = mesh.element_origin(e);
        for (int q = 0; q < 4; ++q) {
            ShapeEval s = shape_eval(rule.points[q].x(), rule.points[q].y());
            shape_value_[q] = s.value;
            for (int a = 0; a < 4; ++a) shape_grad_[q][a] = mesh.physical_grad(s.grad[a]);
            qp_position_[4 * e + q] = origin + Vec2{(rule.points[q].x() + 1.0) * 0.5 * mesh.hx(),
                                                    (rule.points[q].y() + 1.0) * 0.5 * mesh.hy()};
        }
    }

    // Build the sparsity pattern once and record scatter positions.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.num_elements() * 16);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto nodes = mesh.element_nodes(e);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) trips.emplace_back(nodes[a], nodes[b], 0.0);
    }
    lhs_ = SpMat(mesh.num_nodes(), mesh.num_nodes());
    lhs_.setFromTriplets(trips.begin(), trips.end());
    lhs_.makeCompressed();

    auto find_pos = [this](int row, int col) {
        const int* outer = lhs_.outerIndexPtr();
        const int* inner = lhs_.innerIndexPtr();
        const int* lo = inner + outer[col];
        const int* hi = inner + outer[col + 1];
        const int* it = std::lower_bound(lo, hi, row);
        return static_cast<int>(it - inner);
    };
    scatter_.resize(mesh.num_elements() * 16);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        auto nodes = mesh.element_nodes(e);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                scatter_[16 * e + 4 * a + b] = find_pos(nodes[a], nodes[b]);
    }
    diag_pos_.resize(mesh.num_nodes());
    for (int k = 0; k < mesh.num_nodes(); ++k) diag_pos_[k] = find_pos(k, k);
    mass_ = Eigen::VectorXd::Zero(mesh.num_nodes());
}

void MonodomainSolver::assemble(double dt, const ScenarioFlags& flags,
                                const DisplacementField* def,
                                const DisplacementField* vel) {
    const double detj = mesh_->jacobian_det();
    double* vals = lhs_.valuePtr();
    std::fill(vals, vals + lhs_.nonZeros(), 0.0);
    mass_.setZero();

    const bool deform = def != nullptr && flags.mechanics_feedback_in_diffusion;
    const bool convect = flags.include_convection && def != nullptr && vel != nullptr;

    for (int e = 0; e < mesh_->num_elements(); ++e) {
        auto nodes = mesh_->element_nodes(e);
        double ke[4][4] = {};
        for (int q = 0; q < 4; ++q) {
            Mat2 dhat = d_ref_;
            double jdet = 1.0;
            Mat2 f = Mat2::Identity();
            if (deform) {
                Kinematics kin = kinematics(def->grad(qp_position_[4 * e + q]));
                f = kin.F;
                jdet = kin.J;
                dhat = reference_conductivity(kin.F, kin.J, fibers_.a_l, cond_.d_l(),
                                              cond_.d_t());
            }
            const auto& g = shape_grad_[q];
            for (int a = 0; a < 4; ++a) {
                Vec2 dg = dhat * g[a];
                ke[a][a] += detj * g[a].dot(dg);
                for (int b = a + 1; b < 4; ++b) {
                    double v = detj * g[b].dot(dg);
                    ke[a][b] += v;
                    ke[b][a] += v;
                }
            }
            if (convect) {
                Vec2 w = vel->displacement(qp_position_[4 * e + q]);
                Mat2 fit = f.inverse().transpose();
                for (int b = 0; b < 4; ++b) {
                    double adv = -jdet * (fit * g[b]).dot(w) * detj;
                    for (int a = 0; a < 4; ++a)
                        ke[a][b] += adv * shape_value_[q][a];
                }
            }
            for (int a = 0; a < 4; ++a)
                mass_[nodes[a]] += detj * jdet * shape_value_[q][a];
        }
        const int* pos = &scatter_[16 * e];
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) vals[pos[4 * a + b]] += ke[a][b];
    }
    for (int k = 0; k < mesh_->num_nodes(); ++k)
        vals[diag_pos_[k]] += mass_[k] / dt;
}

void MonodomainSolver::step(Eigen::VectorXd& v, const Eigen::VectorXd& i_ion,
                            const Eigen::VectorXd& i_app, double dt,
                            const ScenarioFlags& flags,
                            const DisplacementField* deformation,
                            const DisplacementField* velocity) {
    if (!(dt > 0.0)) throw std::invalid_argument("MonodomainSolver::step: dt must be > 0");
    if (v.size() != mesh_->num_nodes() || i_ion.size() != v.size() ||
        i_app.size() != v.size())
        throw std::invalid_argument("MonodomainSolver::step: field size mismatch");

    const bool symmetric = !(flags.include_convection && deformation && velocity);
    const bool can_reuse = settings_.cache_factorization && factor_valid_ &&
                           last_dt_ == dt && symmetric == last_symmetric_ &&
                           deformation == nullptr;
    if (!can_reuse) {
        assemble(dt, flags, deformation, velocity);
        if (symmetric) {
            if (!pattern_analyzed_) {
                ldlt_.analyzePattern(lhs_);
                pattern_analyzed_ = true;
            }
            ldlt_.factorize(lhs_);
            if (ldlt_.info() != Eigen::Success)
                throw std::runtime_error("monodomain: factorization failed");
        } else {
            lu_.compute(lhs_);
            if (lu_.info() != Eigen::Success)
                throw std::runtime_error("monodomain: LU factorization failed");
        }
        factor_valid_ = true;
        last_dt_ = dt;
        last_symmetric_ = symmetric;
    }

    Eigen::VectorXd rhs =
        mass_.cwiseProduct(v / dt + i_app - i_ion);
    v = symmetric ? ldlt_.solve(rhs).eval() : lu_.solve(rhs).eval();

    for (int k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v[k]) || v[k] < settings_.v_min || v[k] > settings_.v_max)
            throw StepSizeError("membrane potential out of bounds after step (node " +
                                std::to_string(k) + ", v=" + std::to_string(v[k]) + ")");
    }
}

} // namespace cardem
