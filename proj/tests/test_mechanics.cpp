#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cardem/mechanics.hpp"

using namespace cardem;

namespace {

MaterialParams material() {
    static MaterialParams mp =
        MaterialParams::from_dataset(ParameterSet::load(CARDEM_SOURCE_DIR
                                                        "/data/baseline.params"));
    return mp;
}

std::mt19937& rng() {
    static std::mt19937 gen(1234);
    return gen;
}

Mat2 random_spd_c() {
    std::uniform_real_distribution<double> u(-0.15, 0.15);
    Mat2 f;
    f << 1.0 + u(rng()), u(rng()), u(rng()), 1.0 + u(rng());
    if (f.determinant() <= 0.1) f = Mat2::Identity() + 0.05 * Mat2::Random();
    return f.transpose() * f;
}

Mat2 random_f() {
    std::uniform_real_distribution<double> u(-0.15, 0.15);
    Mat2 f;
    f << 1.0 + u(rng()), u(rng()), u(rng()), 1.0 + u(rng());
    if (f.determinant() <= 0.1) f = Mat2::Identity();
    return f;
}

double total_energy(const Mat2& C, const FiberField& fib, const MaterialParams& mp) {
    return passive_energy(C, fib, mp) + volumetric_energy(C, mp.k_bulk);
}

// Central finite difference of the energy w.r.t. the Green-Lagrange strain,
// symmetrized like the analytic stress.
Mat2 fd_stress(const Mat2& C, const FiberField& fib, const MaterialParams& mp) {
    const double h = 1e-6;
    Mat2 d; // dW/dE_ij treating E entries independently (E = (C-I)/2, dC = 2 dE)
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Mat2 cp = C, cm = C;
            cp(i, j) += 2.0 * h;
            cm(i, j) -= 2.0 * h;
            d(i, j) = (total_energy(cp, fib, mp) - total_energy(cm, fib, mp)) / (2 * h);
        }
    return 0.5 * (d + d.transpose());
}

} // namespace

TEST_CASE("kinematics") {
    SUBCASE("zero displacement") {
        Kinematics k = kinematics(Mat2::Zero());
        CHECK(k.F.isApprox(Mat2::Identity()));
        CHECK(k.J == doctest::Approx(1.0));
        CHECK(k.strain.norm() == doctest::Approx(0.0));
    }
    SUBCASE("uniform dilation") {
        Kinematics k = kinematics(0.1 * Mat2::Identity());
        CHECK(k.F.isApprox(1.1 * Mat2::Identity()));
        CHECK(k.J == doctest::Approx(1.21));
    }
    SUBCASE("rigid rotation produces no strain") {
        double th = 0.3;
        Mat2 r;
        r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        Kinematics k = kinematics(r - Mat2::Identity());
        CHECK(k.C.isApprox(Mat2::Identity(), 1e-14));
        CHECK(k.strain.norm() < 1e-14);
    }
    SUBCASE("inversion detected") {
        CHECK_THROWS_AS(kinematics(-1.5 * Mat2::Identity()), InvertedElementError);
    }
}

TEST_CASE("fiber invariants and stretch") {
    FiberField fib; // (1,0) / (0,1)
    SUBCASE("identity") {
        FiberInvariants iv = invariants_fiber(Mat2::Identity(), fib);
        CHECK(iv.i4l == doctest::Approx(1.0));
        CHECK(iv.i4t == doctest::Approx(1.0));
        CHECK(iv.i8lt == doctest::Approx(0.0));
        CHECK(fiber_stretch(Mat2::Identity(), fib.a_l) == doctest::Approx(1.0));
    }
    SUBCASE("uniaxial") {
        Mat2 c = Mat2::Identity();
        c(0, 0) = 1.44;
        FiberInvariants iv = invariants_fiber(c, fib);
        CHECK(iv.i4l == doctest::Approx(1.44));
        CHECK(fiber_stretch(c, fib.a_l) == doctest::Approx(1.2));
    }
    SUBCASE("pure shear shows up in I8") {
        Mat2 c;
        c << 1.0, 0.07, 0.07, 1.0;
        CHECK(invariants_fiber(c, fib).i8lt == doctest::Approx(0.07));
    }
    SUBCASE("stretch equals |F a_l| for random F") {
        for (int i = 0; i < 50; ++i) {
            Mat2 f = random_f();
            CHECK(fiber_stretch(f.transpose() * f, fib.a_l) ==
                  doctest::Approx((f * fib.a_l).norm()).epsilon(1e-12));
        }
    }
}

TEST_CASE("passive and volumetric stress") {
    FiberField fib;
    MaterialParams mp = material();
    SUBCASE("stress-free reference") {
        CHECK(passive_stress(Mat2::Identity(), fib, mp).norm() == doctest::Approx(0.0));
        CHECK(volumetric_stress(Mat2::Identity(), mp.k_bulk).norm() ==
              doctest::Approx(0.0));
    }
    SUBCASE("volumetric energy value") {
        Mat2 c = Mat2::Identity();
        c(0, 0) = 1.21; // J = 1.1
        CHECK(volumetric_energy(c, 50.0) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("stress matches finite differences of the energy") {
        for (int i = 0; i < 100; ++i) {
            Mat2 c = random_spd_c();
            Mat2 s = passive_stress(c, fib, mp) + volumetric_stress(c, mp.k_bulk);
            Mat2 fd = fd_stress(c, fib, mp);
            CHECK((s - fd).norm() <= 1e-6 * std::max(1.0, s.norm()));
        }
    }
    SUBCASE("uniaxial fiber stretch leaves the transverse component zero") {
        Mat2 c = Mat2::Identity();
        c(0, 0) = 1.1; // I4t = 1, I8 = 0
        Mat2 s = passive_stress(c, fib, mp);
        CHECK(s(1, 1) == doctest::Approx(0.0));
        CHECK(s(0, 1) == doctest::Approx(0.0));
    }
    SUBCASE("energy exponent overflow is an error") {
        Mat2 c = Mat2::Identity();
        c(0, 0) = 10.0;
        CHECK_THROWS(passive_stress(c, fib, mp));
    }
    SUBCASE("frame indifference") {
        std::uniform_real_distribution<double> uth(0.0, 6.28);
        for (int i = 0; i < 50; ++i) {
            Mat2 f = random_f();
            double th = uth(rng());
            Mat2 r;
            r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
            Mat2 rf = r * f;
            double w1 = total_energy(f.transpose() * f, fib, mp);
            double w2 = total_energy(rf.transpose() * rf, fib, mp);
            CHECK(w1 == doctest::Approx(w2).epsilon(1e-12));
        }
    }
}

TEST_CASE("active stress") {
    FiberField fib;
    SUBCASE("zero tension") {
        CHECK(active_stress(0.0, random_f(), fib.a_l).norm() == doctest::Approx(0.0));
    }
    SUBCASE("reference configuration") {
        Mat2 s = active_stress(3.0, Mat2::Identity(), fib.a_l);
        CHECK(s(0, 0) == doctest::Approx(3.0));
        CHECK(s(1, 1) == doctest::Approx(0.0));
    }
    SUBCASE("matches the pushforward-pullback construction for random F") {
        for (int i = 0; i < 100; ++i) {
            Mat2 f = random_f();
            double j = f.determinant();
            double t_a = 2.5;
            // sigma = J^-1 T_A a x a with a = F a_l / |F a_l|, then J F^-1 sigma F^-T
            Vec2 a = f * fib.a_l;
            a.normalize();
            Mat2 sigma = (t_a / j) * (a * a.transpose());
            Mat2 pulled = j * f.inverse() * sigma * f.inverse().transpose();
            Mat2 closed = active_stress(t_a, f, fib.a_l);
            CHECK((pulled - closed).norm() < 1e-12 * std::max(1.0, closed.norm()));
        }
    }
}

TEST_CASE("equilibrium solver") {
    QuadMesh mesh = QuadMesh::unit_square(4, 4, MeshLevel::mechanical);
    FiberField fib;
    MaterialParams mp = material();

    SUBCASE("tangent matches finite differences of the residual") {
        DirichletBC bc{DirichletBC::Edge::left, Vec2::Zero()};
        MechanicsSolver solver(mesh, fib, mp, bc);
        std::uniform_real_distribution<double> u(-0.01, 0.01);
        Eigen::VectorXd x(2 * mesh.num_nodes());
        for (int i = 0; i < x.size(); ++i) x[i] = u(rng());
        Eigen::VectorXd ta = Eigen::VectorXd::Constant(solver.num_qp(), 1.0);
        std::span<const double> tas(ta.data(), ta.size());

        Eigen::VectorXd dir(x.size());
        for (int i = 0; i < dir.size(); ++i) dir[i] = u(rng());
        const double h = 1e-7;
        Eigen::VectorXd rp = solver.residual(x + h * dir, tas);
        Eigen::VectorXd rm = solver.residual(x - h * dir, tas);
        Eigen::VectorXd fd = (rp - rm) / (2 * h);
        Eigen::VectorXd an = solver.tangent(x, tas) * dir;
        CHECK((fd - an).norm() <= 1e-5 * an.norm());
    }

    SUBCASE("zero tension, zero load: the reference state solves immediately") {
        MechanicsSolver solver(mesh, fib, mp);
        Eigen::VectorXd ta = Eigen::VectorXd::Zero(solver.num_qp());
        auto res = solver.solve(Eigen::VectorXd::Zero(2 * mesh.num_nodes()),
                                std::span<const double>(ta.data(), ta.size()));
        CHECK(res.iterations == 0);
        CHECK(res.u.norm() == doctest::Approx(0.0));
        CHECK(res.residual_history.front() == doctest::Approx(0.0));
    }

    SUBCASE("uniform tension with left edge fixed shortens the fibers") {
        DirichletBC bc{DirichletBC::Edge::left, Vec2::Zero()};
        MechanicsSolver solver(mesh, fib, mp, bc);
        Eigen::VectorXd ta = Eigen::VectorXd::Constant(solver.num_qp(), 2.0);
        auto res = solver.solve(Eigen::VectorXd::Zero(2 * mesh.num_nodes()),
                                std::span<const double>(ta.data(), ta.size()));
        auto snap = solver.snapshot(res.u, {}, 0.0);
        double mean_lambda = 0.0;
        for (double l : snap.lambda) mean_lambda += l;
        mean_lambda /= snap.lambda.size();
        CHECK(mean_lambda < 0.995); // contraction along the fiber
        // right edge moved left
        CHECK(res.u[2 * mesh.node_index(4, 2)] < 0.0);
    }

    SUBCASE("Newton converges quadratically near the solution") {
        DirichletBC bc{DirichletBC::Edge::left, Vec2::Zero()};
        NewtonSettings ns;
        ns.tol_abs = 1e-13;
        ns.tol_rel = 1e-14;
        MechanicsSolver solver(mesh, fib, mp, bc, ns);
        Eigen::VectorXd ta = Eigen::VectorXd::Constant(solver.num_qp(), 3.0);
        auto res = solver.solve(Eigen::VectorXd::Zero(2 * mesh.num_nodes()),
                                std::span<const double>(ta.data(), ta.size()));
        const auto& hist = res.residual_history;
        REQUIRE(hist.size() >= 3);
        bool quadratic_tail = false;
        for (size_t i = 1; i + 1 < hist.size(); ++i)
            if (hist[i] < 1e-3 && hist[i + 1] < 20.0 * hist[i] * hist[i] / hist[i - 1] &&
                hist[i + 1] < std::pow(hist[i], 1.5))
                quadratic_tail = true;
        CHECK(quadratic_tail);
    }

    SUBCASE("translated Dirichlet data translates the solution") {
        DirichletBC bc0{DirichletBC::Edge::left, Vec2::Zero()};
        DirichletBC bc1{DirichletBC::Edge::left, Vec2{0.01, -0.02}};
        MechanicsSolver s0(mesh, fib, mp, bc0), s1(mesh, fib, mp, bc1);
        Eigen::VectorXd ta = Eigen::VectorXd::Constant(s0.num_qp(), 1.5);
        std::span<const double> tas(ta.data(), ta.size());
        Eigen::VectorXd u0 = s0.solve(Eigen::VectorXd::Zero(2 * mesh.num_nodes()), tas).u;
        Eigen::VectorXd u1 = s1.solve(Eigen::VectorXd::Zero(2 * mesh.num_nodes()), tas).u;
        for (int n = 0; n < mesh.num_nodes(); ++n) {
            CHECK(u1[2 * n] == doctest::Approx(u0[2 * n] + 0.01).epsilon(1e-7));
            CHECK(u1[2 * n + 1] == doctest::Approx(u0[2 * n + 1] - 0.02).epsilon(1e-7));
        }
    }

    SUBCASE("nonconvergence reports the residual history") {
        NewtonSettings ns;
        ns.max_iter = 1;
        ns.tol_abs = 1e-16;
        ns.tol_rel = 1e-16;
        MechanicsSolver solver(mesh, fib, mp, DirichletBC{}, ns);
        Eigen::VectorXd ta = Eigen::VectorXd::Constant(solver.num_qp(), 8.0);
        try {
            solver.solve(Eigen::VectorXd::Zero(2 * mesh.num_nodes()),
                         std::span<const double>(ta.data(), ta.size()));
            CHECK(false);
        } catch (const NewtonError& e) {
            CHECK(e.residual_history.size() >= 1);
        }
    }
}

TEST_CASE("snapshot kinematic fields") {
    QuadMesh mesh = QuadMesh::unit_square(3, 3, MeshLevel::mechanical);
    MechanicsSolver solver(mesh, FiberField{}, material());
    // impose u = (0.05 x, -0.02 y): F = diag(1.05, 0.98) everywhere
    Eigen::VectorXd u(2 * mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        Vec2 x = mesh.node(n);
        u[2 * n] = 0.05 * x.x();
        u[2 * n + 1] = -0.02 * x.y();
    }
    std::vector<double> prev(solver.num_qp(), 1.0);
    auto snap = solver.snapshot(u, prev, 0.5);
    for (int i = 0; i < solver.num_qp(); ++i) {
        CHECK(snap.J[i] == doctest::Approx(1.05 * 0.98).epsilon(1e-12));
        CHECK(snap.lambda[i] == doctest::Approx(1.05).epsilon(1e-12));
        CHECK(snap.lambda_rate[i] == doctest::Approx(0.05 / 0.5).epsilon(1e-10));
    }
    Mat2 g = snap.field.grad(Vec2{0.37, 0.61});
    CHECK(g(0, 0) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(g(1, 1) == doctest::Approx(-0.02).epsilon(1e-12));
}
