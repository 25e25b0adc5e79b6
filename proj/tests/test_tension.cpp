#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cardem/tension.hpp"

using namespace cardem;

namespace {
TensionParams params() {
    static TensionParams p =
        TensionParams::from_dataset(ParameterSet::load(CARDEM_SOURCE_DIR
                                                       "/data/baseline.params"));
    return p;
}
} // namespace

TEST_CASE("distortion gain g(q)") {
    CHECK(g_of_q(0.0, 0.35) == doctest::Approx(1.0));
    CHECK(g_of_q(1e-12, 1.0) == doctest::Approx(1.0));
    CHECK(g_of_q(-1e-12, 1.0) == doctest::Approx(1.0));
    CHECK(g_of_q(-0.5, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(g_of_q(0.5, 1.0) == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(g_of_q(1.0, 0.35), std::domain_error);
    CHECK_THROWS_AS(g_of_q(-1.2, 0.35), std::domain_error);

    SUBCASE("continuous first derivative at q=0") {
        for (double a : {0.35, 1.0, 2.5}) {
            const double h = 1e-6;
            double left = (g_of_q(0.0, a) - g_of_q(-h, a)) / h;
            double right = (g_of_q(h, a) - g_of_q(0.0, a)) / h;
            CHECK(left == doctest::Approx(a + 1.0).epsilon(1e-4));
            CHECK(right == doctest::Approx(a + 1.0).epsilon(1e-4));
        }
    }
}

TEST_CASE("tension rhs") {
    TensionParams p = params();
    SUBCASE("no stretch rate, no distortion drift") {
        TensionState s;
        s.trpn = 0.3;
        TensionRates r = tension_rhs(s, 1e-3, 1.0, 0.0, p);
        CHECK(r.d_q1 == doctest::Approx(0.0));
        CHECK(r.d_q2 == doctest::Approx(0.0));
    }
    SUBCASE("vanishing calcium and troponin freeze binding") {
        TensionState s; // trpn = 0
        TensionRates r = tension_rhs(s, 1e-300, 1.0, 0.0, p);
        CHECK(r.d_trpn == doctest::Approx(0.0));
    }
    SUBCASE("distortion steady state q* = A rate / alpha") {
        const double rate = 2e-4;
        TensionState s;
        s.q1 = p.a1 * rate / p.alpha1;
        s.q2 = p.a2 * rate / p.alpha2;
        TensionRates r = tension_rhs(s, 1e-3, 1.0, rate, p);
        CHECK(r.d_q1 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(r.d_q2 == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("nonpositive stretch-scaled ca50 rejected") {
        TensionParams bad = p;
        bad.beta = -200.0; // 1 + beta*(lambda-1) < 0 at lambda = 1.01
        CHECK_THROWS_AS(tension_rhs(TensionState{}, 1e-3, 1.01, 0.0, bad),
                        std::domain_error);
    }
}

TEST_CASE("tension step") {
    TensionParams p = params();
    SUBCASE("zero-calcium rest state is a fixed point") {
        TensionState s;
        TensionState n = step_tension(s, 0.1, 1e-300, 1.0, 0.0, p);
        CHECK(n.trpn == doctest::Approx(0.0));
        CHECK(n.xb == doctest::Approx(0.0).epsilon(1e-20));
        CHECK(n.q1 == 0.0);
        CHECK(n.q2 == 0.0);
    }
    SUBCASE("constant stretch rate drives q to the linear-ODE steady state") {
        const double rate = 1e-4;
        TensionState s;
        double t_end = 60.0 / p.alpha1; // >> both time constants
        int n = static_cast<int>(t_end / 0.05);
        for (int i = 0; i < n; ++i) s = step_tension(s, 0.05, 1e-3, 1.0, rate, p);
        CHECK(s.q1 == doctest::Approx(p.a1 * rate / p.alpha1).epsilon(0.01));
        CHECK(s.q2 == doctest::Approx(p.a2 * rate / p.alpha2).epsilon(0.01));
    }
    SUBCASE("first-order convergence in dt") {
        auto advance = [&](double dt) {
            TensionState s;
            int n = static_cast<int>(std::llround(40.0 / dt));
            for (int i = 0; i < n; ++i)
                s = step_tension(s, dt, 1.2e-3, 1.02, 1e-4, p);
            return s.trpn + s.xb + s.q1 + s.q2;
        };
        double ref = advance(0.02);
        double e1 = std::abs(advance(2.0) - ref);
        double e2 = std::abs(advance(1.0) - ref);
        CHECK(e1 / e2 > 1.5);
        CHECK(e1 / e2 < 2.7);
    }
    SUBCASE("crossbridge fraction stays in [0,1] for any troponin history") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> utrpn(0.0, 1.0);
        TensionState s;
        s.xb = 0.9;
        for (int i = 0; i < 2000; ++i) {
            s.trpn = utrpn(rng); // adversarial trajectory
            s = step_tension(s, 0.5, 1e-3, 1.0, 0.0, p);
            CHECK(s.xb >= 0.0);
            CHECK(s.xb <= 1.0);
        }
    }
    SUBCASE("steady crossbridge activation is monotone in calcium") {
        double prev = -1.0;
        for (double ca : {2e-4, 4e-4, 8e-4, 1.6e-3, 3.2e-3}) {
            TensionState s;
            for (int i = 0; i < 20000; ++i) s = step_tension(s, 0.5, ca, 1.0, 0.0, p);
            CHECK(s.xb > prev);
            prev = s.xb;
        }
    }
    SUBCASE("stretch-rate sign maps to force-velocity direction") {
        auto run = [&](double rate) {
            TensionState s;
            for (int i = 0; i < 400; ++i) s = step_tension(s, 0.05, 1e-3, 1.0, rate, p);
            return s;
        };
        TensionState pos = run(5e-4), neg = run(-5e-4);
        CHECK(pos.q() > 0.0);
        CHECK(g_of_q(pos.q(), p.a) > 1.0);
        CHECK(neg.q() < 0.0);
        CHECK(g_of_q(neg.q(), p.a) < 1.0);
    }
}

TEST_CASE("active tension value") {
    TensionParams p = params();
    TensionState s;
    s.xb = 0.0;
    CHECK(active_tension_value(s, 1.0, p) == doctest::Approx(0.0));
    s.xb = 0.04;
    // q=0, lambda=1: T_A = T_ref * h(1) * Xb with h(1) = 1
    CHECK(active_tension_value(s, 1.0, p) == doctest::Approx(p.t_ref * 0.04).epsilon(1e-12));
    TensionState d = s;
    d.xb = 0.08;
    CHECK(active_tension_value(d, 1.0, p) ==
          doctest::Approx(2.0 * active_tension_value(s, 1.0, p)).epsilon(1e-12));
    s.q1 = 0.5;
    CHECK_THROWS_AS(
        [&] {
            TensionState blow = s;
            blow.q2 = 0.6;
            return active_tension_value(blow, 1.0, p);
        }(),
        std::domain_error);
}
