#pragma once

#include "cardem/params.hpp"

namespace cardem {

// Per-point contractile state: troponin-bound fraction, crossbridge fraction
// and the two distortion variables driven by the stretch rate.
struct TensionState {
    double trpn = 0.0;
    double xb = 0.0;
    double q1 = 0.0, q2 = 0.0;

    double q() const { return q1 + q2; }
};

struct TensionParams {
    double k_trpn = 0.1;   // 1/ms
    double ca_50 = 8.05e-4; // mM
    double beta = -1.5;    // stretch sensitivity of ca_50
    double n_trpn = 2.0;
    double k_xb = 0.03;    // 1/ms
    double trpn_50 = 0.5;
    double n_xb = 1.0;
    double a1 = -2.9, a2 = 13.8;
    double alpha1 = 0.03, alpha2 = 0.13; // 1/ms
    double a = 0.35;       // curvature of g
    double t_ref = 45.0;   // kPa
    double beta_h = 1.65;  // slope of the length-activation factor

    static TensionParams from_dataset(const ParameterSet& ds);
};

// Distortion gain; continuous with continuous first derivative at q = 0
// (both one-sided slopes equal a+1). |q| >= 1 signals distortion blow-up.
double g_of_q(double q, double a);

// Length-activation factor, normalized to h(1) = 1.
inline double stretch_gain(double lambda, double beta_h) {
    double h = 1.0 + beta_h * (lambda - 1.0);
    return h > 0.0 ? h : 0.0;
}

struct TensionRates {
    double d_trpn = 0.0, d_xb = 0.0, d_q1 = 0.0, d_q2 = 0.0;
};

TensionRates tension_rhs(const TensionState& s, double ca_i, double lambda,
                         double dlambda_dt, const TensionParams& p);

// One step: the terms linear in each state are treated implicitly (closed
// form), the nonlinear couplings explicitly. Keeps trpn and Xb in [0,1].
TensionState step_tension(const TensionState& s, double dt, double ca_i,
                          double lambda, double dlambda_dt,
                          const TensionParams& p);

// T_A = T_ref * g(q1+q2) * h(lambda) * Xb, in kPa.
double active_tension_value(const TensionState& s, double lambda,
                            const TensionParams& p);

} // namespace cardem
