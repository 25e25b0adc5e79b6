#pragma once

#include <array>
#include <vector>

#include "cardem/params.hpp"
#include "cardem/scenario.hpp"

namespace cardem {

// Gating variables. All obey dw/dt = alpha(1-w) - beta*w with nonnegative
// rates, so the implicit Euler update is a convex combination and every gate
// stays in [0,1]. Rbar (the fraction of closed ryanodine receptors) is gated
// by subspace calcium instead of voltage but has the same affine structure.
enum GateIndex : int {
    kXr1 = 0, kXr2, kXs, kM, kH, kJ, kD, kF, kF2, kFCass, kS, kR, kRbar,
    kNumGates
};

enum ConcIndex : int {
    kNai = 0, kKi, kCai, kCaSR, kCaSS,
    kNumConc
};

struct CellState {
    double v = -85.23; // mV
    std::array<double, kNumGates> gates{};
    std::array<double, kNumConc> conc{};

    double ca_i() const { return conc[kCai]; }
    double na_i() const { return conc[kNai]; }
    double k_i() const { return conc[kKi]; }

    bool valid() const;
};

// Membrane model constants. Baseline values ship in the parameter dataset;
// K_o and f_ATP are spatial fields owned by the ischemia module and are
// passed per evaluation.
struct IonicParams {
    // physical constants
    double R = 8314.472;    // mJ/(mol K)
    double T = 310.0;       // K
    double F = 96485.3415;  // C/mol
    // cell geometry / capacitance
    double Cm = 0.185, V_c = 0.016404, V_sr = 0.001094, V_ss = 0.00005468;
    // maximal conductances (nS/pF) and transport parameters
    double g_Na = 14.838, g_K1 = 5.405, g_Kr = 0.153, g_Ks = 0.392;
    double g_CaL = 3.98e-5, g_to = 0.294, g_bna = 0.00029, g_bca = 0.000592;
    double g_pCa = 0.1238, K_pCa = 0.0005, g_pK = 0.0146, P_kna = 0.03;
    double P_NaK = 2.724, K_mk = 1.0, K_mNa = 40.0;
    double K_NaCa = 1000.0, K_sat = 0.1, nc_alpha = 2.5, nc_gamma = 0.35;
    double Km_Ca = 1.38, Km_Nai = 87.5;
    // external concentrations (K_o passed separately)
    double Na_o = 140.0, Ca_o = 2.0;
    // calcium buffering and SR fluxes
    double Buf_c = 0.2, K_buf_c = 0.001, Buf_sr = 10.0, K_buf_sr = 0.3;
    double Buf_ss = 0.4, K_buf_ss = 0.00025;
    double k1_prime = 0.15, k2_prime = 0.045, k3 = 0.06, k4 = 0.005;
    double EC = 1.5, max_sr = 2.5, min_sr = 1.0;
    double V_rel = 0.102, V_xfer = 0.0038, K_up = 0.00025;
    double V_leak = 0.00036, Vmax_up = 0.006375;
    // ATP-sensitive potassium channel
    double g_katp = 100.0;
    // stretch-activated channels
    double g_sac = 0.004, g_ko = 0.003;
    double sac_v_ref = -85.0; // v_R in the nonspecific-current scaling factor

    double rtf() const { return R * T / F; }

    static IonicParams from_dataset(const ParameterSet& ds);
    static CellState initial_state(const ParameterSet& ds);
};

double nernst_potassium(double k_o, double k_i, double temperature_k);

double i_katp(double v, double k_o, double f_atp, double g_katp, double e_k);

struct SacCurrents {
    double na = 0.0, k = 0.0, ko = 0.0;
    double total() const { return na + k + ko; }
};
SacCurrents i_sac(double v, double lambda, double v_na, double v_k, double v_ref,
                  double g_sac, double g_ko);

// All membrane currents in pA/pF, positive outward.
struct CurrentBreakdown {
    double i_na = 0, i_k1 = 0, i_to = 0, i_kr = 0, i_ks = 0, i_cal = 0;
    double i_naca = 0, i_nak = 0, i_pca = 0, i_pk = 0, i_bca = 0, i_bna = 0;
    double i_katp = 0;
    SacCurrents sac;
    double total() const {
        return i_na + i_k1 + i_to + i_kr + i_ks + i_cal + i_naca + i_nak +
               i_pca + i_pk + i_bca + i_bna + i_katp + sac.total();
    }
};

CurrentBreakdown ionic_currents(const CellState& s, double lambda, double k_o,
                                double f_atp, const IonicParams& p,
                                const ScenarioFlags& flags);

double total_ionic_current(const CellState& s, double lambda, double k_o,
                           double f_atp, const IonicParams& p,
                           const ScenarioFlags& flags);

// alpha/beta rates of a single gate at frozen (v, Ca_ss, Ca_SR).
struct GateRates {
    double alpha = 0.0, beta = 0.0;
};
GateRates gate_kinetics(int gate, const CellState& s, const IonicParams& p);

// Closed-form implicit Euler update of one affine gate ODE.
inline double gate_implicit_update(double w, double alpha, double beta, double dt) {
    return (w + dt * alpha) / (1.0 + dt * (alpha + beta));
}

void step_gates_implicit(CellState& s, double dt, const IonicParams& p);

// Forward Euler on the concentration ODEs at frozen v and fresh gates.
// i_app enters the potassium balance like the reference stimulus current.
// Throws StepSizeError if a concentration is driven nonpositive.
void step_concentrations_explicit(CellState& s, double dt, const IonicParams& p,
                                  double k_o, double i_app = 0.0);

struct StepSizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Zero-dimensional membrane integrator used for initial-state relaxation and
// as the reference oracle in tests.
class SingleCell {
public:
    SingleCell(const IonicParams& p, CellState s, double k_o = 5.4, double f_atp = 0.0)
        : p_(p), state_(s), k_o_(k_o), f_atp_(f_atp) {}

    void relax(double duration_ms, double dt = 0.1);
    // One reaction step: gates implicit, concentrations explicit, then
    // dv/dt = -I_ion + I_app.
    void step(double dt, double i_app = 0.0, double lambda = 1.0,
              const ScenarioFlags& flags = ScenarioFlags::s1());

    struct TracePoint {
        double t, v, ca_i;
    };
    // Stimulate once and record at the given cadence.
    std::vector<TracePoint> paced_trace(double stim_amplitude, double stim_duration,
                                        double t_end, double dt = 0.02,
                                        double sample_every = 1.0);

    const CellState& state() const { return state_; }
    CellState& state() { return state_; }
    double k_o() const { return k_o_; }

private:
    IonicParams p_;
    CellState state_;
    double k_o_, f_atp_;
};

} // namespace cardem
