#include "cardem/ionic.hpp"

#include <cmath>
#include <stdexcept>

namespace cardem {

namespace {

// Evaluable bounds. The membrane model remains numerically meaningful well
// outside the physiological band; anything past this is a blown-up step.
constexpr double kVmin = -150.0;
constexpr double kVmax = 250.0;

struct GateCurve {
    double x_inf, tau;
};

// Steady state / time constant curves of the voltage gates (epicardial s gate).
GateCurve gate_curve(int gate, double v, double ca_ss) {
    switch (gate) {
    case kXr1: {
        double inf = 1.0 / (1.0 + std::exp((-26.0 - v) / 7.0));
        double a = 450.0 / (1.0 + std::exp((-45.0 - v) / 10.0));
        double b = 6.0 / (1.0 + std::exp((v + 30.0) / 11.5));
        return {inf, a * b};
    }
    case kXr2: {
        double inf = 1.0 / (1.0 + std::exp((v + 88.0) / 24.0));
        double a = 3.0 / (1.0 + std::exp((-60.0 - v) / 20.0));
        double b = 1.12 / (1.0 + std::exp((v - 60.0) / 20.0));
        return {inf, a * b};
    }
    case kXs: {
        double inf = 1.0 / (1.0 + std::exp((-5.0 - v) / 14.0));
        double a = 1400.0 / std::sqrt(1.0 + std::exp((5.0 - v) / 6.0));
        double b = 1.0 / (1.0 + std::exp((v - 35.0) / 15.0));
        return {inf, a * b + 80.0};
    }
    case kM: {
        double e = 1.0 + std::exp((-56.86 - v) / 9.03);
        double inf = 1.0 / (e * e);
        double a = 1.0 / (1.0 + std::exp((-60.0 - v) / 5.0));
        double b = 0.1 / (1.0 + std::exp((v + 35.0) / 5.0)) +
                   0.1 / (1.0 + std::exp((v - 50.0) / 200.0));
        return {inf, a * b};
    }
    case kH: {
        double e = 1.0 + std::exp((v + 71.55) / 7.43);
        double inf = 1.0 / (e * e);
        double a, b;
        if (v < -40.0) {
            a = 0.057 * std::exp(-(v + 80.0) / 6.8);
            b = 2.7 * std::exp(0.079 * v) + 310000.0 * std::exp(0.3485 * v);
        } else {
            a = 0.0;
            b = 0.77 / (0.13 * (1.0 + std::exp((v + 10.66) / -11.1)));
        }
        return {inf, 1.0 / (a + b)};
    }
    case kJ: {
        double e = 1.0 + std::exp((v + 71.55) / 7.43);
        double inf = 1.0 / (e * e);
        double a, b;
        if (v < -40.0) {
            a = (-25428.0 * std::exp(0.2444 * v) - 6.948e-6 * std::exp(-0.04391 * v)) *
                (v + 37.78) / (1.0 + std::exp(0.311 * (v + 79.23)));
            b = 0.02424 * std::exp(-0.01052 * v) /
                (1.0 + std::exp(-0.1378 * (v + 40.14)));
        } else {
            a = 0.0;
            b = 0.6 * std::exp(0.057 * v) / (1.0 + std::exp(-0.1 * (v + 32.0)));
        }
        return {inf, 1.0 / (a + b)};
    }
    case kD: {
        double inf = 1.0 / (1.0 + std::exp((-8.0 - v) / 7.5));
        double a = 1.4 / (1.0 + std::exp((-35.0 - v) / 13.0)) + 0.25;
        double b = 1.4 / (1.0 + std::exp((v + 5.0) / 5.0));
        double g = 1.0 / (1.0 + std::exp((50.0 - v) / 20.0));
        return {inf, a * b + g};
    }
    case kF: {
        double inf = 1.0 / (1.0 + std::exp((v + 20.0) / 7.0));
        double tau = 1102.5 * std::exp(-(v + 27.0) * (v + 27.0) / 225.0) +
                     200.0 / (1.0 + std::exp((13.0 - v) / 10.0)) +
                     180.0 / (1.0 + std::exp((v + 30.0) / 10.0)) + 20.0;
        return {inf, tau};
    }
    case kF2: {
        double inf = 0.67 / (1.0 + std::exp((v + 35.0) / 7.0)) + 0.33;
        double tau = 562.0 * std::exp(-(v + 27.0) * (v + 27.0) / 240.0) +
                     31.0 / (1.0 + std::exp((25.0 - v) / 10.0)) +
                     80.0 / (1.0 + std::exp((v + 30.0) / 10.0));
        return {inf, tau};
    }
    case kFCass: {
        double r2 = (ca_ss / 0.05) * (ca_ss / 0.05);
        double inf = 0.6 / (1.0 + r2) + 0.4;
        double tau = 80.0 / (1.0 + r2) + 2.0;
        return {inf, tau};
    }
    case kS: {
        double inf = 1.0 / (1.0 + std::exp((v + 20.0) / 5.0));
        double tau = 85.0 * std::exp(-(v + 45.0) * (v + 45.0) / 320.0) +
                     5.0 / (1.0 + std::exp((v - 20.0) / 5.0)) + 3.0;
        return {inf, tau};
    }
    case kR: {
        double inf = 1.0 / (1.0 + std::exp((20.0 - v) / 6.0));
        double tau = 9.5 * std::exp(-(v + 40.0) * (v + 40.0) / 1800.0) + 0.8;
        return {inf, tau};
    }
    default:
        throw std::invalid_argument("gate_curve: bad gate index");
    }
}

double release_scaling(double ca_sr, const IonicParams& p) {
    return p.max_sr - (p.max_sr - p.min_sr) / (1.0 + (p.EC / ca_sr) * (p.EC / ca_sr));
}

} // namespace

bool CellState::valid() const {
    if (!std::isfinite(v) || v < kVmin || v > kVmax) return false;
    for (double g : gates)
        if (!(g >= -1e-12 && g <= 1.0 + 1e-12)) return false;
    for (double c : conc)
        if (!(c > 0.0) || !std::isfinite(c)) return false;
    return true;
}

double nernst_potassium(double k_o, double k_i, double temperature_k) {
    if (!(k_o > 0.0) || !(k_i > 0.0))
        throw std::domain_error("nernst_potassium: concentrations must be positive");
    constexpr double R = 8314.472, F = 96485.3415;
    return R * temperature_k / F * std::log(k_o / k_i);
}

double i_katp(double v, double k_o, double f_atp, double g_katp, double e_k) {
    if (!(k_o > 0.0)) throw std::domain_error("i_katp: K_o must be positive");
    if (f_atp == 0.0 || g_katp == 0.0) return 0.0;
    return g_katp * f_atp * std::pow(k_o / 5.4, 0.3) *
           (1.0 / (40.0 + 3.5 * std::exp(0.025 * v))) * (v - e_k);
}

SacCurrents i_sac(double v, double lambda, double v_na, double v_k, double v_ref,
                  double g_sac, double g_ko) {
    if (!(lambda > 0.0)) throw std::domain_error("i_sac: lambda must be positive");
    double gamma_sl_ko = 3.0 * (lambda - 1.0) + 0.7;
    double gamma_slsac = gamma_sl_ko;
    SacCurrents out;
    out.na = g_sac * gamma_slsac * (v - v_na) * (-(v_ref + 85.0) / (v_ref - 65.0));
    out.k = g_sac * gamma_slsac * (v - v_k);
    out.ko = g_ko * gamma_sl_ko / (1.0 + std::exp(-(10.0 + v) / 45.0)) * (v - v_k);
    return out;
}

CurrentBreakdown ionic_currents(const CellState& s, double lambda, double k_o,
                                double f_atp, const IonicParams& p,
                                const ScenarioFlags& flags) {
    if (!s.valid()) throw std::domain_error("ionic_currents: invalid cell state");
    const double v = s.v;
    const double rtf = p.rtf();
    const double na_i = s.conc[kNai], k_i = s.conc[kKi], ca_i = s.conc[kCai];
    const double ca_ss = s.conc[kCaSS];

    const double e_na = rtf * std::log(p.Na_o / na_i);
    const double e_k = rtf * std::log(k_o / k_i);
    const double e_ks = rtf * std::log((k_o + p.P_kna * p.Na_o) / (k_i + p.P_kna * na_i));
    const double e_ca = 0.5 * rtf * std::log(p.Ca_o / ca_i);
    const double sqrt_ko = std::sqrt(k_o / 5.4);

    CurrentBreakdown c;
    const double m = s.gates[kM], h = s.gates[kH], j = s.gates[kJ];
    c.i_na = p.g_Na * m * m * m * h * j * (v - e_na);
    c.i_bna = p.g_bna * (v - e_na);

    double a_k1 = 0.1 / (1.0 + std::exp(0.06 * (v - e_k - 200.0)));
    double b_k1 = (3.0 * std::exp(0.0002 * (v - e_k + 100.0)) +
                   std::exp(0.1 * (v - e_k - 10.0))) /
                  (1.0 + std::exp(-0.5 * (v - e_k)));
    c.i_k1 = p.g_K1 * (a_k1 / (a_k1 + b_k1)) * sqrt_ko * (v - e_k);
    c.i_to = p.g_to * s.gates[kR] * s.gates[kS] * (v - e_k);
    c.i_kr = p.g_Kr * sqrt_ko * s.gates[kXr1] * s.gates[kXr2] * (v - e_k);
    c.i_ks = p.g_Ks * s.gates[kXs] * s.gates[kXs] * (v - e_ks);

    // L-type calcium; the (v-15)/(exp(z)-1) factor has a removable singularity.
    const double z = 2.0 * (v - 15.0) * p.F / (p.R * p.T);
    const double dfff = s.gates[kD] * s.gates[kF] * s.gates[kF2] * s.gates[kFCass];
    if (std::abs(z) < 1e-7) {
        c.i_cal = p.g_CaL * dfff * 2.0 * p.F * (0.25 * ca_ss - p.Ca_o);
    } else {
        c.i_cal = p.g_CaL * dfff * 4.0 * (v - 15.0) * p.F * p.F / (p.R * p.T) *
                  (0.25 * ca_ss * std::exp(z) - p.Ca_o) / (std::exp(z) - 1.0);
    }

    const double vfrt = v * p.F / (p.R * p.T);
    const double na3 = na_i * na_i * na_i, nao3 = p.Na_o * p.Na_o * p.Na_o;
    c.i_naca = p.K_NaCa *
               (std::exp(p.nc_gamma * vfrt) * na3 * p.Ca_o -
                std::exp((p.nc_gamma - 1.0) * vfrt) * nao3 * ca_i * p.nc_alpha) /
               ((p.Km_Nai * p.Km_Nai * p.Km_Nai + nao3) * (p.Km_Ca + p.Ca_o) *
                (1.0 + p.K_sat * std::exp((p.nc_gamma - 1.0) * vfrt)));
    c.i_nak = p.P_NaK * (k_o / (k_o + p.K_mk)) * (na_i / (na_i + p.K_mNa)) /
              (1.0 + 0.1245 * std::exp(-0.1 * vfrt) + 0.0353 * std::exp(-vfrt));
    c.i_pca = p.g_pCa * ca_i / (ca_i + p.K_pCa);
    c.i_pk = p.g_pK * (v - e_k) / (1.0 + std::exp((25.0 - v) / 5.98));
    c.i_bca = p.g_bca * (v - e_ca);

    c.i_katp = i_katp(v, k_o, f_atp, p.g_katp, e_k);
    if (flags.include_i_sac)
        c.sac = i_sac(v, lambda, e_na, e_k, p.sac_v_ref, p.g_sac, p.g_ko);
    return c;
}

double total_ionic_current(const CellState& s, double lambda, double k_o,
                           double f_atp, const IonicParams& p,
                           const ScenarioFlags& flags) {
    return ionic_currents(s, lambda, k_o, f_atp, p, flags).total();
}

GateRates gate_kinetics(int gate, const CellState& s, const IonicParams& p) {
    if (gate == kRbar) {
        double k2 = p.k2_prime * release_scaling(s.conc[kCaSR], p);
        return {p.k4, k2 * s.conc[kCaSS]};
    }
    GateCurve gc = gate_curve(gate, s.v, s.conc[kCaSS]);
    return {gc.x_inf / gc.tau, (1.0 - gc.x_inf) / gc.tau};
}

void step_gates_implicit(CellState& s, double dt, const IonicParams& p) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_gates_implicit: dt must be > 0");
    for (int g = 0; g < kNumGates; ++g) {
        GateRates r = gate_kinetics(g, s, p);
        s.gates[g] = gate_implicit_update(s.gates[g], r.alpha, r.beta, dt);
    }
}

void step_concentrations_explicit(CellState& s, double dt, const IonicParams& p,
                                  double k_o, double i_app) {
    if (!(dt > 0.0))
        throw std::invalid_argument("step_concentrations_explicit: dt must be > 0");
    CurrentBreakdown c = ionic_currents(s, 1.0, k_o, 0.0, p, ScenarioFlags::s1());

    const double na_i = s.conc[kNai], k_i = s.conc[kKi], ca_i = s.conc[kCai];
    const double ca_sr = s.conc[kCaSR], ca_ss = s.conc[kCaSS];

    const double i_up = p.Vmax_up / (1.0 + (p.K_up * p.K_up) / (ca_i * ca_i));
    const double i_leak = p.V_leak * (ca_sr - ca_i);
    const double i_xfer = p.V_xfer * (ca_ss - ca_i);
    const double kcasr = release_scaling(ca_sr, p);
    const double k1 = p.k1_prime / kcasr;
    const double open = k1 * ca_ss * ca_ss * s.gates[kRbar] /
                        (p.k3 + k1 * ca_ss * ca_ss);
    const double i_rel = p.V_rel * open * (ca_sr - ca_ss);

    const double bufc = 1.0 / (1.0 + p.Buf_c * p.K_buf_c /
                                         ((ca_i + p.K_buf_c) * (ca_i + p.K_buf_c)));
    const double bufsr = 1.0 / (1.0 + p.Buf_sr * p.K_buf_sr /
                                          ((ca_sr + p.K_buf_sr) * (ca_sr + p.K_buf_sr)));
    const double bufss = 1.0 / (1.0 + p.Buf_ss * p.K_buf_ss /
                                          ((ca_ss + p.K_buf_ss) * (ca_ss + p.K_buf_ss)));

    const double cvf = p.Cm / (p.V_c * p.F);
    const double d_na = -(c.i_na + c.i_bna + 3.0 * c.i_nak + 3.0 * c.i_naca) * cvf;
    // The applied stimulus carries potassium, with the sign convention of the
    // reference model (depolarizing stimulus is an inward K+ flux).
    const double d_k = -(c.i_k1 + c.i_to + c.i_kr + c.i_ks + c.i_pk - i_app -
                         2.0 * c.i_nak) * cvf;
    const double d_ca = bufc * ((i_leak - i_up) * p.V_sr / p.V_c + i_xfer -
                                (c.i_bca + c.i_pca - 2.0 * c.i_naca) * cvf / 2.0);
    const double d_casr = bufsr * (i_up - i_leak - i_rel);
    const double d_cass = bufss * (-c.i_cal * p.Cm / (2.0 * p.V_ss * p.F) +
                                   i_rel * p.V_sr / p.V_ss - i_xfer * p.V_c / p.V_ss);

    const double next[kNumConc] = {na_i + dt * d_na, k_i + dt * d_k,
                                   ca_i + dt * d_ca, ca_sr + dt * d_casr,
                                   ca_ss + dt * d_cass};
    for (int i = 0; i < kNumConc; ++i) {
        if (!(next[i] > 0.0))
            throw StepSizeError("concentration driven nonpositive; reduce dt");
        s.conc[i] = next[i];
    }
}

IonicParams IonicParams::from_dataset(const ParameterSet& ds) {
    IonicParams p;
    p.R = ds.get("cell.R");
    p.T = ds.get("cell.T");
    p.F = ds.get("cell.F");
    p.Cm = ds.get("cell.Cm");
    p.V_c = ds.get("cell.V_c");
    p.V_sr = ds.get("cell.V_sr");
    p.V_ss = ds.get("cell.V_ss");
    p.g_Na = ds.get("cell.g_Na");
    p.g_K1 = ds.get("cell.g_K1");
    p.g_Kr = ds.get("cell.g_Kr");
    p.g_Ks = ds.get("cell.g_Ks");
    p.g_CaL = ds.get("cell.g_CaL");
    p.g_to = ds.get("cell.g_to");
    p.g_bna = ds.get("cell.g_bna");
    p.g_bca = ds.get("cell.g_bca");
    p.g_pCa = ds.get("cell.g_pCa");
    p.K_pCa = ds.get("cell.K_pCa");
    p.g_pK = ds.get("cell.g_pK");
    p.P_kna = ds.get("cell.P_kna");
    p.P_NaK = ds.get("cell.P_NaK");
    p.K_mk = ds.get("cell.K_mk");
    p.K_mNa = ds.get("cell.K_mNa");
    p.K_NaCa = ds.get("cell.K_NaCa");
    p.K_sat = ds.get("cell.K_sat");
    p.nc_alpha = ds.get("cell.nc_alpha");
    p.nc_gamma = ds.get("cell.nc_gamma");
    p.Km_Ca = ds.get("cell.Km_Ca");
    p.Km_Nai = ds.get("cell.Km_Nai");
    p.Na_o = ds.get("cell.Na_o");
    p.Ca_o = ds.get("cell.Ca_o");
    p.Buf_c = ds.get("cell.Buf_c");
    p.K_buf_c = ds.get("cell.K_buf_c");
    p.Buf_sr = ds.get("cell.Buf_sr");
    p.K_buf_sr = ds.get("cell.K_buf_sr");
    p.Buf_ss = ds.get("cell.Buf_ss");
    p.K_buf_ss = ds.get("cell.K_buf_ss");
    p.k1_prime = ds.get("cell.k1_prime");
    p.k2_prime = ds.get("cell.k2_prime");
    p.k3 = ds.get("cell.k3");
    p.k4 = ds.get("cell.k4");
    p.EC = ds.get("cell.EC");
    p.max_sr = ds.get("cell.max_sr");
    p.min_sr = ds.get("cell.min_sr");
    p.V_rel = ds.get("cell.V_rel");
    p.V_xfer = ds.get("cell.V_xfer");
    p.K_up = ds.get("cell.K_up");
    p.V_leak = ds.get("cell.V_leak");
    p.Vmax_up = ds.get("cell.Vmax_up");
    p.g_katp = ds.get("cell.g_katp");
    p.g_sac = ds.get("cell.g_sac");
    p.g_ko = ds.get("cell.g_ko");
    p.sac_v_ref = ds.get_or("cell.sac_v_ref", -85.0);
    return p;
}

CellState IonicParams::initial_state(const ParameterSet& ds) {
    CellState s;
    s.v = ds.get("cell.init.v");
    s.gates[kXr1] = ds.get("cell.init.Xr1");
    s.gates[kXr2] = ds.get("cell.init.Xr2");
    s.gates[kXs] = ds.get("cell.init.Xs");
    s.gates[kM] = ds.get("cell.init.m");
    s.gates[kH] = ds.get("cell.init.h");
    s.gates[kJ] = ds.get("cell.init.j");
    s.gates[kD] = ds.get("cell.init.d");
    s.gates[kF] = ds.get("cell.init.f");
    s.gates[kF2] = ds.get("cell.init.f2");
    s.gates[kFCass] = ds.get("cell.init.fCass");
    s.gates[kS] = ds.get("cell.init.s");
    s.gates[kR] = ds.get("cell.init.r");
    s.gates[kRbar] = ds.get("cell.init.Rbar");
    s.conc[kNai] = ds.get("cell.init.Na_i");
    s.conc[kKi] = ds.get("cell.init.K_i");
    s.conc[kCai] = ds.get("cell.init.Ca_i");
    s.conc[kCaSR] = ds.get("cell.init.Ca_SR");
    s.conc[kCaSS] = ds.get("cell.init.Ca_ss");
    return s;
}

void SingleCell::step(double dt, double i_app, double lambda, const ScenarioFlags& flags) {
    step_gates_implicit(state_, dt, p_);
    step_concentrations_explicit(state_, dt, p_, k_o_, i_app);
    double i_ion = total_ionic_current(state_, lambda, k_o_, f_atp_, p_, flags);
    state_.v += dt * (-i_ion + i_app);
}

void SingleCell::relax(double duration_ms, double dt) {
    int n = static_cast<int>(std::llround(duration_ms / dt));
    for (int i = 0; i < n; ++i) step(dt);
}

std::vector<SingleCell::TracePoint> SingleCell::paced_trace(double stim_amplitude,
                                                            double stim_duration,
                                                            double t_end, double dt,
                                                            double sample_every) {
    std::vector<TracePoint> out;
    int n = static_cast<int>(std::llround(t_end / dt));
    int per_sample = std::max(1, static_cast<int>(std::llround(sample_every / dt)));
    out.push_back({0.0, state_.v, state_.ca_i()});
    for (int i = 0; i < n; ++i) {
        double t = i * dt;
        double i_app = (t < stim_duration) ? stim_amplitude : 0.0;
        step(dt, i_app);
        if ((i + 1) % per_sample == 0)
            out.push_back({(i + 1) * dt, state_.v, state_.ca_i()});
    }
    return out;
}

} // namespace cardem
