#include "cardem/tension.hpp"

#include <cmath>
#include <stdexcept>

namespace cardem {

namespace {

double hill_activation(double ca_i, double lambda, const TensionParams& p) {
    double ca50_eff = p.ca_50 * (1.0 + p.beta * (lambda - 1.0));
    if (!(ca50_eff > 0.0))
        throw std::domain_error("tension: stretch-scaled ca_50 is nonpositive");
    return std::pow(ca_i / ca50_eff, p.n_trpn);
}

// Crossbridge permissivity; floored to keep the decay term finite at trpn = 0.
double permissivity(double trpn, const TensionParams& p) {
    double perm = p.trpn_50 * std::pow(trpn, p.n_xb);
    return perm > 1e-12 ? perm : 1e-12;
}

} // namespace

double g_of_q(double q, double a) {
    if (!(std::abs(q) < 1.0))
        throw std::domain_error("g_of_q: |q| >= 1 (distortion blow-up)");
    if (q <= 0.0) return (a * q + 1.0) / (1.0 - q);
    return (1.0 + (a + 2.0) * q) / (1.0 + q);
}

TensionRates tension_rhs(const TensionState& s, double ca_i, double lambda,
                         double dlambda_dt, const TensionParams& p) {
    if (!(ca_i > 0.0)) throw std::domain_error("tension_rhs: ca_i must be positive");
    if (!(lambda > 0.0)) throw std::domain_error("tension_rhs: lambda must be positive");
    TensionRates r;
    double hill = hill_activation(ca_i, lambda, p);
    r.d_trpn = p.k_trpn * (hill * (1.0 - s.trpn) - s.trpn);
    double perm = permissivity(s.trpn, p);
    r.d_xb = p.k_xb * (perm * (1.0 - s.xb) - s.xb / perm);
    r.d_q1 = p.a1 * dlambda_dt - p.alpha1 * s.q1;
    r.d_q2 = p.a2 * dlambda_dt - p.alpha2 * s.q2;
    return r;
}

TensionState step_tension(const TensionState& s, double dt, double ca_i,
                          double lambda, double dlambda_dt,
                          const TensionParams& p) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_tension: dt must be > 0");
    if (!(ca_i > 0.0)) throw std::domain_error("step_tension: ca_i must be positive");
    if (!(lambda > 0.0)) throw std::domain_error("step_tension: lambda must be positive");

    TensionState n;
    double hill = hill_activation(ca_i, lambda, p);
    n.trpn = (s.trpn + dt * p.k_trpn * hill) / (1.0 + dt * p.k_trpn * (hill + 1.0));
    double perm = permissivity(n.trpn, p);
    n.xb = (s.xb + dt * p.k_xb * perm) /
           (1.0 + dt * p.k_xb * (perm + 1.0 / perm));
    n.q1 = (s.q1 + dt * p.a1 * dlambda_dt) / (1.0 + dt * p.alpha1);
    n.q2 = (s.q2 + dt * p.a2 * dlambda_dt) / (1.0 + dt * p.alpha2);
    return n;
}

double active_tension_value(const TensionState& s, double lambda,
                            const TensionParams& p) {
    return p.t_ref * g_of_q(s.q(), p.a) * stretch_gain(lambda, p.beta_h) * s.xb;
}

TensionParams TensionParams::from_dataset(const ParameterSet& ds) {
    TensionParams p;
    p.k_trpn = ds.get("tension.k_trpn");
    p.ca_50 = ds.get("tension.ca_50");
    p.beta = ds.get("tension.beta");
    p.n_trpn = ds.get("tension.n_trpn");
    p.k_xb = ds.get("tension.k_xb");
    p.trpn_50 = ds.get("tension.trpn_50");
    p.n_xb = ds.get("tension.n_xb");
    p.a1 = ds.get("tension.a1");
    p.a2 = ds.get("tension.a2");
    p.alpha1 = ds.get("tension.alpha1");
    p.alpha2 = ds.get("tension.alpha2");
    p.a = ds.get("tension.a");
    p.t_ref = ds.get("tension.t_ref");
    p.beta_h = ds.get("tension.beta_h");
    return p;
}

} // namespace cardem
