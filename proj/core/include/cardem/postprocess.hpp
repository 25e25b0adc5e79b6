#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "cardem/mesh.hpp"

namespace cardem {

// Uniformly sampled time series recorded at a probe point.
struct ProbeSeries {
    std::string name;
    Vec2 position = Vec2::Zero();
    bool inside_ischemic = false;
    std::vector<double> t;      // ms
    std::vector<double> v;      // mV
    std::vector<double> ca;     // mM
    std::vector<double> ta;     // kPa
    std::vector<double> lambda; // -
    std::vector<double> lambda_rate; // 1/ms
};

// First upward crossing of the threshold before the global maximum of the
// trace (the upstroke phase), linearly interpolated. nullopt if none.
std::optional<double> activation_time(const std::vector<double>& t,
                                      const std::vector<double>& v,
                                      double threshold = -50.0);

// First downward crossing of frac*v_rest after the global maximum,
// linearly interpolated. nullopt if the trace never repolarizes that far.
std::optional<double> repolarization_time(const std::vector<double>& t,
                                          const std::vector<double>& v,
                                          double v_rest, double frac = 0.9);

struct ProbeSummary {
    std::string probe;
    double rp = 0.0; // resting potential = first sample
    std::optional<double> at, rt, apd;
    double lambda_min = 1.0, lambda_max = 1.0;
    double max_abs_lambda_rate = 0.0;
    double peak_stretch_deviation() const {
        return std::max(std::abs(lambda_min - 1.0), std::abs(lambda_max - 1.0));
    }
};

// Probe statistics. The repolarization threshold uses the probe's own
// resting potential so that APD stays defined inside severely ischemic
// tissue, where rest sits far above the healthy value.
ProbeSummary summarize_probe(const ProbeSeries& s, double at_threshold = -50.0,
                             double rt_fraction = 0.9);

// Nodal activation/repolarization/duration maps. NaN marks nodes that never
// activated (or never repolarized); where defined, rt > at and apd = rt - at.
struct IsochroneMap {
    Eigen::VectorXd at, rt, apd;
    int never_activated = 0;
    int never_repolarized = 0;
};

// history is nodes x samples. The repolarization threshold here uses the
// configured uniform resting potential so maps stay comparable across
// severities; never-crossing nodes get the sentinel.
IsochroneMap compute_isochrones(const std::vector<double>& sample_times,
                                const Eigen::MatrixXd& history,
                                double at_threshold = -50.0, double v_rest = -85.0,
                                double rt_fraction = 0.9);

// One row of the cross-run comparison table.
struct ComparisonRow {
    std::string run_label;
    std::string probe;
    ProbeSummary summary;
    // percent deltas vs the baseline run (same probe); NaN when undefined
    double d_apd_pct = 0.0, d_rp_pct = 0.0, d_at_pct = 0.0, d_rt_pct = 0.0;
    double d_stretch_pct = 0.0, d_lambda_rate_pct = 0.0;
};

std::vector<ComparisonRow> summarize_runs(
    const std::vector<std::pair<std::string, const std::vector<ProbeSeries>*>>& runs,
    int baseline_index, double at_threshold = -50.0, double rt_fraction = 0.9);

// Sup-norm deviation between two traces normalized by the amplitude of the
// reference, after aligning each trace at its own activation time. The
// alignment isolates waveform differences from conduction-timing shifts,
// which a pointwise equal-time comparison of a propagating upstroke cannot
// distinguish. Falls back to unaligned comparison when either trace lacks an
// activation time.
double trace_deviation(const std::vector<double>& t_ref, const std::vector<double>& v_ref,
                       const std::vector<double>& t_cmp, const std::vector<double>& v_cmp,
                       bool align_at_activation = true);

} // namespace cardem
