#include "cardem/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cardem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double interp_crossing(double t0, double v0, double t1, double v1, double thr) {
    return t0 + (thr - v0) / (v1 - v0) * (t1 - t0);
}

size_t argmax(const std::vector<double>& v) {
    return std::distance(v.begin(), std::max_element(v.begin(), v.end()));
}

double pct_delta(double value, double base) {
    if (!std::isfinite(value) || !std::isfinite(base) || base == 0.0) return kNaN;
    return 100.0 * (value - base) / std::abs(base);
}

double opt_or_nan(const std::optional<double>& o) { return o ? *o : kNaN; }

} // namespace

std::optional<double> activation_time(const std::vector<double>& t,
                                      const std::vector<double>& v, double threshold) {
    if (t.size() != v.size() || t.size() < 2)
        throw std::invalid_argument("activation_time: bad trace");
    size_t ipk = argmax(v);
    for (size_t i = 1; i <= ipk; ++i)
        if (v[i - 1] < threshold && v[i] >= threshold)
            return interp_crossing(t[i - 1], v[i - 1], t[i], v[i], threshold);
    return std::nullopt;
}

std::optional<double> repolarization_time(const std::vector<double>& t,
                                          const std::vector<double>& v, double v_rest,
                                          double frac) {
    if (t.size() != v.size() || t.size() < 2)
        throw std::invalid_argument("repolarization_time: bad trace");
    const double thr = frac * v_rest;
    size_t ipk = argmax(v);
    for (size_t i = ipk + 1; i < v.size(); ++i)
        if (v[i - 1] > thr && v[i] <= thr)
            return interp_crossing(t[i - 1], v[i - 1], t[i], v[i], thr);
    return std::nullopt;
}

ProbeSummary summarize_probe(const ProbeSeries& s, double at_threshold,
                             double rt_fraction) {
    if (s.t.empty()) throw std::invalid_argument("summarize_probe: empty series");
    ProbeSummary out;
    out.probe = s.name;
    out.rp = s.v.front();
    out.at = activation_time(s.t, s.v, at_threshold);
    if (out.at) {
        out.rt = repolarization_time(s.t, s.v, out.rp, rt_fraction);
        if (out.rt) out.apd = *out.rt - *out.at;
    }
    if (!s.lambda.empty()) {
        out.lambda_min = *std::min_element(s.lambda.begin(), s.lambda.end());
        out.lambda_max = *std::max_element(s.lambda.begin(), s.lambda.end());
    }
    for (double r : s.lambda_rate)
        out.max_abs_lambda_rate = std::max(out.max_abs_lambda_rate, std::abs(r));
    return out;
}

IsochroneMap compute_isochrones(const std::vector<double>& sample_times,
                                const Eigen::MatrixXd& history, double at_threshold,
                                double v_rest, double rt_fraction) {
    const int n_nodes = static_cast<int>(history.rows());
    if (history.cols() != static_cast<Eigen::Index>(sample_times.size()))
        throw std::invalid_argument("compute_isochrones: history/time size mismatch");
    IsochroneMap map;
    map.at = Eigen::VectorXd::Constant(n_nodes, kNaN);
    map.rt = Eigen::VectorXd::Constant(n_nodes, kNaN);
    map.apd = Eigen::VectorXd::Constant(n_nodes, kNaN);
    std::vector<double> v(sample_times.size());
    for (int k = 0; k < n_nodes; ++k) {
        for (size_t i = 0; i < sample_times.size(); ++i) v[i] = history(k, i);
        auto at = activation_time(sample_times, v, at_threshold);
        if (!at) {
            ++map.never_activated;
            continue;
        }
        map.at[k] = *at;
        auto rt = repolarization_time(sample_times, v, v_rest, rt_fraction);
        if (!rt) {
            ++map.never_repolarized;
            continue;
        }
        map.rt[k] = *rt;
        map.apd[k] = *rt - *at;
    }
    return map;
}

std::vector<ComparisonRow> summarize_runs(
    const std::vector<std::pair<std::string, const std::vector<ProbeSeries>*>>& runs,
    int baseline_index, double at_threshold, double rt_fraction) {
    if (runs.empty() || baseline_index < 0 ||
        baseline_index >= static_cast<int>(runs.size()))
        throw std::invalid_argument("summarize_runs: bad baseline index");

    const auto& base_series = *runs[baseline_index].second;
    std::vector<ComparisonRow> rows;
    for (const auto& [label, seriesp] : runs) {
        for (const auto& s : *seriesp) {
            ComparisonRow row;
            row.run_label = label;
            row.probe = s.name;
            row.summary = summarize_probe(s, at_threshold, rt_fraction);
            auto base_it =
                std::find_if(base_series.begin(), base_series.end(),
                             [&](const ProbeSeries& b) { return b.name == s.name; });
            if (base_it != base_series.end()) {
                ProbeSummary base = summarize_probe(*base_it, at_threshold, rt_fraction);
                row.d_apd_pct = pct_delta(opt_or_nan(row.summary.apd), opt_or_nan(base.apd));
                row.d_rp_pct = pct_delta(row.summary.rp, base.rp);
                row.d_at_pct = pct_delta(opt_or_nan(row.summary.at), opt_or_nan(base.at));
                row.d_rt_pct = pct_delta(opt_or_nan(row.summary.rt), opt_or_nan(base.rt));
                row.d_stretch_pct = pct_delta(row.summary.peak_stretch_deviation(),
                                              base.peak_stretch_deviation());
                row.d_lambda_rate_pct = pct_delta(row.summary.max_abs_lambda_rate,
                                                  base.max_abs_lambda_rate);
            } else {
                row.d_apd_pct = row.d_rp_pct = row.d_at_pct = row.d_rt_pct = kNaN;
                row.d_stretch_pct = row.d_lambda_rate_pct = kNaN;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

namespace {

double interp_at(const std::vector<double>& t, const std::vector<double>& v, double tau) {
    if (tau <= t.front()) return v.front();
    if (tau >= t.back()) return v.back();
    auto it = std::upper_bound(t.begin(), t.end(), tau);
    size_t i = std::distance(t.begin(), it);
    double w = (tau - t[i - 1]) / (t[i] - t[i - 1]);
    return v[i - 1] + w * (v[i] - v[i - 1]);
}

} // namespace

double trace_deviation(const std::vector<double>& t_ref, const std::vector<double>& v_ref,
                       const std::vector<double>& t_cmp, const std::vector<double>& v_cmp,
                       bool align_at_activation) {
    if (t_ref.size() < 2 || t_cmp.size() < 2)
        throw std::invalid_argument("trace_deviation: traces too short");
    double shift_ref = 0.0, shift_cmp = 0.0;
    if (align_at_activation) {
        auto at_ref = activation_time(t_ref, v_ref);
        auto at_cmp = activation_time(t_cmp, v_cmp);
        if (at_ref && at_cmp) {
            shift_ref = *at_ref;
            shift_cmp = *at_cmp;
        }
    }
    const double amp = *std::max_element(v_ref.begin(), v_ref.end()) -
                       *std::min_element(v_ref.begin(), v_ref.end());
    if (!(amp > 0.0)) throw std::invalid_argument("trace_deviation: flat reference");

    const double lo = std::max(t_ref.front() - shift_ref, t_cmp.front() - shift_cmp);
    const double hi = std::min(t_ref.back() - shift_ref, t_cmp.back() - shift_cmp);
    if (!(hi > lo)) throw std::invalid_argument("trace_deviation: no overlap");

    const int n = 4096;
    double worst = 0.0;
    for (int i = 0; i <= n; ++i) {
        double tau = lo + (hi - lo) * i / n;
        double a = interp_at(t_ref, v_ref, tau + shift_ref);
        double b = interp_at(t_cmp, v_cmp, tau + shift_cmp);
        worst = std::max(worst, std::abs(a - b));
    }
    return worst / amp;
}

} // namespace cardem
