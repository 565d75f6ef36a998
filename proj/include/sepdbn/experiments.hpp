#pragma once

#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "sepdbn/error_analysis.hpp"
#include "sepdbn/filtering.hpp"
#include "sepdbn/generators.hpp"

namespace sepdbn {

struct ExperimentConfig {
    std::size_t runs = 1000;
    std::size_t steps = 25;
    std::vector<double> alpha_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::uint64_t master_seed = 0;
    double obs_acc_lo = 0.6;
    double obs_acc_hi = 0.95;
    std::size_t sequences = 200;  // observation sequences per system (bound experiment)
    TypoReading typo_reading = TypoReading::AsPrinted;
    unsigned jobs = 1;

    void validate() const {
        if (runs < 1 || steps < 1) throw ValidationError("runs and steps must be at least 1");
        for (double a : alpha_grid)
            if (a < 0.0 || a > 1.0) throw ValidationError("alpha grid values must lie in [0, 1]");
    }
};

/// One CSV record. alpha = -1 marks experiments without an alpha grid;
/// run = -1 and step = -1 mark aggregate rows (means over runs).
struct ResultRow {
    std::string experiment;
    double alpha = -1.0;
    long run = -1;
    long step = -1;
    std::string metric;
    double value = 0.0;
    long incidents = 0;
};

inline void write_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
    os << "experiment,alpha,run,step,metric,value,incidents\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g", r.value);
        os << r.experiment << ',';
        char abuf[32];
        std::snprintf(abuf, sizeof abuf, "%g", r.alpha);
        os << abuf << ',' << r.run << ',' << r.step << ',' << r.metric << ',' << buf << ','
           << r.incidents << '\n';
    }
}

inline std::string csv_string(const std::vector<ResultRow>& rows) {
    std::ostringstream ss;
    write_csv(rows, ss);
    return ss.str();
}

/// Value of an aggregate row (run = -1), or NaN if absent.
inline double aggregate_value(const std::vector<ResultRow>& rows, const std::string& metric,
                              double alpha = -1.0) {
    for (const auto& r : rows)
        if (r.run == -1 && r.metric == metric && std::abs(r.alpha - alpha) < 1e-12) return r.value;
    return std::numeric_limits<double>::quiet_NaN();
}

inline double spearman_rho(std::vector<double> x, std::vector<double> y) {
    auto ranks = [](std::vector<double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    auto rx = ranks(std::move(x)), ry = ranks(std::move(y));
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    double den = std::sqrt(dx * dy);
    return den > 0 ? num / den : 0.0;
}

namespace detail {

/// Runs fn(r) for r in [0, n) across the requested number of threads. Each
/// call writes only to its own preallocated slot, so the schedule cannot
/// affect the output.
template <class Fn>
inline void parallel_runs(std::size_t n, unsigned jobs, Fn fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t r = 0; r < n; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t nt = std::min<std::size_t>(jobs, n);
    for (std::size_t t = 0; t < nt; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t r = t; r < n; r += nt) fn(r);
        });
    for (auto& th : pool) th.join();
}

inline void append_aggregates(std::vector<ResultRow>& rows,
                              const std::vector<std::vector<ResultRow>>& per_run,
                              const std::string& experiment, double alpha) {
    // aggregate = arithmetic mean of the per-run rows, metric by metric
    std::vector<std::string> order;
    std::map<std::string, std::pair<double, long>> acc;
    for (const auto& rr : per_run)
        for (const auto& r : rr) {
            if (acc.find(r.metric) == acc.end()) order.push_back(r.metric);
            auto& a = acc[r.metric];
            a.first += r.value;
            a.second += r.incidents;
        }
    for (const auto& rr : per_run) rows.insert(rows.end(), rr.begin(), rr.end());
    for (const auto& m : order)
        rows.push_back({experiment, alpha, -1, -1, m,
                        acc[m].first / static_cast<double>(per_run.size()), acc[m].second});
}

}  // namespace detail

/// Propagation and monitoring error of factored filtering on random
/// two-chain models, swept over the degree of separability, plus the
/// dependence remaining in the exact posterior.
inline std::vector<ResultRow> fig1_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<ResultRow> rows;
    Figure1Config gen{cfg.obs_acc_lo, cfg.obs_acc_hi};
    for (std::size_t ai = 0; ai < cfg.alpha_grid.size(); ++ai) {
        double alpha = cfg.alpha_grid[ai];
        std::vector<std::vector<ResultRow>> per_run(cfg.runs);
        detail::parallel_runs(cfg.runs, cfg.jobs, [&](std::size_t r) {
            DbnModel model = generate_figure1_model(
                alpha, derive_seed(cfg.master_seed, {1, ai, r, 0}), gen);
            Trajectory traj =
                sample_trajectory(model, cfg.steps, derive_seed(cfg.master_seed, {1, ai, r, 1}));
            ComparisonResult pred = run_comparison(model, traj, Task::Prediction);
            ComparisonResult mon = run_comparison(model, traj, Task::Monitoring);
            auto fx = [](const ComparisonResult& c, bool final_only) {
                if (c.steps.empty()) return 0.0;
                if (final_only) return c.steps.back().factor_kl[0];
                double s = 0.0;
                for (const auto& e : c.steps) s += e.factor_kl[0];
                return s / static_cast<double>(c.steps.size());
            };
            long run = static_cast<long>(r);
            auto& out = per_run[r];
            out.push_back({"fig1", alpha, run, -1, "pred_kl_timeavg", fx(pred, false), 0});
            out.push_back({"fig1", alpha, run, -1, "pred_kl_final", fx(pred, true), 0});
            out.push_back({"fig1", alpha, run, -1, "mon_kl_timeavg", fx(mon, false), 0});
            out.push_back({"fig1", alpha, run, -1, "mon_kl_final", fx(mon, true), 0});
            out.push_back(
                {"fig1", alpha, run, -1, "dep_kl_timeavg", mon.mean(&StepErrors::kl_dep_exact), 0});
        });
        detail::append_aggregates(rows, per_run, "fig1", alpha);
    }
    return rows;
}

/// Error decomposition sweep: total factored-filtering error next to the
/// isolated propagation-only (Type A) and conditioning-only (Type B) errors.
inline std::vector<ResultRow> fig4_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<ResultRow> rows;
    Figure1Config gen{cfg.obs_acc_lo, cfg.obs_acc_hi};
    for (std::size_t ai = 0; ai < cfg.alpha_grid.size(); ++ai) {
        double alpha = cfg.alpha_grid[ai];
        std::vector<std::vector<ResultRow>> per_run(cfg.runs);
        detail::parallel_runs(cfg.runs, cfg.jobs, [&](std::size_t r) {
            DbnModel model = generate_figure1_model(
                alpha, derive_seed(cfg.master_seed, {2, ai, r, 0}), gen);
            Trajectory traj =
                sample_trajectory(model, cfg.steps, derive_seed(cfg.master_seed, {2, ai, r, 1}));
            DecompositionResult dec = run_error_decomposition(model, traj);
            long run = static_cast<long>(r);
            long inc = static_cast<long>(dec.negativity.incidents);
            auto& out = per_run[r];
            out.push_back(
                {"fig4", alpha, run, -1, "total_kl_timeavg", dec.mean(&DecompositionStep::kl_total), inc});
            out.push_back(
                {"fig4", alpha, run, -1, "type_a_kl_timeavg", dec.mean(&DecompositionStep::kl_type_a), inc});
            out.push_back(
                {"fig4", alpha, run, -1, "type_b_kl_timeavg", dec.mean(&DecompositionStep::kl_type_b), inc});
        });
        detail::append_aggregates(rows, per_run, "fig4", alpha);
    }
    return rows;
}

/// Monitoring error on the six-node model under its two candidate
/// factorizations, measured on U's marginal.
inline std::vector<ResultRow> ex41_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    DbnModel pair_model = generate_example41_model(example41_pair_factorization());
    DbnModel obvious_model = generate_example41_model(example41_obvious_factorization());

    std::vector<ResultRow> rows;
    std::vector<std::vector<ResultRow>> per_run(cfg.runs);
    detail::parallel_runs(cfg.runs, cfg.jobs, [&](std::size_t r) {
        Trajectory traj =
            sample_trajectory(pair_model, cfg.steps, derive_seed(cfg.master_seed, {3, 0, r}));
        Categorical exact = pair_model.prior_joint();
        FactoredBelief bp = prior_belief(pair_model);
        FactoredBelief bo = prior_belief(obvious_model);
        double abs_p = 0, abs_o = 0, kl_p = 0, kl_o = 0;
        std::size_t n = 0;
        for (std::size_t t = 1; t < traj.states.size(); ++t) {
            const auto& obs = traj.observations[t];
            exact = exact_filter_step(pair_model, exact, obs);
            bp = bk_step(pair_model, bp, obs);
            bo = bk_step(obvious_model, bo, obs);
            Categorical u_true = marginalize(exact, std::vector<std::string>{"U"});
            Categorical u_pair =
                marginalize(belief_joint(pair_model, bp), std::vector<std::string>{"U"});
            Categorical u_obv =
                marginalize(belief_joint(obvious_model, bo), std::vector<std::string>{"U"});
            abs_p += std::abs(u_true.at(1) - u_pair.at(1));
            abs_o += std::abs(u_true.at(1) - u_obv.at(1));
            kl_p += kl(u_true, u_pair);
            kl_o += kl(u_true, u_obv);
            ++n;
        }
        double dn = static_cast<double>(std::max<std::size_t>(n, 1));
        long run = static_cast<long>(r);
        auto& out = per_run[r];
        out.push_back({"ex41", -1.0, run, -1, "pair_abs_timeavg", abs_p / dn, 0});
        out.push_back({"ex41", -1.0, run, -1, "obvious_abs_timeavg", abs_o / dn, 0});
        out.push_back({"ex41", -1.0, run, -1, "pair_kl_timeavg", kl_p / dn, 0});
        out.push_back({"ex41", -1.0, run, -1, "obvious_kl_timeavg", kl_o / dn, 0});
    });
    detail::append_aggregates(rows, per_run, "ex41", -1.0);
    return rows;
}

/// Monte-Carlo expected marginal error of factored monitoring on one
/// two-chain system: per-time mean and standard error over sampled
/// observation sequences.
struct McErrors {
    std::vector<double> mean;    // E[delta_X](t), t = 1..T-1
    std::vector<double> stderr_; // standard error of each mean
    double max_mean() const { return mean.empty() ? 0.0 : *std::max_element(mean.begin(), mean.end()); }
    double time_averaged_mean() const {
        if (mean.empty()) return 0.0;
        double s = 0.0;
        for (double v : mean) s += v;
        return s / static_cast<double>(mean.size());
    }
};

inline McErrors mc_expected_delta_x(const DbnModel& model, std::size_t sequences, std::size_t T,
                                    std::uint64_t seed) {
    std::size_t n = T > 0 ? T - 1 : 0;
    std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
    for (std::size_t s = 0; s < sequences; ++s) {
        Trajectory traj = sample_trajectory(model, T, derive_seed(seed, {s}));
        Categorical exact = model.prior_joint();
        FactoredBelief approx = prior_belief(model);
        for (std::size_t t = 1; t < T; ++t) {
            exact = exact_filter_step(model, exact, traj.observations[t]);
            approx = bk_step(model, approx, traj.observations[t]);
            double d = linf(marginalize(exact, model.factor_scope(0)), approx.factors[0]);
            sum[t - 1] += d;
            sumsq[t - 1] += d * d;
        }
    }
    McErrors out;
    double ns = static_cast<double>(sequences);
    for (std::size_t t = 0; t < n; ++t) {
        double m = sum[t] / ns;
        out.mean.push_back(m);
        double var = std::max(0.0, sumsq[t] / ns - m * m);
        out.stderr_.push_back(std::sqrt(var / ns));
    }
    return out;
}

/// Bound-versus-actual comparison over random two-chain systems: the
/// steady-state bound on E[delta_X] under both readings of the printed
/// formulas, against the Monte-Carlo actual error.
inline std::vector<ResultRow> thm61_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<ResultRow> rows;
    std::vector<std::vector<ResultRow>> per_run(cfg.runs);
    detail::parallel_runs(cfg.runs, cfg.jobs, [&](std::size_t r) {
        TwoChainSystem sys = generate_two_chain_system(derive_seed(cfg.master_seed, {4, 0, r, 0}));
        Theorem61Bound bp = theorem61_bound(sys, TypoReading::AsPrinted);
        Theorem61Bound bs = theorem61_bound(sys, TypoReading::Symmetric);
        long run = static_cast<long>(r);
        auto& out = per_run[r];
        out.push_back({"thm61", -1.0, run, -1, "applicable", bp.applicable && bs.applicable ? 1.0 : 0.0, 0});
        if (!bp.applicable || !bs.applicable) return;
        DbnModel model = induced_model(sys);
        McErrors mc = mc_expected_delta_x(model, cfg.sequences, cfg.steps,
                                          derive_seed(cfg.master_seed, {4, 0, r, 1}));
        // The theorem claims a per-time-point bound, but the printed formulas
        // are transiently exceeded around t = 2 by a few percent of systems
        // (confirmed by exact enumeration, see the dominance diagnostics).
        // The paper's bound-versus-actual comparison is between averages, so
        // the headline "actual" is the time-averaged expected error; the
        // max-over-time value is reported alongside.
        double actual = mc.time_averaged_mean();
        double actual_max = mc.max_mean();
        out.push_back({"thm61", -1.0, run, -1, "bound_j_asprinted", bp.J, 0});
        out.push_back({"thm61", -1.0, run, -1, "bound_j_symmetric", bs.J, 0});
        out.push_back({"thm61", -1.0, run, -1, "actual_delta_x", actual, 0});
        out.push_back({"thm61", -1.0, run, -1, "actual_delta_x_max", actual_max, 0});
        out.push_back({"thm61", -1.0, run, -1, "dominated_asprinted", bp.J >= actual ? 1.0 : 0.0, 0});
        out.push_back({"thm61", -1.0, run, -1, "dominated_symmetric", bs.J >= actual ? 1.0 : 0.0, 0});
        out.push_back({"thm61", -1.0, run, -1, "dominated_either",
                       (bp.J >= actual || bs.J >= actual) ? 1.0 : 0.0, 0});
        out.push_back({"thm61", -1.0, run, -1, "dominated_asprinted_max", bp.J >= actual_max ? 1.0 : 0.0, 0});
        out.push_back({"thm61", -1.0, run, -1, "dominated_symmetric_max", bs.J >= actual_max ? 1.0 : 0.0, 0});
    });
    // means over applicable systems only (except the applicability rate itself)
    std::size_t applicable = 0;
    for (const auto& rr : per_run)
        if (!rr.empty() && rr[0].value > 0.5) ++applicable;
    std::vector<std::string> order;
    std::map<std::string, double> acc;
    for (const auto& rr : per_run)
        for (const auto& r : rr) {
            if (acc.find(r.metric) == acc.end()) order.push_back(r.metric);
            acc[r.metric] += r.value;
        }
    for (const auto& rr : per_run) rows.insert(rows.end(), rr.begin(), rr.end());
    for (const auto& m : order) {
        double den = m == "applicable" ? static_cast<double>(cfg.runs)
                                       : static_cast<double>(std::max<std::size_t>(applicable, 1));
        rows.push_back({"thm61", -1.0, -1, -1, m, acc[m] / den, 0});
    }
    return rows;
}

inline std::vector<ResultRow> run_experiment(const std::string& name, const ExperimentConfig& cfg) {
    if (name == "fig1") return fig1_experiment(cfg);
    if (name == "fig4") return fig4_experiment(cfg);
    if (name == "ex41") return ex41_experiment(cfg);
    if (name == "thm61") return thm61_experiment(cfg);
    throw ValidationError("unknown experiment '" + name + "'");
}

}  // namespace sepdbn
