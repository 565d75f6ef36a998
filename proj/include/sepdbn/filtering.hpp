#pragma once

#include "sepdbn/model.hpp"
#include "sepdbn/prob.hpp"
#include "sepdbn/rng.hpp"

namespace sepdbn {

/// Product-form belief state: one marginal per factor of the model's
/// factorization.
struct FactoredBelief {
    std::vector<Categorical> factors;
};

/// Projects a joint over the state scope onto the factorization.
inline FactoredBelief project(const DbnModel& model, const Categorical& joint) {
    FactoredBelief b;
    for (std::size_t f = 0; f < model.factor_count(); ++f)
        b.factors.push_back(marginalize(joint, model.factor_scope(f)));
    return b;
}

/// Product of the factor marginals, reordered to the state scope.
inline Categorical belief_joint(const DbnModel& model, const FactoredBelief& b) {
    Categorical j = b.factors[0];
    for (std::size_t f = 1; f < b.factors.size(); ++f) j = product(j, b.factors[f]);
    return marginalize(j, model.state_scope());
}

inline FactoredBelief prior_belief(const DbnModel& model) {
    if (model.prior().product_form &&
        model.prior().factor_tables.size() == model.factor_count())
        return {model.prior().factor_tables};
    return project(model, model.prior_joint());
}

/// One exact prediction step: pushes a joint over the state scope through the
/// transition model.
inline Categorical exact_predict_step(const DbnModel& model, const Categorical& cur) {
    std::size_t S = model.n_states();
    std::size_t n = model.state_vars().size();
    std::vector<double> out(S, 0.0);
    std::vector<int> next(n);
    for (std::size_t idx2 = 0; idx2 < S; ++idx2) {
        unflatten(model.state_scope(), idx2, next);
        double acc = 0.0;
        for (std::size_t idx = 0; idx < S; ++idx) {
            double w = cur.at(idx);
            if (w == 0.0) continue;
            double prod = w;
            for (std::size_t v = 0; v < n; ++v) prod *= model.trans_prob(v, idx, next[v]);
            acc += prod;
        }
        out[idx2] = acc;
    }
    return Categorical(model.state_scope(), std::move(out), 1e-9);
}

/// Bayes-conditions a state joint on one value per observation variable.
inline Categorical condition_on_observations(const DbnModel& model, const Categorical& joint,
                                             std::span<const int> obs_vals) {
    if (obs_vals.size() != model.observations().size())
        throw ValidationError("expected one value per observation variable");
    std::vector<double> out(joint.size());
    double norm = 0.0;
    for (std::size_t idx = 0; idx < joint.size(); ++idx) {
        double w = joint.at(idx);
        for (std::size_t k = 0; k < obs_vals.size(); ++k) {
            if (obs_vals[k] < 0 || obs_vals[k] >= model.observations()[k].var.card)
                throw ValidationError("observed value out of range for '" +
                                      model.observations()[k].var.name + "'");
            w *= model.obs_prob(k, idx, obs_vals[k]);
        }
        out[idx] = w;
        norm += w;
    }
    if (!(norm > 0.0))
        throw ZeroNormalizerError("observation sequence has probability zero");
    for (double& v : out) v /= norm;
    return Categorical(model.state_scope(), std::move(out), 1e-9);
}

inline Categorical exact_filter_step(const DbnModel& model, const Categorical& cur,
                                     std::span<const int> obs_vals) {
    return condition_on_observations(model, exact_predict_step(model, cur), obs_vals);
}

/// Factored prediction step: forms the product joint, predicts exactly, and
/// projects back onto the factorization.
inline FactoredBelief bk_predict_step(const DbnModel& model, const FactoredBelief& cur) {
    return project(model, exact_predict_step(model, belief_joint(model, cur)));
}

/// Factored filtering step: the one-step joint is conditioned on the
/// observations before projection.
inline FactoredBelief bk_step(const DbnModel& model, const FactoredBelief& cur,
                              std::span<const int> obs_vals) {
    Categorical pred = exact_predict_step(model, belief_joint(model, cur));
    return project(model, condition_on_observations(model, pred, obs_vals));
}

/// A sampled state and observation sequence. states[t] is a flat index into
/// the state scope; observations[t][k] is the value of observation k at t.
struct Trajectory {
    std::vector<std::size_t> states;
    std::vector<std::vector<int>> observations;
    std::uint64_t seed = 0;
};

inline Trajectory sample_trajectory(const DbnModel& model, std::size_t T, std::uint64_t seed) {
    Rng rng(seed);
    Trajectory traj;
    traj.seed = seed;
    std::size_t n = model.state_vars().size();
    Categorical prior = model.prior_joint();
    std::vector<int> cur(n);
    std::size_t idx = static_cast<std::size_t>(rng.categorical(prior.values()));
    for (std::size_t t = 0; t < T; ++t) {
        if (t > 0) {
            std::size_t prev = traj.states.back();
            for (std::size_t v = 0; v < n; ++v) {
                int card = model.state_vars()[v].card;
                std::vector<double> w(card);
                for (int val = 0; val < card; ++val) w[val] = model.trans_prob(v, prev, val);
                cur[v] = rng.categorical(w);
            }
            idx = flat_index(model.state_scope(), cur);
        }
        traj.states.push_back(idx);
        std::vector<int> obs(model.observations().size());
        for (std::size_t k = 0; k < obs.size(); ++k) {
            int card = model.observations()[k].var.card;
            std::vector<double> w(card);
            for (int val = 0; val < card; ++val) w[val] = model.obs_prob(k, idx, val);
            obs[k] = rng.categorical(w);
        }
        traj.observations.push_back(std::move(obs));
    }
    return traj;
}

enum class Task { Prediction, Monitoring };

/// Probability that the first variable of the first factor takes its highest
/// value, used as a scalar summary of a belief state.
inline double designated_prob(const DbnModel& model, const Categorical& joint) {
    const std::string& name = model.factorization().factors[0][0];
    Categorical m = marginalize(joint, std::vector<std::string>{name});
    return m.at(m.size() - 1);
}

struct StepErrors {
    std::size_t step = 0;
    double kl_joint = 0.0;              // KL(exact joint || product of factored marginals)
    std::vector<double> factor_kl;      // KL per factor marginal
    double designated_abs = 0.0;        // absolute error on the designated probability
    double dep_exact = 0.0;             // Linf(exact joint, product of its own marginals)
    double dep_approx = 0.0;            // Linf(exact joint, factored product)
    double kl_dep_exact = 0.0;          // KL(exact joint || product of its own marginals)
};

struct ComparisonResult {
    std::vector<StepErrors> steps;  // steps 1..T-1

    double mean(double StepErrors::* field) const {
        if (steps.empty()) return 0.0;
        double s = 0.0;
        for (const auto& e : steps) s += e.*field;
        return s / static_cast<double>(steps.size());
    }
    double max_kl_joint() const {
        double m = 0.0;
        for (const auto& e : steps) m = std::max(m, e.kl_joint);
        return m;
    }
};

/// Runs exact and factored inference side by side over a trajectory and
/// records the divergence at every step after the first.
inline ComparisonResult run_comparison(const DbnModel& model, const Trajectory& traj, Task task) {
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t f = 0; f < model.factor_count(); ++f) groups.push_back(model.factor_positions(f));

    Categorical exact = model.prior_joint();
    FactoredBelief approx = prior_belief(model);
    ComparisonResult out;
    for (std::size_t t = 1; t < traj.states.size(); ++t) {
        if (task == Task::Monitoring) {
            exact = exact_filter_step(model, exact, traj.observations[t]);
            approx = bk_step(model, approx, traj.observations[t]);
        } else {
            exact = exact_predict_step(model, exact);
            approx = bk_predict_step(model, approx);
        }
        Categorical ap = belief_joint(model, approx);

        StepErrors e;
        e.step = t;
        e.kl_joint = kl(exact, ap);
        for (std::size_t f = 0; f < model.factor_count(); ++f)
            e.factor_kl.push_back(kl(marginalize(exact, model.factor_scope(f)), approx.factors[f]));
        e.designated_abs = std::abs(designated_prob(model, exact) - designated_prob(model, ap));
        SignedTable dep = dependence(exact, groups);
        for (double v : dep.values) e.dep_exact = std::max(e.dep_exact, std::abs(v));
        e.dep_approx = linf(exact, ap);
        {
            Categorical self_prod = exact;
            {
                FactoredBelief own = project(model, exact);
                self_prod = belief_joint(model, own);
            }
            e.kl_dep_exact = kl(exact, self_prod);
        }
        out.steps.push_back(std::move(e));
    }
    return out;
}

}  // namespace sepdbn
