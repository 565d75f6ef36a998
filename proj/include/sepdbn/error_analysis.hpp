#pragma once

#include "sepdbn/filtering.hpp"
#include "sepdbn/generators.hpp"

namespace sepdbn {

/// The printed form of the zeta-Y coefficient repeats a factor where the
/// mirror-image of the zeta-X expression would use a different one; both
/// readings are supported.
enum class TypoReading { AsPrinted, Symmetric };

struct BoundQuantities {
    double lambda_x_x = 0, lambda_x_y = 0, lambda_y_x = 0, lambda_y_y = 0;
    double lambda_z = 0;
    double lambda_xy_x = 0, lambda_xy_y = 0;
    double zeta_x = 0, zeta_y = 0;
    double L = 0, M = 0, N = 0, O = 0, P = 0;
};

inline BoundQuantities bound_quantities(const TwoChainSystem& sys,
                                        TypoReading reading = TypoReading::AsPrinted) {
    BoundQuantities q;
    auto lam = [](const Cpd& c) { return std::abs(c.at(1, 1) - c.at(0, 1)); };
    q.lambda_x_x = lam(sys.p_x_x);
    q.lambda_x_y = lam(sys.p_x_y);
    q.lambda_y_x = lam(sys.p_y_x);
    q.lambda_y_y = lam(sys.p_y_y);
    q.lambda_z = lam(sys.p_z);
    q.lambda_xy_x = std::abs(sys.p_x_x.at(1, 1) * sys.p_y_x.at(1, 1) -
                             sys.p_x_x.at(0, 1) * sys.p_y_x.at(0, 1));
    q.lambda_xy_y = std::abs(sys.p_x_y.at(1, 1) * sys.p_y_y.at(1, 1) -
                             sys.p_x_y.at(0, 1) * sys.p_y_y.at(0, 1));
    q.zeta_x = std::max(q.lambda_x_x,
                        q.lambda_z * (q.lambda_x_x - 2 * q.lambda_xy_x + 2 * q.lambda_y_x));
    double last = reading == TypoReading::AsPrinted ? q.lambda_y_y : q.lambda_x_y;
    q.zeta_y = std::max(q.lambda_y_y,
                        q.lambda_z * (q.lambda_y_y - 2 * q.lambda_xy_y + 2 * last));

    double gx = sys.gamma_x, gy = sys.gamma_y;
    q.L = gx * gy * q.lambda_x_x * q.lambda_y_x +
          (1 - gx) * (1 - gy) * q.lambda_x_y * q.lambda_y_y;
    q.M = gx * (1 - gy) * q.lambda_x_x * q.lambda_y_y +
          (1 - gx) * gy * q.lambda_x_y * q.lambda_y_x;
    q.O = gy * q.zeta_x + (1 - gy) * q.lambda_x_x;
    q.P = gy * q.lambda_x_y + (1 - gy) * q.zeta_y;
    q.N = (1 - (1 - gy) * q.lambda_y_y) * (1 - gx * q.O) - (1 - gx) * gy * q.lambda_y_x * q.P;
    return q;
}

struct Theorem61Bound {
    bool applicable = false;
    double H = 0, J = 0, K = 0;  // bounds on E[joint], E[marginal X], E[marginal Y]
    BoundQuantities q;
};

/// Steady-state error bounds for the two-chain system. Inapplicable when a
/// denominator fails to be positive.
inline Theorem61Bound theorem61_bound(const TwoChainSystem& sys,
                                      TypoReading reading = TypoReading::AsPrinted) {
    Theorem61Bound b;
    b.q = bound_quantities(sys, reading);
    const auto& q = b.q;
    double s = 1 - q.lambda_z * q.lambda_z;
    double hden = 4 * (1 - s * q.M);
    if (!(hden > 1e-12) || !(q.N > 1e-12)) return b;
    b.applicable = true;
    b.H = s * q.L / hden;
    b.J = 2 * b.H * (1 - (1 - sys.gamma_y) * q.lambda_y_y) * q.lambda_z * q.M / q.N;
    b.K = 2 * b.H * sys.gamma_y * q.lambda_y_x * q.lambda_z * q.M / q.N;
    return b;
}

// ---------------------------------------------------------------------------
// Expected filtering errors by exhaustive observation enumeration
// ---------------------------------------------------------------------------

struct ExpectedErrors {
    std::vector<double> joint;       // E[delta](t),   t = 1..T-1
    std::vector<double> marginal_x;  // E[delta_X](t)
    std::vector<double> marginal_y;  // E[delta_Y](t)

    double max_joint() const { return joint.empty() ? 0.0 : *std::max_element(joint.begin(), joint.end()); }
    double max_x() const {
        return marginal_x.empty() ? 0.0 : *std::max_element(marginal_x.begin(), marginal_x.end());
    }
    double max_y() const {
        return marginal_y.empty() ? 0.0 : *std::max_element(marginal_y.begin(), marginal_y.end());
    }
};

namespace detail {

inline void enumerate_errors(const DbnModel& model, const Categorical& exact,
                             const FactoredBelief& approx, double weight, std::size_t t,
                             std::size_t T, ExpectedErrors& out) {
    if (t >= T || weight < 1e-14) return;
    Categorical epred = exact_predict_step(model, exact);
    Categorical apred = exact_predict_step(model, belief_joint(model, approx));

    std::vector<int> cards;
    for (const auto& o : model.observations()) cards.push_back(o.var.card);
    std::vector<int> obs(cards.size(), 0);
    for (;;) {
        double pobs = 0.0;
        for (std::size_t idx = 0; idx < epred.size(); ++idx) {
            double w = epred.at(idx);
            for (std::size_t k = 0; k < obs.size(); ++k) w *= model.obs_prob(k, idx, obs[k]);
            pobs += w;
        }
        if (pobs > 1e-14) {
            Categorical epost = condition_on_observations(model, epred, obs);
            FactoredBelief apost = project(model, condition_on_observations(model, apred, obs));

            std::vector<std::vector<std::size_t>> groups;
            for (std::size_t f = 0; f < model.factor_count(); ++f)
                groups.push_back(model.factor_positions(f));
            SignedTable dep = dependence(epost, groups);
            double dj = 0.0;
            for (double v : dep.values) dj = std::max(dj, std::abs(v));
            out.joint[t - 1] += weight * pobs * dj;
            out.marginal_x[t - 1] +=
                weight * pobs * linf(marginalize(epost, model.factor_scope(0)), apost.factors[0]);
            if (model.factor_count() > 1)
                out.marginal_y[t - 1] +=
                    weight * pobs * linf(marginalize(epost, model.factor_scope(1)), apost.factors[1]);
            enumerate_errors(model, epost, apost, weight * pobs, t + 1, T, out);
        }
        std::size_t k = obs.size();
        while (k-- > 0) {
            if (++obs[k] < cards[k]) break;
            obs[k] = 0;
            if (k == 0) return;
        }
    }
}

}  // namespace detail

/// Expected monitoring errors at each time, exactly, by enumerating every
/// observation sequence with its probability. Cost grows exponentially in T.
inline ExpectedErrors expected_errors(const DbnModel& model, std::size_t T) {
    ExpectedErrors out;
    out.joint.assign(T > 0 ? T - 1 : 0, 0.0);
    out.marginal_x.assign(out.joint.size(), 0.0);
    out.marginal_y.assign(out.joint.size(), 0.0);
    detail::enumerate_errors(model, model.prior_joint(), prior_belief(model), 1.0, 1, T, out);
    return out;
}

// ---------------------------------------------------------------------------
// Error decomposition (Type A / Type B isolation)
// ---------------------------------------------------------------------------

struct NegativityLog {
    std::size_t incidents = 0;
    double max_magnitude = 0.0;
};

namespace detail {

/// Signed tables built as product-plus-dependence can dip slightly below
/// zero; clamp and renormalize, recording how badly.
inline Categorical clamp_normalize(const Scope& scope, std::vector<double> v, NegativityLog& log) {
    double worst = 0.0;
    for (double& x : v)
        if (x < 0.0) {
            worst = std::max(worst, -x);
            x = 0.0;
        }
    if (worst > 0.0) {
        ++log.incidents;
        log.max_magnitude = std::max(log.max_magnitude, worst);
    }
    return Categorical::normalized(scope, std::move(v));
}

inline Categorical product_of(const DbnModel& model, const FactoredBelief& b) {
    return belief_joint(model, b);
}

inline std::vector<double> add_signed(const Categorical& base, const SignedTable& d) {
    std::vector<double> v(base.values());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += d.values[i];
    return v;
}

}  // namespace detail

/// Isolated Type A step: the prior marginals carry propagation error, but the
/// true current dependence is restored before conditioning.
inline FactoredBelief type_a_step(const DbnModel& model, const Categorical& exact_posterior_prev,
                                  const FactoredBelief& approx_prev, std::span<const int> obs,
                                  NegativityLog& log) {
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t f = 0; f < model.factor_count(); ++f) groups.push_back(model.factor_positions(f));
    Categorical phi = exact_predict_step(model, exact_posterior_prev);
    SignedTable d = dependence(phi, groups);

    Categorical phi_tilde = exact_predict_step(model, detail::product_of(model, approx_prev));
    Categorical marg_product = detail::product_of(model, project(model, phi_tilde));
    Categorical phi_star =
        detail::clamp_normalize(model.state_scope(), detail::add_signed(marg_product, d), log);
    return project(model, condition_on_observations(model, phi_star, obs));
}

/// Isolated Type B step: propagation keeps the true previous dependence, but
/// conditioning only sees the dependence introduced by one dynamics step.
inline FactoredBelief type_b_step(const DbnModel& model, const Categorical& exact_posterior_prev,
                                  const FactoredBelief& approx_prev, std::span<const int> obs,
                                  NegativityLog& log) {
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t f = 0; f < model.factor_count(); ++f) groups.push_back(model.factor_positions(f));
    SignedTable d_prev = dependence(exact_posterior_prev, groups);

    Categorical approx_product = detail::product_of(model, approx_prev);
    Categorical phi_tilde = exact_predict_step(model, approx_product);
    SignedTable d_tilde = dependence(phi_tilde, groups);

    Categorical mu_star = detail::clamp_normalize(model.state_scope(),
                                                  detail::add_signed(approx_product, d_prev), log);
    Categorical phi_prime = exact_predict_step(model, mu_star);
    Categorical prime_product = detail::product_of(model, project(model, phi_prime));
    Categorical phi_hat =
        detail::clamp_normalize(model.state_scope(), detail::add_signed(prime_product, d_tilde), log);
    return project(model, condition_on_observations(model, phi_hat, obs));
}

struct DecompositionStep {
    std::size_t step = 0;
    double kl_total = 0.0;   // plain factored filtering
    double kl_type_a = 0.0;  // Type A error only
    double kl_type_b = 0.0;  // Type B error only
};

struct DecompositionResult {
    std::vector<DecompositionStep> steps;
    NegativityLog negativity;

    double mean(double DecompositionStep::* field) const {
        if (steps.empty()) return 0.0;
        double s = 0.0;
        for (const auto& e : steps) s += e.*field;
        return s / static_cast<double>(steps.size());
    }
};

/// Runs exact filtering, plain factored filtering, and the two isolation
/// processes in lockstep over one trajectory. Errors are KL divergences on
/// the first factor's marginal.
inline DecompositionResult run_error_decomposition(const DbnModel& model, const Trajectory& traj) {
    DecompositionResult out;
    Categorical exact = model.prior_joint();
    FactoredBelief plain = prior_belief(model);
    FactoredBelief iso_a = prior_belief(model);
    FactoredBelief iso_b = prior_belief(model);

    for (std::size_t t = 1; t < traj.states.size(); ++t) {
        const auto& obs = traj.observations[t];
        FactoredBelief next_a = type_a_step(model, exact, iso_a, obs, out.negativity);
        FactoredBelief next_b = type_b_step(model, exact, iso_b, obs, out.negativity);
        plain = bk_step(model, plain, obs);
        exact = exact_filter_step(model, exact, obs);
        iso_a = std::move(next_a);
        iso_b = std::move(next_b);

        Categorical mu_x = marginalize(exact, model.factor_scope(0));
        DecompositionStep e;
        e.step = t;
        e.kl_total = kl(mu_x, plain.factors[0]);
        e.kl_type_a = kl(mu_x, iso_a.factors[0]);
        e.kl_type_b = kl(mu_x, iso_b.factors[0]);
        out.steps.push_back(e);
    }
    return out;
}

}  // namespace sepdbn
