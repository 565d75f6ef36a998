#pragma once

#include "sepdbn/model.hpp"
#include "sepdbn/rng.hpp"

namespace sepdbn {

struct Figure1Config {
    double obs_acc_lo = 0.6;
    double obs_acc_hi = 0.95;
};

/// Two binary chains X, Y with a noisy observation Z of Y. Each transition
/// CPD is a convex mixture of a fully separable part (random Bernoulli rows,
/// random gamma) and a pure XOR residual, so its degree of separability is
/// exactly alpha.
inline DbnModel generate_figure1_model(double alpha, std::uint64_t seed,
                                       const Figure1Config& cfg = {}) {
    if (alpha < 0.0 || alpha > 1.0) throw ValidationError("alpha must be in [0, 1]");
    Rng rng(seed);
    VariableSpec X{"X", 2}, Y{"Y", 2};
    Scope parents{X, Y};

    auto draw_child = [&](const VariableSpec& child, bool own_first) {
        double gamma = rng.u01();
        std::vector<double> own{rng.u01(), rng.u01()};
        std::vector<double> other{rng.u01(), rng.u01()};
        // flatten over (X-, Y-): for child X the own parent is X-, for child Y it is Y-.
        std::vector<double> flat;
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) {
                double sep = own_first ? gamma * own[x] + (1.0 - gamma) * other[y]
                                       : gamma * own[y] + (1.0 - gamma) * other[x];
                double p1 = alpha * sep + (1.0 - alpha) * static_cast<double>(x ^ y);
                flat.push_back(1.0 - p1);
                flat.push_back(p1);
            }
        return Cpd({child}, parents, std::move(flat), 1e-9);
    };
    Cpd tx = draw_child(X, true);
    Cpd ty = draw_child(Y, false);

    double acc = rng.uniform(cfg.obs_acc_lo, cfg.obs_acc_hi);
    VariableSpec Z{"Z", 2};
    Cpd oz({Z}, {Y}, {acc, 1.0 - acc, 1.0 - acc, acc}, 1e-9);

    Factorization fact{{{"X"}, {"Y"}}};
    Prior prior;
    prior.product_form = true;
    prior.factor_tables = {Categorical::uniform({X}), Categorical::uniform({Y})};
    return DbnModel({X, Y}, {tx, ty}, {{Z, oz}}, fact, prior);
}

namespace detail {

// P(child = T) as an additive function of the four binary parents, flattened
// lexicographically (last parent fastest).
template <class Fn>
inline Cpd additive_cpd(const VariableSpec& child, const Scope& parents, Fn p_true) {
    std::size_t np = scope_cells(parents);
    std::vector<double> flat;
    std::vector<int> a(parents.size());
    for (std::size_t r = 0; r < np; ++r) {
        unflatten(parents, r, a);
        double p = p_true(a);
        flat.push_back(1.0 - p);
        flat.push_back(p);
    }
    return Cpd({child}, parents, std::move(flat), 1e-9);
}

}  // namespace detail

inline Factorization example41_pair_factorization() {
    return {{{"U", "V"}, {"W", "X"}, {"Y", "Z"}}};
}

inline Factorization example41_obvious_factorization() {
    return {{{"U", "V", "W"}, {"X", "Y", "Z"}}};
}

/// Six-node binary DBN. X's table is the printed 16-row table
/// P(X=T) = 0.4*xor(X-, W-) + 0.1 + 0.2*[Y-] + 0.2*[Z-]; the other CPDs are
/// completed by the same additive pattern so that every variable's CPD is
/// fully separable with respect to the {UV, WX, YZ} partition.
inline DbnModel generate_example41_model(Factorization fact = example41_pair_factorization()) {
    VariableSpec U{"U", 2}, V{"V", 2}, W{"W", 2}, X{"X", 2}, Y{"Y", 2}, Z{"Z", 2};
    auto b = [](int p, int q) { return 0.1 + 0.2 * p + 0.2 * q; };

    Cpd tu = detail::additive_cpd(U, {U, V, W},
                                  [&](const std::vector<int>& a) { return b(a[0], a[1]) + 0.4 * a[2]; });
    Cpd tv = detail::additive_cpd(V, {U, V, W},
                                  [&](const std::vector<int>& a) { return b(a[0], a[1]) + 0.4 * a[2]; });
    // W mirrors X with (W-, X-) in place of (X-, W-) and (U-, V-) in place of (Y-, Z-)
    Cpd tw = detail::additive_cpd(W, {W, U, V, X}, [&](const std::vector<int>& a) {
        return 0.4 * (a[0] ^ a[3]) + b(a[1], a[2]);
    });
    Cpd tx = detail::additive_cpd(X, {X, Y, Z, W}, [&](const std::vector<int>& a) {
        return 0.4 * (a[0] ^ a[3]) + b(a[1], a[2]);
    });
    Cpd ty = detail::additive_cpd(Y, {X, Y, Z},
                                  [&](const std::vector<int>& a) { return b(a[1], a[2]) + 0.4 * a[0]; });
    Cpd tz = detail::additive_cpd(Z, {X, Y, Z},
                                  [&](const std::vector<int>& a) { return b(a[1], a[2]) + 0.4 * a[0]; });

    VariableSpec ZObs{"ZObs", 2};
    Cpd oz({ZObs}, {Z}, {1.0, 0.0, 0.0, 1.0}, 1e-9);

    Scope all{U, V, W, X, Y, Z};
    Prior prior;
    prior.product_form = true;
    for (const auto& f : fact.factors) {
        Scope fs;
        for (const auto& name : f) fs.push_back(all[*find_var(all, name)]);
        prior.factor_tables.push_back(Categorical::uniform(fs));
    }
    return DbnModel(all, {tu, tv, tw, tx, ty, tz}, {{ZObs, oz}}, std::move(fact), prior);
}

/// The two-chain separable system of the error-bound analysis: binary X and Y
/// with separable transitions and a binary observation Z of Y.
struct TwoChainSystem {
    double gamma_x = 0.0, gamma_y = 0.0;
    Cpd p_x_x, p_x_y, p_y_x, p_y_y, p_z;
};

inline TwoChainSystem generate_two_chain_system(std::uint64_t seed) {
    Rng rng(seed);
    VariableSpec X{"X", 2}, Y{"Y", 2}, Z{"Z", 2};
    auto bern2 = [&](const VariableSpec& child, const VariableSpec& parent) {
        double p0 = rng.u01(), p1 = rng.u01();
        return Cpd({child}, {parent}, {1.0 - p0, p0, 1.0 - p1, p1}, 1e-9);
    };
    double gx = rng.u01(), gy = rng.u01();
    Cpd pxx = bern2(X, X), pxy = bern2(X, Y), pyx = bern2(Y, X), pyy = bern2(Y, Y), pz = bern2(Z, Y);
    return TwoChainSystem{gx, gy, pxx, pxy, pyx, pyy, pz};
}

inline DbnModel induced_model(const TwoChainSystem& sys) {
    VariableSpec X{"X", 2}, Y{"Y", 2}, Z{"Z", 2};
    Scope parents{X, Y};
    auto mix = [&](const VariableSpec& child, double gamma, const Cpd& own, const Cpd& other) {
        std::vector<double> flat;
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) {
                double p1 = gamma * own.at(x, 1) + (1.0 - gamma) * other.at(y, 1);
                flat.push_back(1.0 - p1);
                flat.push_back(p1);
            }
        return Cpd({child}, parents, std::move(flat), 1e-9);
    };
    Cpd tx = mix(X, sys.gamma_x, sys.p_x_x, sys.p_x_y);
    Cpd ty = mix(Y, sys.gamma_y, sys.p_y_x, sys.p_y_y);
    Factorization fact{{{"X"}, {"Y"}}};
    Prior prior;
    prior.product_form = true;
    prior.factor_tables = {Categorical::uniform({X}), Categorical::uniform({Y})};
    return DbnModel({X, Y}, {tx, ty}, {{Z, sys.p_z}}, fact, prior);
}

}  // namespace sepdbn
