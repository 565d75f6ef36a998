#pragma once

#include <optional>
#include <utility>

#include "sepdbn/model.hpp"
#include "sepdbn/prob.hpp"
#include "sepdbn/simplex.hpp"

namespace sepdbn {

/// Ordered partition of a CPD's parent scope into 2..4 disjoint nonempty
/// groups, given as position lists into the parent scope.
struct Grouping {
    std::vector<std::vector<std::size_t>> groups;
};

inline void check_grouping(const Cpd& cpd, const Grouping& g) {
    if (g.groups.size() < 2 || g.groups.size() > 4)
        throw ValidationError("grouping must have between 2 and 4 groups");
    std::vector<bool> seen(cpd.parent_scope().size(), false);
    for (const auto& grp : g.groups) {
        if (grp.empty()) throw ValidationError("empty group");
        for (std::size_t p : grp) {
            if (p >= seen.size() || seen[p]) throw ValidationError("grouping is not a partition");
            seen[p] = true;
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ValidationError("grouping does not cover the parent scope");
}

/// Builds a grouping from parent-variable name lists.
inline Grouping make_grouping(const Cpd& cpd, const std::vector<std::vector<std::string>>& names) {
    Grouping g;
    for (const auto& grp : names) {
        std::vector<std::size_t> pos;
        for (const auto& n : grp) {
            auto p = find_var(cpd.parent_scope(), n);
            if (!p) throw ValidationError("grouping names unknown variable '" + n + "'");
            pos.push_back(*p);
        }
        g.groups.push_back(std::move(pos));
    }
    check_grouping(cpd, g);
    return g;
}

struct SeparableDecomposition {
    double alpha = 0.0;
    std::vector<double> group_weights;  // sum to alpha; individual weights may be negative
    std::vector<Cpd> components;        // child given that group's variables only
    double residual_weight = 1.0;       // = 1 - alpha
    std::optional<Cpd> residual;        // child given all parents; absent when alpha ~ 1
    bool unit_interval_gamma = false;   // a representative with all weights >= 0 was found
};

struct ClosedFormTrace {
    std::vector<double> deviations;    // the A quantities
    std::vector<double> partial_sums;  // the C_k values (Case 3)
    double c_star = 0.0, c_substar = 0.0;
    double g_sum = 0.0;                // G (Case 2)
    std::vector<double> b_values;      // the B_k sequence (Case 3)
};

namespace detail {

struct GroupIndex {
    std::vector<Scope> scopes;                       // per-group variable scopes
    std::vector<std::size_t> sizes;                  // per-group assignment counts
    std::vector<std::vector<std::size_t>> of_full;   // [g][full parent idx] -> group idx
};

inline GroupIndex index_grouping(const Cpd& cpd, const Grouping& g) {
    GroupIndex gi;
    std::size_t np = scope_cells(cpd.parent_scope());
    std::vector<int> full(cpd.parent_scope().size());
    for (const auto& grp : g.groups) {
        Scope s;
        for (std::size_t p : grp) s.push_back(cpd.parent_scope()[p]);
        gi.scopes.push_back(s);
        gi.sizes.push_back(scope_cells(s));
    }
    gi.of_full.assign(g.groups.size(), std::vector<std::size_t>(np));
    for (std::size_t idx = 0; idx < np; ++idx) {
        unflatten(cpd.parent_scope(), idx, full);
        for (std::size_t gn = 0; gn < g.groups.size(); ++gn) {
            std::vector<int> sub(g.groups[gn].size());
            for (std::size_t k = 0; k < sub.size(); ++k) sub[k] = full[g.groups[gn][k]];
            gi.of_full[gn][idx] = flat_index(gi.scopes[gn], sub);
        }
    }
    return gi;
}

inline Cpd cpd_from_flat(const Scope& child, const Scope& parent, std::vector<double> flat) {
    return Cpd(child, parent, std::move(flat), 1e-6);
}

// Solves for group weights and component CPDs at a fixed alpha and residual.
// Tries sign patterns with all-nonnegative weights first.
inline std::optional<std::pair<std::vector<double>, std::vector<Cpd>>> recover_components(
    const Cpd& cpd, const Grouping& g, const GroupIndex& gi, double alpha,
    const std::optional<Cpd>& residual) {
    std::size_t m = g.groups.size();
    std::size_t nc = cpd.row_size(), np = cpd.n_rows();

    // S = P - (1 - alpha) * residual
    std::vector<double> S(np * nc);
    for (std::size_t r = 0; r < np; ++r)
        for (std::size_t i = 0; i < nc; ++i)
            S[r * nc + i] = cpd.at(r, i) - (residual ? (1.0 - alpha) * residual->at(r, i) : 0.0);

    // variable layout: u^g_{i,ag} blocks, then per-group weight magnitudes
    std::vector<std::size_t> u_off(m);
    std::size_t n_vars = 0;
    for (std::size_t gn = 0; gn < m; ++gn) {
        u_off[gn] = n_vars;
        n_vars += nc * gi.sizes[gn];
    }
    std::size_t w_off = n_vars;
    n_vars += m;

    std::vector<int> signs(m, 1);
    // enumerate sign patterns ordered by number of negative weights
    std::vector<std::vector<int>> patterns;
    for (std::size_t mask = 0; mask < (std::size_t(1) << m); ++mask) {
        std::vector<int> p(m);
        for (std::size_t gn = 0; gn < m; ++gn) p[gn] = (mask >> gn) & 1 ? -1 : 1;
        patterns.push_back(p);
    }
    std::stable_sort(patterns.begin(), patterns.end(), [](const auto& a, const auto& b) {
        return std::count(a.begin(), a.end(), -1) < std::count(b.begin(), b.end(), -1);
    });

    for (const auto& pat : patterns) {
        lp::ProblemBuilder pb(static_cast<int>(n_vars));
        for (std::size_t r = 0; r < np; ++r)
            for (std::size_t i = 0; i < nc; ++i) {
                std::vector<double> row(n_vars, 0.0);
                for (std::size_t gn = 0; gn < m; ++gn)
                    row[u_off[gn] + i * gi.sizes[gn] + gi.of_full[gn][r]] = pat[gn];
                pb.add_eq(row, S[r * nc + i]);
            }
        for (std::size_t gn = 0; gn < m; ++gn)
            for (std::size_t ag = 0; ag < gi.sizes[gn]; ++ag) {
                std::vector<double> row(n_vars, 0.0);
                for (std::size_t i = 0; i < nc; ++i) row[u_off[gn] + i * gi.sizes[gn] + ag] = 1.0;
                row[w_off + gn] = -1.0;
                pb.add_eq(row, 0.0);
            }
        {
            std::vector<double> row(n_vars, 0.0);
            for (std::size_t gn = 0; gn < m; ++gn) row[w_off + gn] = pat[gn];
            pb.add_eq(row, alpha);
        }
        auto sol = pb.maximize();
        if (sol.status != lp::Status::Optimal) continue;

        std::vector<double> weights(m);
        std::vector<Cpd> comps;
        for (std::size_t gn = 0; gn < m; ++gn) {
            double mag = sol.x[w_off + gn];
            weights[gn] = pat[gn] * mag;
            std::vector<double> flat(nc * gi.sizes[gn], 0.0);
            for (std::size_t ag = 0; ag < gi.sizes[gn]; ++ag)
                for (std::size_t i = 0; i < nc; ++i) {
                    double v = mag > 1e-9 ? sol.x[u_off[gn] + i * gi.sizes[gn] + ag] / mag
                                          : 1.0 / static_cast<double>(nc);
                    flat[ag * nc + i] = std::clamp(v, 0.0, 1.0);
                }
            comps.push_back(cpd_from_flat(cpd.child_scope(), gi.scopes[gn], std::move(flat)));
        }
        return std::make_pair(std::move(weights), std::move(comps));
    }
    return std::nullopt;
}

}  // namespace detail

/// Recombines a decomposition over the original parent order.
inline Cpd recombine(const Cpd& like, const Grouping& g, const SeparableDecomposition& d) {
    auto gi = detail::index_grouping(like, g);
    std::size_t nc = like.row_size(), np = like.n_rows();
    std::vector<double> flat(np * nc, 0.0);
    for (std::size_t r = 0; r < np; ++r)
        for (std::size_t i = 0; i < nc; ++i) {
            double v = 0.0;
            for (std::size_t gn = 0; gn < d.components.size(); ++gn)
                v += d.group_weights[gn] * d.components[gn].at(gi.of_full[gn][r], i);
            if (d.residual) v += d.residual_weight * d.residual->at(r, i);
            flat[r * nc + i] = v;
        }
    return Cpd(like.child_scope(), like.parent_scope(), std::move(flat), 1e-5);
}

inline double reconstruction_error(const Cpd& input, const Grouping& g,
                                   const SeparableDecomposition& d) {
    Cpd r = recombine(input, g, d);
    return linf(std::span<const double>(input.values()), std::span<const double>(r.values()));
}

/// Degree of separability by linear programming: one LP per sign pattern of
/// the group weights (the residual weight stays nonnegative), best optimum
/// wins. alpha is the maximum total weight on the per-group components.
inline SeparableDecomposition degree_lp(const Cpd& cpd, const Grouping& g) {
    check_grouping(cpd, g);
    auto gi = detail::index_grouping(cpd, g);
    std::size_t m = g.groups.size();
    std::size_t nc = cpd.row_size(), np = cpd.n_rows();

    // layout: u^g blocks, w residual block, per-group weight magnitudes, residual weight
    std::vector<std::size_t> u_off(m);
    std::size_t n_vars = 0;
    for (std::size_t gn = 0; gn < m; ++gn) {
        u_off[gn] = n_vars;
        n_vars += nc * gi.sizes[gn];
    }
    std::size_t w_off = n_vars;
    n_vars += nc * np;
    std::size_t aw_off = n_vars;
    n_vars += m;
    std::size_t ar_idx = n_vars;
    n_vars += 1;

    double best_alpha = -1.0;
    std::vector<double> best_x;
    std::vector<int> best_pat;
    bool allpos_best = false;

    for (std::size_t mask = 0; mask < (std::size_t(1) << m); ++mask) {
        std::vector<int> pat(m);
        for (std::size_t gn = 0; gn < m; ++gn) pat[gn] = (mask >> gn) & 1 ? -1 : 1;

        lp::ProblemBuilder pb(static_cast<int>(n_vars));
        pb.set_objective(static_cast<int>(ar_idx), -1.0);  // maximize alpha = 1 - residual weight
        for (std::size_t r = 0; r < np; ++r)
            for (std::size_t i = 0; i < nc; ++i) {
                std::vector<double> row(n_vars, 0.0);
                for (std::size_t gn = 0; gn < m; ++gn)
                    row[u_off[gn] + i * gi.sizes[gn] + gi.of_full[gn][r]] = pat[gn];
                row[w_off + r * nc + i] = 1.0;
                pb.add_eq(row, cpd.at(r, i));
            }
        for (std::size_t gn = 0; gn < m; ++gn)
            for (std::size_t ag = 0; ag < gi.sizes[gn]; ++ag) {
                std::vector<double> row(n_vars, 0.0);
                for (std::size_t i = 0; i < nc; ++i) row[u_off[gn] + i * gi.sizes[gn] + ag] = 1.0;
                row[aw_off + gn] = -1.0;
                pb.add_eq(row, 0.0);
            }
        {
            std::vector<double> row(n_vars, 0.0);
            for (std::size_t gn = 0; gn < m; ++gn) row[aw_off + gn] = pat[gn];
            row[ar_idx] = 1.0;
            pb.add_eq(row, 1.0);
        }
        auto sol = pb.maximize();
        if (sol.status != lp::Status::Optimal)
            continue;  // alpha = 0 is always feasible, so at least the all-positive pattern solves
        double alpha = 1.0 + sol.objective;
        bool allpos = std::count(pat.begin(), pat.end(), -1) == 0;
        if (alpha > best_alpha + 1e-12) {
            best_alpha = alpha;
            best_x = sol.x;
            best_pat = pat;
            allpos_best = allpos;
        } else if (allpos && alpha >= best_alpha - 1e-9) {
            allpos_best = true;  // a [0,1]-gamma representative attains the optimum
        }
    }
    if (best_alpha < 0.0)
        throw std::logic_error("degree_lp: no sign pattern was feasible (solver bug)");

    SeparableDecomposition d;
    d.alpha = std::clamp(best_alpha, 0.0, 1.0);
    d.residual_weight = best_x[ar_idx];
    d.unit_interval_gamma = allpos_best;
    for (std::size_t gn = 0; gn < m; ++gn) {
        double mag = best_x[aw_off + gn];
        d.group_weights.push_back(best_pat[gn] * mag);
        std::vector<double> flat(nc * gi.sizes[gn]);
        for (std::size_t ag = 0; ag < gi.sizes[gn]; ++ag)
            for (std::size_t i = 0; i < nc; ++i) {
                double v = mag > 1e-9 ? best_x[u_off[gn] + i * gi.sizes[gn] + ag] / mag
                                      : 1.0 / static_cast<double>(nc);
                flat[ag * nc + i] = std::clamp(v, 0.0, 1.0);
            }
        d.components.push_back(detail::cpd_from_flat(cpd.child_scope(), gi.scopes[gn], std::move(flat)));
    }
    if (d.residual_weight > 1e-9) {
        std::vector<double> flat(np * nc);
        for (std::size_t r = 0; r < np; ++r)
            for (std::size_t i = 0; i < nc; ++i)
                flat[r * nc + i] =
                    std::clamp(best_x[w_off + r * nc + i] / d.residual_weight, 0.0, 1.0);
        d.residual = detail::cpd_from_flat(cpd.child_scope(), cpd.parent_scope(), std::move(flat));
    } else {
        d.residual_weight = 0.0;
    }
    return d;
}

namespace detail {

// Two-group reshaped view: p(i | x, y) with x the group-0 assignment.
struct TwoGroupView {
    std::size_t nx = 0, ny = 0, nz = 0;
    std::vector<double> p;  // [i * nx * ny + x * ny + y]
    double at(std::size_t i, std::size_t x, std::size_t y) const {
        return p[i * nx * ny + x * ny + y];
    }
};

inline TwoGroupView two_group_view(const Cpd& cpd, const Grouping& g, const GroupIndex& gi) {
    if (g.groups.size() != 2) throw ValidationError("closed forms require exactly two groups");
    TwoGroupView v;
    v.nx = gi.sizes[0];
    v.ny = gi.sizes[1];
    v.nz = cpd.row_size();
    v.p.assign(v.nx * v.ny * v.nz, 0.0);
    for (std::size_t r = 0; r < cpd.n_rows(); ++r)
        for (std::size_t i = 0; i < v.nz; ++i)
            v.p[i * v.nx * v.ny + gi.of_full[0][r] * v.ny + gi.of_full[1][r]] = cpd.at(r, i);
    return v;
}

// Builds the residual Cpd in the original parent order from a two-group
// residual table rg(i, x, y).
inline Cpd residual_from_groups(const Cpd& cpd, const GroupIndex& gi,
                                const std::vector<double>& rg, std::size_t nx, std::size_t ny) {
    std::size_t nc = cpd.row_size(), np = cpd.n_rows();
    std::vector<double> flat(np * nc);
    for (std::size_t r = 0; r < np; ++r)
        for (std::size_t i = 0; i < nc; ++i)
            flat[r * nc + i] = rg[i * nx * ny + gi.of_full[0][r] * ny + gi.of_full[1][r]];
    return cpd_from_flat(cpd.child_scope(), cpd.parent_scope(), std::move(flat));
}

inline SeparableDecomposition finish_closed_form(const Cpd& cpd, const Grouping& g,
                                                 const GroupIndex& gi, double alpha,
                                                 std::optional<Cpd> residual) {
    SeparableDecomposition d;
    d.alpha = alpha;
    d.residual_weight = 1.0 - alpha;
    d.residual = std::move(residual);
    auto rec = recover_components(cpd, g, gi, alpha, d.residual);
    if (!rec)
        throw std::logic_error("closed form: component recovery infeasible");
    d.group_weights = std::move(rec->first);
    d.components = std::move(rec->second);
    d.unit_interval_gamma =
        std::all_of(d.group_weights.begin(), d.group_weights.end(), [](double w) { return w >= -1e-12; });
    return d;
}

}  // namespace detail

/// Case 1 closed form: all three of X, Y, Z binary. alpha = 1 - |A| / 2 with
/// A the double difference of P(z1 | x y); the residual is the equality table
/// (A > 0) or the XOR table (A < 0) on the first child value.
inline std::pair<SeparableDecomposition, ClosedFormTrace> degree_case1(const Cpd& cpd,
                                                                       const Grouping& g) {
    check_grouping(cpd, g);
    auto gi = detail::index_grouping(cpd, g);
    auto v = detail::two_group_view(cpd, g, gi);
    if (v.nx != 2 || v.ny != 2 || v.nz != 2)
        throw ValidationError("Case 1 requires binary groups and binary child");
    double A = v.at(0, 1, 1) - v.at(0, 1, 0) - v.at(0, 0, 1) + v.at(0, 0, 0);
    double alpha = 1.0 - std::abs(A) / 2.0;
    ClosedFormTrace trace;
    trace.deviations = {A};

    std::optional<Cpd> residual;
    if (std::abs(A) > 1e-12) {
        std::vector<double> rg(8, 0.0);
        auto set = [&](std::size_t i, std::size_t x, std::size_t y, double val) {
            rg[i * 4 + x * 2 + y] = val;
        };
        for (std::size_t x = 0; x < 2; ++x)
            for (std::size_t y = 0; y < 2; ++y) {
                double z1 = A > 0 ? (x == y ? 1.0 : 0.0) : (x == y ? 0.0 : 1.0);
                set(0, x, y, z1);
                set(1, x, y, 1.0 - z1);
            }
        residual = detail::residual_from_groups(cpd, gi, rg, 2, 2);
    }
    return {detail::finish_closed_form(cpd, g, gi, alpha, std::move(residual)), std::move(trace)};
}

/// Case 2 closed form: X and Y binary, Z with any number of values.
/// G is the sum of the positive per-value deviations; alpha = 1 - G / 2.
inline std::pair<SeparableDecomposition, ClosedFormTrace> degree_case2(const Cpd& cpd,
                                                                       const Grouping& g) {
    check_grouping(cpd, g);
    auto gi = detail::index_grouping(cpd, g);
    auto v = detail::two_group_view(cpd, g, gi);
    if (v.nx != 2 || v.ny != 2) throw ValidationError("Case 2 requires binary groups");
    ClosedFormTrace trace;
    double G = 0.0;
    for (std::size_t i = 0; i < v.nz; ++i) {
        double Ai = v.at(i, 1, 1) - v.at(i, 1, 0) - v.at(i, 0, 1) + v.at(i, 0, 0);
        trace.deviations.push_back(Ai);
        if (Ai > 0) G += Ai;
    }
    trace.g_sum = G;
    double alpha = 1.0 - G / 2.0;

    std::optional<Cpd> residual;
    if (G > 1e-12) {
        std::vector<double> rg(v.nz * 4, 0.0);
        for (std::size_t i = 0; i < v.nz; ++i) {
            double Ai = trace.deviations[i];
            if (Ai > 0) {
                rg[i * 4 + 1 * 2 + 1] = Ai / G;  // (x2, y2)
                rg[i * 4 + 0 * 2 + 0] = Ai / G;  // (x1, y1)
            } else if (Ai < 0) {
                rg[i * 4 + 0 * 2 + 1] = -Ai / G;  // (x1, y2)
                rg[i * 4 + 1 * 2 + 0] = -Ai / G;  // (x2, y1)
            }
        }
        residual = detail::residual_from_groups(cpd, gi, rg, 2, 2);
    }
    return {detail::finish_closed_form(cpd, g, gi, alpha, std::move(residual)), std::move(trace)};
}

/// Case 3 closed form: X and Z binary, Y with any number of values. The
/// maximum and minimum partial sums of the consecutive deviations determine
/// alpha = 1 - (C* + C_*) / 2; the residual follows the B_k recursion.
inline std::pair<SeparableDecomposition, ClosedFormTrace> degree_case3(const Cpd& cpd,
                                                                       const Grouping& g) {
    check_grouping(cpd, g);
    auto gi = detail::index_grouping(cpd, g);
    auto v = detail::two_group_view(cpd, g, gi);
    if (v.nz != 2) throw ValidationError("Case 3 requires a binary child");
    bool swapped = false;
    if (v.nx != 2) {
        if (v.ny != 2) throw ValidationError("Case 3 requires one binary group");
        swapped = true;
    }
    std::size_t n = swapped ? v.nx : v.ny;
    auto at = [&](std::size_t i, std::size_t x, std::size_t yk) {
        return swapped ? v.at(i, yk, x) : v.at(i, x, yk);
    };

    ClosedFormTrace trace;
    for (std::size_t k = 0; k + 1 < n; ++k)
        trace.deviations.push_back(at(0, 1, k + 1) - at(0, 1, k) - at(0, 0, k + 1) + at(0, 0, k));
    double c = 0.0, cmax = 0.0, cmin = 0.0;
    for (double a : trace.deviations) {
        c += a;
        trace.partial_sums.push_back(c);
        cmax = std::max(cmax, c);
        cmin = std::min(cmin, c);
    }
    trace.c_star = cmax;
    trace.c_substar = -cmin;
    double denom = trace.c_star + trace.c_substar;
    double alpha = 1.0 - denom / 2.0;

    std::optional<Cpd> residual;
    if (denom > 1e-12) {
        double b = (trace.c_star - trace.c_substar) / denom;
        trace.b_values.push_back(b);
        std::vector<double> rg(2 * v.nx * v.ny, 0.0);
        auto set = [&](std::size_t i, std::size_t x, std::size_t yk, double val) {
            if (swapped)
                rg[i * v.nx * v.ny + yk * v.ny + x] = val;
            else
                rg[i * v.nx * v.ny + x * v.ny + yk] = val;
        };
        for (std::size_t k = 0; k < n; ++k) {
            double z1_x1 = std::clamp(std::max(b, 0.0), 0.0, 1.0);
            double z1_x2 = std::clamp(std::max(-b, 0.0), 0.0, 1.0);
            set(0, 1, k, z1_x2);
            set(1, 1, k, 1.0 - z1_x2);
            set(0, 0, k, z1_x1);
            set(1, 0, k, 1.0 - z1_x1);
            if (k + 1 < n) {
                b -= trace.deviations[k] / (1.0 - alpha);
                trace.b_values.push_back(b);
            }
        }
        residual = detail::residual_from_groups(cpd, gi, rg, v.nx, v.ny);
    } else {
        trace.b_values.push_back(0.0);
    }
    return {detail::finish_closed_form(cpd, g, gi, alpha, std::move(residual)), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

struct PersistenceResult {
    double kappa = 0.0;
    Cpd identity_component;       // I(child | previous-slice copy)
    std::optional<Cpd> residual;  // absent when kappa = 1
};

/// kappa-persistence decomposition: kappa is the minimum diagonal entry
/// P(x = x- | parents); the input equals kappa * I + (1 - kappa) * residual.
inline PersistenceResult persistence(const Cpd& cpd, std::size_t self_parent_pos) {
    if (cpd.child_scope().size() != 1)
        throw ValidationError("persistence requires a single child variable");
    if (self_parent_pos >= cpd.parent_scope().size())
        throw ValidationError("self parent position out of range");
    const VariableSpec& self = cpd.parent_scope()[self_parent_pos];
    int card = cpd.child_scope()[0].card;
    if (self.card != card)
        throw ValidationError("previous-slice copy must match the child cardinality");

    std::size_t np = cpd.n_rows();
    std::vector<int> a(cpd.parent_scope().size());
    double kappa = 1.0;
    for (std::size_t r = 0; r < np; ++r) {
        unflatten(cpd.parent_scope(), r, a);
        kappa = std::min(kappa, cpd.at(r, a[self_parent_pos]));
    }

    std::vector<double> ident(static_cast<std::size_t>(card) * card, 0.0);
    for (int i = 0; i < card; ++i) ident[static_cast<std::size_t>(i) * card + i] = 1.0;
    Cpd identity(cpd.child_scope(), {self}, std::move(ident), 1e-12);

    PersistenceResult res{kappa, std::move(identity), std::nullopt};
    if (kappa < 1.0 - 1e-12) {
        std::vector<double> flat(np * card);
        for (std::size_t r = 0; r < np; ++r) {
            unflatten(cpd.parent_scope(), r, a);
            for (int i = 0; i < card; ++i) {
                double p = cpd.at(r, i);
                flat[r * card + i] = (i == a[self_parent_pos] ? p - kappa : p) / (1.0 - kappa);
            }
        }
        res.residual = Cpd(cpd.child_scope(), cpd.parent_scope(), std::move(flat), 1e-9);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Sufficiency witness
// ---------------------------------------------------------------------------

struct SufficiencyWitness {
    Categorical pi1, pi2;  // same group marginals, different images under the CPD
    double max_delta = 0.0;
};

/// If the CPD is not sufficient for the two-group split, returns a pair of
/// parent joints with identical group marginals whose images differ. The CPD
/// map is linear, so it suffices to test the elementary zero-marginal
/// perturbations; the witness perturbs the uniform joint as far as
/// feasibility allows along the best direction.
inline std::optional<SufficiencyWitness> sufficiency_witness(const Cpd& cpd, const Grouping& g,
                                                             double tol = 1e-9) {
    check_grouping(cpd, g);
    if (g.groups.size() != 2) throw ValidationError("sufficiency_witness requires two groups");
    auto gi = detail::index_grouping(cpd, g);
    std::size_t nx = gi.sizes[0], ny = gi.sizes[1];
    std::size_t np = cpd.n_rows();

    double best = 0.0;
    std::vector<double> best_dir;
    for (std::size_t a1 = 0; a1 < nx; ++a1)
        for (std::size_t a2 = a1 + 1; a2 < nx; ++a2)
            for (std::size_t b1 = 0; b1 < ny; ++b1)
                for (std::size_t b2 = b1 + 1; b2 < ny; ++b2) {
                    std::vector<double> dir(np, 0.0);
                    for (std::size_t r = 0; r < np; ++r) {
                        std::size_t x = gi.of_full[0][r], y = gi.of_full[1][r];
                        if ((x == a1 && y == b1) || (x == a2 && y == b2)) dir[r] = 1.0;
                        if ((x == a1 && y == b2) || (x == a2 && y == b1)) dir[r] = -1.0;
                    }
                    SignedTable d{cpd.parent_scope(), dir};
                    auto phi = apply_cpd_signed(cpd, d);
                    double mag = 0.0;
                    for (double v : phi) mag = std::max(mag, std::abs(v));
                    if (mag > best) {
                        best = mag;
                        best_dir = dir;
                    }
                }
    if (best <= tol) return std::nullopt;

    double t = 1.0 / static_cast<double>(np);
    Categorical pi1 = Categorical::uniform(cpd.parent_scope());
    std::vector<double> v2(np);
    for (std::size_t r = 0; r < np; ++r) v2[r] = pi1.at(r) + t * best_dir[r];
    Categorical pi2(cpd.parent_scope(), std::move(v2), 1e-9);
    return SufficiencyWitness{std::move(pi1), std::move(pi2), t * best};
}

// ---------------------------------------------------------------------------
// Self-sufficiency and factorization search
// ---------------------------------------------------------------------------

struct SelfSufficiencyReport {
    std::vector<double> factor_degrees;  // min over member variables
    bool self_sufficient = false;
};

/// Groups a variable's transition parents by the previous-slice factors and
/// returns its degree of separability (1 when at most one factor appears).
inline double variable_degree(const DbnModel& model, const Factorization& f, std::size_t var) {
    const Cpd& cpd = model.transition()[var];
    std::vector<std::vector<std::size_t>> groups;
    for (const auto& factor : f.factors) {
        std::vector<std::size_t> pos;
        for (std::size_t p = 0; p < cpd.parent_scope().size(); ++p)
            for (const auto& name : factor)
                if (cpd.parent_scope()[p].name == name) pos.push_back(p);
        if (!pos.empty()) groups.push_back(std::move(pos));
    }
    if (groups.size() <= 1) return 1.0;
    if (groups.size() > 4)
        throw ValidationError("variable '" + model.state_vars()[var].name +
                              "' depends on more than 4 previous-slice factors");
    return degree_lp(cpd, Grouping{std::move(groups)}).alpha;
}

/// A factorization is self-sufficient when every member variable's CPD is
/// fully separable with respect to the previous-slice factor partition.
inline SelfSufficiencyReport is_self_sufficient(const DbnModel& model, const Factorization& f,
                                                double tol = 1e-6) {
    SelfSufficiencyReport rep;
    rep.self_sufficient = true;
    for (const auto& factor : f.factors) {
        double deg = 1.0;
        for (const auto& name : factor)
            deg = std::min(deg, variable_degree(model, f, model.var_index(name)));
        rep.factor_degrees.push_back(deg);
        if (deg < 1.0 - tol) rep.self_sufficient = false;
    }
    return rep;
}

struct FactorizationScore {
    Factorization factorization;
    double min_degree = 0.0;
    double mean_degree = 0.0;
};

/// Scores every partition of the state variables with parts of bounded size,
/// descending by min degree (ties: mean degree, then fewer factors).
inline std::vector<FactorizationScore> search_factorization(const DbnModel& model,
                                                            std::size_t max_factor_size) {
    std::size_t n = model.state_vars().size();
    if (n > 10) throw ValidationError("factorization search supports at most 10 state variables");

    std::vector<FactorizationScore> out;
    std::vector<std::vector<std::size_t>> parts;
    auto recurse = [&](auto&& self, std::size_t next) -> void {
        if (next == n) {
            Factorization f;
            for (const auto& p : parts) {
                std::vector<std::string> names;
                for (std::size_t v : p) names.push_back(model.state_vars()[v].name);
                f.factors.push_back(std::move(names));
            }
            auto rep = is_self_sufficient(model, f);
            double mn = 1.0, sum = 0.0;
            for (double d : rep.factor_degrees) {
                mn = std::min(mn, d);
                sum += d;
            }
            out.push_back({std::move(f), mn, sum / static_cast<double>(rep.factor_degrees.size())});
            return;
        }
        for (std::size_t i = 0, np = parts.size(); i < np; ++i)
            if (parts[i].size() < max_factor_size) {
                parts[i].push_back(next);
                self(self, next + 1);
                parts[i].pop_back();
            }
        parts.push_back({next});
        self(self, next + 1);
        parts.pop_back();
    };
    recurse(recurse, 0);

    std::stable_sort(out.begin(), out.end(), [](const FactorizationScore& a, const FactorizationScore& b) {
        if (a.min_degree != b.min_degree) return a.min_degree > b.min_degree;
        if (a.mean_degree != b.mean_degree) return a.mean_degree > b.mean_degree;
        return a.factorization.factors.size() < b.factorization.factors.size();
    });
    return out;
}

}  // namespace sepdbn
