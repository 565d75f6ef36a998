#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sepdbn {

struct ScopeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroNormalizerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A named discrete variable. Cardinality must be at least 2.
struct VariableSpec {
    std::string name;
    int card = 2;
    bool operator==(const VariableSpec&) const = default;
};

/// An ordered list of variables. Flat indices are lexicographic with the
/// last variable varying fastest.
using Scope = std::vector<VariableSpec>;

inline void check_scope(const Scope& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].card < 2)
            throw ValidationError("variable '" + s[i].name + "' has cardinality < 2");
        for (std::size_t j = i + 1; j < s.size(); ++j)
            if (s[i].name == s[j].name)
                throw ScopeError("duplicate variable '" + s[i].name + "' in scope");
    }
}

inline std::size_t scope_cells(const Scope& s) {
    std::size_t n = 1;
    for (const auto& v : s) n *= static_cast<std::size_t>(v.card);
    return n;
}

inline std::optional<std::size_t> find_var(const Scope& s, std::string_view name) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i].name == name) return i;
    return std::nullopt;
}

inline std::size_t flat_index(const Scope& s, std::span<const int> assignment) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (assignment[i] < 0 || assignment[i] >= s[i].card)
            throw ValidationError("value out of range for variable '" + s[i].name + "'");
        idx = idx * static_cast<std::size_t>(s[i].card) + static_cast<std::size_t>(assignment[i]);
    }
    return idx;
}

inline void unflatten(const Scope& s, std::size_t idx, std::span<int> out) {
    for (std::size_t i = s.size(); i-- > 0;) {
        out[i] = static_cast<int>(idx % static_cast<std::size_t>(s[i].card));
        idx /= static_cast<std::size_t>(s[i].card);
    }
}

inline std::vector<int> assignment_of(const Scope& s, std::size_t idx) {
    std::vector<int> a(s.size());
    unflatten(s, idx, a);
    return a;
}

inline bool scopes_disjoint(const Scope& a, const Scope& b) {
    for (const auto& v : a)
        if (find_var(b, v.name)) return false;
    return true;
}

/// A normalized probability table over a scope.
class Categorical {
public:
    Categorical(Scope scope, std::vector<double> values, double tol = 1e-12)
        : scope_(std::move(scope)), values_(std::move(values)) {
        check_scope(scope_);
        if (values_.size() != scope_cells(scope_))
            throw ValidationError("table size does not match scope");
        double sum = 0.0;
        for (double& v : values_) {
            if (v < -tol) throw ValidationError("negative probability entry");
            if (v < 0.0) v = 0.0;
            if (v > 1.0 + tol) throw ValidationError("probability entry > 1");
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol)
            throw ValidationError("table does not sum to 1 (sum = " + std::to_string(sum) + ")");
        for (double& v : values_) v /= sum;
    }

    /// Builds from any nonnegative, positive-sum weight vector.
    static Categorical normalized(Scope scope, std::vector<double> weights) {
        double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (!(sum > 0.0)) throw ZeroNormalizerError("cannot normalize: total mass is zero");
        for (double& w : weights) {
            if (w < 0.0) throw ValidationError("negative weight");
            w /= sum;
        }
        return Categorical(std::move(scope), std::move(weights), 1e-9);
    }

    static Categorical uniform(Scope scope) {
        std::size_t n = scope_cells(scope);
        return Categorical(std::move(scope), std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }

    static Categorical point_mass(Scope scope, std::span<const int> assignment) {
        std::vector<double> v(scope_cells(scope), 0.0);
        v[flat_index(scope, assignment)] = 1.0;
        return Categorical(std::move(scope), std::move(v));
    }

    const Scope& scope() const { return scope_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double at(std::size_t idx) const { return values_[idx]; }
    double at(std::span<const int> assignment) const { return values_[flat_index(scope_, assignment)]; }

private:
    Scope scope_;
    std::vector<double> values_;
};

/// Difference of two normalized tables over the same scope; entries sum to 0.
struct SignedTable {
    Scope scope;
    std::vector<double> values;
};

inline void check_same_scope(const Scope& a, const Scope& b) {
    if (a != b) throw ScopeError("scope mismatch");
}

inline SignedTable table_difference(const Categorical& p, const Categorical& q) {
    check_same_scope(p.scope(), q.scope());
    std::vector<double> d(p.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = p.at(i) - q.at(i);
    return {p.scope(), std::move(d)};
}

/// Conditional probability table: one Categorical row over child_scope per
/// parent assignment, parent assignments lexicographic with the last parent
/// fastest.
class Cpd {
public:
    Cpd(Scope child, Scope parent, std::vector<double> values, double tol = 1e-12)
        : child_(std::move(child)), parent_(std::move(parent)), values_(std::move(values)) {
        check_scope(child_);
        check_scope(parent_);
        std::size_t nc = scope_cells(child_), np = scope_cells(parent_);
        if (values_.size() != nc * np)
            throw ValidationError("CPD size does not match scopes");
        for (std::size_t r = 0; r < np; ++r) {
            double sum = 0.0;
            for (std::size_t i = 0; i < nc; ++i) {
                double& v = values_[r * nc + i];
                if (v < -tol) throw ValidationError("negative CPD entry in row " + std::to_string(r));
                if (v < 0.0) v = 0.0;
                sum += v;
            }
            if (std::abs(sum - 1.0) > tol)
                throw ValidationError("CPD row " + std::to_string(r) + " does not sum to 1 (sum = " +
                                      std::to_string(sum) + ")");
            for (std::size_t i = 0; i < nc; ++i) values_[r * nc + i] /= sum;
        }
    }

    static Cpd from_rows(Scope child, Scope parent, const std::vector<std::vector<double>>& rows,
                         double tol = 1e-12) {
        std::vector<double> flat;
        flat.reserve(rows.size() * (rows.empty() ? 0 : rows[0].size()));
        for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
        return Cpd(std::move(child), std::move(parent), std::move(flat), tol);
    }

    const Scope& child_scope() const { return child_; }
    const Scope& parent_scope() const { return parent_; }
    std::size_t n_rows() const { return scope_cells(parent_); }
    std::size_t row_size() const { return scope_cells(child_); }
    std::span<const double> row_span(std::size_t parent_idx) const {
        return {values_.data() + parent_idx * row_size(), row_size()};
    }
    Categorical row(std::size_t parent_idx) const {
        auto s = row_span(parent_idx);
        return Categorical(child_, std::vector<double>(s.begin(), s.end()), 1e-9);
    }
    double at(std::size_t parent_idx, std::size_t child_idx) const {
        return values_[parent_idx * row_size() + child_idx];
    }
    const std::vector<double>& values() const { return values_; }

private:
    Scope child_, parent_;
    std::vector<double> values_;
};

/// Product of two distributions over disjoint scopes.
inline Categorical product(const Categorical& a, const Categorical& b) {
    if (!scopes_disjoint(a.scope(), b.scope()))
        throw ScopeError("product requires disjoint scopes");
    Scope s = a.scope();
    s.insert(s.end(), b.scope().begin(), b.scope().end());
    std::vector<double> v(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) v[i * b.size() + j] = a.at(i) * b.at(j);
    return Categorical(std::move(s), std::move(v), 1e-9);
}

/// Sums out every variable not named in keep. Result scope follows the order
/// of keep.
inline Categorical marginalize(const Categorical& t, const std::vector<std::string>& keep) {
    std::vector<std::size_t> pos;
    Scope out_scope;
    for (const auto& name : keep) {
        auto p = find_var(t.scope(), name);
        if (!p) throw ScopeError("marginalize: variable '" + name + "' not in scope");
        pos.push_back(*p);
        out_scope.push_back(t.scope()[*p]);
    }
    std::vector<double> out(scope_cells(out_scope), 0.0);
    std::vector<int> full(t.scope().size()), sub(pos.size());
    for (std::size_t idx = 0; idx < t.size(); ++idx) {
        unflatten(t.scope(), idx, full);
        for (std::size_t k = 0; k < pos.size(); ++k) sub[k] = full[pos[k]];
        out[flat_index(out_scope, sub)] += t.at(idx);
    }
    return Categorical(std::move(out_scope), std::move(out), 1e-9);
}

inline Categorical marginalize(const Categorical& t, const Scope& keep) {
    std::vector<std::string> names;
    names.reserve(keep.size());
    for (const auto& v : keep) names.push_back(v.name);
    return marginalize(t, names);
}

/// Exact mixture of CPD rows weighted by a distribution over the parents.
inline Categorical apply_cpd(const Cpd& cpd, const Categorical& pi) {
    check_same_scope(cpd.parent_scope(), pi.scope());
    std::vector<double> out(cpd.row_size(), 0.0);
    for (std::size_t r = 0; r < cpd.n_rows(); ++r) {
        double w = pi.at(r);
        if (w == 0.0) continue;
        auto row = cpd.row_span(r);
        for (std::size_t i = 0; i < row.size(); ++i) out[i] += w * row[i];
    }
    return Categorical(cpd.child_scope(), std::move(out), 1e-9);
}

/// Linear extension of apply_cpd to a signed table over the parents.
inline std::vector<double> apply_cpd_signed(const Cpd& cpd, const SignedTable& d) {
    check_same_scope(cpd.parent_scope(), d.scope);
    std::vector<double> out(cpd.row_size(), 0.0);
    for (std::size_t r = 0; r < cpd.n_rows(); ++r) {
        double w = d.values[r];
        if (w == 0.0) continue;
        auto row = cpd.row_span(r);
        for (std::size_t i = 0; i < row.size(); ++i) out[i] += w * row[i];
    }
    return out;
}

/// Bayes-conditions a joint on one observed value of an observation CPD whose
/// parents are a subset of the joint's scope.
inline Categorical condition(const Categorical& joint, const Cpd& obs_cpd, int observed_value) {
    if (observed_value < 0 || static_cast<std::size_t>(observed_value) >= obs_cpd.row_size())
        throw ValidationError("observed value out of range");
    std::vector<std::size_t> pos;
    for (const auto& v : obs_cpd.parent_scope()) {
        auto p = find_var(joint.scope(), v.name);
        if (!p) throw ScopeError("condition: observation parent '" + v.name + "' not in joint scope");
        pos.push_back(*p);
    }
    std::vector<double> out(joint.size());
    std::vector<int> full(joint.scope().size()), sub(pos.size());
    double norm = 0.0;
    for (std::size_t idx = 0; idx < joint.size(); ++idx) {
        unflatten(joint.scope(), idx, full);
        for (std::size_t k = 0; k < pos.size(); ++k) sub[k] = full[pos[k]];
        std::size_t r = flat_index(obs_cpd.parent_scope(), sub);
        out[idx] = joint.at(idx) * obs_cpd.at(r, static_cast<std::size_t>(observed_value));
        norm += out[idx];
    }
    if (!(norm > 0.0))
        throw ZeroNormalizerError("observation has probability zero under the joint");
    for (double& v : out) v /= norm;
    return Categorical(joint.scope(), std::move(out), 1e-9);
}

/// KL divergence in nats; 0*ln(0/q) contributes 0, p>0 with q=0 is an error.
inline double kl(const Categorical& p, const Categorical& q) {
    check_same_scope(p.scope(), q.scope());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.at(i) == 0.0) continue;
        if (q.at(i) == 0.0)
            throw ValidationError("kl: absolute continuity violated at cell " + std::to_string(i));
        sum += p.at(i) * std::log(p.at(i) / q.at(i));
    }
    return std::max(sum, 0.0);
}

inline double linf(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double linf(const Categorical& p, const Categorical& q) {
    check_same_scope(p.scope(), q.scope());
    return linf(std::span<const double>(p.values()), std::span<const double>(q.values()));
}

/// joint minus the product of its marginals over a partition of the scope
/// (given as position groups). Entries sum to 0.
inline SignedTable dependence(const Categorical& joint, const std::vector<std::vector<std::size_t>>& grouping) {
    std::vector<bool> seen(joint.scope().size(), false);
    for (const auto& g : grouping)
        for (std::size_t p : g) {
            if (p >= seen.size() || seen[p]) throw ScopeError("grouping is not a partition of the scope");
            seen[p] = true;
        }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ScopeError("grouping does not cover the scope");

    std::vector<Categorical> margs;
    std::vector<Scope> gscopes;
    for (const auto& g : grouping) {
        Scope s;
        for (std::size_t p : g) s.push_back(joint.scope()[p]);
        gscopes.push_back(s);
        margs.push_back(marginalize(joint, s));
    }
    std::vector<double> d(joint.size());
    std::vector<int> full(joint.scope().size());
    std::vector<int> sub;
    for (std::size_t idx = 0; idx < joint.size(); ++idx) {
        unflatten(joint.scope(), idx, full);
        double prod = 1.0;
        for (std::size_t gi = 0; gi < grouping.size(); ++gi) {
            sub.assign(grouping[gi].size(), 0);
            for (std::size_t k = 0; k < grouping[gi].size(); ++k) sub[k] = full[grouping[gi][k]];
            prod *= margs[gi].at(flat_index(gscopes[gi], sub));
        }
        d[idx] = joint.at(idx) - prod;
    }
    return {joint.scope(), std::move(d)};
}

}  // namespace sepdbn
