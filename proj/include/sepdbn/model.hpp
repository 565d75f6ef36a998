#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sepdbn/prob.hpp"
#include "sepdbn/rng.hpp"

namespace sepdbn {

/// Ordered partition of the state variables into disjoint factors.
struct Factorization {
    std::vector<std::vector<std::string>> factors;
};

struct ObservationVar {
    VariableSpec var;
    Cpd cpd;  // child = {var}, parents drawn from current-slice state variables
};

struct Prior {
    bool product_form = true;
    std::vector<Categorical> factor_tables;  // aligned with the factorization when product_form
    std::optional<Categorical> joint;
};

/// Two-slice dynamic model. Transition CPD parents live in the previous
/// slice and are named after the state variables they copy.
class DbnModel {
public:
    DbnModel(std::vector<VariableSpec> state_vars, std::vector<Cpd> transition,
             std::vector<ObservationVar> observations, Factorization factorization, Prior prior)
        : state_vars_(std::move(state_vars)), transition_(std::move(transition)),
          observations_(std::move(observations)), factorization_(std::move(factorization)),
          prior_(std::move(prior)) {
        validate();
        compile();
    }

    const std::vector<VariableSpec>& state_vars() const { return state_vars_; }
    const Scope& state_scope() const { return state_vars_; }
    std::size_t n_states() const { return scope_cells(state_vars_); }
    const std::vector<Cpd>& transition() const { return transition_; }
    const std::vector<ObservationVar>& observations() const { return observations_; }
    const Factorization& factorization() const { return factorization_; }
    const Prior& prior() const { return prior_; }

    std::size_t var_index(std::string_view name) const {
        auto p = find_var(state_vars_, name);
        if (!p) throw ScopeError("unknown state variable '" + std::string(name) + "'");
        return *p;
    }

    std::size_t factor_count() const { return factorization_.factors.size(); }

    Scope factor_scope(std::size_t i) const {
        Scope s;
        for (const auto& name : factorization_.factors[i]) s.push_back(state_vars_[var_index(name)]);
        return s;
    }

    std::vector<std::size_t> factor_positions(std::size_t i) const {
        std::vector<std::size_t> p;
        for (const auto& name : factorization_.factors[i]) p.push_back(var_index(name));
        return p;
    }

    /// Joint prior over the state scope, in state-variable order.
    Categorical prior_joint() const {
        if (!prior_.product_form) return *prior_.joint;
        std::vector<double> v(n_states(), 1.0);
        std::vector<int> full(state_vars_.size());
        for (std::size_t idx = 0; idx < v.size(); ++idx) {
            unflatten(state_vars_, idx, full);
            for (std::size_t f = 0; f < factor_count(); ++f) {
                auto pos = factor_positions(f);
                std::vector<int> sub(pos.size());
                for (std::size_t k = 0; k < pos.size(); ++k) sub[k] = full[pos[k]];
                v[idx] *= prior_.factor_tables[f].at(flat_index(prior_.factor_tables[f].scope(), sub));
            }
        }
        return Categorical(state_vars_, std::move(v), 1e-9);
    }

    /// P(state_vars[v] = val | previous full state), via the compiled tables.
    double trans_prob(std::size_t v, std::size_t prev_idx, int val) const {
        return trans_aligned_[v][prev_idx * static_cast<std::size_t>(state_vars_[v].card) + val];
    }

    /// P(observation k = val | current full state).
    double obs_prob(std::size_t k, std::size_t state_idx, int val) const {
        return obs_aligned_[k][state_idx * static_cast<std::size_t>(observations_[k].var.card) + val];
    }

private:
    void validate() const {
        check_scope(state_vars_);
        if (transition_.size() != state_vars_.size())
            throw ValidationError("transition must cover every state variable exactly once");
        for (std::size_t v = 0; v < state_vars_.size(); ++v) {
            const Cpd& c = transition_[v];
            if (c.child_scope().size() != 1 || c.child_scope()[0] != state_vars_[v])
                throw ValidationError("transition " + std::to_string(v) + " child mismatch");
            for (const auto& p : c.parent_scope()) {
                auto pos = find_var(state_vars_, p.name);
                if (!pos || state_vars_[*pos].card != p.card)
                    throw ValidationError("transition for '" + c.child_scope()[0].name +
                                          "' references unknown parent '" + p.name + "'");
            }
        }
        for (const auto& o : observations_)
            for (const auto& p : o.cpd.parent_scope()) {
                auto pos = find_var(state_vars_, p.name);
                if (!pos || state_vars_[*pos].card != p.card)
                    throw ValidationError("observation '" + o.var.name +
                                          "' references unknown parent '" + p.name + "'");
            }
        std::vector<bool> covered(state_vars_.size(), false);
        for (const auto& f : factorization_.factors)
            for (const auto& name : f) {
                auto pos = find_var(state_vars_, name);
                if (!pos) throw ValidationError("factorization references unknown variable '" + name + "'");
                if (covered[*pos]) throw ValidationError("factorization is not a partition: '" + name + "'");
                covered[*pos] = true;
            }
        if (std::find(covered.begin(), covered.end(), false) != covered.end())
            throw ValidationError("factorization does not cover all state variables");
        if (prior_.product_form) {
            if (prior_.factor_tables.size() != factorization_.factors.size())
                throw ValidationError("product prior must have one table per factor");
        } else if (!prior_.joint || prior_.joint->scope() != state_vars_) {
            throw ValidationError("joint prior scope mismatch");
        }
    }

    void compile() {
        std::size_t S = n_states();
        std::vector<int> full(state_vars_.size());
        trans_aligned_.resize(state_vars_.size());
        for (std::size_t v = 0; v < state_vars_.size(); ++v) {
            const Cpd& c = transition_[v];
            std::vector<std::size_t> pos;
            for (const auto& p : c.parent_scope()) pos.push_back(*find_var(state_vars_, p.name));
            int card = state_vars_[v].card;
            trans_aligned_[v].resize(S * static_cast<std::size_t>(card));
            std::vector<int> sub(pos.size());
            for (std::size_t idx = 0; idx < S; ++idx) {
                unflatten(state_vars_, idx, full);
                for (std::size_t k = 0; k < pos.size(); ++k) sub[k] = full[pos[k]];
                std::size_t r = flat_index(c.parent_scope(), sub);
                for (int val = 0; val < card; ++val)
                    trans_aligned_[v][idx * card + val] = c.at(r, val);
            }
        }
        obs_aligned_.resize(observations_.size());
        for (std::size_t k = 0; k < observations_.size(); ++k) {
            const Cpd& c = observations_[k].cpd;
            std::vector<std::size_t> pos;
            for (const auto& p : c.parent_scope()) pos.push_back(*find_var(state_vars_, p.name));
            int card = observations_[k].var.card;
            obs_aligned_[k].resize(S * static_cast<std::size_t>(card));
            std::vector<int> sub(pos.size());
            for (std::size_t idx = 0; idx < S; ++idx) {
                unflatten(state_vars_, idx, full);
                for (std::size_t j = 0; j < pos.size(); ++j) sub[j] = full[pos[j]];
                std::size_t r = flat_index(c.parent_scope(), sub);
                for (int val = 0; val < card; ++val)
                    obs_aligned_[k][idx * card + val] = c.at(r, val);
            }
        }
    }

    std::vector<VariableSpec> state_vars_;
    std::vector<Cpd> transition_;
    std::vector<ObservationVar> observations_;
    Factorization factorization_;
    Prior prior_;
    std::vector<std::vector<double>> trans_aligned_;
    std::vector<std::vector<double>> obs_aligned_;
};

/// Factor-level transition CPD: product of the member-variable CPDs, parent
/// scope widened to the union of previous-slice factors that appear.
inline Cpd factor_transition_cpd(const DbnModel& model, const Factorization& f, std::size_t i) {
    if (i >= f.factors.size()) throw ValidationError("factor index out of range");
    Scope child;
    std::vector<std::size_t> members;
    for (const auto& name : f.factors[i]) {
        members.push_back(model.var_index(name));
        child.push_back(model.state_vars()[members.back()]);
    }
    // parents: union of the previous-slice factors referenced by any member
    std::vector<bool> factor_used(f.factors.size(), false);
    for (std::size_t m : members)
        for (const auto& p : model.transition()[m].parent_scope())
            for (std::size_t g = 0; g < f.factors.size(); ++g)
                for (const auto& gname : f.factors[g])
                    if (gname == p.name) factor_used[g] = true;
    Scope parent;
    for (std::size_t g = 0; g < f.factors.size(); ++g)
        if (factor_used[g])
            for (const auto& gname : f.factors[g])
                parent.push_back(model.state_vars()[model.var_index(gname)]);

    std::size_t np = scope_cells(parent), nc = scope_cells(child);
    std::vector<double> values(np * nc);
    std::vector<int> pa(parent.size()), ca(child.size());
    for (std::size_t r = 0; r < np; ++r) {
        unflatten(parent, r, pa);
        for (std::size_t c = 0; c < nc; ++c) {
            unflatten(child, c, ca);
            double prod = 1.0;
            for (std::size_t k = 0; k < members.size(); ++k) {
                const Cpd& cpd = model.transition()[members[k]];
                std::vector<int> sub(cpd.parent_scope().size());
                for (std::size_t j = 0; j < sub.size(); ++j) {
                    auto pos = find_var(parent, cpd.parent_scope()[j].name);
                    sub[j] = pa[*pos];
                }
                prod *= cpd.at(flat_index(cpd.parent_scope(), sub), ca[k]);
            }
            values[r * nc + c] = prod;
        }
    }
    return Cpd(child, parent, std::move(values), 1e-9);
}

// ---------------------------------------------------------------------------
// Model file format (JSON)
// ---------------------------------------------------------------------------

inline Cpd parse_cpd_rows(const Scope& child, const Scope& parent, const nlohmann::json& rows,
                          const std::string& what) {
    std::size_t np = scope_cells(parent), nc = scope_cells(child);
    if (!rows.is_array() || rows.size() != np)
        throw ValidationError(what + ": expected " + std::to_string(np) + " rows, got " +
                              std::to_string(rows.size()));
    std::vector<double> flat;
    flat.reserve(np * nc);
    for (std::size_t r = 0; r < np; ++r) {
        const auto& row = rows[r];
        if (!row.is_array() || row.size() != nc)
            throw ValidationError(what + ": row " + std::to_string(r) + " has wrong length");
        double sum = 0.0;
        for (const auto& v : row) sum += v.get<double>();
        if (std::abs(sum - 1.0) > 1e-6)
            throw ValidationError(what + ": row " + std::to_string(r) + " sums to " +
                                  std::to_string(sum) + ", not 1");
        for (const auto& v : row) flat.push_back(v.get<double>());
    }
    return Cpd(child, parent, std::move(flat), 1e-6);
}

inline DbnModel parse_model(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("model syntax error: ") + e.what());
    }
    std::vector<VariableSpec> vars;
    for (const auto& v : doc.at("variables"))
        vars.push_back({v.at("name").get<std::string>(), v.at("card").get<int>()});
    Scope state_scope = vars;

    Factorization fact;
    for (const auto& f : doc.at("factorization"))
        fact.factors.push_back(f.get<std::vector<std::string>>());

    auto lookup = [&](const std::string& name) -> VariableSpec {
        auto p = find_var(state_scope, name);
        if (!p) throw ValidationError("unknown variable '" + name + "'");
        return state_scope[*p];
    };

    std::map<std::string, Cpd> by_child;
    for (const auto& t : doc.at("transition")) {
        std::string child = t.at("child").get<std::string>();
        Scope parent;
        for (const auto& p : t.at("parents")) parent.push_back(lookup(p.get<std::string>()));
        by_child.emplace(child, parse_cpd_rows({lookup(child)}, parent, t.at("table"),
                                               "transition for '" + child + "'"));
    }
    std::vector<Cpd> transition;
    for (const auto& v : vars) {
        auto it = by_child.find(v.name);
        if (it == by_child.end())
            throw ValidationError("no transition CPD for variable '" + v.name + "'");
        transition.push_back(it->second);
        by_child.erase(it);
    }
    if (!by_child.empty())
        throw ValidationError("transition CPD for unknown variable '" + by_child.begin()->first + "'");

    std::vector<ObservationVar> observations;
    if (doc.contains("observations"))
        for (const auto& o : doc.at("observations")) {
            VariableSpec ov{o.at("name").get<std::string>(), o.at("card").get<int>()};
            Scope parent;
            for (const auto& p : o.at("parents")) parent.push_back(lookup(p.get<std::string>()));
            observations.push_back(
                {ov, parse_cpd_rows({ov}, parent, o.at("table"), "observation '" + ov.name + "'")});
        }

    Prior prior;
    const auto& pj = doc.at("prior");
    std::string ptype = pj.at("type").get<std::string>();
    if (ptype == "product") {
        prior.product_form = true;
        for (std::size_t f = 0; f < fact.factors.size(); ++f) {
            Scope fs;
            for (const auto& name : fact.factors[f]) fs.push_back(lookup(name));
            const auto& tbl = pj.at("tables").at(std::to_string(f));
            prior.factor_tables.emplace_back(fs, tbl.get<std::vector<double>>(), 1e-6);
        }
    } else if (ptype == "joint") {
        prior.product_form = false;
        prior.joint = Categorical(state_scope, pj.at("table").get<std::vector<double>>(), 1e-6);
    } else {
        throw ValidationError("prior type must be 'product' or 'joint'");
    }
    return DbnModel(std::move(vars), std::move(transition), std::move(observations), std::move(fact),
                    std::move(prior));
}

inline nlohmann::json cpd_rows_json(const Cpd& c) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < c.n_rows(); ++r) {
        auto s = c.row_span(r);
        rows.push_back(std::vector<double>(s.begin(), s.end()));
    }
    return rows;
}

inline std::string serialize_model(const DbnModel& m) {
    nlohmann::json doc;
    doc["variables"] = nlohmann::json::array();
    for (const auto& v : m.state_vars()) doc["variables"].push_back({{"name", v.name}, {"card", v.card}});
    doc["factorization"] = m.factorization().factors;
    doc["transition"] = nlohmann::json::array();
    for (std::size_t v = 0; v < m.state_vars().size(); ++v) {
        const Cpd& c = m.transition()[v];
        std::vector<std::string> parents;
        for (const auto& p : c.parent_scope()) parents.push_back(p.name);
        doc["transition"].push_back({{"child", m.state_vars()[v].name},
                                     {"parents", parents},
                                     {"table", cpd_rows_json(c)}});
    }
    doc["observations"] = nlohmann::json::array();
    for (const auto& o : m.observations()) {
        std::vector<std::string> parents;
        for (const auto& p : o.cpd.parent_scope()) parents.push_back(p.name);
        doc["observations"].push_back({{"name", o.var.name},
                                       {"card", o.var.card},
                                       {"parents", parents},
                                       {"table", cpd_rows_json(o.cpd)}});
    }
    if (m.prior().product_form) {
        nlohmann::json tables = nlohmann::json::object();
        for (std::size_t f = 0; f < m.prior().factor_tables.size(); ++f)
            tables[std::to_string(f)] = m.prior().factor_tables[f].values();
        doc["prior"] = {{"type", "product"}, {"tables", tables}};
    } else {
        doc["prior"] = {{"type", "joint"}, {"table", m.prior().joint->values()}};
    }
    return doc.dump(2);
}

}  // namespace sepdbn
