#include <catch_amalgamated.hpp>

#include "sepdbn/generators.hpp"
#include "sepdbn/rng.hpp"
#include "sepdbn/separability.hpp"

using namespace sepdbn;

namespace {

const VariableSpec Xv{"X", 2};

/// The worked 2x2 example: X tends to copy X-, with Y-'s influence flipped
/// by X-. Parent order (X-, Y-), child values (F, T).
Cpd example33() {
    return Cpd::from_rows({Xv}, {{"Xp", 2}, {"Yp", 2}},
                          {{0.9, 0.1}, {0.99, 0.01}, {0.1, 0.9}, {0.01, 0.99}});
}

/// The 16-row four-parent table from the six-node model, parent order
/// (X-, Y-, Z-, W-).
Cpd example41_x_table() {
    DbnModel m = generate_example41_model();
    return m.transition()[m.var_index("X")];
}

Cpd random_cpd(Rng& rng, Scope child, Scope parent) {
    std::size_t nc = scope_cells(child), np = scope_cells(parent);
    std::vector<double> flat(nc * np);
    for (std::size_t r = 0; r < np; ++r) {
        double sum = 0.0;
        for (std::size_t i = 0; i < nc; ++i) {
            flat[r * nc + i] = rng.u01() + 1e-6;
            sum += flat[r * nc + i];
        }
        for (std::size_t i = 0; i < nc; ++i) flat[r * nc + i] /= sum;
    }
    return Cpd(std::move(child), std::move(parent), std::move(flat), 1e-9);
}

}  // namespace

TEST_CASE("worked 2x2 example: closed form") {
    Cpd c = example33();
    Grouping g{{{0}, {1}}};
    auto [d, trace] = degree_case1(c, g);
    REQUIRE(d.alpha == Catch::Approx(0.91).margin(1e-12));
    REQUIRE(trace.deviations[0] == Catch::Approx(-0.18).margin(1e-12));
    REQUIRE(d.residual.has_value());
    // XOR residual in the first child value
    const Cpd& r = *d.residual;
    REQUIRE(r.at(0, 0) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(r.at(0, 1) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(r.at(1, 0) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(r.at(2, 0) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(r.at(3, 0) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(reconstruction_error(c, g, d) < 1e-9);
}

TEST_CASE("worked 2x2 example: LP agrees") {
    Cpd c = example33();
    Grouping g{{{0}, {1}}};
    SeparableDecomposition d = degree_lp(c, g);
    REQUIRE(d.alpha == Catch::Approx(0.91).margin(1e-6));
    REQUIRE(reconstruction_error(c, g, d) < 1e-7);
}

TEST_CASE("four-parent table: degree depends on the grouping") {
    Cpd c = example41_x_table();
    // parent order (X-, Y-, Z-, W-)
    Grouping sep = make_grouping(c, {{"X", "W"}, {"Y", "Z"}});
    Grouping bad = make_grouping(c, {{"W"}, {"X", "Y", "Z"}});

    SeparableDecomposition d1 = degree_lp(c, sep);
    REQUIRE(d1.alpha == Catch::Approx(1.0).margin(1e-6));
    REQUIRE_FALSE(d1.residual.has_value());

    SeparableDecomposition d2 = degree_lp(c, bad);
    REQUIRE(d2.alpha == Catch::Approx(0.6).margin(1e-6));

    auto [d3, trace] = degree_case3(c, bad);
    REQUIRE(d3.alpha == Catch::Approx(0.6).margin(1e-9));
    REQUIRE(trace.c_star + trace.c_substar == Catch::Approx(0.8).margin(1e-12));
    REQUIRE(reconstruction_error(c, bad, d3) < 1e-9);
}

TEST_CASE("case 3 degree is invariant under reordering the wide group") {
    Rng rng(5150);
    VariableSpec Yw{"Yw", 4};
    for (int trial = 0; trial < 20; ++trial) {
        Cpd c = random_cpd(rng, {Xv}, {{"A", 2}, {"Yw", 4}});
        Grouping g{{{0}, {1}}};
        auto [d, t] = degree_case3(c, g);
        // permute the wide parent's values
        std::vector<int> perm{2, 0, 3, 1};
        std::vector<double> flat(c.values().size());
        for (int a = 0; a < 2; ++a)
            for (int y = 0; y < 4; ++y)
                for (int i = 0; i < 2; ++i)
                    flat[(a * 4 + perm[y]) * 2 + i] = c.at(a * 4 + y, i);
        Cpd cp({Xv}, c.parent_scope(), std::move(flat), 1e-9);
        auto [dp, tp] = degree_case3(cp, g);
        REQUIRE(dp.alpha == Catch::Approx(d.alpha).margin(1e-9));
    }
}

TEST_CASE("closed forms agree with the LP on random tables") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        Cpd c1 = random_cpd(rng, {Xv}, {{"A", 2}, {"B", 2}});
        Grouping g{{{0}, {1}}};
        auto [d1, t1] = degree_case1(c1, g);
        REQUIRE(degree_lp(c1, g).alpha == Catch::Approx(d1.alpha).margin(1e-6));
        REQUIRE(reconstruction_error(c1, g, d1) < 1e-8);

        Cpd c2 = random_cpd(rng, {{"Z4", 4}}, {{"A", 2}, {"B", 2}});
        auto [d2, t2] = degree_case2(c2, g);
        REQUIRE(degree_lp(c2, g).alpha == Catch::Approx(d2.alpha).margin(1e-6));
        REQUIRE(reconstruction_error(c2, g, d2) < 1e-8);

        Cpd c3 = random_cpd(rng, {Xv}, {{"A", 2}, {"B", 3}});
        auto [d3, t3] = degree_case3(c3, g);
        REQUIRE(degree_lp(c3, g).alpha == Catch::Approx(d3.alpha).margin(1e-6));
        REQUIRE(reconstruction_error(c3, g, d3) < 1e-8);
    }
}

TEST_CASE("mixing a separable table with XOR gives degree alpha") {
    for (int s = 0; s < 10; ++s)
        for (int k = 0; k <= 10; ++k) {
            double alpha = k / 10.0;
            DbnModel m = generate_figure1_model(alpha, 1000 + s);
            Grouping g{{{0}, {1}}};
            auto [d, t] = degree_case1(m.transition()[0], g);
            REQUIRE(d.alpha == Catch::Approx(alpha).margin(1e-9));
        }
}

TEST_CASE("persistence decomposition of the worked example") {
    Cpd c = example33();
    PersistenceResult res = persistence(c, 0);
    REQUIRE(res.kappa == Catch::Approx(0.9).margin(1e-12));
    REQUIRE(res.residual.has_value());
    const Cpd& r = *res.residual;
    REQUIRE(r.at(0, 0) == Catch::Approx(0.0));
    REQUIRE(r.at(1, 0) == Catch::Approx(0.9));
    REQUIRE(r.at(2, 0) == Catch::Approx(1.0));
    REQUIRE(r.at(3, 1) == Catch::Approx(0.9));
    // kappa * I + (1 - kappa) * residual reconstructs the input
    for (std::size_t row = 0; row < 4; ++row)
        for (int i = 0; i < 2; ++i) {
            double ident = (static_cast<int>(row >> 1) == i) ? 1.0 : 0.0;
            REQUIRE(res.kappa * ident + (1 - res.kappa) * r.at(row, i) ==
                    Catch::Approx(c.at(row, i)));
        }
}

TEST_CASE("persistence lower-bounds the degree of separability") {
    Rng rng(31337);
    for (int trial = 0; trial < 30; ++trial) {
        // bias toward persistence so kappa is not trivially tiny
        Cpd raw = random_cpd(rng, {Xv}, {{"X", 2}, {"Y", 2}});
        std::vector<double> flat(raw.values());
        for (std::size_t row = 0; row < 4; ++row) {
            int self = static_cast<int>(row >> 1);
            for (int i = 0; i < 2; ++i)
                flat[row * 2 + i] = 0.3 * raw.at(row, i) + 0.7 * (i == self ? 1.0 : 0.0);
        }
        Cpd c({Xv}, raw.parent_scope(), std::move(flat), 1e-9);
        PersistenceResult p = persistence(c, 0);
        auto [d, t] = degree_case1(c, Grouping{{{0}, {1}}});
        REQUIRE(d.alpha >= p.kappa - 1e-9);
    }
}

TEST_CASE("sufficiency witness exists exactly for non-separable tables") {
    // depends on X only: sufficient for any split
    Cpd sep = Cpd::from_rows({Xv}, {{"A", 2}, {"B", 2}},
                             {{0.8, 0.2}, {0.8, 0.2}, {0.3, 0.7}, {0.3, 0.7}});
    REQUIRE_FALSE(sufficiency_witness(sep, Grouping{{{0}, {1}}}).has_value());

    // XOR: not sufficient; images of the witness pair must differ
    Cpd x = Cpd::from_rows({Xv}, {{"A", 2}, {"B", 2}},
                           {{1, 0}, {0, 1}, {0, 1}, {1, 0}});
    auto w = sufficiency_witness(x, Grouping{{{0}, {1}}});
    REQUIRE(w.has_value());
    Categorical o1 = apply_cpd(x, w->pi1), o2 = apply_cpd(x, w->pi2);
    REQUIRE(linf(o1, o2) > 1e-6);
    // same group marginals
    for (const std::string& n : {"A", "B"}) {
        Categorical m1 = marginalize(w->pi1, std::vector<std::string>{n});
        Categorical m2 = marginalize(w->pi2, std::vector<std::string>{n});
        REQUIRE(linf(m1, m2) < 1e-12);
    }
}

TEST_CASE("self-sufficiency of the six-node model factorizations") {
    DbnModel m = generate_example41_model();
    auto pair_rep = is_self_sufficient(m, example41_pair_factorization());
    REQUIRE(pair_rep.self_sufficient);
    for (double d : pair_rep.factor_degrees) REQUIRE(d == Catch::Approx(1.0).margin(1e-6));

    auto obv_rep = is_self_sufficient(m, example41_obvious_factorization());
    REQUIRE_FALSE(obv_rep.self_sufficient);
    REQUIRE(obv_rep.factor_degrees.size() == 2);
    for (double d : obv_rep.factor_degrees) REQUIRE(d == Catch::Approx(0.6).margin(1e-6));
}

TEST_CASE("factorization search ranks the separable split first") {
    DbnModel m = generate_example41_model();
    auto scored = search_factorization(m, 2);
    REQUIRE(!scored.empty());
    REQUIRE(scored[0].min_degree == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(scored[0].factorization.factors ==
            example41_pair_factorization().factors);
}

TEST_CASE("grouping validation") {
    Cpd c = example33();
    REQUIRE_THROWS_AS(check_grouping(c, Grouping{{{0}}}), ValidationError);
    REQUIRE_THROWS_AS(check_grouping(c, Grouping{{{0}, {0}}}), ValidationError);
    REQUIRE_THROWS_AS(make_grouping(c, {{"Xp"}, {"Nope"}}), ValidationError);
}
