#include <catch_amalgamated.hpp>

#include "sepdbn/prob.hpp"

using namespace sepdbn;

namespace {
const VariableSpec X{"X", 2}, Y{"Y", 3}, Z{"Z", 2};
}

TEST_CASE("flat indexing round-trips with last variable fastest") {
    Scope s{X, Y, Z};
    REQUIRE(scope_cells(s) == 12);
    for (std::size_t idx = 0; idx < 12; ++idx) {
        auto a = assignment_of(s, idx);
        REQUIRE(flat_index(s, a) == idx);
    }
    // (x, y, z) = (1, 2, 0) -> 1*6 + 2*2 + 0
    std::vector<int> a{1, 2, 0};
    REQUIRE(flat_index(s, a) == 10);
}

TEST_CASE("categorical validation") {
    REQUIRE_THROWS_AS(Categorical({X}, {0.5, 0.6}), ValidationError);
    REQUIRE_THROWS_AS(Categorical({X}, {-0.1, 1.1}), ValidationError);
    REQUIRE_THROWS_AS(Categorical({{"B", 1}}, {1.0}), ValidationError);
    REQUIRE_THROWS_AS(Categorical::normalized({X}, {0.0, 0.0}), ZeroNormalizerError);
    Categorical c = Categorical::normalized({X}, {1.0, 3.0});
    REQUIRE(c.at(0) == Catch::Approx(0.25));
    REQUIRE(c.at(1) == Catch::Approx(0.75));
}

TEST_CASE("product then marginalize recovers the factors") {
    Categorical a({X}, {0.3, 0.7});
    Categorical b({Y}, {0.2, 0.5, 0.3});
    Categorical j = product(a, b);
    REQUIRE(j.scope().size() == 2);
    Categorical ma = marginalize(j, std::vector<std::string>{"X"});
    Categorical mb = marginalize(j, std::vector<std::string>{"Y"});
    for (std::size_t i = 0; i < 2; ++i) REQUIRE(ma.at(i) == Catch::Approx(a.at(i)));
    for (std::size_t i = 0; i < 3; ++i) REQUIRE(mb.at(i) == Catch::Approx(b.at(i)));
    // marginalize also reorders
    Categorical swapped = marginalize(j, std::vector<std::string>{"Y", "X"});
    std::vector<int> yx{2, 1}, xy{1, 2};
    REQUIRE(swapped.at(yx) == Catch::Approx(j.at(xy)));
}

TEST_CASE("apply_cpd mixes rows by the parent distribution") {
    Cpd c({Z}, {X}, {0.8, 0.2, 0.3, 0.7});
    Categorical pi({X}, {0.5, 0.5});
    Categorical out = apply_cpd(c, pi);
    REQUIRE(out.at(0) == Catch::Approx(0.55));
    REQUIRE(out.at(1) == Catch::Approx(0.45));
}

TEST_CASE("apply_cpd_signed is the linear extension") {
    Cpd c({Z}, {X}, {0.8, 0.2, 0.3, 0.7});
    Categorical p1({X}, {0.6, 0.4}), p2({X}, {0.1, 0.9});
    auto lhs = apply_cpd_signed(c, table_difference(p1, p2));
    Categorical o1 = apply_cpd(c, p1), o2 = apply_cpd(c, p2);
    for (std::size_t i = 0; i < 2; ++i) REQUIRE(lhs[i] == Catch::Approx(o1.at(i) - o2.at(i)));
}

TEST_CASE("condition applies Bayes rule") {
    Categorical prior({X}, {0.5, 0.5});
    Cpd obs({Z}, {X}, {0.8, 0.2, 0.2, 0.8});
    Categorical post = condition(prior, obs, 1);
    REQUIRE(post.at(0) == Catch::Approx(0.2));
    REQUIRE(post.at(1) == Catch::Approx(0.8));
    Cpd impossible({Z}, {X}, {1.0, 0.0, 1.0, 0.0});
    REQUIRE_THROWS_AS(condition(prior, impossible, 1), ZeroNormalizerError);
}

TEST_CASE("kl basics") {
    Categorical p({X}, {0.3, 0.7}), q({X}, {0.6, 0.4});
    REQUIRE(kl(p, p) == 0.0);
    double expected = 0.3 * std::log(0.3 / 0.6) + 0.7 * std::log(0.7 / 0.4);
    REQUIRE(kl(p, q) == Catch::Approx(expected));
    Categorical zero({X}, {0.0, 1.0});
    REQUIRE(kl(zero, q) == Catch::Approx(std::log(1.0 / 0.4)));
    REQUIRE_THROWS_AS(kl(q, zero), ValidationError);
}

TEST_CASE("dependence vanishes exactly on product distributions") {
    Categorical a({X}, {0.3, 0.7});
    Categorical b({Z}, {0.9, 0.1});
    Categorical j = product(a, b);
    SignedTable d = dependence(j, {{0}, {1}});
    for (double v : d.values) REQUIRE(std::abs(v) < 1e-15);

    Categorical corr({X, Z}, {0.4, 0.1, 0.1, 0.4});
    SignedTable dc = dependence(corr, {{0}, {1}});
    REQUIRE(dc.values[0] == Catch::Approx(0.4 - 0.25));
    double sum = 0.0;
    for (double v : dc.values) sum += v;
    REQUIRE(std::abs(sum) < 1e-12);
}
