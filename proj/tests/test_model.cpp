#include <catch_amalgamated.hpp>

#include "sepdbn/generators.hpp"
#include "sepdbn/model.hpp"

using namespace sepdbn;

TEST_CASE("model serialization round-trips byte-exactly") {
    DbnModel m = generate_example41_model();
    std::string s1 = serialize_model(m);
    DbnModel m2 = parse_model(s1);
    REQUIRE(serialize_model(m2) == s1);

    DbnModel f = generate_figure1_model(0.37, 123);
    std::string fs = serialize_model(f);
    REQUIRE(serialize_model(parse_model(fs)) == fs);
}

TEST_CASE("bad rows are rejected with the offending child and row") {
    DbnModel m = generate_figure1_model(0.5, 1);
    nlohmann::json doc = nlohmann::json::parse(serialize_model(m));
    doc["transition"][0]["table"][2] = {0.5, 0.6};
    try {
        parse_model(doc.dump());
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        REQUIRE(msg.find("'X'") != std::string::npos);
        REQUIRE(msg.find("row 2") != std::string::npos);
    }
}

TEST_CASE("structural validation") {
    DbnModel m = generate_figure1_model(0.5, 1);
    nlohmann::json doc = nlohmann::json::parse(serialize_model(m));

    SECTION("unknown parent") {
        doc["transition"][0]["parents"][0] = "Q";
        REQUIRE_THROWS_AS(parse_model(doc.dump()), ValidationError);
    }
    SECTION("factorization must partition the state variables") {
        doc["factorization"] = {{"X"}};
        REQUIRE_THROWS_AS(parse_model(doc.dump()), ValidationError);
    }
    SECTION("missing transition") {
        doc["transition"].erase(1);
        REQUIRE_THROWS_AS(parse_model(doc.dump()), ValidationError);
    }
    SECTION("syntax errors surface as validation errors") {
        REQUIRE_THROWS_AS(parse_model("{ not json"), ValidationError);
    }
}

TEST_CASE("compiled tables agree with the raw CPDs") {
    DbnModel m = generate_figure1_model(0.42, 77);
    std::vector<int> a(2);
    for (std::size_t idx = 0; idx < m.n_states(); ++idx) {
        unflatten(m.state_scope(), idx, a);
        for (std::size_t v = 0; v < 2; ++v)
            for (int val = 0; val < 2; ++val)
                REQUIRE(m.trans_prob(v, idx, val) ==
                        Catch::Approx(m.transition()[v].at(idx, val)));
    }
}

TEST_CASE("uniform product prior yields the uniform joint") {
    DbnModel m = generate_example41_model();
    Categorical j = m.prior_joint();
    for (std::size_t i = 0; i < j.size(); ++i) REQUIRE(j.at(i) == Catch::Approx(1.0 / 64.0));
}

TEST_CASE("factor transition CPD is the product of its members") {
    DbnModel m = generate_example41_model();
    Factorization f = example41_pair_factorization();
    Cpd fc = factor_transition_cpd(m, f, 0);  // factor {U, V}
    REQUIRE(fc.child_scope().size() == 2);
    // U and V depend on U-, V-, W-; the widened parents are factors {U,V} and {W,X}
    REQUIRE(fc.parent_scope().size() == 4);

    const Cpd& tu = m.transition()[m.var_index("U")];
    const Cpd& tv = m.transition()[m.var_index("V")];
    std::vector<int> pa(fc.parent_scope().size());
    for (std::size_t r = 0; r < fc.n_rows(); ++r) {
        unflatten(fc.parent_scope(), r, pa);
        std::vector<int> sub(3);
        for (std::size_t j = 0; j < 3; ++j) {
            auto pos = find_var(fc.parent_scope(), tu.parent_scope()[j].name);
            sub[j] = pa[*pos];
        }
        std::size_t row = flat_index(tu.parent_scope(), sub);
        for (int u = 0; u < 2; ++u)
            for (int v = 0; v < 2; ++v) {
                std::vector<int> c{u, v};
                REQUIRE(fc.at(r, flat_index(fc.child_scope(), c)) ==
                        Catch::Approx(tu.at(row, u) * tv.at(row, v)));
            }
    }
}
