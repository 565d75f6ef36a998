#include <catch_amalgamated.hpp>

#include "sepdbn/filtering.hpp"
#include "sepdbn/generators.hpp"

using namespace sepdbn;

namespace {

/// Single binary chain that keeps its value with probability 0.9, observed
/// through a symmetric channel with accuracy 0.8.
DbnModel sticky_chain() {
    VariableSpec X{"X", 2}, Z{"Z", 2};
    Cpd tx({X}, {X}, {0.9, 0.1, 0.1, 0.9});
    Cpd oz({Z}, {X}, {0.8, 0.2, 0.2, 0.8});
    Prior prior;
    prior.product_form = true;
    prior.factor_tables = {Categorical::uniform({X})};
    return DbnModel({X}, {tx}, {{Z, oz}}, Factorization{{{"X"}}}, prior);
}

DbnModel single_factor_variant(const DbnModel& m) {
    Prior prior;
    prior.product_form = false;
    prior.joint = m.prior_joint();
    std::vector<std::string> all;
    for (const auto& v : m.state_vars()) all.push_back(v.name);
    return DbnModel(m.state_vars(), m.transition(), m.observations(), Factorization{{all}}, prior);
}

}  // namespace

TEST_CASE("filter step matches a hand computation") {
    DbnModel m = sticky_chain();
    Categorical prior = m.prior_joint();
    // uniform prior stays uniform under prediction; observing z = 1 gives (0.2, 0.8)
    Categorical pred = exact_predict_step(m, prior);
    REQUIRE(pred.at(0) == Catch::Approx(0.5));
    std::vector<int> obs{1};
    Categorical post = exact_filter_step(m, prior, obs);
    REQUIRE(post.at(0) == Catch::Approx(0.2));
    REQUIRE(post.at(1) == Catch::Approx(0.8));
    // second step: predict (0.2,0.8) -> (0.26,0.74); observe 1 again
    Categorical post2 = exact_filter_step(m, post, obs);
    double p0 = 0.26 * 0.2, p1 = 0.74 * 0.8;
    REQUIRE(post2.at(1) == Catch::Approx(p1 / (p0 + p1)));
}

TEST_CASE("single-factor filtering is exact") {
    DbnModel base = generate_figure1_model(0.3, 42);
    DbnModel m = single_factor_variant(base);
    Trajectory traj = sample_trajectory(m, 12, 7);
    Categorical exact = m.prior_joint();
    FactoredBelief approx = prior_belief(m);
    for (std::size_t t = 1; t < traj.states.size(); ++t) {
        exact = exact_filter_step(m, exact, traj.observations[t]);
        approx = bk_step(m, approx, traj.observations[t]);
        REQUIRE(linf(exact, belief_joint(m, approx)) < 1e-12);
    }
}

TEST_CASE("prediction is exact for fully separable models") {
    for (int s = 0; s < 5; ++s) {
        DbnModel m = generate_figure1_model(1.0, 900 + s);
        Trajectory traj = sample_trajectory(m, 30, s);
        ComparisonResult res = run_comparison(m, traj, Task::Prediction);
        for (const auto& e : res.steps)
            for (double k : e.factor_kl) REQUIRE(k < 1e-9);
    }
}

TEST_CASE("monitoring on a coupled model accumulates bounded error") {
    DbnModel m = generate_figure1_model(0.5, 4242);
    Trajectory traj = sample_trajectory(m, 20, 11);
    ComparisonResult res = run_comparison(m, traj, Task::Monitoring);
    REQUIRE(res.steps.size() == 19);
    for (const auto& e : res.steps) {
        REQUIRE(e.kl_joint >= 0.0);
        REQUIRE(e.designated_abs <= 1.0);
        REQUIRE(e.dep_approx >= 0.0);
    }
}

TEST_CASE("trajectory sampling is deterministic and follows the dynamics") {
    DbnModel m = sticky_chain();
    Trajectory a = sample_trajectory(m, 50, 123);
    Trajectory b = sample_trajectory(m, 50, 123);
    REQUIRE(a.states == b.states);
    REQUIRE(a.observations == b.observations);
    REQUIRE(sample_trajectory(m, 50, 124).states != a.states);

    // long-run occupancy of the symmetric sticky chain is about one half
    Trajectory longtraj = sample_trajectory(m, 20000, 5);
    double ones = 0;
    for (std::size_t s : longtraj.states) ones += static_cast<double>(s);
    REQUIRE(ones / 20000.0 == Catch::Approx(0.5).margin(0.03));
}

TEST_CASE("impossible evidence raises with a zero normalizer") {
    VariableSpec X{"X", 2}, Z{"Z", 2};
    Cpd tx({X}, {X}, {1.0, 0.0, 0.0, 1.0});
    Cpd oz({Z}, {X}, {1.0, 0.0, 1.0, 0.0});  // Z is always 0
    Prior prior;
    prior.product_form = true;
    prior.factor_tables = {Categorical::uniform({X})};
    DbnModel m({X}, {tx}, {{Z, oz}}, Factorization{{{"X"}}}, prior);
    std::vector<int> obs{1};
    REQUIRE_THROWS_AS(exact_filter_step(m, m.prior_joint(), obs), ZeroNormalizerError);
}
