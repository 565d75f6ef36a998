#include <catch_amalgamated.hpp>

#include "sepdbn/simplex.hpp"

using namespace sepdbn::lp;

TEST_CASE("simplex solves a small bounded program") {
    // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6
    Simplex s({{1, 1}, {1, 3}}, {4, 6}, {3, 2});
    Solution sol = s.solve();
    REQUIRE(sol.status == Status::Optimal);
    REQUIRE(sol.objective == Catch::Approx(12.0));
    REQUIRE(sol.x[0] == Catch::Approx(4.0));
    REQUIRE(sol.x[1] == Catch::Approx(0.0));
}

TEST_CASE("simplex detects infeasibility") {
    // x <= 1 and x >= 2
    Simplex s({{1}, {-1}}, {1, -2}, {1});
    REQUIRE(s.solve().status == Status::Infeasible);
}

TEST_CASE("simplex detects unboundedness") {
    Simplex s({{-1}}, {0}, {1});
    REQUIRE(s.solve().status == Status::Unbounded);
}

TEST_CASE("builder equality rows bind") {
    ProblemBuilder pb(2);
    pb.set_objective(0, 1.0);
    pb.add_eq({1, 1}, 1.0);
    pb.add_le({1, 0}, 0.7);
    Solution sol = pb.maximize();
    REQUIRE(sol.status == Status::Optimal);
    REQUIRE(sol.objective == Catch::Approx(0.7));
    REQUIRE(sol.x[0] + sol.x[1] == Catch::Approx(1.0));
}

TEST_CASE("degenerate and tight problems stay stable") {
    // max x + y + z on the probability simplex intersected with x = y
    ProblemBuilder pb(3);
    pb.set_objective(0, 1.0);
    pb.set_objective(1, 1.0);
    pb.set_objective(2, 1.0);
    pb.add_eq({1, 1, 1}, 1.0);
    pb.add_eq({1, -1, 0}, 0.0);
    Solution sol = pb.maximize();
    REQUIRE(sol.status == Status::Optimal);
    REQUIRE(sol.objective == Catch::Approx(1.0));
    REQUIRE(sol.x[0] == Catch::Approx(sol.x[1]));
}
