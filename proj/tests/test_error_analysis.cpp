#include <catch_amalgamated.hpp>

#include "sepdbn/error_analysis.hpp"
#include "sepdbn/experiments.hpp"

using namespace sepdbn;

namespace {

TwoChainSystem fixed_system() {
    VariableSpec X{"X", 2}, Y{"Y", 2}, Z{"Z", 2};
    auto c = [&](const VariableSpec& ch, const VariableSpec& pa, double p0, double p1) {
        return Cpd({ch}, {pa}, {1 - p0, p0, 1 - p1, p1});
    };
    return TwoChainSystem{0.7,
                          0.4,
                          c(X, X, 0.2, 0.9),   // P_X^X(x2|x1)=0.2, P_X^X(x2|x2)=0.9
                          c(X, Y, 0.3, 0.6),
                          c(Y, X, 0.5, 0.8),
                          c(Y, Y, 0.1, 0.7),
                          c(Z, Y, 0.25, 0.85)};
}

}  // namespace

TEST_CASE("bound quantities match a hand computation") {
    TwoChainSystem sys = fixed_system();
    BoundQuantities q = bound_quantities(sys);
    REQUIRE(q.lambda_x_x == Catch::Approx(0.7));
    REQUIRE(q.lambda_x_y == Catch::Approx(0.3));
    REQUIRE(q.lambda_y_x == Catch::Approx(0.3));
    REQUIRE(q.lambda_y_y == Catch::Approx(0.6));
    REQUIRE(q.lambda_z == Catch::Approx(0.6));
    REQUIRE(q.lambda_xy_x == Catch::Approx(std::abs(0.9 * 0.8 - 0.2 * 0.5)));
    REQUIRE(q.lambda_xy_y == Catch::Approx(std::abs(0.6 * 0.7 - 0.3 * 0.1)));
    REQUIRE(q.zeta_x ==
            Catch::Approx(std::max(0.7, 0.6 * (0.7 - 2 * q.lambda_xy_x + 2 * 0.3))));
    double L = 0.7 * 0.4 * 0.7 * 0.3 + 0.3 * 0.6 * 0.3 * 0.6;
    REQUIRE(q.L == Catch::Approx(L));
    double M = 0.7 * 0.6 * 0.7 * 0.6 + 0.3 * 0.4 * 0.3 * 0.3;
    REQUIRE(q.M == Catch::Approx(M));
}

TEST_CASE("the two zeta readings differ only in the final term") {
    TwoChainSystem sys = fixed_system();
    BoundQuantities ap = bound_quantities(sys, TypoReading::AsPrinted);
    BoundQuantities sym = bound_quantities(sys, TypoReading::Symmetric);
    double lz = ap.lambda_z;
    REQUIRE(ap.zeta_y ==
            Catch::Approx(std::max(ap.lambda_y_y,
                                   lz * (ap.lambda_y_y - 2 * ap.lambda_xy_y + 2 * ap.lambda_y_y))));
    REQUIRE(sym.zeta_y ==
            Catch::Approx(std::max(sym.lambda_y_y,
                                   lz * (sym.lambda_y_y - 2 * sym.lambda_xy_y + 2 * sym.lambda_x_y))));
}

TEST_CASE("decoupled chains have no factored-filtering error at all") {
    TwoChainSystem sys = fixed_system();
    sys.gamma_x = 1.0;  // X depends only on X-
    sys.gamma_y = 0.0;  // Y depends only on Y-
    DbnModel m = induced_model(sys);
    Trajectory traj = sample_trajectory(m, 15, 3);
    DecompositionResult dec = run_error_decomposition(m, traj);
    for (const auto& s : dec.steps) {
        REQUIRE(s.kl_total < 1e-12);
        REQUIRE(s.kl_type_a < 1e-12);
        REQUIRE(s.kl_type_b < 1e-12);
    }
}

TEST_CASE("separable systems have no propagation-only error") {
    for (int s = 0; s < 4; ++s) {
        TwoChainSystem sys = generate_two_chain_system(600 + s);
        DbnModel m = induced_model(sys);
        Trajectory traj = sample_trajectory(m, 15, s);
        DecompositionResult dec = run_error_decomposition(m, traj);
        for (const auto& st : dec.steps) REQUIRE(st.kl_type_a < 1e-9);
    }
}

TEST_CASE("error decomposition tracks plain filtering on a coupled model") {
    DbnModel m = generate_figure1_model(0.4, 808);
    Trajectory traj = sample_trajectory(m, 15, 9);
    DecompositionResult dec = run_error_decomposition(m, traj);
    REQUIRE(dec.steps.size() == 14);
    for (const auto& s : dec.steps) {
        REQUIRE(s.kl_total >= 0.0);
        REQUIRE(s.kl_type_a >= 0.0);
        REQUIRE(s.kl_type_b >= 0.0);
    }
}

TEST_CASE("exhaustive and Monte-Carlo expected errors agree") {
    TwoChainSystem sys = generate_two_chain_system(12);
    DbnModel m = induced_model(sys);
    std::size_t T = 5;
    ExpectedErrors exact = expected_errors(m, T);
    McErrors mc = mc_expected_delta_x(m, 4000, T, 77);
    for (std::size_t t = 0; t < exact.marginal_x.size(); ++t) {
        double tol = 3.0 * mc.stderr_[t] + 1e-9;
        REQUIRE(std::abs(exact.marginal_x[t] - mc.mean[t]) <= tol);
    }
}

TEST_CASE("bound is finite and nonnegative when applicable") {
    std::size_t applicable = 0;
    for (int s = 0; s < 50; ++s) {
        TwoChainSystem sys = generate_two_chain_system(7000 + s);
        Theorem61Bound b = theorem61_bound(sys);
        if (!b.applicable) continue;
        ++applicable;
        REQUIRE(std::isfinite(b.H));
        REQUIRE(b.H >= 0.0);
        REQUIRE(b.J >= 0.0);
        REQUIRE(b.K >= 0.0);
    }
    REQUIRE(applicable > 10);
}
