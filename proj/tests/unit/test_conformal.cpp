#include "support.hpp"

#include "synthctl/conformal.hpp"
#include "synthctl/rng.hpp"
#include "synthctl/simlab.hpp"

#include <algorithm>
#include <cmath>

using namespace synthctl;
using testing::code_of;

namespace {

// Enumerates all T rotations directly.
double rotation_oracle(const Eigen::VectorXd& u, Index t0) {
    const Index t = u.size();
    auto stat = [&](Index shift) {
        double s = 0.0;
        for (Index pos = t0; pos < t; ++pos) s += std::abs(u((pos + shift) % t));
        return s / static_cast<double>(t - t0);
    };
    const double observed = stat(0);
    int count = 0;
    for (Index j = 0; j < t; ++j) count += stat(j) >= observed - 1e-12 * std::abs(observed);
    return static_cast<double>(count) / static_cast<double>(t);
}

SimulatedPanel no_effect_panel(std::uint64_t seed, Index t1 = 10) {
    MixtureDgpConfig c;
    c.t0 = 30;
    c.t1 = t1;
    c.tau = 0.0;
    c.drift_var = 0.0;
    c.seed = seed;
    return gen_mixture_dgp(c);
}

}  // namespace

TEST_SUITE("conformal") {

TEST_CASE("equal magnitudes give p = 1") {
    Eigen::VectorXd u(8);
    u << 1, -1, 1, 1, -1, -1, 1, -1;
    CHECK(block_permutation_p_value(u, 6) == 1.0);
    CHECK(block_permutation_p_value(Eigen::VectorXd::Zero(5), 3) == 1.0);
}

TEST_CASE("largest post residual gives p = 1/T") {
    Eigen::VectorXd u(10);
    u << 0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.7, -0.8, 0.9, 5.0;
    CHECK(block_permutation_p_value(u, 9) == doctest::Approx(0.1));
}

TEST_CASE("block p-value agrees with full enumeration") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const Index t = 5 + static_cast<Index>(seed % 30);
        const Index t0 = 2 + static_cast<Index>(seed % static_cast<std::uint64_t>(t - 2));
        Eigen::VectorXd u = testing::normal_matrix(t, 1, seed).col(0);
        if (seed % 4 == 0) u = u.array().round();
        const double p = block_permutation_p_value(u, t0);
        CHECK(p == rotation_oracle(u, t0));
        CHECK(p >= 1.0 / static_cast<double>(t));
        CHECK(std::abs(p * static_cast<double>(t) - std::round(p * static_cast<double>(t))) < 1e-9);
    }
}

TEST_CASE("inflating post residuals never raises p") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const Index t = 20, t0 = 15;
        Eigen::VectorXd u = testing::normal_matrix(t, 1, seed).col(0);
        const double before = block_permutation_p_value(u, t0);
        for (Index k = t0; k < t; ++k) u(k) *= 1.5;
        CHECK(block_permutation_p_value(u, t0) <= before);
    }
}

TEST_CASE("null expansion") {
    NullSpec constant{2.5};
    CHECK(constant.expand(3) == Eigen::Vector3d::Constant(2.5));
    NullSpec path{Eigen::VectorXd(Eigen::Vector2d(1, 2))};
    CHECK(path.expand(2) == Eigen::Vector2d(1, 2));
    CHECK(code_of([&] { path.expand(3); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("residuals come from a refit on adjusted outcomes") {
    const SimulatedPanel sim = no_effect_panel(4);
    const Eigen::VectorXd u = conformal_residuals(sim.panel, NullSpec{0.0}, Method::DMSCM);
    REQUIRE(u.size() == sim.panel.num_periods());
    const WeightFit w = estimate_weights(Method::DMSCM, sim.panel.outcomes, {}, sim.panel.num_periods(), {});
    const Eigen::VectorXd cf = synthetic_series(w.weights, sim.panel.outcomes);
    CHECK((u - (sim.panel.outcomes.row(0).transpose() - cf)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-point grid gives a degenerate interval") {
    const SimulatedPanel sim = no_effect_panel(5);
    const double alpha_hat = fit_dmscm(sim.panel).mean_att();
    const ConformalReport r = confidence_interval(sim.panel, {alpha_hat}, 0.1, Method::DMSCM);
    REQUIRE(r.p_values.size() == 1);
    if (r.p_values[0] > 0.1) {
        CHECK(r.lower == alpha_hat);
        CHECK(r.upper == alpha_hat);
        CHECK(r.open_lower);
        CHECK(r.open_upper);
    } else {
        CHECK(r.empty);
    }
    CHECK(r.tau_hat == alpha_hat);
}

TEST_CASE("interval is the hull of accepted grid points") {
    const SimulatedPanel sim = no_effect_panel(6);
    const std::vector<double> grid = default_grid(sim.panel, Method::DMSCM);
    CHECK(grid.size() == 41);
    CHECK(std::is_sorted(grid.begin(), grid.end()));
    const ConformalReport r = confidence_interval(sim.panel, grid, 0.1, Method::DMSCM);
    double lo = NAN, hi = NAN;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(r.p_values[i] >= 1.0 / static_cast<double>(sim.panel.num_periods()));
        if (r.p_values[i] > 0.1) {
            if (std::isnan(lo)) lo = grid[i];
            hi = grid[i];
        }
    }
    REQUIRE_FALSE(r.empty);
    CHECK(r.lower == lo);
    CHECK(r.upper == hi);
    CHECK(r.open_lower == (r.p_values.front() > 0.1));
    CHECK(r.open_upper == (r.p_values.back() > 0.1));
}

TEST_CASE("p-value curve moves with a shift of the treated post outcomes") {
    const SimulatedPanel sim = no_effect_panel(7);
    std::vector<double> grid;
    for (int i = -20; i <= 20; ++i) grid.push_back(0.5 * i);
    const double c = 3.0;
    Eigen::MatrixXd y = sim.panel.outcomes;
    y.row(0).tail(sim.panel.num_post()).array() += c;
    const PanelData shifted = make_panel(y, sim.panel.t0);
    std::vector<double> moved = grid;
    for (double& g : moved) g += c;
    const ConformalReport a = confidence_interval(sim.panel, grid, 0.1, Method::DMSCM);
    const ConformalReport b = confidence_interval(shifted, moved, 0.1, Method::DMSCM);
    CHECK(a.p_values == b.p_values);
    const auto arg = [](const std::vector<double>& p) { return std::max_element(p.begin(), p.end()) - p.begin(); };
    CHECK(moved[arg(b.p_values)] == doctest::Approx(grid[arg(a.p_values)] + c));
}

TEST_CASE("grid evaluation does not depend on thread count") {
    const SimulatedPanel sim = no_effect_panel(8);
    const std::vector<double> grid = default_grid(sim.panel, Method::D2MSCM);
    const ConformalReport one = confidence_interval(sim.panel, grid, 0.2, Method::D2MSCM, {}, {}, 1);
    const ConformalReport three = confidence_interval(sim.panel, grid, 0.2, Method::D2MSCM, {}, {}, 3);
    CHECK(one.p_values == three.p_values);
    CHECK(one.lower == three.lower);
}

TEST_CASE("no-effect coverage") {
    const int panels = 200;
    int covered = 0;
    for (int i = 0; i < panels; ++i) {
        const SimulatedPanel sim = no_effect_panel(derive_seed(404, static_cast<std::uint64_t>(i)));
        const ConformalReport r =
            confidence_interval(sim.panel, default_grid(sim.panel, Method::DMSCM), 0.1, Method::DMSCM);
        covered += !r.empty && r.lower <= 0.0 && 0.0 <= r.upper;
    }
    MESSAGE("coverage ", covered, "/", panels);
    CHECK(covered >= 0.85 * panels);
}

TEST_CASE("argument checks") {
    const SimulatedPanel sim = no_effect_panel(9);
    CHECK(code_of([&] { confidence_interval(sim.panel, {0.0}, 1.5, Method::DMSCM); }) == ErrorCode::BadLevel);
    CHECK(code_of([&] { confidence_interval(sim.panel, {0.0}, 0.0, Method::DMSCM); }) == ErrorCode::BadLevel);
    CHECK(code_of([&] { confidence_interval(sim.panel, {}, 0.1, Method::DMSCM); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { confidence_interval(sim.panel, {1.0, 0.0}, 0.1, Method::DMSCM); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([&] { confidence_interval(sim.panel, {0.0}, 0.1, Method::OLS); }) == ErrorCode::InvalidArgument);
}

}  // TEST_SUITE
