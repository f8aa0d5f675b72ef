#include "support.hpp"

#include "synthctl/dte.hpp"
#include "synthctl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace synthctl;
using testing::code_of;

namespace {

std::vector<double> normals(std::size_t n, double mean, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> d(mean, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

// Textbook U-statistic, no shortcuts.
double mmd2_oracle(const std::vector<double>& a, const std::vector<double>& b, double h) {
    auto k = [h](double x, double y) { return std::exp(-(x - y) * (x - y) / (2.0 * h * h)); };
    const double m = static_cast<double>(a.size()), n = static_cast<double>(b.size());
    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            if (i != j) xx += k(a[i], a[j]);
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            if (i != j) yy += k(b[i], b[j]);
    for (double x : a)
        for (double y : b) xy += k(x, y);
    return xx / (m * (m - 1)) + yy / (n * (n - 1)) - 2.0 * xy / (m * n);
}

}  // namespace

TEST_SUITE("dte") {

TEST_CASE("vertex weights draw from one donor") {
    Eigen::MatrixXd y = testing::normal_matrix(4, 20, 1);
    const PanelData p = make_panel(y, 12);
    const BootstrapSample s = bootstrap_counterfactual(p, {Eigen::Vector3d(1, 0, 0), {}}, 500, 3);
    std::set<double> post;
    for (Index t = 12; t < 20; ++t) post.insert(y(1, t));
    CHECK(s.draws.size() == 500);
    for (double d : s.draws) CHECK(post.count(d) == 1);
}

TEST_CASE("constant panel gives constant draws") {
    const PanelData p = make_panel(Eigen::MatrixXd::Constant(4, 10, 2.5), 6);
    const BootstrapSample s = bootstrap_counterfactual(p, {Eigen::Vector3d(0.2, 0.3, 0.5), {}}, 300, 9);
    for (double d : s.draws) CHECK(d == 2.5);
    const BootstrapSample shifted = bootstrap_counterfactual(p, {Eigen::Vector3d(0.2, 0.3, 0.5), 1.0}, 10, 9);
    for (double d : shifted.draws) CHECK(d == 3.5);
}

TEST_CASE("large bootstrap mean matches the weighted post means") {
    Eigen::MatrixXd y = testing::normal_matrix(3, 60, 2, 3.0);
    y.row(2).array() += 4.0;
    const PanelData p = make_panel(y, 30);
    const Eigen::Vector2d w(0.3, 0.7);
    const BootstrapSample s = bootstrap_counterfactual(p, {w, {}}, 100000, 11);
    double mean = 0.0, sq = 0.0;
    for (double d : s.draws) mean += d;
    mean /= static_cast<double>(s.draws.size());
    for (double d : s.draws) sq += (d - mean) * (d - mean);
    const double se = std::sqrt(sq / static_cast<double>(s.draws.size() - 1) / static_cast<double>(s.draws.size()));
    const double target = 0.3 * y.row(1).tail(30).mean() + 0.7 * y.row(2).tail(30).mean();
    CHECK(std::abs(mean - target) < 3.0 * se);
}

TEST_CASE("bootstrap is seed deterministic") {
    const PanelData p = make_panel(testing::normal_matrix(5, 30, 3), 20);
    const WeightVector w{testing::random_simplex(4, 4), {}};
    CHECK(bootstrap_counterfactual(p, w, 1000, 7).draws == bootstrap_counterfactual(p, w, 1000, 7).draws);
    CHECK(bootstrap_counterfactual(p, w, 1000, 7).draws != bootstrap_counterfactual(p, w, 1000, 8).draws);
}

TEST_CASE("bootstrap argument checks") {
    const PanelData p = make_panel(testing::normal_matrix(3, 10, 5), 6);
    CHECK(code_of([&] { bootstrap_counterfactual(p, {Eigen::Vector2d(0.5, 0.5), {}}, 1, 1); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([&] { bootstrap_counterfactual(p, {Eigen::Vector3d(0.2, 0.3, 0.5), {}}, 10, 1); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { bootstrap_counterfactual(p, {Eigen::Vector2d(0.7, 0.7), {}}, 10, 1); }) ==
          ErrorCode::InvalidArgument);
    PanelData no_post = p;
    no_post.t0 = no_post.num_periods();
    CHECK(code_of([&] { bootstrap_counterfactual(no_post, {Eigen::Vector2d(0.5, 0.5), {}}, 10, 1); }) ==
          ErrorCode::EmptyPost);
}

TEST_CASE("quantile examples") {
    const std::vector<double> five{5, 1, 4, 2, 3};
    const std::vector<double> half{0.5};
    CHECK(quantiles(five, half) == std::vector<double>{3.0});
    const std::vector<double> probs{0.1, 0.25, 0.9};
    const std::vector<double> q = quantiles(five, probs);
    CHECK(q[0] == doctest::Approx(1.4));
    CHECK(q[1] == doctest::Approx(2.0));
    CHECK(q[2] == doctest::Approx(4.6));
    const std::vector<double> flat(17, -3.25);
    for (double v : quantiles(flat, probs)) CHECK(v == -3.25);
}

TEST_CASE("normal 97.5% quantile") {
    const std::vector<double> z = normals(100000, 0.0, 12);
    const std::vector<double> p{0.975};
    CHECK(std::abs(quantiles(z, p)[0] - 1.96) < 0.05);
}

TEST_CASE("quantile argument checks") {
    const std::vector<double> s{1, 2, 3};
    for (double bad : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
        const std::vector<double> p{bad};
        CHECK(code_of([&] { quantiles(s, p); }) == ErrorCode::BadProb);
    }
    const std::vector<double> empty;
    const std::vector<double> p{0.5};
    CHECK(code_of([&] { quantiles(empty, p); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("unbiased MMD matches the direct double sum") {
    const std::vector<double> a = normals(40, 0.0, 1), b = normals(55, 0.7, 2);
    for (double h : {0.3, 1.0, 4.0}) CHECK(mmd2_unbiased(a, b, h) == doctest::Approx(mmd2_oracle(a, b, h)).epsilon(1e-10));
    CHECK(mmd2_biased(a, b, 1.0) >= 0.0);
    CHECK(mmd2_biased(a, a, 1.0) < 1e-15);
}

TEST_CASE("median heuristic") {
    const std::vector<double> a{0.0, 1.0}, b{3.0};
    // pairwise distances 1, 3, 2
    CHECK(median_heuristic_bandwidth(a, b) == 2.0);
    const std::vector<double> same{4.0, 4.0};
    CHECK(median_heuristic_bandwidth(same, same) == 1.0);
}

TEST_CASE("identical samples are not rejected") {
    const std::vector<double> a = normals(100, 0.0, 3);
    const MmdReport r = mmd_test(a, a, 200, 4);
    CHECK(r.mmd2 <= 1e-12);
    CHECK(r.p_value >= 0.3);
    CHECK(r.p_value >= 1.0 / 201.0);
    CHECK(r.permutations == 200);
}

TEST_CASE("well separated samples are rejected") {
    const MmdReport r = mmd_test(normals(200, 0.0, 5), normals(200, 5.0, 6), 500, 7);
    CHECK(r.p_value <= 0.01);
    CHECK(r.p_value >= 1.0 / 501.0);
}

TEST_CASE("permutation test is seed deterministic") {
    const std::vector<double> a = normals(50, 0.0, 8), b = normals(60, 0.3, 9);
    const MmdReport r1 = mmd_test(a, b, 99, 10), r2 = mmd_test(a, b, 99, 10);
    CHECK(r1.p_value == r2.p_value);
    CHECK(r1.mmd2 == r2.mmd2);
    const MmdReport fixed = mmd_test(a, b, 99, 10, 0.5);
    CHECK(fixed.bandwidth == 0.5);
}

TEST_CASE("size is roughly nominal") {
    int rejections = 0;
    const int reps = 200;
    for (int i = 0; i < reps; ++i) {
        const MmdReport r = mmd_test(normals(40, 0.0, derive_seed(50, i)), normals(40, 0.0, derive_seed(51, i)), 99,
                                     derive_seed(52, i));
        rejections += r.p_value <= 0.05;
    }
    CHECK(rejections <= 20);
}

TEST_CASE("MMD argument checks") {
    const std::vector<double> one{1.0}, two{1.0, 2.0};
    CHECK(code_of([&] { mmd2_unbiased(one, two, 1.0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { mmd_test(two, two, -1, 1); }) == ErrorCode::InvalidArgument);
}

}  // TEST_SUITE
