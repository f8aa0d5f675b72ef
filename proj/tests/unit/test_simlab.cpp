#include "support.hpp"

#include "synthctl/dte.hpp"
#include "synthctl/json.hpp"
#include "synthctl/simlab.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

using namespace synthctl;
using testing::code_of;

namespace {

StudySpec golden_spec() {
    StudySpec s;
    s.replications = 1;
    s.seed = 1;
    return s;
}

}  // namespace

TEST_SUITE("simlab") {

TEST_CASE("generator is deterministic per seed") {
    MixtureDgpConfig c;
    c.seed = 42;
    const SimulatedPanel a = gen_mixture_dgp(c), b = gen_mixture_dgp(c);
    CHECK(a.panel.outcomes == b.panel.outcomes);
    CHECK(a.panel.covariates.size() == b.panel.covariates.size());
    for (std::size_t k = 0; k < a.panel.covariates.size(); ++k) CHECK(a.panel.covariates[k] == b.panel.covariates[k]);
    CHECK(a.truth.w_star == b.truth.w_star);
    c.seed = 43;
    CHECK(gen_mixture_dgp(c).panel.outcomes != a.panel.outcomes);
}

TEST_CASE("generated panel shape and truth") {
    MixtureDgpConfig c;
    c.j = 7;
    c.t0 = 12;
    c.t1 = 5;
    c.k = 3;
    c.seed = 2;
    const SimulatedPanel s = gen_mixture_dgp(c);
    CHECK(s.panel.num_donors() == 7);
    CHECK(s.panel.num_periods() == 17);
    CHECK(s.panel.t0 == 12);
    CHECK(s.panel.num_covariates() == 3);
    CHECK(s.panel.treated_unit() == "treated");
    CHECK(s.panel.units[1] == "u1");
    CHECK(s.truth.w_star.minCoeff() >= 0.0);
    CHECK(std::abs(s.truth.w_star.sum() - 1.0) < 1e-12);
    CHECK(s.truth.mean_path.rows() == 7);
    CHECK(s.truth.mean_path.cols() == 17);
    CHECK((s.truth.treated_mean - s.truth.mean_path.transpose() * s.truth.w_star).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("variance paths start at or above the lower bound and grow by the floor") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        MixtureDgpConfig c;
        c.seed = seed;
        const MixtureTruth t = gen_mixture_dgp(c).truth;
        CHECK(t.var_path.col(0).minCoeff() >= c.var_low);
        CHECK(t.var_path.col(0).maxCoeff() <= c.var_high);
        for (Index p = 1; p < t.var_path.cols(); ++p)
            CHECK((t.var_path.col(p) - t.var_path.col(p - 1)).minCoeff() >= c.var_floor_increment - 1e-12);
    }
}

TEST_CASE("drift off keeps the outcome means fixed") {
    MixtureDgpConfig c;
    c.drift_var = 0.0;
    c.seed = 3;
    const MixtureTruth t = gen_mixture_dgp(c).truth;
    for (Index p = 1; p < t.mean_path.cols(); ++p) CHECK(t.mean_path.col(p) == t.mean_path.col(0));
}

TEST_CASE("tau = 0 leaves pre and post outcomes indistinguishable") {
    MixtureDgpConfig c;
    c.j = 4;
    c.t0 = 300;
    c.t1 = 300;
    c.tau = 0.0;
    c.drift_var = 0.0;
    c.var_floor_increment = 0.0;
    c.seed = 4;
    const SimulatedPanel s = gen_mixture_dgp(c);
    std::vector<double> pre, post;
    for (Index t = 0; t < 300; ++t) pre.push_back(s.panel.outcomes(0, t));
    for (Index t = 300; t < 600; ++t) post.push_back(s.panel.outcomes(0, t));
    CHECK(mmd_test(pre, post, 199, 5).p_value > 0.01);
    c.tau = 20.0;
    const SimulatedPanel e = gen_mixture_dgp(c);
    std::vector<double> post_effect;
    for (Index t = 300; t < 600; ++t) post_effect.push_back(e.panel.outcomes(0, t));
    CHECK(mmd_test(pre, post_effect, 199, 5).p_value < 0.01);
}

TEST_CASE("config validation") {
    MixtureDgpConfig c;
    c.j = 0;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::BadConfig);
    c = {};
    c.t0 = 1;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::BadConfig);
    c = {};
    c.var_low = 0.0;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::BadConfig);
    c = {};
    c.drift_var = 9.0;
    CHECK(c.drift_sd() == 3.0);
    c.drift_is_sd = true;
    CHECK(c.drift_sd() == 9.0);
    StudySpec s;
    s.replications = 0;
    CHECK(code_of([&] { s.validate(); }) == ErrorCode::BadConfig);
    s = {};
    s.g_values = {0};
    CHECK(code_of([&] { s.validate(); }) == ErrorCode::BadConfig);
}

TEST_CASE("true mixture sampler matches the truth moments") {
    MixtureDgpConfig c;
    c.j = 3;
    c.t0 = 10;
    c.t1 = 20;
    c.seed = 6;
    const MixtureTruth t = gen_mixture_dgp(c).truth;
    Rng rng = make_rng(7);
    const std::vector<double> draws = sample_true_post_mixture(t, 10, 200000, rng);
    double mean = 0.0;
    for (double d : draws) mean += d;
    mean /= static_cast<double>(draws.size());
    const double expected = t.treated_mean.tail(20).mean();
    CHECK(std::abs(mean - expected) < 0.1);
}

TEST_CASE("summaries skip non-finite values") {
    const Summary s = summarize({4.0, NAN, 1.0, 3.0, 2.0, INFINITY});
    CHECK(s.median == 2.5);
    CHECK(s.mean == 2.5);
    CHECK(s.q25 == doctest::Approx(1.75));
    CHECK(s.q75 == doctest::Approx(3.25));
    CHECK(std::isnan(summarize({NAN}).median));
}

TEST_CASE("replication seeds are distinct across cells and replications") {
    std::set<std::uint64_t> seen;
    for (std::size_t cell = 0; cell < 20; ++cell)
        for (int rep = 0; rep < 200; ++rep) seen.insert(replication_seed(9, cell, rep));
    CHECK(seen.size() == 4000);
    CHECK(replication_seed(9, 3, 4) == derive_seed(derive_seed(9, 3), 4));
}

TEST_CASE("study records and aggregates") {
    StudySpec s;
    s.dgp.t1 = 20;
    s.j_values = {3, 6};
    s.g_values = {2, 4};
    s.methods = {Method::DMSCM, Method::Abadie, Method::D2MSCM};
    s.replications = 3;
    s.seed = 11;
    const ReplicationResult r = run_replication_study(s);
    CHECK(r.records.size() == 2 * 2 * 3 * 3);
    CHECK(r.aggregates.size() == 2 * 2 * 3);
    CHECK(r.records.front().j == 3);
    CHECK(r.records.back().j == 6);
    for (const auto& rec : r.records) {
        CHECK(rec.ok);
        CHECK(rec.att_error >= 0.0);
        CHECK(rec.weight_error >= 0.0);
        CHECK(std::isnan(rec.mmd_to_truth));
    }
    // G-free methods are identical across G
    for (const auto& a : r.records)
        for (const auto& b : r.records)
            if (a.method == Method::Abadie && b.method == Method::Abadie && a.j == b.j && a.replication == b.replication)
                CHECK(a.att_error == b.att_error);
    const auto again = aggregate_records(r.records);
    CHECK(again.size() == r.aggregates.size());
    CHECK(again[0].att_error.median == r.aggregates[0].att_error.median);
}

TEST_CASE("study results do not depend on thread count") {
    StudySpec s;
    s.dgp.t1 = 15;
    s.j_values = {4};
    s.g_values = {2, 3};
    s.replications = 6;
    s.compute_mmd = true;
    s.mmd_draws = 50;
    s.threads = 1;
    const ReplicationResult one = run_replication_study(s);
    s.threads = 3;
    const ReplicationResult three = run_replication_study(s);
    std::ostringstream a, b;
    write_records_csv(a, one.records, false);
    write_records_csv(b, three.records, false);
    CHECK(a.str() == b.str());
    CHECK(std::isfinite(one.records[0].mmd_to_truth));
}

TEST_CASE("single replication reproduces the stored golden record") {
    const ReplicationResult r = run_replication_study(golden_spec());
    std::ostringstream produced;
    write_records_csv(produced, r.records, false);
    const std::string path = std::string(SYNTHCTL_GOLDEN_DIR) + "/study_r1_seed1.csv";
    std::ifstream in(path);
    REQUIRE_MESSAGE(in.good(), "missing golden file " << path);
    std::stringstream stored;
    stored << in.rdbuf();
    CHECK(produced.str() == stored.str());
}

TEST_CASE("too many failed replications abort the study") {
    StudySpec s;
    s.dgp.t0 = 30;
    s.dgp.t1 = 5;
    s.j_values = {40};
    s.g_values = {2};
    s.methods = {Method::OLS};
    s.replications = 3;
    CHECK(code_of([&] { run_replication_study(s); }) == ErrorCode::StudyFailed);
}

TEST_CASE("attenuation experiment without noise") {
    Theorem1Spec s;
    s.sigma_diag = Eigen::Vector2d(0, 0);
    const Theorem1Result r = theorem1_experiment(s);
    CHECK((r.ols_mean - s.w_star).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((r.gmm_mean - s.w_star).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(r.predicted_limit == s.w_star);
}

TEST_CASE("halving the noise moves least squares toward w*") {
    Theorem1Spec s;
    s.t0 = 20000;
    s.replications = 5;
    const Theorem1Result full = theorem1_experiment(s);
    s.sigma_diag = s.sigma_diag / 2.0;
    const Theorem1Result half = theorem1_experiment(s);
    CHECK((half.ols_mean - s.w_star).cwiseAbs().maxCoeff() < (full.ols_mean - s.w_star).cwiseAbs().maxCoeff());
    CHECK(half.predicted_limit.isApprox(Eigen::Vector2d(1.0 / 3.0, 1.0 / 3.0), 1e-12));
}

TEST_CASE("two-component generator centers the pre-period") {
    const SimulatedPanel s = gen_two_component(100, 2, 1.0, 2.0, true, 8);
    CHECK(s.panel.num_donors() == 2);
    for (Index i = 0; i < 3; ++i) CHECK(std::abs(s.panel.outcomes.row(i).head(100).mean()) < 1e-12);
    CHECK(s.truth.w_star == Eigen::Vector2d(0.5, 0.5));
}

}  // TEST_SUITE
