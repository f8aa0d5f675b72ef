#pragma once

#include "synthctl/estimators.hpp"
#include "synthctl/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace synthctl {

/// Drifting Gaussian mixture DGP. Each unit has a (K+1)-variate normal with
/// diagonal covariance; only the outcome coordinate drifts over time.
struct MixtureDgpConfig {
    Index j = 10;
    Index t0 = 30;
    Index t1 = 100;
    Index k = 5;
    double tau = 20.0;
    double var_low = 1.0;
    double var_high = 20.0;
    double drift_var = 10.0;
    bool drift_is_sd = false;  ///< read drift_var as a standard deviation
    double var_floor_increment = 0.1;
    std::uint64_t seed = 0;

    void validate() const;  ///< throws BadConfig
    double drift_sd() const;
};

struct MixtureTruth {
    Eigen::VectorXd w_star;
    double tau = 0.0;
    Eigen::MatrixXd mean_path;  ///< J x T outcome means of the donors
    Eigen::MatrixXd var_path;   ///< J x T outcome variances of the donors
    Eigen::MatrixXd cov_mean;   ///< J x K covariate means
    Eigen::MatrixXd cov_var;    ///< J x K covariate variances
    Eigen::VectorXd treated_mean;  ///< sum_j w*_j mean_path(j, t)
};

struct SimulatedPanel {
    PanelData panel;
    MixtureTruth truth;
};

SimulatedPanel gen_mixture_dgp(const MixtureDgpConfig& cfg);

/// `n` draws of the untreated treated-unit outcome from the true mixture,
/// pooled uniformly over post-treatment periods.
std::vector<double> sample_true_post_mixture(const MixtureTruth& truth, Index t0, Index n, Rng& rng);

/// Stationary location mixture: donors are N(0, sd_j^2) with distinct sd_j,
/// the treated unit is `shift` plus a draw from the w*-mixture. No effect.
SimulatedPanel gen_shifted_mixture(Index j, Index t0, Index t1, double shift, std::uint64_t seed);

/// Two donors N(0, sd1^2) and N(0, sd2^2); treated draws from the 0.5/0.5
/// mixture. With `center`, every pre-period series is shifted to mean exactly
/// zero, matching the population first moments.
SimulatedPanel gen_two_component(Index t0, Index t1, double sd1, double sd2, bool center, std::uint64_t seed);

struct Summary {
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double mean = 0.0;
};

Summary summarize(const std::vector<double>& values);

struct StudySpec {
    MixtureDgpConfig dgp;
    std::vector<Index> j_values{10};
    std::vector<int> g_values{2, 5, 10};
    std::vector<Method> methods{Method::DMSCM, Method::Abadie};
    int replications = 100;
    std::uint64_t seed = 1;
    bool include_covariates = false;
    bool compute_mmd = false;
    Index mmd_draws = 500;  ///< bootstrap draws and true-mixture draws per replication
    bool timing = false;
    unsigned threads = 1;

    void validate() const;  ///< throws BadConfig
};

struct ReplicationRecord {
    Index j = 0;
    int g = 0;
    Method method = Method::DMSCM;
    int replication = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    double att_error = 0.0;     ///< mean post-period |tau_hat_t - tau|
    double weight_error = 0.0;  ///< max_j |w_hat_j - w*_j|
    double mmd_to_truth = 0.0;  ///< biased MMD^2; NaN when not computed
    double runtime_ms = 0.0;    ///< 0 unless timing is on
};

struct AggregateRow {
    Index j = 0;
    int g = 0;
    Method method = Method::DMSCM;
    Index count = 0;
    Index failures = 0;
    Summary att_error;
    Summary weight_error;
    Summary mmd_to_truth;
};

struct ReplicationResult {
    std::vector<ReplicationRecord> records;
    std::vector<AggregateRow> aggregates;
};

/// Seed of the panel for J index `cell` and replication `rep`; shared by all
/// G values and methods so they are compared on identical data.
std::uint64_t replication_seed(std::uint64_t base, std::size_t cell, int rep);

ReplicationResult run_replication_study(const StudySpec& spec);

/// Recomputes aggregates from raw records, in (J, G, method) order.
std::vector<AggregateRow> aggregate_records(const std::vector<ReplicationRecord>& records);

struct Theorem1Spec {
    Eigen::VectorXd w_star = Eigen::Vector2d(0.5, 0.5);
    Eigen::VectorXd q_diag = Eigen::Vector2d(1.0, 1.0);
    Eigen::VectorXd sigma_diag = Eigen::Vector2d(1.0, 1.0);
    Index t0 = 100000;
    int replications = 20;
    int g = 4;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct Theorem1Result {
    Eigen::VectorXd ols_mean;
    Eigen::VectorXd predicted_limit;
    Eigen::VectorXd gmm_mean;
};

/// Measurement-error DGP: donor 1 has constant mean sqrt(q_1), donors j > 1
/// have i.i.d. N(0, q_j) means per period, and each donor is observed with
/// independent N(0, sigma_j) noise. The treated unit draws a component from
/// w* each period and then a fresh observation of that donor's distribution,
/// so the moment conditions hold while E[Y_j Y_0] = q_j w*_j.
SimulatedPanel gen_theorem1_panel(const Theorem1Spec& spec, std::uint64_t seed);

Theorem1Result theorem1_experiment(const Theorem1Spec& spec);

}  // namespace synthctl
