#pragma once

#include "synthctl/moments.hpp"
#include "synthctl/panel.hpp"
#include "synthctl/solver.hpp"

#include <Eigen/Dense>

#include <string_view>

namespace synthctl {

enum class Method { DMSCM, D2MSCM, Abadie, FPDemeaned, OLS };

std::string_view method_name(Method m) noexcept;
/// Accepts "dmscm", "d2mscm", "abadie", "fp" / "fp_demeaned", "ols" (case-insensitive).
Method parse_method(std::string_view name);

struct FitResult {
    Method method = Method::DMSCM;
    WeightVector weights;
    Eigen::VectorXd counterfactual;  ///< length T
    Eigen::VectorXd att;             ///< length T1, Y_0t - counterfactual_t
    double pre_fit_rmse = 0.0;
    SolveDiagnostics diagnostics;

    double mean_att() const { return att.size() ? att.mean() : 0.0; }
};

struct WeightFit {
    WeightVector weights;
    SolveDiagnostics diagnostics;
};

/// Estimates weights (and intercept, for the demeaned methods) from the first
/// `window` periods of `outcomes`; row 0 is the treated unit.
WeightFit estimate_weights(Method method, const Eigen::MatrixXd& outcomes,
                           const std::vector<Eigen::MatrixXd>& covariates, Index window,
                           const MomentConfig& cfg, const SolverOptions& opts = {});

/// intercept + sum_j w_j Y_jt for every column of `outcomes`.
Eigen::VectorXd synthetic_series(const WeightVector& w, const Eigen::MatrixXd& outcomes);

FitResult fit(Method method, const PanelData& panel, const MomentConfig& cfg = {},
              const SolverOptions& opts = {});

FitResult fit_dmscm(const PanelData& panel, const MomentConfig& cfg = {}, const SolverOptions& opts = {});
FitResult fit_d2mscm(const PanelData& panel, const MomentConfig& cfg = {}, const SolverOptions& opts = {});
FitResult fit_abadie(const PanelData& panel, const SolverOptions& opts = {});
FitResult fit_fp_demeaned(const PanelData& panel, const SolverOptions& opts = {});
FitResult fit_ols(const PanelData& panel);

/// Diagonals of Q* (second moments of the noiseless donor means) and Sigma
/// (donor noise variances), and the true weights.
struct BiasLimitInput {
    Eigen::VectorXd q_diag;
    Eigen::VectorXd sigma_diag;
    Eigen::VectorXd w_star;
};

/// Probability limit of unconstrained least-squares weights under additive
/// donor noise: (Q* + Sigma)^{-1} Q* w*.
Eigen::VectorXd ls_bias_limit(const BiasLimitInput& input);

}  // namespace synthctl
