#pragma once

#include "synthctl/estimators.hpp"

#include <variant>
#include <vector>

namespace synthctl {

/// Sharp null H0: tau_t = alpha_t on the post-treatment periods. A scalar
/// means a constant effect.
struct NullSpec {
    std::variant<double, Eigen::VectorXd> alpha = 0.0;

    Eigen::VectorXd expand(Index t1) const;
};

struct ConformalReport {
    std::vector<double> grid;
    std::vector<double> p_values;
    double lower = 0.0;
    double upper = 0.0;
    bool open_lower = false;  ///< accepted region reaches the first grid point
    bool open_upper = false;  ///< accepted region reaches the last grid point
    bool empty = false;       ///< no grid point accepted; lower/upper are NaN
    double level = 0.1;
    Method estimator = Method::DMSCM;
    double tau_hat = 0.0;  ///< mean post-period ATT of the unadjusted fit
};

/// Moving-block p-value for residuals u_1..u_T whose last T - t0 entries are
/// post-treatment. Rotation j maps position t to (t + j) mod T; the statistic
/// is the mean |u| over post positions. Identity is one of the T rotations.
double block_permutation_p_value(const Eigen::VectorXd& residuals, Index t0);

/// Residuals of the estimator refit on all T periods after subtracting the
/// null effect from the treated unit's post-period outcomes.
Eigen::VectorXd conformal_residuals(const PanelData& panel, const NullSpec& null, Method estimator,
                                    const MomentConfig& cfg = {}, const SolverOptions& opts = {});

double conformal_p_value(const PanelData& panel, const NullSpec& null, Method estimator,
                         const MomentConfig& cfg = {}, const SolverOptions& opts = {});

/// 41 points spanning alpha_hat +/- 5 SD of the pre-period residuals, where
/// alpha_hat is the mean post-period ATT.
std::vector<double> default_grid(const PanelData& panel, Method estimator, const MomentConfig& cfg = {},
                                 const SolverOptions& opts = {});

/// Inverts the test over a sorted grid of constant effects. Grid points are
/// evaluated on up to `threads` workers.
ConformalReport confidence_interval(const PanelData& panel, const std::vector<double>& grid, double level,
                                    Method estimator, const MomentConfig& cfg = {},
                                    const SolverOptions& opts = {}, unsigned threads = 1);

}  // namespace synthctl
