#pragma once

#include "synthctl/panel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace synthctl {

enum class Scaling { None, PooledSd };

/// Weighting matrix V of the GMM quadratic form.
struct Weighting {
    enum class Kind { Identity, Diagonal, Full };
    Kind kind = Kind::Identity;
    Eigen::VectorXd diagonal;
    Eigen::MatrixXd full;

    static Weighting identity() { return {}; }
    static Weighting diag(Eigen::VectorXd d) { return {Kind::Diagonal, std::move(d), {}}; }
    static Weighting matrix(Eigen::MatrixXd m) { return {Kind::Full, {}, std::move(m)}; }

    /// Materializes V for a moment vector of length `rows`. Throws
    /// DimensionMismatch on size mismatch and InvalidArgument when V is
    /// not symmetric positive semidefinite.
    Eigen::MatrixXd materialize(Index rows) const;
};

struct MomentConfig {
    int g = 5;  ///< moment orders 1..g
    bool include_covariates = false;
    Scaling scaling = Scaling::PooledSd;
    Weighting weighting;
};

/// Stacked empirical moments, m(w) = b - A w.
///
/// Row r < G holds order gamma = r + 1: A(r, j) is the window average of
/// (Y_j / s)^gamma for donor j and b(r) the same for the treated unit. Rows
/// G..G+K-1 hold covariate averages, each covariate divided by its own pooled
/// standard deviation. `row_scale` records the divisor applied to each row
/// (s^gamma for moment rows) so raw moments are b(r) * row_scale(r).
struct MomentSystem {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    std::vector<int> gamma_orders;
    Eigen::VectorXd row_scale;
    double scale = 1.0;
    bool demeaned = false;
    Index covariate_rows = 0;

    Index rows() const { return a.rows(); }
    Index donors() const { return a.cols(); }
    Eigen::VectorXd residual(const Eigen::VectorXd& w) const { return b - a * w; }
};

/// Moment entries above this magnitude are reported as Overflow so that the
/// quadratic form and its Hessian remain finite.
inline constexpr double kMomentLimit = 1e150;

MomentSystem build_system(const PanelData& panel, const MomentConfig& cfg);
MomentSystem build_demeaned_system(const PanelData& panel, const MomentConfig& cfg);

/// Builds a system from the first `window` periods of `outcomes` (row 0 is
/// the treated unit). When `demeaned` is set each row is centered on its own
/// window mean first. Used directly by conformal refits over all periods.
MomentSystem build_moment_system(const Eigen::MatrixXd& outcomes,
                                 const std::vector<Eigen::MatrixXd>& covariates,
                                 Index window, const MomentConfig& cfg, bool demeaned);

/// m(w)^T V m(w).
double gmm_objective(const MomentSystem& system, const Eigen::MatrixXd& v,
                     const Eigen::VectorXd& w);

}  // namespace synthctl
