#pragma once

#include "synthctl/moments.hpp"
#include "synthctl/panel.hpp"

#include <Eigen/Dense>

#include <optional>

namespace synthctl {

/// A point on the probability simplex, plus the additive intercept used by
/// the demeaned estimators.
struct WeightVector {
    Eigen::VectorXd weights;
    std::optional<double> intercept;
};

struct SolveDiagnostics {
    int iterations = 0;
    double final_objective = 0.0;
    double projected_gradient_norm = 0.0;
    Index rank_estimate = 0;  ///< numerical rank of V^{1/2} A
    bool converged = false;
    /// rank_estimate < J: the minimizer need not be unique. The reported
    /// point is the limit of the iteration started from the uniform weights.
    bool non_unique = false;
};

struct SolverOptions {
    double tol = 1e-10;
    int max_iterations = 100000;
};

struct SimplexSolution {
    WeightVector weights;
    SolveDiagnostics diagnostics;
};

/// Euclidean projection onto {w >= 0, sum w = 1} (sort-based, O(J log J)).
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

/// Minimizes ||b - A w||_V^2 over the simplex.
SimplexSolution solve_simplex_qp(const MomentSystem& system, const Eigen::MatrixXd& v,
                                 const SolverOptions& opts = {});

/// Same with V = I and an arbitrary number of rows in A (the least-squares
/// synthetic-control fits).
SimplexSolution solve_simplex_ls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                 const SolverOptions& opts = {});

/// Singular values above max(1e-10 * s_max, 1e-12) count toward the rank.
Index numerical_rank(const Eigen::MatrixXd& a);

/// Unconstrained OLS (no intercept) of the treated pre-period outcomes on the
/// donors' pre-period outcomes. Throws SingularGram on rank deficiency.
Eigen::VectorXd ls_unconstrained(const PanelData& panel);
Eigen::VectorXd ls_unconstrained(const Eigen::MatrixXd& donors_pre, const Eigen::VectorXd& treated_pre);

}  // namespace synthctl
