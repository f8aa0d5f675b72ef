#include "synthctl/solver.hpp"

#include "synthctl/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace synthctl {

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
    const Index n = v.size();
    if (n == 0) return v;
    if (!v.allFinite()) throw Error(ErrorCode::InvalidArgument, "cannot project a non-finite vector");
    // Points already on the simplex (to rounding) are returned untouched so
    // the projection is exactly idempotent.
    const double feas_tol = 4.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon();
    if (v.minCoeff() >= 0.0 && std::abs(v.sum() - 1.0) <= feas_tol) return v;

    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (Index k = 0; k < n; ++k) {
        cumsum += u[static_cast<std::size_t>(k)];
        const double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (u[static_cast<std::size_t>(k)] - candidate > 0.0) theta = candidate;
    }
    return (v.array() - theta).max(0.0).matrix();
}

Index numerical_rank(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 0;
    const double tol = std::max(1e-10 * s(0), 1e-12);
    return static_cast<Index>((s.array() > tol).count());
}

namespace {

// Q(w) = w'Hw - 2c'w + k, the expanded form of ||b - Aw||_V^2.
struct Quadratic {
    Eigen::MatrixXd h;
    Eigen::VectorXd c;
    double k = 0.0;

    double value(const Eigen::VectorXd& w) const {
        return std::max(0.0, w.dot(h * w) - 2.0 * c.dot(w) + k);
    }
    Eigen::VectorXd gradient(const Eigen::VectorXd& w) const { return 2.0 * (h * w - c); }
};

double fixed_point_residual(const Quadratic& q, const Eigen::VectorXd& w, double lip) {
    const Eigen::VectorXd step = project_simplex(w - q.gradient(w) / lip);
    return (w - step).cwiseAbs().maxCoeff();
}

// Exact minimizer on the face spanned by the current support, from the KKT
// system [2H_SS 1; 1' 0][w_S; mu] = [2c_S; 1]. Returns nothing when the face
// system is singular or the solution leaves the simplex.
std::optional<Eigen::VectorXd> solve_on_support(const Quadratic& q, const Eigen::VectorXd& w) {
    std::vector<Index> support;
    for (Index i = 0; i < w.size(); ++i)
        if (w(i) > 1e-14) support.push_back(i);
    const Index m = static_cast<Index>(support.size());
    if (m == 0) return std::nullopt;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (Index r = 0; r < m; ++r) {
        for (Index s = 0; s < m; ++s) kkt(r, s) = 2.0 * q.h(support[r], support[s]);
        kkt(r, m) = 1.0;
        kkt(m, r) = 1.0;
        rhs(r) = 2.0 * q.c(support[r]);
    }
    rhs(m) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) return std::nullopt;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
    for (Index r = 0; r < m; ++r) {
        if (sol(r) < -1e-13) return std::nullopt;
        out(support[r]) = std::max(0.0, sol(r));
    }
    const double total = out.sum();
    if (!(total > 0.0)) return std::nullopt;
    return Eigen::VectorXd(out / total);
}

SimplexSolution minimize(const Quadratic& q, Index rank, const SolverOptions& opts) {
    const Index n = q.c.size();
    SimplexSolution sol;
    auto& diag = sol.diagnostics;
    diag.rank_estimate = rank;
    diag.non_unique = rank < n;

    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    if (n == 1) {
        sol.weights.weights = w;
        diag.converged = true;
        diag.final_objective = q.value(w);
        return sol;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.h, Eigen::EigenvaluesOnly);
    const double lip = 2.0 * eig.eigenvalues().maxCoeff();
    if (!(lip > 0.0) || !std::isfinite(lip)) {
        // Q is constant on the simplex.
        sol.weights.weights = w;
        diag.converged = true;
        diag.final_objective = q.value(w);
        return sol;
    }

    double qw = q.value(w);
    Eigen::VectorXd y = w;
    double t = 1.0;
    double residual = fixed_point_residual(q, w, lip);
    int it = 0;
    constexpr int kPolishEvery = 25;
    while (residual > opts.tol && it < opts.max_iterations) {
        ++it;
        Eigen::VectorXd z = project_simplex(y - q.gradient(y) / lip);
        double qz = q.value(z);
        if (qz > qw) {
            // Momentum overshot: restart with a plain projected-gradient step,
            // which cannot increase Q for step 1/L (up to rounding in Q).
            t = 1.0;
            z = project_simplex(w - q.gradient(w) / lip);
            qz = std::min(q.value(z), qw);
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = z + ((t - 1.0) / t_next) * (z - w);
        w = std::move(z);
        qw = qz;
        t = t_next;
        residual = fixed_point_residual(q, w, lip);

        if (residual > opts.tol && it % kPolishEvery == 0) {
            if (auto exact = solve_on_support(q, w)) {
                const double qe = q.value(*exact);
                const double re = fixed_point_residual(q, *exact, lip);
                if (qe <= qw && re < residual) {
                    w = *exact;
                    qw = qe;
                    y = w;
                    t = 1.0;
                    residual = re;
                }
            }
        }
    }
    diag.iterations = it;
    diag.projected_gradient_norm = residual;
    diag.converged = residual <= opts.tol;
    diag.final_objective = qw;
    sol.weights.weights = w;
    return sol;
}

}  // namespace

SimplexSolution solve_simplex_qp(const MomentSystem& system, const Eigen::MatrixXd& v,
                                 const SolverOptions& opts) {
    if (v.rows() != system.rows() || v.cols() != system.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "weighting matrix does not match moment rows");
    }
    if (system.donors() < 1) throw Error(ErrorCode::DimensionMismatch, "no donor units");
    if (!system.a.allFinite() || !system.b.allFinite()) {
        throw Error(ErrorCode::Overflow, "moment system is not finite");
    }
    const Eigen::MatrixXd va = v * system.a;
    Quadratic q{system.a.transpose() * va, va.transpose() * system.b, system.b.dot(v * system.b)};
    q.h = 0.5 * (q.h + q.h.transpose());

    // rank of V^{1/2} A via the symmetric square root of V
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> veig(0.5 * (v + v.transpose()));
    const Eigen::MatrixXd v_half = veig.eigenvectors() *
                                   veig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                   veig.eigenvectors().transpose();
    auto sol = minimize(q, numerical_rank(v_half * system.a), opts);
    sol.diagnostics.final_objective = gmm_objective(system, v, sol.weights.weights);
    return sol;
}

SimplexSolution solve_simplex_ls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                 const SolverOptions& opts) {
    if (a.rows() != b.size()) throw Error(ErrorCode::DimensionMismatch, "A rows != b length");
    if (a.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "no donor units");
    Quadratic q{a.transpose() * a, a.transpose() * b, b.squaredNorm()};
    auto sol = minimize(q, numerical_rank(a), opts);
    sol.diagnostics.final_objective = (b - a * sol.weights.weights).squaredNorm();
    return sol;
}

Eigen::VectorXd ls_unconstrained(const Eigen::MatrixXd& donors_pre,
                                 const Eigen::VectorXd& treated_pre) {
    if (donors_pre.rows() != treated_pre.size()) {
        throw Error(ErrorCode::DimensionMismatch, "regressor rows != response length");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(donors_pre);
    qr.setThreshold(1e-10);
    if (qr.rank() < donors_pre.cols()) {
        throw Error(ErrorCode::SingularGram, "pre-period Gram matrix of donors is singular (rank " +
                                                 std::to_string(qr.rank()) + " < " +
                                                 std::to_string(donors_pre.cols()) + ")");
    }
    return qr.solve(treated_pre);
}

Eigen::VectorXd ls_unconstrained(const PanelData& panel) {
    const Index j = panel.num_donors();
    const Eigen::MatrixXd x = panel.outcomes.bottomRows(j).leftCols(panel.t0).transpose();
    const Eigen::VectorXd y = panel.outcomes.row(0).leftCols(panel.t0).transpose();
    return ls_unconstrained(x, y);
}

}  // namespace synthctl
