#include "synthctl/estimators.hpp"

#include "synthctl/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace synthctl {

std::string_view method_name(Method m) noexcept {
    switch (m) {
        case Method::DMSCM: return "dmscm";
        case Method::D2MSCM: return "d2mscm";
        case Method::Abadie: return "abadie";
        case Method::FPDemeaned: return "fp_demeaned";
        case Method::OLS: return "ols";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "dmscm") return Method::DMSCM;
    if (s == "d2mscm") return Method::D2MSCM;
    if (s == "abadie" || s == "sc") return Method::Abadie;
    if (s == "fp" || s == "fp_demeaned" || s == "fpdemeaned") return Method::FPDemeaned;
    if (s == "ols") return Method::OLS;
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

Eigen::VectorXd synthetic_series(const WeightVector& w, const Eigen::MatrixXd& outcomes) {
    const Index j = outcomes.rows() - 1;
    if (w.weights.size() != j) {
        throw Error(ErrorCode::DimensionMismatch, "weights do not match donor count");
    }
    Eigen::VectorXd s = outcomes.bottomRows(j).transpose() * w.weights;
    if (w.intercept) s.array() += *w.intercept;
    return s;
}

namespace {

double demeaned_intercept(const Eigen::MatrixXd& outcomes, Index window, const Eigen::VectorXd& w) {
    const Eigen::VectorXd means = window_means(outcomes, window);
    return means(0) - means.tail(means.size() - 1).dot(w);
}

WeightFit least_squares_weights(const Eigen::MatrixXd& outcomes, Index window, bool demeaned,
                                const SolverOptions& opts) {
    const Index j = outcomes.rows() - 1;
    Eigen::MatrixXd y = outcomes.leftCols(window);
    if (demeaned) y = y.colwise() - y.rowwise().mean();
    // (1/T0) sum_t (...)^2 as a plain least-squares problem
    const double root = std::sqrt(static_cast<double>(window));
    const Eigen::MatrixXd a = y.bottomRows(j).transpose() / root;
    const Eigen::VectorXd b = y.row(0).transpose() / root;
    auto sol = solve_simplex_ls(a, b, opts);
    WeightFit out{std::move(sol.weights), sol.diagnostics};
    if (demeaned) out.weights.intercept = demeaned_intercept(outcomes, window, out.weights.weights);
    return out;
}

}  // namespace

WeightFit estimate_weights(Method method, const Eigen::MatrixXd& outcomes,
                           const std::vector<Eigen::MatrixXd>& covariates, Index window,
                           const MomentConfig& cfg, const SolverOptions& opts) {
    if (outcomes.rows() < 2) throw Error(ErrorCode::DimensionMismatch, "no donor units");
    if (window < 1 || window > outcomes.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "fit window outside the panel");
    }
    switch (method) {
        case Method::DMSCM:
        case Method::D2MSCM: {
            const bool demeaned = method == Method::D2MSCM;
            const MomentSystem sys = build_moment_system(outcomes, covariates, window, cfg, demeaned);
            const Eigen::MatrixXd v = cfg.weighting.materialize(sys.rows());
            auto sol = solve_simplex_qp(sys, v, opts);
            WeightFit out{std::move(sol.weights), sol.diagnostics};
            if (demeaned) out.weights.intercept = demeaned_intercept(outcomes, window, out.weights.weights);
            return out;
        }
        case Method::Abadie:
            return least_squares_weights(outcomes, window, false, opts);
        case Method::FPDemeaned:
            return least_squares_weights(outcomes, window, true, opts);
        case Method::OLS: {
            const Index j = outcomes.rows() - 1;
            WeightFit out;
            out.weights.weights = ls_unconstrained(outcomes.bottomRows(j).leftCols(window).transpose(),
                                                   outcomes.row(0).leftCols(window).transpose());
            const Eigen::MatrixXd x = outcomes.bottomRows(j).leftCols(window).transpose();
            const Eigen::VectorXd r = outcomes.row(0).leftCols(window).transpose() - x * out.weights.weights;
            out.diagnostics.final_objective = r.squaredNorm() / static_cast<double>(window);
            out.diagnostics.rank_estimate = numerical_rank(x);
            out.diagnostics.converged = true;
            return out;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown method");
}

FitResult fit(Method method, const PanelData& panel, const MomentConfig& cfg, const SolverOptions& opts) {
    panel.validate();
    auto wf = estimate_weights(method, panel.outcomes, panel.covariates, panel.t0, cfg, opts);
    FitResult r;
    r.method = method;
    r.weights = std::move(wf.weights);
    r.diagnostics = wf.diagnostics;
    r.counterfactual = synthetic_series(r.weights, panel.outcomes);
    const Index t1 = panel.num_post();
    r.att = panel.outcomes.row(0).tail(t1).transpose() - r.counterfactual.tail(t1);
    const Eigen::VectorXd pre_resid =
        panel.outcomes.row(0).head(panel.t0).transpose() - r.counterfactual.head(panel.t0);
    r.pre_fit_rmse = std::sqrt(pre_resid.squaredNorm() / static_cast<double>(panel.t0));
    return r;
}

FitResult fit_dmscm(const PanelData& panel, const MomentConfig& cfg, const SolverOptions& opts) {
    return fit(Method::DMSCM, panel, cfg, opts);
}

FitResult fit_d2mscm(const PanelData& panel, const MomentConfig& cfg, const SolverOptions& opts) {
    return fit(Method::D2MSCM, panel, cfg, opts);
}

FitResult fit_abadie(const PanelData& panel, const SolverOptions& opts) {
    return fit(Method::Abadie, panel, {}, opts);
}

FitResult fit_fp_demeaned(const PanelData& panel, const SolverOptions& opts) {
    return fit(Method::FPDemeaned, panel, {}, opts);
}

FitResult fit_ols(const PanelData& panel) { return fit(Method::OLS, panel, {}, {}); }

Eigen::VectorXd ls_bias_limit(const BiasLimitInput& in) {
    const Index j = in.w_star.size();
    if (in.q_diag.size() != j || in.sigma_diag.size() != j) {
        throw Error(ErrorCode::DimensionMismatch, "Q*, Sigma and w* must have the same dimension");
    }
    if ((in.q_diag.array() < 0.0).any() || (in.sigma_diag.array() < 0.0).any()) {
        throw Error(ErrorCode::InvalidArgument, "Q* and Sigma diagonals must be nonnegative");
    }
    Eigen::VectorXd out(j);
    for (Index i = 0; i < j; ++i) {
        const double denom = in.q_diag(i) + in.sigma_diag(i);
        if (!(denom > 0.0)) {
            throw Error(ErrorCode::SingularMatrix, "Q* + Sigma is singular at coordinate " + std::to_string(i));
        }
        out(i) = in.q_diag(i) / denom * in.w_star(i);
    }
    return out;
}

}  // namespace synthctl
