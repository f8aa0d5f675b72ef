#include "synthctl/conformal.hpp"

#include "synthctl/error.hpp"
#include "synthctl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace synthctl {

Eigen::VectorXd NullSpec::expand(Index t1) const {
    Eigen::VectorXd out;
    if (const auto* c = std::get_if<double>(&alpha)) {
        out = Eigen::VectorXd::Constant(t1, *c);
    } else {
        out = std::get<Eigen::VectorXd>(alpha);
        if (out.size() != t1) {
            throw Error(ErrorCode::DimensionMismatch,
                        "null vector has " + std::to_string(out.size()) + " entries, expected " + std::to_string(t1));
        }
    }
    if (!out.allFinite()) throw Error(ErrorCode::InvalidArgument, "null values must be finite");
    return out;
}

double block_permutation_p_value(const Eigen::VectorXd& residuals, Index t0) {
    const Index t = residuals.size();
    if (t0 < 1 || t0 >= t) throw Error(ErrorCode::BadT0, "post block must be non-empty and proper");
    const Eigen::VectorXd mag = residuals.cwiseAbs();
    auto statistic = [&](Index shift) {
        double s = 0.0;
        for (Index pos = t0; pos < t; ++pos) s += mag((pos + shift) % t);
        return s / static_cast<double>(t - t0);
    };
    const double observed = statistic(0);
    const double tol = 1e-12 * std::max(1.0, observed);
    Index count = 0;
    for (Index j = 0; j < t; ++j) {
        if (statistic(j) >= observed - tol) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(t);
}

namespace {

void require_conformal_method(Method m) {
    if (m == Method::OLS) {
        throw Error(ErrorCode::InvalidArgument, "conformal inference supports dmscm, d2mscm, abadie and fp_demeaned");
    }
}

}  // namespace

Eigen::VectorXd conformal_residuals(const PanelData& panel, const NullSpec& null, Method estimator,
                                    const MomentConfig& cfg, const SolverOptions& opts) {
    require_conformal_method(estimator);
    panel.validate();
    const Eigen::VectorXd alpha = null.expand(panel.num_post());
    Eigen::MatrixXd adjusted = panel.outcomes;
    adjusted.row(0).tail(panel.num_post()) -= alpha.transpose();
    const Index t = panel.num_periods();
    const WeightFit wf = estimate_weights(estimator, adjusted, panel.covariates, t, cfg, opts);
    return adjusted.row(0).transpose() - synthetic_series(wf.weights, adjusted);
}

double conformal_p_value(const PanelData& panel, const NullSpec& null, Method estimator,
                         const MomentConfig& cfg, const SolverOptions& opts) {
    return block_permutation_p_value(conformal_residuals(panel, null, estimator, cfg, opts), panel.t0);
}

namespace {

std::pair<double, double> center_and_spread(const PanelData& panel, Method estimator, const MomentConfig& cfg,
                                            const SolverOptions& opts) {
    const FitResult f = fit(estimator, panel, cfg, opts);
    const Eigen::VectorXd pre = panel.outcomes.row(0).head(panel.t0).transpose() - f.counterfactual.head(panel.t0);
    const double mean = pre.mean();
    const double sd = std::sqrt((pre.array() - mean).square().sum() / static_cast<double>(pre.size() - 1));
    return {f.mean_att(), sd};
}

}  // namespace

std::vector<double> default_grid(const PanelData& panel, Method estimator, const MomentConfig& cfg,
                                 const SolverOptions& opts) {
    require_conformal_method(estimator);
    auto [center, sd] = center_and_spread(panel, estimator, cfg, opts);
    if (!(sd > 0.0) || !std::isfinite(sd)) sd = 1.0;
    constexpr int points = 41;
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i) {
        grid[static_cast<std::size_t>(i)] = center + 5.0 * sd * (2.0 * i / (points - 1) - 1.0);
    }
    return grid;
}

ConformalReport confidence_interval(const PanelData& panel, const std::vector<double>& grid, double level,
                                    Method estimator, const MomentConfig& cfg, const SolverOptions& opts,
                                    unsigned threads) {
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(ErrorCode::BadLevel, "level " + std::to_string(level) + " outside (0, 1)");
    }
    if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "conformal grid is empty");
    if (!std::is_sorted(grid.begin(), grid.end())) throw Error(ErrorCode::InvalidArgument, "conformal grid must be sorted");
    for (double g : grid) {
        if (!std::isfinite(g)) throw Error(ErrorCode::InvalidArgument, "conformal grid values must be finite");
    }
    require_conformal_method(estimator);

    ConformalReport report;
    report.grid = grid;
    report.level = level;
    report.estimator = estimator;
    report.tau_hat = fit(estimator, panel, cfg, opts).mean_att();
    report.p_values.assign(grid.size(), 0.0);
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        report.p_values[i] = conformal_p_value(panel, NullSpec{grid[i]}, estimator, cfg, opts);
    });

    std::size_t first = grid.size();
    std::size_t last = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (report.p_values[i] > level) {
            first = std::min(first, i);
            last = i;
        }
    }
    if (first == grid.size()) {
        report.empty = true;
        report.lower = report.upper = std::numeric_limits<double>::quiet_NaN();
        return report;
    }
    report.lower = grid[first];
    report.upper = grid[last];
    report.open_lower = first == 0;
    report.open_upper = last + 1 == grid.size();
    return report;
}

}  // namespace synthctl
