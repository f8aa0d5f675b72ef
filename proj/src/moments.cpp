#include "synthctl/moments.hpp"

#include "synthctl/error.hpp"

#include <cmath>

namespace synthctl {

Eigen::MatrixXd Weighting::materialize(Index rows) const {
    switch (kind) {
        case Kind::Identity:
            return Eigen::MatrixXd::Identity(rows, rows);
        case Kind::Diagonal: {
            if (diagonal.size() != rows) {
                throw Error(ErrorCode::DimensionMismatch,
                            "diagonal weighting has " + std::to_string(diagonal.size()) +
                                " entries, moment vector has " + std::to_string(rows));
            }
            if ((diagonal.array() < 0.0).any() || !diagonal.allFinite()) {
                throw Error(ErrorCode::InvalidArgument, "diagonal weighting must be finite and >= 0");
            }
            return diagonal.asDiagonal();
        }
        case Kind::Full: {
            if (full.rows() != rows || full.cols() != rows) {
                throw Error(ErrorCode::DimensionMismatch, "weighting matrix must be " +
                                                              std::to_string(rows) + "x" +
                                                              std::to_string(rows));
            }
            if (!full.allFinite()) throw Error(ErrorCode::InvalidArgument, "weighting matrix not finite");
            const double norm = full.cwiseAbs().maxCoeff();
            if ((full - full.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(norm, 1.0)) {
                throw Error(ErrorCode::InvalidArgument, "weighting matrix must be symmetric");
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(full, Eigen::EigenvaluesOnly);
            if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(norm, 1.0)) {
                throw Error(ErrorCode::InvalidArgument, "weighting matrix must be positive semidefinite");
            }
            return full;
        }
    }
    return Eigen::MatrixXd::Identity(rows, rows);
}

namespace {

double pooled_sd(const Eigen::MatrixXd& block) {
    const double mean = block.mean();
    const double var = (block.array() - mean).square().mean();
    const double sd = std::sqrt(var);
    return (std::isfinite(sd) && sd > 0.0) ? sd : 1.0;
}

void check_finite(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int g) {
    const bool ok = a.allFinite() && b.allFinite() &&
                    (a.size() == 0 || a.cwiseAbs().maxCoeff() <= kMomentLimit) &&
                    (b.size() == 0 || b.cwiseAbs().maxCoeff() <= kMomentLimit);
    if (!ok) {
        throw Error(ErrorCode::Overflow,
                    "moment of order up to " + std::to_string(g) +
                        " exceeds the finite range; enable pooled_sd scaling or lower G");
    }
}

}  // namespace

MomentSystem build_moment_system(const Eigen::MatrixXd& outcomes,
                                 const std::vector<Eigen::MatrixXd>& covariates,
                                 Index window, const MomentConfig& cfg, bool demeaned) {
    if (cfg.g < 1) throw Error(ErrorCode::InvalidArgument, "moment order G must be >= 1");
    if (outcomes.rows() < 2 || window < 1 || window > outcomes.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "moment window outside the panel");
    }
    const Index units = outcomes.rows();
    const Index donors = units - 1;
    const Index g = cfg.g;
    const Index k = cfg.include_covariates ? static_cast<Index>(covariates.size()) : 0;

    Eigen::MatrixXd y = outcomes.leftCols(window);
    if (demeaned) y = y.colwise() - y.rowwise().mean();

    MomentSystem sys;
    sys.demeaned = demeaned;
    sys.covariate_rows = k;
    sys.scale = cfg.scaling == Scaling::PooledSd ? pooled_sd(y) : 1.0;
    sys.a.resize(g + k, donors);
    sys.b.resize(g + k);
    sys.row_scale.resize(g + k);

    const Eigen::ArrayXXd z = y.array() / sys.scale;
    Eigen::ArrayXXd power = Eigen::ArrayXXd::Ones(units, window);
    for (Index r = 0; r < g; ++r) {
        power *= z;
        const Eigen::VectorXd avg = power.rowwise().mean().matrix();
        sys.b(r) = avg(0);
        sys.a.row(r) = avg.tail(donors).transpose();
        sys.row_scale(r) = std::pow(sys.scale, static_cast<double>(r + 1));
        sys.gamma_orders.push_back(static_cast<int>(r + 1));
    }
    for (Index c = 0; c < k; ++c) {
        const auto& x = covariates[static_cast<std::size_t>(c)];
        if (x.rows() != units || x.cols() < window) {
            throw Error(ErrorCode::DimensionMismatch, "covariate matrix has wrong shape");
        }
        const Eigen::MatrixXd xw = x.leftCols(window);
        const double sx = pooled_sd(xw);
        const Eigen::VectorXd avg = xw.rowwise().mean() / sx;
        sys.b(g + c) = avg(0);
        sys.a.row(g + c) = avg.tail(donors).transpose();
        sys.row_scale(g + c) = sx;
    }
    check_finite(sys.a, sys.b, cfg.g);
    return sys;
}

MomentSystem build_system(const PanelData& panel, const MomentConfig& cfg) {
    return build_moment_system(panel.outcomes, panel.covariates, panel.t0, cfg, false);
}

MomentSystem build_demeaned_system(const PanelData& panel, const MomentConfig& cfg) {
    return build_moment_system(panel.outcomes, panel.covariates, panel.t0, cfg, true);
}

double gmm_objective(const MomentSystem& system, const Eigen::MatrixXd& v,
                     const Eigen::VectorXd& w) {
    if (w.size() != system.donors()) {
        throw Error(ErrorCode::DimensionMismatch, "weight vector length " + std::to_string(w.size()) +
                                                      " != donors " + std::to_string(system.donors()));
    }
    if (v.rows() != system.rows() || v.cols() != system.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "weighting matrix does not match moment rows");
    }
    const Eigen::VectorXd m = system.residual(w);
    return std::max(0.0, m.dot(v * m));
}

}  // namespace synthctl
