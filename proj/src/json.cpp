#include "synthctl/json.hpp"

#include "text.hpp"

#include <cmath>

namespace synthctl {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_num(double v) { return std::isfinite(v) ? detail::format_double(v) : std::string("nan"); }

}  // namespace

json to_json(const SolveDiagnostics& d) {
    return {{"iterations", d.iterations},
            {"final_objective", d.final_objective},
            {"projected_gradient_norm", d.projected_gradient_norm},
            {"rank_estimate", d.rank_estimate},
            {"converged", d.converged},
            {"non_unique", d.non_unique}};
}

json to_json(const FitResult& fit, const PanelData& panel) {
    json donors = json::array();
    for (std::size_t i = 1; i < panel.units.size(); ++i) donors.push_back(panel.units[i]);
    return {{"schema_version", kSchemaVersion},
            {"kind", "fit"},
            {"method", method_name(fit.method)},
            {"treated", panel.treated_unit()},
            {"donors", donors},
            {"t0", panel.t0},
            {"weights", vec(fit.weights.weights)},
            {"intercept", fit.weights.intercept ? json(*fit.weights.intercept) : json(nullptr)},
            {"att", vec(fit.att)},
            {"mean_att", fit.mean_att()},
            {"counterfactual", vec(fit.counterfactual)},
            {"pre_fit_rmse", fit.pre_fit_rmse},
            {"diagnostics", to_json(fit.diagnostics)}};
}

json to_json(const ConformalReport& r) {
    return {{"schema_version", kSchemaVersion},
            {"kind", "conformal"},
            {"estimator", method_name(r.estimator)},
            {"level", r.level},
            {"tau_hat", r.tau_hat},
            {"grid", r.grid},
            {"p_values", r.p_values},
            {"interval",
             {{"lower", nullable(r.lower)},
              {"upper", nullable(r.upper)},
              {"open_lower", r.open_lower},
              {"open_upper", r.open_upper},
              {"empty", r.empty}}}};
}

json to_json(const MmdReport& r) {
    return {{"mmd2", r.mmd2}, {"p_value", r.p_value}, {"bandwidth", r.bandwidth}, {"permutations", r.permutations}};
}

json to_json(const Summary& s) {
    return {{"median", nullable(s.median)}, {"q25", nullable(s.q25)}, {"q75", nullable(s.q75)}, {"mean", nullable(s.mean)}};
}

json to_json(const StudySpec& spec) {
    json methods = json::array();
    for (Method m : spec.methods) methods.push_back(method_name(m));
    return {{"dgp",
             {{"t0", spec.dgp.t0},
              {"t1", spec.dgp.t1},
              {"k", spec.dgp.k},
              {"tau", spec.dgp.tau},
              {"var_low", spec.dgp.var_low},
              {"var_high", spec.dgp.var_high},
              {"drift_var", spec.dgp.drift_var},
              {"drift_is_sd", spec.dgp.drift_is_sd},
              {"var_floor_increment", spec.dgp.var_floor_increment}}},
            {"j_values", spec.j_values},
            {"g_values", spec.g_values},
            {"methods", methods},
            {"replications", spec.replications},
            {"seed", spec.seed},
            {"include_covariates", spec.include_covariates},
            {"compute_mmd", spec.compute_mmd},
            {"mmd_draws", spec.mmd_draws}};
}

json to_json(const Theorem1Spec& spec, const Theorem1Result& result) {
    return {{"schema_version", kSchemaVersion},
            {"kind", "theorem1"},
            {"spec",
             {{"w_star", vec(spec.w_star)},
              {"q_diag", vec(spec.q_diag)},
              {"sigma_diag", vec(spec.sigma_diag)},
              {"t0", spec.t0},
              {"replications", spec.replications},
              {"g", spec.g},
              {"seed", spec.seed}}},
            {"ols_mean", vec(result.ols_mean)},
            {"predicted_limit", vec(result.predicted_limit)},
            {"gmm_mean", vec(result.gmm_mean)}};
}

json dte_json(const BootstrapSample& sample, Method method, const std::vector<double>& probs,
              const std::vector<double>& qs, const std::optional<MmdReport>& mmd) {
    double mean = 0.0;
    for (double d : sample.draws) mean += d;
    mean /= static_cast<double>(sample.draws.size());
    json q = json::array();
    for (std::size_t i = 0; i < probs.size(); ++i) q.push_back({{"p", probs[i]}, {"value", qs[i]}});
    return {{"schema_version", kSchemaVersion},
            {"kind", "dte"},
            {"method", method_name(method)},
            {"l", sample.l},
            {"seed", sample.seed},
            {"weights", vec(sample.weights_used.weights)},
            {"intercept", sample.weights_used.intercept ? json(*sample.weights_used.intercept) : json(nullptr)},
            {"mean", mean},
            {"quantiles", q},
            {"mmd", mmd ? to_json(*mmd) : json(nullptr)}};
}

json study_json(const StudySpec& spec, const ReplicationResult& result, const std::string& preset) {
    json rows = json::array();
    for (const auto& a : result.aggregates) {
        rows.push_back({{"j", a.j},
                        {"g", a.g},
                        {"method", method_name(a.method)},
                        {"count", a.count},
                        {"failures", a.failures},
                        {"att_error", to_json(a.att_error)},
                        {"weight_error", to_json(a.weight_error)},
                        {"mmd_to_truth", to_json(a.mmd_to_truth)}});
    }
    return {{"schema_version", kSchemaVersion},
            {"kind", "study"},
            {"preset", preset.empty() ? json(nullptr) : json(preset)},
            {"spec", to_json(spec)},
            {"records", result.records.size()},
            {"aggregates", rows}};
}

void write_pvalue_csv(std::ostream& out, const ConformalReport& report) {
    out << "alpha,p\n";
    for (std::size_t i = 0; i < report.grid.size(); ++i) {
        out << csv_num(report.grid[i]) << ',' << csv_num(report.p_values[i]) << '\n';
    }
}

void write_draws_csv(std::ostream& out, const BootstrapSample& sample) {
    out << "draw\n";
    for (double d : sample.draws) out << csv_num(d) << '\n';
}

void write_records_csv(std::ostream& out, const std::vector<ReplicationRecord>& records, bool timing) {
    out << "j,g,method,replication,seed,ok,att_error,weight_error,mmd_to_truth";
    if (timing) out << ",runtime_ms";
    out << ",error\n";
    for (const auto& r : records) {
        out << r.j << ',' << r.g << ',' << method_name(r.method) << ',' << r.replication << ',' << r.seed << ','
            << (r.ok ? 1 : 0) << ',' << csv_num(r.att_error) << ',' << csv_num(r.weight_error) << ','
            << csv_num(r.mmd_to_truth);
        if (timing) out << ',' << csv_num(r.runtime_ms);
        std::string msg = r.error;
        for (char& c : msg)
            if (c == '"' || c == '\n' || c == ',') c = ' ';
        out << ',' << msg << '\n';
    }
}

}  // namespace synthctl
