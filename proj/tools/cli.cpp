#include "cli.hpp"

#include "synthctl/error.hpp"
#include "synthctl/json.hpp"
#include "synthctl/parallel.hpp"
#include "text.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace synthctl::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string num(double v) { return detail::format_double(v); }

// ---------------------------------------------------------------- config files

std::optional<std::string> flag_value(const std::vector<std::string>& args, const std::string& name) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == name && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind(name + "=", 0) == 0) return args[i].substr(name.size() + 1);
    }
    return std::nullopt;
}

bool has_flag(const std::vector<std::string>& args, const std::string& name) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == name || a.rfind(name + "=", 0) == 0; });
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoNotFound, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, "'" + path + "': " + e.what());
    }
}

void flatten(const json& doc, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
    for (const auto& [key, value] : doc.items()) {
        const std::string full = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            flatten(value, full, out);
        } else {
            out.emplace_back(full, value);
        }
    }
}

// Maps a config key to the long option it sets: nested dgp.* keys drop their
// prefix, list keys use the short flag names and underscores become dashes.
std::string option_for_key(std::string key) {
    if (key.rfind("dgp.", 0) == 0) key = key.substr(4);
    if (key == "j_values") key = "j";
    if (key == "g_values") key = "g";
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

std::string scalar_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// Turns a JSON document into extra arguments. Keys already given on the
// command line (or by an earlier layer) are skipped, so flags always win.
void inject_layer(const json& doc, const CLI::App* sub, bool strict, std::vector<std::string>& args,
                  std::vector<std::string>& extra) {
    if (!doc.is_object()) throw Error(ErrorCode::BadConfig, "config file must hold a JSON object");
    std::vector<std::pair<std::string, json>> items;
    flatten(doc, "", items);
    for (const auto& [key, value] : items) {
        const std::string name = "--" + option_for_key(key);
        if (name == "--config" || name == "--schema") continue;
        const CLI::Option* opt = sub->get_option_no_throw(name);
        if (opt == nullptr) {
            if (strict) throw Error(ErrorCode::BadConfig, "unknown config key '" + key + "' for '" + sub->get_name() + "'");
            continue;
        }
        if (has_flag(args, name) || has_flag(extra, name)) continue;
        if (value.is_null()) continue;
        if (value.is_boolean()) {
            extra.push_back(name + (value.get<bool>() ? "=true" : "=false"));
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& el : value) {
                if (!joined.empty()) joined += ',';
                joined += scalar_text(el);
            }
            extra.push_back(name);
            extra.push_back(joined);
        } else {
            extra.push_back(name);
            extra.push_back(scalar_text(value));
        }
    }
}

// ---------------------------------------------------------------- shared options

struct PanelOpts {
    std::string input;
    std::string treated;
    long long t0 = 0;
    std::string unit_column = "unit";
    std::string period_column = "period";
    std::string outcome_column = "outcome";
    std::vector<std::string> covariate_columns;
    std::string period_kind = "integer";
};

struct EstOpts {
    std::string method = "dmscm";
    int g = 5;
    bool include_covariates = false;
    std::string scaling = "pooled_sd";
    std::vector<double> v_diag;
    double tol = 1e-10;
    long long max_iter = 100000;
};

void add_layer_options(CLI::App* app) {
    app->add_option("--config", "JSON file of option values; command-line flags take precedence");
}

void add_panel_options(CLI::App* app, PanelOpts& p) {
    add_layer_options(app);
    app->add_option("--schema", "JSON column-binding template (see data/schemas)");
    app->add_option("--input", p.input, "long-format panel CSV")->required();
    app->add_option("--treated", p.treated, "treated unit id")->required();
    app->add_option("--t0", p.t0, "number of pre-treatment periods")->required();
    app->add_option("--unit-column", p.unit_column)->capture_default_str();
    app->add_option("--period-column", p.period_column)->capture_default_str();
    app->add_option("--outcome-column", p.outcome_column)->capture_default_str();
    app->add_option("--covariate-columns", p.covariate_columns)->delimiter(',');
    app->add_option("--period-kind", p.period_kind, "integer or string")
        ->check(CLI::IsMember({"integer", "string"}))
        ->capture_default_str();
}

void add_estimator_options(CLI::App* app, EstOpts& e) {
    app->add_option("--method", e.method, "dmscm, d2mscm, abadie, fp_demeaned or ols")->capture_default_str();
    app->add_option("--g", e.g, "number of moment orders")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_flag("--include-covariates", e.include_covariates, "append covariate moment rows");
    app->add_option("--scaling", e.scaling)->check(CLI::IsMember({"none", "pooled_sd"}))->capture_default_str();
    app->add_option("--v-diag", e.v_diag, "diagonal of the weighting matrix V")->delimiter(',');
    app->add_option("--tol", e.tol)->capture_default_str();
    app->add_option("--max-iter", e.max_iter)->capture_default_str();
}

PanelData load(const PanelOpts& p) {
    PanelSchema s;
    s.unit_column = p.unit_column;
    s.period_column = p.period_column;
    s.outcome_column = p.outcome_column;
    s.covariate_columns = p.covariate_columns;
    s.period_kind = p.period_kind == "string" ? PeriodKind::String : PeriodKind::Integer;
    return load_panel_file(p.input, s, p.treated, static_cast<Index>(p.t0));
}

MomentConfig moment_config(const EstOpts& e) {
    MomentConfig cfg;
    cfg.g = e.g;
    cfg.include_covariates = e.include_covariates;
    cfg.scaling = e.scaling == "none" ? Scaling::None : Scaling::PooledSd;
    if (!e.v_diag.empty()) {
        cfg.weighting = Weighting::diag(Eigen::Map<const Eigen::VectorXd>(e.v_diag.data(), static_cast<Index>(e.v_diag.size())));
    }
    return cfg;
}

SolverOptions solver_options(const EstOpts& e) {
    if (!(e.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "--tol must be positive");
    if (e.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "--max-iter must be >= 1");
    SolverOptions o;
    o.tol = e.tol;
    o.max_iterations = e.max_iter;
    return o;
}

std::ofstream open_out(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    return out;
}

void write_json(const std::string& path, const json& doc) {
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
}

void warn_fit(const SolveDiagnostics& d, std::ostream& err) {
    if (d.non_unique) {
        err << "warning WARN_NON_UNIQUE: moment matrix rank " << d.rank_estimate
            << " is below the donor count; the minimizer may not be unique\n";
    }
    if (!d.converged) err << "warning WARN_NOT_CONVERGED: solver stopped after " << d.iterations << " iterations\n";
}

// ---------------------------------------------------------------- commands

struct FitCmd {
    PanelOpts panel;
    EstOpts est;
    std::string output;
    std::string format = "json";
};

int cmd_fit(const FitCmd& c, std::ostream& out, std::ostream& err) {
    const PanelData panel = load(c.panel);
    const FitResult f = fit(parse_method(c.est.method), panel, moment_config(c.est), solver_options(c.est));
    if (!c.output.empty()) {
        if (c.format == "csv") {
            auto os = open_out(c.output);
            os << "period,observed,counterfactual,att\n";
            for (Index t = 0; t < panel.num_periods(); ++t) {
                os << panel.period_labels[static_cast<std::size_t>(t)] << ',' << num(panel.outcomes(0, t)) << ','
                   << num(f.counterfactual(t)) << ',';
                if (t >= panel.t0) os << num(f.att(t - panel.t0));
                os << '\n';
            }
        } else {
            write_json(c.output, to_json(f, panel));
        }
    }
    out << "method " << method_name(f.method) << '\n';
    for (Index j = 0; j < panel.num_donors(); ++j) {
        out << "weight " << panel.units[static_cast<std::size_t>(j + 1)] << ' ' << num(f.weights.weights(j)) << '\n';
    }
    out << "intercept " << (f.weights.intercept ? num(*f.weights.intercept) : std::string("none")) << '\n';
    out << "pre_fit_rmse " << num(f.pre_fit_rmse) << '\n';
    out << "mean_att " << num(f.mean_att()) << '\n';
    warn_fit(f.diagnostics, err);
    return 0;
}

struct ConformalCmd {
    PanelOpts panel;
    EstOpts est;
    double level = 0.1;
    std::vector<double> grid;
    std::string output;
    std::string csv;
    int threads = 0;
};

int cmd_conformal(const ConformalCmd& c, std::ostream& out, std::ostream& err) {
    if (!(c.level > 0.0 && c.level < 1.0)) {
        throw Error(ErrorCode::BadLevel, "level " + num(c.level) + " outside (0, 1)");
    }
    const PanelData panel = load(c.panel);
    const Method m = parse_method(c.est.method);
    const MomentConfig cfg = moment_config(c.est);
    const SolverOptions opts = solver_options(c.est);
    std::vector<double> grid = c.grid;
    if (grid.empty()) grid = default_grid(panel, m, cfg, opts);
    const ConformalReport r = confidence_interval(panel, grid, c.level, m, cfg, opts, resolve_threads(c.threads));
    if (!c.output.empty()) write_json(c.output, to_json(r));
    if (!c.csv.empty()) {
        auto os = open_out(c.csv);
        write_pvalue_csv(os, r);
    }
    if (r.empty) {
        out << num(r.tau_hat) << " [] @ " << num(r.level) << '\n';
        err << "warning WARN_EMPTY_REGION: no grid point has p > " << num(r.level) << "\n";
    } else {
        out << num(r.tau_hat) << " [" << num(r.lower) << ", " << num(r.upper) << "] @ " << num(r.level) << '\n';
        if (r.open_lower || r.open_upper) {
            err << "warning WARN_GRID_EDGE: acceptance region reaches the " << (r.open_lower ? "lower" : "")
                << (r.open_lower && r.open_upper ? " and " : "") << (r.open_upper ? "upper" : "")
                << " end of the grid; widen the grid\n";
        }
    }
    return 0;
}

struct DteCmd {
    PanelOpts panel;
    EstOpts est;
    long long l = 1000;
    std::uint64_t seed = 0;
    std::vector<double> probs{0.1, 0.25, 0.5, 0.75, 0.9};
    std::string draws;
    std::string output;
    bool mmd = false;
    int permutations = 500;
    long long mmd_max = 2000;
};

int cmd_dte(const DteCmd& c, std::ostream& out, std::ostream& err) {
    const PanelData panel = load(c.panel);
    const Method m = parse_method(c.est.method);
    if (m == Method::OLS) throw Error(ErrorCode::InvalidArgument, "dte needs simplex weights; ols is not supported");
    const FitResult f = fit(m, panel, moment_config(c.est), solver_options(c.est));
    const BootstrapSample sample = bootstrap_counterfactual(panel, f.weights, static_cast<Index>(c.l), c.seed);
    const std::vector<double> qs = quantiles(sample.draws, c.probs);
    std::optional<MmdReport> mmd;
    if (c.mmd) {
        if (c.mmd_max < 2) throw Error(ErrorCode::InvalidArgument, "--mmd-max must be >= 2");
        const auto n = std::min<std::size_t>(sample.draws.size(), static_cast<std::size_t>(c.mmd_max));
        std::vector<double> observed;
        for (Index t = panel.t0; t < panel.num_periods(); ++t) observed.push_back(panel.outcomes(0, t));
        mmd = mmd_test(std::span<const double>(sample.draws.data(), n), observed, c.permutations,
                       derive_seed(c.seed, 1));
    }
    if (!c.draws.empty()) {
        auto os = open_out(c.draws);
        write_draws_csv(os, sample);
    }
    const json doc = dte_json(sample, m, c.probs, qs, mmd);
    if (!c.output.empty()) write_json(c.output, doc);
    out << "mean " << num(doc["mean"].get<double>()) << '\n';
    for (std::size_t i = 0; i < qs.size(); ++i) out << "quantile " << num(c.probs[i]) << ' ' << num(qs[i]) << '\n';
    if (mmd) out << "mmd2 " << num(mmd->mmd2) << " p_value " << num(mmd->p_value) << '\n';
    warn_fit(f.diagnostics, err);
    return 0;
}

struct SimulateCmd {
    std::string preset = "none";
    std::string output_dir = "sim_out";
    std::vector<long long> j;
    std::vector<int> g;
    std::vector<std::string> methods;
    int replications = 0;
    std::uint64_t seed = 1;
    long long t0 = 0, t1 = 0, k = 0;
    double tau = 0, drift_var = 0, var_low = 0, var_high = 0, var_floor_increment = 0;
    bool drift_is_sd = false, include_covariates = false, compute_mmd = false, timing = false;
    long long mmd_draws = 0;
    int threads = 0;
    CLI::App* app = nullptr;
};

StudySpec preset_spec(const std::string& name) {
    StudySpec s;
    if (name == "figure2" || name == "none") {
        s.j_values = {10};
        s.g_values = {2, 5, 10};
        s.replications = 100;
    } else if (name == "appendixD") {
        s.j_values = {1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
        s.g_values = {2, 3, 5, 10};
        s.dgp.t1 = 1000;
        s.replications = 20;
        s.compute_mmd = true;
    } else {
        throw Error(ErrorCode::BadConfig, "unknown preset '" + name + "'");
    }
    return s;
}

bool given(const SimulateCmd& c, const char* name) { return c.app->count(name) > 0; }

void write_figure(const std::string& path, const std::vector<AggregateRow>& rows, bool by_g, bool mmd) {
    auto os = open_out(path);
    os << "x,method,median,q25,q75\n";
    for (const auto& r : rows) {
        const Summary& s = mmd ? r.mmd_to_truth : r.att_error;
        auto cell = [](double v) { return std::isfinite(v) ? detail::format_double(v) : std::string("nan"); };
        os << (by_g ? r.g : r.j) << ',' << method_name(r.method) << ',' << cell(s.median) << ',' << cell(s.q25) << ','
           << cell(s.q75) << '\n';
    }
}

int cmd_simulate_theorem1(const SimulateCmd& c, std::ostream& out) {
    Theorem1Spec spec;
    if (given(c, "--replications")) spec.replications = c.replications;
    if (given(c, "--seed")) spec.seed = c.seed;
    if (given(c, "--t0")) spec.t0 = static_cast<Index>(c.t0);
    if (given(c, "--g")) {
        if (c.g.size() != 1) throw Error(ErrorCode::BadConfig, "theorem1 takes a single --g");
        spec.g = c.g.front();
    }
    spec.threads = resolve_threads(c.threads);
    const Theorem1Result r = theorem1_experiment(spec);
    write_json((fs::path(c.output_dir) / "theorem1.json").string(), to_json(spec, r));
    auto line = [&](const char* label, const Eigen::VectorXd& v) {
        out << label;
        for (Index i = 0; i < v.size(); ++i) out << ' ' << num(v(i));
        out << '\n';
    };
    line("ols_mean", r.ols_mean);
    line("predicted_limit", r.predicted_limit);
    line("gmm_mean", r.gmm_mean);
    return 0;
}

int cmd_simulate(const SimulateCmd& c, std::ostream& out) {
    if (c.preset == "theorem1") return cmd_simulate_theorem1(c, out);
    StudySpec spec = preset_spec(c.preset);
    if (given(c, "--j")) spec.j_values.assign(c.j.begin(), c.j.end());
    if (given(c, "--g")) spec.g_values = c.g;
    if (given(c, "--methods")) {
        spec.methods.clear();
        for (const auto& m : c.methods) spec.methods.push_back(parse_method(m));
    }
    if (given(c, "--replications")) spec.replications = c.replications;
    if (given(c, "--seed")) spec.seed = c.seed;
    if (given(c, "--t0")) spec.dgp.t0 = static_cast<Index>(c.t0);
    if (given(c, "--t1")) spec.dgp.t1 = static_cast<Index>(c.t1);
    if (given(c, "--k")) spec.dgp.k = static_cast<Index>(c.k);
    if (given(c, "--tau")) spec.dgp.tau = c.tau;
    if (given(c, "--drift-var")) spec.dgp.drift_var = c.drift_var;
    if (given(c, "--drift-is-sd")) spec.dgp.drift_is_sd = c.drift_is_sd;
    if (given(c, "--var-low")) spec.dgp.var_low = c.var_low;
    if (given(c, "--var-high")) spec.dgp.var_high = c.var_high;
    if (given(c, "--var-floor-increment")) spec.dgp.var_floor_increment = c.var_floor_increment;
    if (given(c, "--include-covariates")) spec.include_covariates = c.include_covariates;
    if (given(c, "--compute-mmd")) spec.compute_mmd = c.compute_mmd;
    if (given(c, "--mmd-draws")) spec.mmd_draws = static_cast<Index>(c.mmd_draws);
    spec.timing = c.timing;
    spec.threads = resolve_threads(c.threads);

    const ReplicationResult result = run_replication_study(spec);
    const fs::path dir(c.output_dir);
    {
        auto os = open_out((dir / "records.csv").string());
        write_records_csv(os, result.records, spec.timing);
    }
    write_json((dir / "aggregates.json").string(), study_json(spec, result, c.preset == "none" ? "" : c.preset));
    for (Index j : spec.j_values) {
        std::vector<AggregateRow> rows;
        for (const auto& a : result.aggregates)
            if (a.j == j) rows.push_back(a);
        write_figure((dir / ("att_by_g_j" + std::to_string(j) + ".csv")).string(), rows, true, false);
        if (spec.compute_mmd) write_figure((dir / ("mmd_by_g_j" + std::to_string(j) + ".csv")).string(), rows, true, true);
    }
    for (int g : spec.g_values) {
        std::vector<AggregateRow> rows;
        for (const auto& a : result.aggregates)
            if (a.g == g) rows.push_back(a);
        write_figure((dir / ("att_by_j_g" + std::to_string(g) + ".csv")).string(), rows, false, false);
        if (spec.compute_mmd) write_figure((dir / ("mmd_by_j_g" + std::to_string(g) + ".csv")).string(), rows, false, true);
    }
    for (const auto& a : result.aggregates) {
        out << "j=" << a.j << " g=" << a.g << " method=" << method_name(a.method) << " n=" << a.count
            << " failures=" << a.failures << " att_error_median=" << num(a.att_error.median)
            << " weight_error_median=" << num(a.weight_error.median);
        if (spec.compute_mmd && std::isfinite(a.mmd_to_truth.median)) out << " mmd_median=" << num(a.mmd_to_truth.median);
        out << '\n';
    }
    return 0;
}

struct GenerateCmd {
    std::string kind = "mixture";
    long long j = 5, t0 = 40, t1 = 10, k = 0;
    double tau = 20.0, drift_var = 10.0, var_floor_increment = 0.1, shift = 5.0, sd1 = 1.0, sd2 = 2.0;
    bool center = false;
    std::uint64_t seed = 1;
    std::string output;
    std::string truth;
};

int cmd_generate(const GenerateCmd& c, std::ostream& out) {
    SimulatedPanel sim;
    if (c.kind == "mixture") {
        MixtureDgpConfig cfg;
        cfg.j = static_cast<Index>(c.j);
        cfg.t0 = static_cast<Index>(c.t0);
        cfg.t1 = static_cast<Index>(c.t1);
        cfg.k = static_cast<Index>(c.k);
        cfg.tau = c.tau;
        cfg.drift_var = c.drift_var;
        cfg.var_floor_increment = c.var_floor_increment;
        cfg.seed = c.seed;
        sim = gen_mixture_dgp(cfg);
    } else if (c.kind == "shifted") {
        sim = gen_shifted_mixture(static_cast<Index>(c.j), static_cast<Index>(c.t0), static_cast<Index>(c.t1), c.shift,
                                  c.seed);
    } else if (c.kind == "two-component") {
        sim = gen_two_component(static_cast<Index>(c.t0), static_cast<Index>(c.t1), c.sd1, c.sd2, c.center, c.seed);
    } else {
        throw Error(ErrorCode::BadConfig, "unknown generator '" + c.kind + "'");
    }
    PanelSchema schema;
    schema.covariate_columns = sim.panel.covariate_names;
    {
        auto os = open_out(c.output);
        write_panel_csv(os, sim.panel, schema);
    }
    json w = json::array();
    for (Index i = 0; i < sim.truth.w_star.size(); ++i) w.push_back(sim.truth.w_star(i));
    if (!c.truth.empty()) {
        write_json(c.truth, {{"schema_version", kSchemaVersion},
                             {"kind", "truth"},
                             {"generator", c.kind},
                             {"seed", c.seed},
                             {"treated", sim.panel.treated_unit()},
                             {"t0", sim.panel.t0},
                             {"w_star", w},
                             {"tau", sim.truth.tau}});
    }
    out << "wrote " << c.output << " (" << sim.panel.units.size() << " units, " << sim.panel.num_periods()
        << " periods, t0 " << sim.panel.t0 << ")\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& input_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Density-matching synthetic control: estimation, inference and simulation", "synthctl"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kSchemaVersion));

    FitCmd fitc;
    auto* fit_app = app.add_subcommand("fit", "estimate weights and the ATT for one panel");
    add_panel_options(fit_app, fitc.panel);
    add_estimator_options(fit_app, fitc.est);
    fit_app->add_option("--output", fitc.output, "write the fit document here");
    fit_app->add_option("--format", fitc.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

    ConformalCmd confc;
    auto* conf_app = app.add_subcommand("conformal", "conformal p-values and confidence interval for the ATT");
    add_panel_options(conf_app, confc.panel);
    add_estimator_options(conf_app, confc.est);
    conf_app->add_option("--level", confc.level, "test level xi")->capture_default_str();
    conf_app->add_option("--grid", confc.grid, "sorted null values (default: 41 points around the estimate)")
        ->delimiter(',');
    conf_app->add_option("--output", confc.output, "report JSON path");
    conf_app->add_option("--csv", confc.csv, "(alpha, p) CSV path");
    conf_app->add_option("--threads", confc.threads, "worker cap (default SYNTHCTL_THREADS or 1)");

    DteCmd dtec;
    auto* dte_app = app.add_subcommand("dte", "bootstrap the counterfactual outcome distribution");
    add_panel_options(dte_app, dtec.panel);
    add_estimator_options(dte_app, dtec.est);
    dte_app->add_option("--L", dtec.l, "number of bootstrap draws")->capture_default_str();
    dte_app->add_option("--seed", dtec.seed)->capture_default_str();
    dte_app->add_option("--probs", dtec.probs)->delimiter(',');
    dte_app->add_option("--draws", dtec.draws, "one-column CSV of draws");
    dte_app->add_option("--output", dtec.output, "quantiles JSON path");
    dte_app->add_flag("--mmd", dtec.mmd, "test draws against the observed treated post-period outcomes");
    dte_app->add_option("--permutations", dtec.permutations)->capture_default_str();
    dte_app->add_option("--mmd-max", dtec.mmd_max, "use at most this many draws in the MMD test")->capture_default_str();

    SimulateCmd simc;
    auto* sim_app = app.add_subcommand("simulate", "Monte Carlo studies on the drifting mixture DGP");
    simc.app = sim_app;
    add_layer_options(sim_app);
    sim_app->add_option("--preset", simc.preset)
        ->check(CLI::IsMember({"none", "figure2", "appendixD", "theorem1"}))
        ->capture_default_str();
    sim_app->add_option("--output-dir", simc.output_dir)->capture_default_str();
    sim_app->add_option("--j", simc.j, "donor counts")->delimiter(',');
    sim_app->add_option("--g", simc.g, "moment orders")->delimiter(',');
    sim_app->add_option("--methods", simc.methods)->delimiter(',');
    sim_app->add_option("--replications", simc.replications);
    sim_app->add_option("--seed", simc.seed);
    sim_app->add_option("--t0", simc.t0);
    sim_app->add_option("--t1", simc.t1);
    sim_app->add_option("--k", simc.k);
    sim_app->add_option("--tau", simc.tau);
    sim_app->add_option("--drift-var", simc.drift_var);
    sim_app->add_flag("--drift-is-sd", simc.drift_is_sd);
    sim_app->add_option("--var-low", simc.var_low);
    sim_app->add_option("--var-high", simc.var_high);
    sim_app->add_option("--var-floor-increment", simc.var_floor_increment);
    sim_app->add_flag("--include-covariates", simc.include_covariates);
    sim_app->add_flag("--compute-mmd", simc.compute_mmd);
    sim_app->add_option("--mmd-draws", simc.mmd_draws);
    sim_app->add_flag("--timing", simc.timing, "add a runtime column to records.csv");
    sim_app->add_option("--threads", simc.threads, "worker cap (default SYNTHCTL_THREADS or 1)");

    GenerateCmd genc;
    auto* gen_app = app.add_subcommand("generate", "write a simulated panel CSV");
    add_layer_options(gen_app);
    gen_app->add_option("--kind", genc.kind)
        ->check(CLI::IsMember({"mixture", "shifted", "two-component"}))
        ->capture_default_str();
    gen_app->add_option("--j", genc.j)->capture_default_str();
    gen_app->add_option("--t0", genc.t0)->capture_default_str();
    gen_app->add_option("--t1", genc.t1)->capture_default_str();
    gen_app->add_option("--k", genc.k, "covariates (mixture only)")->capture_default_str();
    gen_app->add_option("--tau", genc.tau)->capture_default_str();
    gen_app->add_option("--drift-var", genc.drift_var)->capture_default_str();
    gen_app->add_option("--var-floor-increment", genc.var_floor_increment)->capture_default_str();
    gen_app->add_option("--shift", genc.shift)->capture_default_str();
    gen_app->add_option("--sd1", genc.sd1)->capture_default_str();
    gen_app->add_option("--sd2", genc.sd2)->capture_default_str();
    gen_app->add_flag("--center", genc.center);
    gen_app->add_option("--seed", genc.seed)->capture_default_str();
    gen_app->add_option("--output", genc.output)->required();
    gen_app->add_option("--truth", genc.truth, "JSON with the true weights");

    try {
        std::vector<std::string> args = input_args;
        if (!args.empty()) {
            if (const CLI::App* sub = app.get_subcommand_no_throw(args.front())) {
                std::vector<std::string> extra;
                if (auto path = flag_value(args, "--config")) inject_layer(read_json_file(*path), sub, true, args, extra);
                if (auto path = flag_value(args, "--schema")) inject_layer(read_json_file(*path), sub, false, args, extra);
                args.insert(args.end(), extra.begin(), extra.end());
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        const CLI::App* target = &app;
        for (const CLI::App* sub : app.get_subcommands()) target = sub;
        out << target->help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kSchemaVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error USAGE: " << msg << '\n';
        return 1;
    } catch (const Error& e) {
        err << "error " << code_name(e.code()) << ": " << e.what() << '\n';
        return 1;
    }

    try {
        if (fit_app->parsed()) return cmd_fit(fitc, out, err);
        if (conf_app->parsed()) return cmd_conformal(confc, out, err);
        if (dte_app->parsed()) return cmd_dte(dtec, out, err);
        if (sim_app->parsed()) return cmd_simulate(simc, out);
        if (gen_app->parsed()) return cmd_generate(genc, out);
        err << "error USAGE: no command given\n";
        return 1;
    } catch (const Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error " << code_name(e.code()) << ": " << msg << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error INTERNAL: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace synthctl::cli
