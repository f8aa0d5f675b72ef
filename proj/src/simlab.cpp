#include "synthctl/simlab.hpp"

#include "synthctl/dte.hpp"
#include "synthctl/error.hpp"
#include "synthctl/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <tuple>

namespace synthctl {

namespace {

std::vector<std::string> unit_names(Index j) {
    std::vector<std::string> names{"treated"};
    for (Index i = 1; i <= j; ++i) names.push_back("u" + std::to_string(i));
    return names;
}

Eigen::VectorXd draw_simplex_weights(Index j, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd w(j);
    for (Index i = 0; i < j; ++i) w(i) = unif(rng);
    return w / w.sum();
}

std::discrete_distribution<Index> component_picker(const Eigen::VectorXd& w) {
    return std::discrete_distribution<Index>(w.data(), w.data() + w.size());
}

}  // namespace

void MixtureDgpConfig::validate() const {
    if (j < 1) throw Error(ErrorCode::BadConfig, "dgp.j must be >= 1");
    if (t0 < 2) throw Error(ErrorCode::BadConfig, "dgp.t0 must be >= 2");
    if (t1 < 1) throw Error(ErrorCode::BadConfig, "dgp.t1 must be >= 1");
    if (k < 0) throw Error(ErrorCode::BadConfig, "dgp.k must be >= 0");
    if (!(var_low > 0.0) || !(var_high >= var_low)) {
        throw Error(ErrorCode::BadConfig, "dgp variance range must satisfy 0 < low <= high");
    }
    if (!(drift_var >= 0.0)) throw Error(ErrorCode::BadConfig, "dgp.drift_var must be >= 0");
    if (!std::isfinite(tau)) throw Error(ErrorCode::BadConfig, "dgp.tau must be finite");
}

double MixtureDgpConfig::drift_sd() const { return drift_is_sd ? drift_var : std::sqrt(drift_var); }

SimulatedPanel gen_mixture_dgp(const MixtureDgpConfig& cfg) {
    cfg.validate();
    const Index j = cfg.j;
    const Index k = cfg.k;
    const Index t = cfg.t0 + cfg.t1;
    Rng rng = make_rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> var_init(cfg.var_low, cfg.var_high);

    Eigen::VectorXd mean(j);
    Eigen::VectorXd var(j);
    Eigen::MatrixXd cov_mean(j, k);
    Eigen::MatrixXd cov_var(j, k);
    for (Index i = 0; i < j; ++i) {
        mean(i) = normal(rng);
        for (Index c = 0; c < k; ++c) cov_mean(i, c) = normal(rng);
    }
    for (Index i = 0; i < j; ++i) {
        var(i) = var_init(rng);
        for (Index c = 0; c < k; ++c) cov_var(i, c) = var_init(rng);
    }
    MixtureTruth truth;
    truth.w_star = draw_simplex_weights(j, rng);
    truth.tau = cfg.tau;
    truth.mean_path.resize(j, t);
    truth.var_path.resize(j, t);
    truth.cov_mean = cov_mean;
    truth.cov_var = cov_var;
    auto pick = component_picker(truth.w_star);

    Eigen::MatrixXd y(j + 1, t);
    std::vector<Eigen::MatrixXd> x(static_cast<std::size_t>(k), Eigen::MatrixXd(j + 1, t));
    const double drift_sd = cfg.drift_sd();
    for (Index p = 0; p < t; ++p) {
        truth.mean_path.col(p) = mean;
        truth.var_path.col(p) = var;
        for (Index i = 0; i < j; ++i) {
            y(i + 1, p) = mean(i) + std::sqrt(var(i)) * normal(rng);
            for (Index c = 0; c < k; ++c) {
                x[static_cast<std::size_t>(c)](i + 1, p) = cov_mean(i, c) + std::sqrt(cov_var(i, c)) * normal(rng);
            }
        }
        const Index comp = pick(rng);
        y(0, p) = mean(comp) + std::sqrt(var(comp)) * normal(rng);
        for (Index c = 0; c < k; ++c) {
            x[static_cast<std::size_t>(c)](0, p) = cov_mean(comp, c) + std::sqrt(cov_var(comp, c)) * normal(rng);
        }
        for (Index i = 0; i < j; ++i) mean(i) += drift_sd * normal(rng);
        for (Index i = 0; i < j; ++i) {
            double inc = drift_sd * normal(rng);
            if (inc <= cfg.var_floor_increment) inc = cfg.var_floor_increment;
            var(i) += inc;
        }
    }
    y.row(0).tail(cfg.t1).array() += cfg.tau;
    truth.treated_mean = truth.mean_path.transpose() * truth.w_star;

    std::vector<std::string> cov_names;
    for (Index c = 1; c <= k; ++c) cov_names.push_back("x" + std::to_string(c));
    SimulatedPanel out{make_panel(std::move(y), cfg.t0, unit_names(j), std::move(x), std::move(cov_names)),
                       std::move(truth)};
    return out;
}

std::vector<double> sample_true_post_mixture(const MixtureTruth& truth, Index t0, Index n, Rng& rng) {
    const Index t = truth.mean_path.cols();
    std::uniform_int_distribution<Index> period(t0, t - 1);
    auto pick = component_picker(truth.w_star);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) {
        const Index p = period(rng);
        const Index c = pick(rng);
        v = truth.mean_path(c, p) + std::sqrt(truth.var_path(c, p)) * normal(rng);
    }
    return out;
}

SimulatedPanel gen_shifted_mixture(Index j, Index t0, Index t1, double shift, std::uint64_t seed) {
    if (j < 1 || t0 < 2 || t1 < 1) throw Error(ErrorCode::BadConfig, "shifted mixture needs j >= 1, t0 >= 2, t1 >= 1");
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index t = t0 + t1;
    MixtureTruth truth;
    truth.w_star = draw_simplex_weights(j, rng);
    truth.tau = 0.0;
    truth.mean_path = Eigen::MatrixXd::Zero(j, t);
    truth.var_path.resize(j, t);
    for (Index i = 0; i < j; ++i) truth.var_path.row(i).setConstant(static_cast<double>((i + 1) * (i + 1)));
    auto pick = component_picker(truth.w_star);
    Eigen::MatrixXd y(j + 1, t);
    for (Index p = 0; p < t; ++p) {
        for (Index i = 0; i < j; ++i) y(i + 1, p) = static_cast<double>(i + 1) * normal(rng);
        const Index c = pick(rng);
        y(0, p) = shift + static_cast<double>(c + 1) * normal(rng);
    }
    truth.treated_mean = Eigen::VectorXd::Constant(t, shift);
    return {make_panel(std::move(y), t0, unit_names(j)), std::move(truth)};
}

SimulatedPanel gen_two_component(Index t0, Index t1, double sd1, double sd2, bool center, std::uint64_t seed) {
    if (t0 < 2 || t1 < 1) throw Error(ErrorCode::BadConfig, "two-component DGP needs t0 >= 2, t1 >= 1");
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const Index t = t0 + t1;
    Eigen::MatrixXd y(3, t);
    for (Index p = 0; p < t; ++p) {
        y(1, p) = sd1 * normal(rng);
        y(2, p) = sd2 * normal(rng);
        y(0, p) = (coin(rng) ? sd1 : sd2) * normal(rng);
    }
    if (center) {
        for (Index r = 0; r < 3; ++r) y.row(r).array() -= y.row(r).head(t0).mean();
    }
    MixtureTruth truth;
    truth.w_star = Eigen::Vector2d(0.5, 0.5);
    truth.mean_path = Eigen::MatrixXd::Zero(2, t);
    truth.var_path.resize(2, t);
    truth.var_path.row(0).setConstant(sd1 * sd1);
    truth.var_path.row(1).setConstant(sd2 * sd2);
    truth.treated_mean = Eigen::VectorXd::Zero(t);
    return {make_panel(std::move(y), t0, unit_names(2)), std::move(truth)};
}

Summary summarize(const std::vector<double>& values) {
    std::vector<double> finite;
    for (double v : values)
        if (std::isfinite(v)) finite.push_back(v);
    Summary s;
    if (finite.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan, nan};
    }
    if (finite.size() == 1) return {finite[0], finite[0], finite[0], finite[0]};
    const double probs[] = {0.5, 0.25, 0.75};
    const auto q = quantiles(finite, probs);
    s.median = q[0];
    s.q25 = q[1];
    s.q75 = q[2];
    double sum = 0.0;
    for (double v : finite) sum += v;
    s.mean = sum / static_cast<double>(finite.size());
    return s;
}

void StudySpec::validate() const {
    dgp.validate();
    if (replications < 1) throw Error(ErrorCode::BadConfig, "replications must be >= 1");
    if (j_values.empty() || g_values.empty() || methods.empty()) {
        throw Error(ErrorCode::BadConfig, "study needs at least one J, one G and one method");
    }
    for (Index j : j_values)
        if (j < 1) throw Error(ErrorCode::BadConfig, "every J must be >= 1");
    for (int g : g_values)
        if (g < 1) throw Error(ErrorCode::BadConfig, "every G must be >= 1");
    if (compute_mmd && mmd_draws < 2) throw Error(ErrorCode::BadConfig, "mmd draws must be >= 2");
}

std::uint64_t replication_seed(std::uint64_t base, std::size_t cell, int rep) {
    return derive_seed(derive_seed(base, cell), static_cast<std::uint64_t>(rep));
}

namespace {

bool uses_g(Method m) { return m == Method::DMSCM || m == Method::D2MSCM; }

ReplicationRecord run_one(const SimulatedPanel& sim, const StudySpec& spec, int g, Method method,
                          const std::vector<double>& truth_sample, std::uint64_t boot_seed) {
    ReplicationRecord rec;
    rec.g = g;
    rec.method = method;
    const auto start = std::chrono::steady_clock::now();
    try {
        MomentConfig cfg;
        cfg.g = g;
        cfg.include_covariates = spec.include_covariates;
        const FitResult f = fit(method, sim.panel, cfg);
        rec.att_error = (f.att.array() - sim.truth.tau).abs().mean();
        rec.weight_error = (f.weights.weights - sim.truth.w_star).cwiseAbs().maxCoeff();
        rec.mmd_to_truth = std::numeric_limits<double>::quiet_NaN();
        if (spec.compute_mmd && method != Method::OLS) {
            const auto boot = bootstrap_counterfactual(sim.panel, f.weights, spec.mmd_draws, boot_seed);
            const double h = median_heuristic_bandwidth(boot.draws, truth_sample);
            rec.mmd_to_truth = mmd2_biased(boot.draws, truth_sample, h);
        }
        if (!std::isfinite(rec.att_error) || !std::isfinite(rec.weight_error)) {
            throw Error(ErrorCode::StudyFailed, "non-finite replication error");
        }
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    if (spec.timing) {
        rec.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    return rec;
}

}  // namespace

ReplicationResult run_replication_study(const StudySpec& spec) {
    spec.validate();
    const std::size_t nj = spec.j_values.size();
    const std::size_t ng = spec.g_values.size();
    const std::size_t nm = spec.methods.size();
    const auto reps = static_cast<std::size_t>(spec.replications);
    const std::size_t per_task = ng * nm;
    std::vector<ReplicationRecord> slots(nj * reps * per_task);

    parallel_for(nj * reps, resolve_threads(static_cast<int>(spec.threads)), [&](std::size_t task) {
        const std::size_t cell = task / reps;
        const int rep = static_cast<int>(task % reps);
        const std::uint64_t seed = replication_seed(spec.seed, cell, rep);
        MixtureDgpConfig dgp = spec.dgp;
        dgp.j = spec.j_values[cell];
        dgp.seed = seed;
        std::vector<double> truth_sample;
        std::optional<SimulatedPanel> sim;
        std::string gen_error;
        try {
            sim = gen_mixture_dgp(dgp);
            if (spec.compute_mmd) {
                Rng rng = make_rng(derive_seed(seed, 0));
                truth_sample = sample_true_post_mixture(sim->truth, dgp.t0, spec.mmd_draws, rng);
            }
        } catch (const std::exception& e) {
            gen_error = e.what();
        }
        std::map<Method, ReplicationRecord> g_free;
        for (std::size_t gi = 0; gi < ng; ++gi) {
            for (std::size_t mi = 0; mi < nm; ++mi) {
                const Method m = spec.methods[mi];
                const int g = spec.g_values[gi];
                ReplicationRecord rec;
                if (!sim) {
                    rec.ok = false;
                    rec.error = gen_error;
                    rec.g = g;
                    rec.method = m;
                } else if (!uses_g(m) && g_free.count(m)) {
                    rec = g_free.at(m);
                    rec.g = g;
                } else {
                    rec = run_one(*sim, spec, g, m, truth_sample, derive_seed(seed, 1 + (uses_g(m) ? gi * nm : 0) + mi));
                    if (!uses_g(m)) g_free.emplace(m, rec);
                }
                rec.j = dgp.j;
                rec.replication = rep;
                rec.seed = seed;
                // Record order is (J, G, method, replication).
                const std::size_t slot = ((cell * ng + gi) * nm + mi) * reps + static_cast<std::size_t>(rep);
                slots[slot] = std::move(rec);
            }
        }
    });

    ReplicationResult result;
    result.records = std::move(slots);
    std::size_t failures = 0;
    for (const auto& r : result.records) failures += r.ok ? 0 : 1;
    if (failures * 10 > result.records.size()) {
        std::string first;
        for (const auto& r : result.records)
            if (!r.ok) {
                first = r.error;
                break;
            }
        throw Error(ErrorCode::StudyFailed, std::to_string(failures) + " of " + std::to_string(result.records.size()) +
                                                " replications failed; first: " + first);
    }
    result.aggregates = aggregate_records(result.records);
    return result;
}

std::vector<AggregateRow> aggregate_records(const std::vector<ReplicationRecord>& records) {
    struct Bucket {
        Index count = 0;
        Index failures = 0;
        std::vector<double> att, weight, mmd;
    };
    // Keyed by first appearance so output follows record order.
    std::vector<std::tuple<Index, int, Method>> order;
    std::map<std::tuple<Index, int, int>, Bucket> buckets;
    for (const auto& r : records) {
        const auto key = std::make_tuple(r.j, r.g, static_cast<int>(r.method));
        auto [it, inserted] = buckets.try_emplace(key);
        if (inserted) order.emplace_back(r.j, r.g, r.method);
        Bucket& b = it->second;
        if (!r.ok) {
            ++b.failures;
            continue;
        }
        ++b.count;
        b.att.push_back(r.att_error);
        b.weight.push_back(r.weight_error);
        b.mmd.push_back(r.mmd_to_truth);
    }
    std::vector<AggregateRow> out;
    for (const auto& [j, g, m] : order) {
        const Bucket& b = buckets.at(std::make_tuple(j, g, static_cast<int>(m)));
        AggregateRow row;
        row.j = j;
        row.g = g;
        row.method = m;
        row.count = b.count;
        row.failures = b.failures;
        row.att_error = summarize(b.att);
        row.weight_error = summarize(b.weight);
        row.mmd_to_truth = summarize(b.mmd);
        out.push_back(row);
    }
    return out;
}

SimulatedPanel gen_theorem1_panel(const Theorem1Spec& spec, std::uint64_t seed) {
    const Index j = spec.w_star.size();
    if (j < 1 || spec.q_diag.size() != j || spec.sigma_diag.size() != j) {
        throw Error(ErrorCode::DimensionMismatch, "theorem1 inputs must share one length");
    }
    if ((spec.q_diag.array() < 0.0).any() || (spec.sigma_diag.array() < 0.0).any()) {
        throw Error(ErrorCode::InvalidArgument, "theorem1 diagonals must be nonnegative");
    }
    const Index t = spec.t0 + 1;
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto pick = component_picker(spec.w_star);
    const Eigen::VectorXd q_sd = spec.q_diag.cwiseSqrt();
    const Eigen::VectorXd noise_sd = spec.sigma_diag.cwiseSqrt();
    Eigen::MatrixXd y(j + 1, t);
    Eigen::VectorXd m(j);
    for (Index p = 0; p < t; ++p) {
        m(0) = q_sd(0);
        for (Index i = 1; i < j; ++i) m(i) = q_sd(i) * normal(rng);
        for (Index i = 0; i < j; ++i) y(i + 1, p) = m(i) + noise_sd(i) * normal(rng);
        const Index c = pick(rng);
        y(0, p) = m(c) + noise_sd(c) * normal(rng);
    }
    MixtureTruth truth;
    truth.w_star = spec.w_star;
    return {make_panel(std::move(y), spec.t0, unit_names(j)), std::move(truth)};
}

Theorem1Result theorem1_experiment(const Theorem1Spec& spec) {
    if (spec.replications < 1) throw Error(ErrorCode::BadConfig, "theorem1 replications must be >= 1");
    if (spec.t0 < 2) throw Error(ErrorCode::BadConfig, "theorem1 t0 must be >= 2");
    const Index j = spec.w_star.size();
    const auto reps = static_cast<std::size_t>(spec.replications);
    std::vector<Eigen::VectorXd> ols(reps), gmm(reps);
    MomentConfig cfg;
    cfg.g = spec.g;
    parallel_for(reps, resolve_threads(static_cast<int>(spec.threads)), [&](std::size_t r) {
        const SimulatedPanel sim = gen_theorem1_panel(spec, derive_seed(spec.seed, r));
        ols[r] = ls_unconstrained(sim.panel);
        gmm[r] = fit_dmscm(sim.panel, cfg).weights.weights;
    });
    Theorem1Result out;
    out.ols_mean = Eigen::VectorXd::Zero(j);
    out.gmm_mean = Eigen::VectorXd::Zero(j);
    for (std::size_t r = 0; r < reps; ++r) {
        out.ols_mean += ols[r];
        out.gmm_mean += gmm[r];
    }
    out.ols_mean /= static_cast<double>(reps);
    out.gmm_mean /= static_cast<double>(reps);
    out.predicted_limit = ls_bias_limit({spec.q_diag, spec.sigma_diag, spec.w_star});
    return out;
}

}  // namespace synthctl
