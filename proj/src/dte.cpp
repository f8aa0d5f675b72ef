#include "synthctl/dte.hpp"

#include "synthctl/error.hpp"
#include "synthctl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace synthctl {

BootstrapSample bootstrap_counterfactual(const PanelData& panel, const WeightVector& weights,
                                         Index l, std::uint64_t seed) {
    const Index j = panel.num_donors();
    const Index t1 = panel.num_post();
    if (t1 < 1) throw Error(ErrorCode::EmptyPost, "panel has no post-treatment periods");
    if (l < 2) throw Error(ErrorCode::InvalidArgument, "bootstrap size L must be > 1");
    const auto& w = weights.weights;
    if (w.size() != j) throw Error(ErrorCode::DimensionMismatch, "weights do not match donor count");
    if ((w.array() < -1e-12).any() || std::abs(w.sum() - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "bootstrap weights must lie on the simplex");
    }

    Rng rng = make_rng(seed);
    std::uniform_int_distribution<Index> pick_period(0, t1 - 1);
    std::vector<double> probs(static_cast<std::size_t>(j));
    for (Index i = 0; i < j; ++i) probs[static_cast<std::size_t>(i)] = std::max(0.0, w(i));
    std::discrete_distribution<Index> pick_unit(probs.begin(), probs.end());
    const double shift = weights.intercept.value_or(0.0);

    BootstrapSample out;
    out.l = l;
    out.seed = seed;
    out.weights_used = weights;
    out.draws.reserve(static_cast<std::size_t>(l));
    std::vector<Index> resampled(static_cast<std::size_t>(j));
    for (Index it = 0; it < l; ++it) {
        for (auto& idx : resampled) idx = pick_period(rng);
        const Index unit = pick_unit(rng);
        const Index period = panel.t0 + resampled[static_cast<std::size_t>(unit)];
        out.draws.push_back(panel.outcomes(unit + 1, period) + shift);
    }
    return out;
}

std::vector<double> quantiles(std::span<const double> sample, std::span<const double> probs) {
    if (sample.empty()) throw Error(ErrorCode::InvalidArgument, "quantiles of an empty sample");
    for (double p : probs) {
        if (!(p > 0.0 && p < 1.0)) {
            throw Error(ErrorCode::BadProb, "probability " + std::to_string(p) + " outside (0, 1)");
        }
    }
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(probs.size());
    const double last = static_cast<double>(sorted.size() - 1);
    for (double p : probs) {
        const double h = last * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = h - static_cast<double>(lo);
        out.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
    }
    return out;
}

double median_heuristic_bandwidth(std::span<const double> a, std::span<const double> b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<double> dist;
    dist.reserve(pooled.size() * (pooled.size() - 1) / 2);
    for (std::size_t i = 0; i < pooled.size(); ++i)
        for (std::size_t k = i + 1; k < pooled.size(); ++k) dist.push_back(std::abs(pooled[i] - pooled[k]));
    if (dist.empty()) return 1.0;
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double med = *mid;
    if (dist.size() % 2 == 0) {
        med = 0.5 * (med + *std::max_element(dist.begin(), mid));
    }
    return med > 0.0 ? med : 1.0;
}

namespace {

double block_sum(std::span<const double> x, std::span<const double> y, double inv2h2, bool skip_diag) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t k = 0; k < y.size(); ++k) {
            if (skip_diag && i == k) continue;
            const double d = x[i] - y[k];
            s += std::exp(-d * d * inv2h2);
        }
    }
    return s;
}

void require_sizes(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "MMD needs at least two points per sample");
    }
}

}  // namespace

double mmd2_unbiased(std::span<const double> a, std::span<const double> b, double bandwidth) {
    require_sizes(a, b);
    const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    return block_sum(a, a, inv2h2, true) / (n * (n - 1.0)) + block_sum(b, b, inv2h2, true) / (m * (m - 1.0)) -
           2.0 * block_sum(a, b, inv2h2, false) / (n * m);
}

double mmd2_biased(std::span<const double> a, std::span<const double> b, double bandwidth) {
    require_sizes(a, b);
    const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    const double v = block_sum(a, a, inv2h2, false) / (n * n) + block_sum(b, b, inv2h2, false) / (m * m) -
                     2.0 * block_sum(a, b, inv2h2, false) / (n * m);
    return std::max(0.0, v);
}

MmdReport mmd_test(std::span<const double> a, std::span<const double> b, int permutations,
                   std::uint64_t seed, std::optional<double> bandwidth) {
    require_sizes(a, b);
    if (permutations < 0) throw Error(ErrorCode::InvalidArgument, "permutations must be >= 0");
    MmdReport report;
    report.permutations = permutations;
    report.bandwidth = bandwidth.value_or(median_heuristic_bandwidth(a, b));
    if (!(report.bandwidth > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");

    const std::size_t n = a.size();
    const std::size_t m = b.size();
    const std::size_t total = n + m;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const double inv2h2 = 1.0 / (2.0 * report.bandwidth * report.bandwidth);
    Eigen::MatrixXd k(static_cast<Index>(total), static_cast<Index>(total));
    for (std::size_t i = 0; i < total; ++i) {
        k(static_cast<Index>(i), static_cast<Index>(i)) = 1.0;
        for (std::size_t r = i + 1; r < total; ++r) {
            const double d = pooled[i] - pooled[r];
            k(static_cast<Index>(i), static_cast<Index>(r)) = k(static_cast<Index>(r), static_cast<Index>(i)) =
                std::exp(-d * d * inv2h2);
        }
    }
    const double grand = k.sum();
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);

    // Statistic for the split {idx[0..n)} vs {idx[n..)}; uses the grand sum to
    // recover the cross block.
    auto statistic = [&](const std::vector<Index>& idx) {
        double saa = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t r = 0; r < n; ++r) saa += k(idx[i], idx[r]);
        double sbb = 0.0;
        for (std::size_t i = n; i < total; ++i)
            for (std::size_t r = n; r < total; ++r) sbb += k(idx[i], idx[r]);
        const double sab = 0.5 * (grand - saa - sbb);
        return (saa - nn) / (nn * (nn - 1.0)) + (sbb - mm) / (mm * (mm - 1.0)) - 2.0 * sab / (nn * mm);
    };

    std::vector<Index> idx(total);
    std::iota(idx.begin(), idx.end(), Index{0});
    report.mmd2 = mmd2_unbiased(a, b, report.bandwidth);
    const double observed = statistic(idx);
    const double tie_tol = 1e-12 * std::max(1.0, std::abs(observed));
    Rng rng = make_rng(seed);
    int exceed = 0;
    for (int p = 0; p < permutations; ++p) {
        std::shuffle(idx.begin(), idx.end(), rng);
        if (statistic(idx) >= observed - tie_tol) ++exceed;
    }
    report.p_value = (1.0 + exceed) / (1.0 + permutations);
    return report;
}

}  // namespace synthctl
