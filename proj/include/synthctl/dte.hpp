#pragma once

#include "synthctl/panel.hpp"
#include "synthctl/solver.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace synthctl {

/// Bootstrap draws from the estimated counterfactual outcome density,
/// averaged over post-treatment periods.
struct BootstrapSample {
    std::vector<double> draws;
    Index l = 0;
    std::uint64_t seed = 0;
    WeightVector weights_used;
};

/// For each of `l` draws: (i) resample one post-period outcome of every donor
/// uniformly, then (ii) pick donor j with probability w_j and emit its
/// resampled value. The intercept, when present, is added to every draw.
BootstrapSample bootstrap_counterfactual(const PanelData& panel, const WeightVector& weights,
                                         Index l, std::uint64_t seed);

/// Empirical quantiles with linear interpolation between order statistics
/// (h = (n-1)p). Throws BadProb for p outside (0, 1).
std::vector<double> quantiles(std::span<const double> sample, std::span<const double> probs);

struct MmdReport {
    double mmd2 = 0.0;  ///< unbiased estimate, may be slightly negative
    double p_value = 1.0;
    double bandwidth = 1.0;
    int permutations = 0;
};

/// Median pairwise distance of the pooled sample (1 when that is zero).
double median_heuristic_bandwidth(std::span<const double> a, std::span<const double> b);

/// Unbiased squared MMD with Gaussian kernel exp(-(x-y)^2 / (2 h^2)).
double mmd2_unbiased(std::span<const double> a, std::span<const double> b, double bandwidth);

/// Biased (V-statistic) squared MMD; always >= 0.
double mmd2_biased(std::span<const double> a, std::span<const double> b, double bandwidth);

/// Permutation two-sample test of H0: a and b share a distribution.
/// p = (1 + #{permuted >= observed}) / (permutations + 1).
MmdReport mmd_test(std::span<const double> a, std::span<const double> b, int permutations,
                   std::uint64_t seed, std::optional<double> bandwidth = std::nullopt);

}  // namespace synthctl
