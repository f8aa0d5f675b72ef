#pragma once

#include "synthctl/error.hpp"
#include "synthctl/panel.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

#ifndef SYNTHCTL_DATA_DIR
#define SYNTHCTL_DATA_DIR "data"
#endif
#ifndef SYNTHCTL_SCRATCH_DIR
#define SYNTHCTL_SCRATCH_DIR "unit_scratch"
#endif
#ifndef SYNTHCTL_GOLDEN_DIR
#define SYNTHCTL_GOLDEN_DIR "tests/unit/golden"
#endif

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(SYNTHCTL_DATA_DIR) + "/" + name; }

inline std::filesystem::path scratch(const std::string& sub) {
    auto p = std::filesystem::path(SYNTHCTL_SCRATCH_DIR) / sub;
    std::filesystem::create_directories(p);
    return p;
}

// Runs f and reports the synthctl error code it threw (or fails the test).
template <typename F>
synthctl::ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const synthctl::Error& e) {
        return e.code();
    }
    FAIL("expected synthctl::Error");
    return synthctl::ErrorCode::InvalidArgument;
}

inline Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sd);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

inline Eigen::VectorXd random_simplex(Eigen::Index j, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> e(1.0);
    Eigen::VectorXd w(j);
    for (Eigen::Index i = 0; i < j; ++i) w(i) = e(rng);
    return w / w.sum();
}

}  // namespace testing
