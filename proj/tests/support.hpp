// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test helpers: random matrices and finite-difference gradient
// comparison against the analytic backward passes.

#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

#include "dgk/nn.hpp"
#include "dgk/rng.hpp"

namespace dgk_test {

using Mat = dgk::Matrix<double>;

inline Mat random_matrix(dgk::Rng& rng, int rows, int cols, double scale = 1.0) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = rng.normal(0.0, scale);
        }
    }
    return m;
}

// Central finite differences over every parameter in the store, compared
// against the analytic gradient accumulated by `backward`.
inline void check_param_grads(const dgk::ParamLayout& layout, dgk::ParamStore<double>& params,
                              const std::function<double()>& loss,
                              const std::function<void(dgk::ParamStore<double>&)>& backward,
                              double tol = 1e-5, double h = 1e-6) {
    dgk::ParamStore<double> analytic(layout.size());
    backward(analytic);
    double worst = 0.0;
    std::int64_t worst_idx = -1;
    for (std::int64_t i = 0; i < layout.size(); ++i) {
        const double orig = params.data()[i];
        params.data()[i] = orig + h;
        const double lp = loss();
        params.data()[i] = orig - h;
        const double lm = loss();
        params.data()[i] = orig;
        const double fd = (lp - lm) / (2 * h);
        const double a = analytic.data()[i];
        const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
        if (rel > worst) {
            worst = rel;
            worst_idx = i;
        }
    }
    std::string where = "(none)";
    for (const auto& [name, ref] : layout.entries()) {
        if (worst_idx >= ref.offset && worst_idx < ref.offset + ref.size()) {
            where = name + "[" + std::to_string(worst_idx - ref.offset) + "]";
        }
    }
    INFO("worst mismatch at " << where);
    CHECK(worst < tol);
}

inline void check_input_grads(Mat& x, const std::function<double()>& loss, const Mat& analytic,
                              double tol = 1e-5, double h = 1e-6) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double orig = x(i, j);
            x(i, j) = orig + h;
            const double lp = loss();
            x(i, j) = orig - h;
            const double lm = loss();
            x(i, j) = orig;
            const double fd = (lp - lm) / (2 * h);
            const double a = analytic(i, j);
            const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < tol);
}

}  // namespace dgk_test
