#pragma once

#include <cstddef>
#include <vector>

#include "covgnn/rng.hpp"

namespace covgnn {

// Dense row-major matrix of 64-bit floats. Vectors are 1 x n or n x 1.
struct Tensor {
    int rows{0};
    int cols{0};
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }
    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    // Variance-preserving uniform init: [-a, a], a = sqrt(6 / (fan_in + fan_out)).
    static Tensor glorot(int rows, int cols, Rng& rng);
};

bool all_finite(const Tensor& t);

}  // namespace covgnn
