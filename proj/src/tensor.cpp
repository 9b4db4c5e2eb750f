#include "covgnn/tensor.hpp"

#include <cmath>

namespace covgnn {

Tensor Tensor::glorot(int rows, int cols, Rng& rng) {
    Tensor t(rows, cols);
    const double a = std::sqrt(6.0 / (rows + cols));
    for (auto& x : t.v) x = rng.uniform(-a, a);
    return t;
}

bool all_finite(const Tensor& t) {
    for (double x : t.v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace covgnn
