#include "covgnn/mlp.hpp"

#include <cmath>

namespace covgnn {

namespace {

// Biases share the owning layer's fan bound so no pre-activation sits exactly
// on the rectifier kink at initialization.
Tensor uniform_bias(int d_in, int d_out, Rng& rng) {
    Tensor b(1, d_out);
    const double a = std::sqrt(6.0 / (d_in + d_out));
    for (auto& x : b.v) x = rng.uniform(-a, a);
    return b;
}

}  // namespace

MlpParams make_mlp(int d_in, int d_hidden, int d_out, Rng& rng) {
    MlpParams p;
    p.w1 = Tensor::glorot(d_in, d_hidden, rng);
    p.b1 = uniform_bias(d_in, d_hidden, rng);
    p.w2 = Tensor::glorot(d_hidden, d_hidden, rng);
    p.b2 = uniform_bias(d_hidden, d_hidden, rng);
    p.w3 = Tensor::glorot(d_hidden, d_out, rng);
    p.b3 = uniform_bias(d_hidden, d_out, rng);
    return p;
}

Tensor mlp_forward(const MlpParams& p, const Tensor& input) {
    Tape tape(false);
    const VarId out = mlp_forward(tape, lift(tape, p), tape.leaf(input));
    return tape.val(out);
}

}  // namespace covgnn
