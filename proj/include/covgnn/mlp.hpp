#pragma once

#include <stdexcept>

#include "covgnn/tape.hpp"

namespace covgnn {

// 3 affine layers, rectifier after the first two, identity after the third.
template <typename T>
struct MlpT {
    T w1, b1, w2, b2, w3, b3;
};

using MlpParams = MlpT<Tensor>;
using MlpVars = MlpT<VarId>;

MlpParams make_mlp(int d_in, int d_hidden, int d_out, Rng& rng);

inline MlpVars lift(Tape& tape, const MlpParams& p) {
    return {tape.leaf(p.w1), tape.leaf(p.b1), tape.leaf(p.w2),
            tape.leaf(p.b2), tape.leaf(p.w3), tape.leaf(p.b3)};
}

inline VarId mlp_forward(Tape& tape, const MlpVars& m, VarId input) {
    VarId h = tape.relu(tape.add_row(tape.matmul(input, m.w1), m.b1));
    h = tape.relu(tape.add_row(tape.matmul(h, m.w2), m.b2));
    return tape.add_row(tape.matmul(h, m.w3), m.b3);
}

// Value-only convenience used by tests.
Tensor mlp_forward(const MlpParams& p, const Tensor& input);

template <typename T, typename F>
void visit_mlp(MlpT<T>& m, const std::string& prefix, F&& f) {
    f(prefix + ".w1", m.w1);
    f(prefix + ".b1", m.b1);
    f(prefix + ".w2", m.w2);
    f(prefix + ".b2", m.b2);
    f(prefix + ".w3", m.w3);
    f(prefix + ".b3", m.b3);
}

}  // namespace covgnn
