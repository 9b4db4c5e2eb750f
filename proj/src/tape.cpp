#include "covgnn/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace covgnn {

namespace {
constexpr int kNoSlot = -1;
}

VarId Tape::push(Tensor val, const char* op) {
    if (!all_finite(val))
        throw std::runtime_error(std::string("Tape: non-finite value produced by ") + op);
    Node node;
    if (track_) node.grad = Tensor(val.rows, val.cols);
    node.val = std::move(val);
    nodes_.push_back(std::move(node));
    return static_cast<VarId>(nodes_.size()) - 1;
}

VarId Tape::leaf(Tensor t) {
    const VarId id = push(std::move(t), "leaf");
    if (track_) backward_ops_.emplace_back([](Tape&) {});
    return id;
}

namespace {

// The hot matmul shapes are [rows x k] @ [k x 8m]. Autovectorization keeps
// the accumulators on the stack, which is an order of magnitude slower, so
// the 8-wide lanes are spelled out with GCC vector extensions.
typedef double vd8 __attribute__((vector_size(64)));

inline vd8 load8(const double* p) {
    vd8 v;
    __builtin_memcpy(&v, p, sizeof(v));
    return v;
}

inline void store8(double* p, vd8 v) { __builtin_memcpy(p, &v, sizeof(v)); }

// C (+)= A @ B over one 8-column band starting at j0, two rows at a time.
void matmul_band(const Tensor& A, const Tensor& B, Tensor& C, int j0, bool accumulate) {
    const int m = A.rows, k = A.cols;
    const int m2 = m - m % 2;
    for (int i = 0; i < m2; i += 2) {
        const double* __restrict a0 = A.row(i);
        const double* __restrict a1 = A.row(i + 1);
        vd8 acc0{}, acc1{};
        for (int l = 0; l < k; ++l) {
            const vd8 b = load8(B.row(l) + j0);
            acc0 += a0[l] * b;
            acc1 += a1[l] * b;
        }
        double* c0 = C.row(i) + j0;
        double* c1 = C.row(i + 1) + j0;
        if (accumulate) {
            store8(c0, load8(c0) + acc0);
            store8(c1, load8(c1) + acc1);
        } else {
            store8(c0, acc0);
            store8(c1, acc1);
        }
    }
    if (m2 < m) {
        const double* __restrict a0 = A.row(m2);
        vd8 acc{};
        for (int l = 0; l < k; ++l) acc += a0[l] * load8(B.row(l) + j0);
        double* c0 = C.row(m2) + j0;
        store8(c0, accumulate ? load8(c0) + acc : acc);
    }
}

// C (+)= A @ B. Column counts that are not a multiple of 8 (tiny layers and
// the scalar output head) take the plain path.
void matmul_into(const Tensor& A, const Tensor& B, Tensor& C, bool accumulate) {
    const int m = A.rows, k = A.cols, n = B.cols;
    if (n % 8 == 0) {
        for (int j0 = 0; j0 < n; j0 += 8) matmul_band(A, B, C, j0, accumulate);
        return;
    }
    for (int i = 0; i < m; ++i) {
        const double* __restrict ai = A.row(i);
        double* __restrict ci = C.row(i);
        if (!accumulate)
            for (int j = 0; j < n; ++j) ci[j] = 0.0;
        for (int l = 0; l < k; ++l) {
            const double av = ai[l];
            const double* __restrict bl = B.row(l);
            for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

Tensor transposed(const Tensor& t) {
    Tensor out(t.cols, t.rows);
    for (int i = 0; i < t.rows; ++i)
        for (int j = 0; j < t.cols; ++j) out.at(j, i) = t.at(i, j);
    return out;
}

// dB += A^T @ dC, looping the shared row index innermost so the accumulators
// stay in registers.
void matmul_atb_acc(const Tensor& A, const Tensor& dC, Tensor& dB) {
    const int m = A.rows, k = A.cols, n = dC.cols;
    if (n % 8 == 0) {
        const int k2 = k - k % 2;
        for (int j0 = 0; j0 < n; j0 += 8) {
            for (int l = 0; l < k2; l += 2) {
                vd8 acc0{}, acc1{};
                for (int i = 0; i < m; ++i) {
                    const vd8 d = load8(dC.row(i) + j0);
                    const double* ai = A.row(i);
                    acc0 += ai[l] * d;
                    acc1 += ai[l + 1] * d;
                }
                double* b0 = dB.row(l) + j0;
                double* b1 = dB.row(l + 1) + j0;
                store8(b0, load8(b0) + acc0);
                store8(b1, load8(b1) + acc1);
            }
            if (k2 < k) {
                vd8 acc{};
                for (int i = 0; i < m; ++i) acc += A.row(i)[k2] * load8(dC.row(i) + j0);
                double* b0 = dB.row(k2) + j0;
                store8(b0, load8(b0) + acc);
            }
        }
        return;
    }
    for (int i = 0; i < m; ++i) {
        const double* __restrict ai = A.row(i);
        const double* __restrict dci = dC.row(i);
        for (int l = 0; l < k; ++l) {
            const double av = ai[l];
            double* __restrict dbl = dB.row(l);
            for (int j = 0; j < n; ++j) dbl[j] += av * dci[j];
        }
    }
}

}  // namespace

VarId Tape::matmul(VarId a, VarId b) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[b].val;
    if (A.cols != B.rows) throw std::invalid_argument("matmul: shape mismatch");
    Tensor C(A.rows, B.cols);
    matmul_into(A, B, C, false);
    const VarId id = push(std::move(C), "matmul");
    if (track_) {
        backward_ops_.emplace_back([a, b, id](Tape& t) {
            const Tensor& A = t.nodes_[a].val;
            const Tensor& B = t.nodes_[b].val;
            const Tensor& dC = t.nodes_[id].grad;
            matmul_into(dC, transposed(B), t.nodes_[a].grad, true);  // dA += dC B^T
            matmul_atb_acc(A, dC, t.nodes_[b].grad);                 // dB += A^T dC
        });
    }
    return id;
}

VarId Tape::add_row(VarId x, VarId bias) {
    const Tensor& X = nodes_[x].val;
    const Tensor& B = nodes_[bias].val;
    if (B.rows != 1 || B.cols != X.cols) throw std::invalid_argument("add_row: shape mismatch");
    Tensor Y = X;
    for (int i = 0; i < Y.rows; ++i) {
        double* yi = Y.row(i);
        for (int j = 0; j < Y.cols; ++j) yi[j] += B.v[j];
    }
    const VarId id = push(std::move(Y), "add_row");
    if (track_) {
        backward_ops_.emplace_back([x, bias, id](Tape& t) {
            const Tensor& dY = t.nodes_[id].grad;
            Tensor& dX = t.nodes_[x].grad;
            Tensor& dB = t.nodes_[bias].grad;
            for (size_t i = 0; i < dY.size(); ++i) dX.v[i] += dY.v[i];
            for (int i = 0; i < dY.rows; ++i) {
                const double* dyi = dY.row(i);
                for (int j = 0; j < dY.cols; ++j) dB.v[j] += dyi[j];
            }
        });
    }
    return id;
}

VarId Tape::relu(VarId x) {
    Tensor Y = nodes_[x].val;
    for (auto& v : Y.v) v = v > 0 ? v : 0.0;
    const VarId id = push(std::move(Y), "relu");
    if (track_) {
        backward_ops_.emplace_back([x, id](Tape& t) {
            const Tensor& X = t.nodes_[x].val;
            const Tensor& dY = t.nodes_[id].grad;
            Tensor& dX = t.nodes_[x].grad;
            for (size_t i = 0; i < X.size(); ++i)
                if (X.v[i] > 0) dX.v[i] += dY.v[i];
        });
    }
    return id;
}

VarId Tape::gather_rows(VarId x, std::vector<int> ids) {
    const Tensor& X = nodes_[x].val;
    Tensor Y(static_cast<int>(ids.size()), X.cols);
    for (size_t i = 0; i < ids.size(); ++i) {
        const double* src = X.row(ids[i]);
        double* dst = Y.row(static_cast<int>(i));
        for (int j = 0; j < X.cols; ++j) dst[j] = src[j];
    }
    const VarId id = push(std::move(Y), "gather_rows");
    if (track_) {
        backward_ops_.emplace_back([x, id, ids = std::move(ids)](Tape& t) {
            const Tensor& dY = t.nodes_[id].grad;
            Tensor& dX = t.nodes_[x].grad;
            for (size_t i = 0; i < ids.size(); ++i) {
                const double* src = dY.row(static_cast<int>(i));
                double* dst = dX.row(ids[i]);
                for (int j = 0; j < dY.cols; ++j) dst[j] += src[j];
            }
        });
    }
    return id;
}

VarId Tape::concat_cols(const std::vector<VarId>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const int rows = nodes_[parts[0]].val.rows;
    int cols = 0;
    for (VarId p : parts) {
        if (nodes_[p].val.rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
        cols += nodes_[p].val.cols;
    }
    Tensor Y(rows, cols);
    int offset = 0;
    for (VarId p : parts) {
        const Tensor& X = nodes_[p].val;
        for (int i = 0; i < rows; ++i) {
            const double* src = X.row(i);
            double* dst = Y.row(i) + offset;
            for (int j = 0; j < X.cols; ++j) dst[j] = src[j];
        }
        offset += X.cols;
    }
    const VarId id = push(std::move(Y), "concat_cols");
    if (track_) {
        backward_ops_.emplace_back([id, parts](Tape& t) {
            const Tensor& dY = t.nodes_[id].grad;
            int offset = 0;
            for (VarId p : parts) {
                Tensor& dX = t.nodes_[p].grad;
                for (int i = 0; i < dY.rows; ++i) {
                    const double* src = dY.row(i) + offset;
                    double* dst = dX.row(i);
                    for (int j = 0; j < dX.cols; ++j) dst[j] += src[j];
                }
                offset += dX.cols;
            }
        });
    }
    return id;
}

VarId Tape::segment_mean(VarId x, std::vector<int> receivers, int n_rows) {
    const Tensor& X = nodes_[x].val;
    if (static_cast<int>(receivers.size()) != X.rows)
        throw std::invalid_argument("segment_mean: receiver count mismatch");
    std::vector<int> counts(n_rows, 0);
    for (int r : receivers) {
        if (r < 0 || r >= n_rows) throw std::invalid_argument("segment_mean: receiver out of range");
        ++counts[r];
    }
    Tensor Y(n_rows, X.cols);
    for (int e = 0; e < X.rows; ++e) {
        const double* src = X.row(e);
        double* dst = Y.row(receivers[e]);
        for (int j = 0; j < X.cols; ++j) dst[j] += src[j];
    }
    for (int i = 0; i < n_rows; ++i) {
        if (counts[i] == 0) continue;
        const double inv = 1.0 / counts[i];
        double* yi = Y.row(i);
        for (int j = 0; j < X.cols; ++j) yi[j] *= inv;
    }
    const VarId id = push(std::move(Y), "segment_mean");
    if (track_) {
        backward_ops_.emplace_back(
            [x, id, receivers = std::move(receivers), counts = std::move(counts)](Tape& t) {
                const Tensor& dY = t.nodes_[id].grad;
                Tensor& dX = t.nodes_[x].grad;
                for (size_t e = 0; e < receivers.size(); ++e) {
                    const int r = receivers[e];
                    const double inv = 1.0 / counts[r];
                    const double* src = dY.row(r);
                    double* dst = dX.row(static_cast<int>(e));
                    for (int j = 0; j < dY.cols; ++j) dst[j] += inv * src[j];
                }
            });
    }
    return id;
}

VarId Tape::gather_slots(VarId scalars, std::vector<std::array<int, 4>> slots) {
    const Tensor& X = nodes_[scalars].val;
    if (X.cols != 1) throw std::invalid_argument("gather_slots: expected a column");
    Tensor Y(static_cast<int>(slots.size()), 4);
    for (size_t i = 0; i < slots.size(); ++i)
        for (int s = 0; s < 4; ++s)
            if (slots[i][s] != kNoSlot) Y.at(static_cast<int>(i), s) = X.v[slots[i][s]];
    const VarId id = push(std::move(Y), "gather_slots");
    if (track_) {
        backward_ops_.emplace_back([scalars, id, slots = std::move(slots)](Tape& t) {
            const Tensor& dY = t.nodes_[id].grad;
            Tensor& dX = t.nodes_[scalars].grad;
            for (size_t i = 0; i < slots.size(); ++i)
                for (int s = 0; s < 4; ++s)
                    if (slots[i][s] != kNoSlot)
                        dX.v[slots[i][s]] += dY.at(static_cast<int>(i), s);
        });
    }
    return id;
}

VarId Tape::masked_nll(VarId slot_logits, std::vector<std::array<char, 4>> valid,
                       std::vector<int> labels, std::vector<double> weights) {
    const Tensor& L = nodes_[slot_logits].val;
    const int n = L.rows;
    if (L.cols != 4 || static_cast<int>(valid.size()) != n ||
        static_cast<int>(labels.size()) != n || static_cast<int>(weights.size()) != n)
        throw std::invalid_argument("masked_nll: shape mismatch");

    Tensor softmax(n, 4);
    double loss = 0;
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= 4 || !valid[i][labels[i]])
            throw std::invalid_argument("masked_nll: label points at a masked slot");
        const double* li = L.row(i);
        double max_logit = -1e300;
        for (int s = 0; s < 4; ++s)
            if (valid[i][s]) max_logit = std::max(max_logit, li[s]);
        double z = 0;
        for (int s = 0; s < 4; ++s)
            if (valid[i][s]) z += std::exp(li[s] - max_logit);
        const double log_z = std::log(z) + max_logit;
        for (int s = 0; s < 4; ++s)
            if (valid[i][s]) softmax.at(i, s) = std::exp(li[s] - log_z);
        loss += weights[i] * (log_z - li[labels[i]]);
    }
    Tensor out(1, 1);
    out.v[0] = loss;
    const VarId id = push(std::move(out), "masked_nll");
    if (track_) {
        backward_ops_.emplace_back([slot_logits, id, valid = std::move(valid),
                                    labels = std::move(labels), weights = std::move(weights),
                                    softmax = std::move(softmax)](Tape& t) {
            const double dLoss = t.nodes_[id].grad.v[0];
            Tensor& dL = t.nodes_[slot_logits].grad;
            for (int i = 0; i < dL.rows; ++i) {
                const double scale = dLoss * weights[i];
                for (int s = 0; s < 4; ++s) {
                    if (!valid[i][s]) continue;
                    const double onehot = s == labels[i] ? 1.0 : 0.0;
                    dL.at(i, s) += scale * (softmax.at(i, s) - onehot);
                }
            }
        });
    }
    return id;
}

VarId Tape::weighted_sum(VarId x, Tensor weights) {
    const Tensor& X = nodes_[x].val;
    if (!X.same_shape(weights)) throw std::invalid_argument("weighted_sum: shape mismatch");
    Tensor out(1, 1);
    for (size_t i = 0; i < X.size(); ++i) out.v[0] += X.v[i] * weights.v[i];
    const VarId id = push(std::move(out), "weighted_sum");
    if (track_) {
        backward_ops_.emplace_back([x, id, weights = std::move(weights)](Tape& t) {
            const double d = t.nodes_[id].grad.v[0];
            Tensor& dX = t.nodes_[x].grad;
            for (size_t i = 0; i < dX.size(); ++i) dX.v[i] += d * weights.v[i];
        });
    }
    return id;
}

void Tape::backward(VarId root) {
    if (!track_) throw std::logic_error("Tape::backward on a non-tracking tape");
    Tensor& g = nodes_[root].grad;
    if (g.size() != 1) throw std::invalid_argument("Tape::backward: root must be scalar");
    g.v[0] = 1.0;
    for (auto it = backward_ops_.rbegin(); it != backward_ops_.rend(); ++it) (*it)(*this);
}

VarId cross_entropy(Tape& tape, VarId slot_logits, std::vector<std::array<char, 4>> valid,
                    std::vector<int> labels) {
    const size_t n = labels.size();
    std::vector<double> weights(n, n ? 1.0 / static_cast<double>(n) : 0.0);
    return tape.masked_nll(slot_logits, std::move(valid), std::move(labels), std::move(weights));
}

}  // namespace covgnn
