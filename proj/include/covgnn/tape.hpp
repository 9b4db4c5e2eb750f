#pragma once

#include <array>
#include <functional>
#include <vector>

#include "covgnn/tensor.hpp"

namespace covgnn {

using VarId = int;

// Reverse-mode tape. Built fresh per forward pass; backward() replays the
// recorded ops in reverse. Constructing with track=false skips gradient
// buffers and closures (inference path, same code).
//
// Every op validates that its output is finite and throws std::runtime_error
// otherwise.
class Tape {
  public:
    explicit Tape(bool track = true) : track_(track) {}

    bool tracking() const { return track_; }

    VarId leaf(Tensor t);
    VarId zeros(int rows, int cols) { return leaf(Tensor(rows, cols)); }

    const Tensor& val(VarId id) const { return nodes_[id].val; }
    const Tensor& grad(VarId id) const { return nodes_[id].grad; }

    VarId matmul(VarId a, VarId b);
    VarId add_row(VarId x, VarId bias);  // bias broadcast over rows
    VarId relu(VarId x);
    VarId gather_rows(VarId x, std::vector<int> ids);
    VarId concat_cols(const std::vector<VarId>& parts);

    // Row i of the result is the mean of input rows whose receiver is i;
    // rows with no incident entries stay zero. Accumulation follows input
    // row order, so results are deterministic for a fixed edge order.
    VarId segment_mean(VarId x, std::vector<int> receivers, int n_rows);

    // From a column of per-edge scalars, build one row of up-to-4 candidate
    // logits per entry; kNoEdge slots read as 0 and are masked downstream.
    VarId gather_slots(VarId scalars, std::vector<std::array<int, 4>> slots);

    // Weighted negative log-likelihood over rows: sum_r weight[r] *
    // (logsumexp(valid logits of row r) - logit[r][label[r]]). Invalid slots
    // are excluded from the softmax entirely. Labels must be valid slots.
    VarId masked_nll(VarId slot_logits, std::vector<std::array<char, 4>> valid,
                     std::vector<int> labels, std::vector<double> weights);

    // Scalar probe: sum of elementwise products with a fixed weight tensor.
    VarId weighted_sum(VarId x, Tensor weights);

    void backward(VarId root);

  private:
    struct Node {
        Tensor val;
        Tensor grad;
    };

    VarId push(Tensor val, const char* op);

    std::vector<Node> nodes_;
    std::vector<std::function<void(Tape&)>> backward_ops_;
    bool track_;
};

// Mean cross-entropy over rows (uniform weights 1/n), as used by tests and
// reported losses.
VarId cross_entropy(Tape& tape, VarId slot_logits, std::vector<std::array<char, 4>> valid,
                    std::vector<int> labels);

}  // namespace covgnn
