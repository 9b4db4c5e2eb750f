#pragma once

#include <string>
#include <vector>

#include "covgnn/graph_signal.hpp"
#include "covgnn/mlp.hpp"

namespace covgnn {

enum class GnnVariant { linear, nonlinear };

std::string to_string(GnnVariant v);
GnnVariant variant_from_string(const std::string& s);

struct ArchConfig {
    GnnVariant variant{GnnVariant::nonlinear};
    int receptive_field{7};  // K: number of GN block applications
    int latent_width{16};
    int node_dim{3};         // 3 coverage, 4 exploration
    double temperature{1.0};
};

template <typename T>
struct GnBlockT {
    MlpT<T> edge;  // NN_e: [e_k, v_recv, v_send] -> latent
    MlpT<T> node;  // NN_v: [mean_incident, v_i] -> latent
};

// Encoder and decoder are independent per-edge/per-node transforms; the
// decoder is shared across all K+1 readout stages; the output head is one
// linear map over the concatenated per-stage decoded edge latents.
//
// The linear variant has no learnable block or edge-encoder parameters: its
// edge update copies the sender's node latent and its node update is the
// incident mean, so input edge features never enter the computation.
template <typename T>
struct PolicyT {
    MlpT<T> enc_edge;                 // nonlinear only
    MlpT<T> enc_node;
    std::vector<GnBlockT<T>> blocks;  // nonlinear only, one per stage
    MlpT<T> dec_edge;
    MlpT<T> dec_node;
    T out_w;
    T out_b;
};

struct PolicyParams {
    ArchConfig arch;
    PolicyT<Tensor> tensors;
};

PolicyParams init_policy(const ArchConfig& arch, Rng& rng);

template <typename T, typename F>
void visit_policy(PolicyT<T>& p, F&& f) {
    visit_mlp(p.enc_edge, "enc_edge", f);
    visit_mlp(p.enc_node, "enc_node", f);
    for (size_t k = 0; k < p.blocks.size(); ++k) {
        const std::string prefix = "block" + std::to_string(k);
        visit_mlp(p.blocks[k].edge, prefix + ".edge", f);
        visit_mlp(p.blocks[k].node, prefix + ".node", f);
    }
    visit_mlp(p.dec_edge, "dec_edge", f);
    visit_mlp(p.dec_node, "dec_node", f);
    f(std::string("out_w"), p.out_w);
    f(std::string("out_b"), p.out_b);
}

// Allocated (non-empty) parameter tensors in visit order.
std::vector<Tensor*> param_ptrs(PolicyParams& params);
std::vector<std::pair<std::string, Tensor*>> named_param_ptrs(PolicyParams& params);

PolicyT<VarId> lift_policy(Tape& tape, const PolicyParams& params);

// Latent features riding on a fixed topology.
struct LatentGraph {
    VarId edges{-1};  // E x d
    VarId nodes{-1};  // N x d
};

// One GN block: edge update from (edge, receiver, sender) latents, mean
// aggregation grouped by receiver, then node update. The linear variant
// copies sender latents onto edges and aggregates; `block` may be null then.
LatentGraph gn_block(Tape& tape, const LatentGraph& in, const std::vector<int>& senders,
                     const std::vector<int>& receivers, int n_nodes,
                     const GnBlockT<VarId>* block, GnnVariant variant);

// Full encode / K x GN / per-stage decode / concat / linear head. Returns one
// logit per directed edge as an [E x 1] column.
VarId policy_forward(Tape& tape, const PolicyT<VarId>& vars, const ArchConfig& arch,
                     const GraphSignal& signal);

// Value-only forward.
std::vector<double> edge_logits(const PolicyParams& params, const GraphSignal& signal);

enum class SelectMode { argmax, sample };

// Per robot, restrict to its candidate slots; argmax breaks ties toward the
// smallest target waypoint id; sampling draws from softmax(logits / T).
// Robots with no candidates stay.
JointAction select_actions(const std::vector<double>& logits, const GraphSignal& signal,
                           SelectMode mode, double temperature, Rng* rng);

// A closed-loop controller evaluating the policy on each observation.
Controller make_gnn_controller(PolicyParams params, SelectMode mode, uint64_t seed);

// Self-describing checkpoint: architecture config plus named tensors.
void save_checkpoint(const PolicyParams& params, const std::string& path);
PolicyParams load_checkpoint(const std::string& path);

}  // namespace covgnn
