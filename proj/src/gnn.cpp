#include "covgnn/gnn.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace covgnn {

std::string to_string(GnnVariant v) {
    return v == GnnVariant::linear ? "linear" : "nonlinear";
}

GnnVariant variant_from_string(const std::string& s) {
    if (s == "linear") return GnnVariant::linear;
    if (s == "nonlinear") return GnnVariant::nonlinear;
    throw std::invalid_argument("unknown GNN variant: " + s);
}

PolicyParams init_policy(const ArchConfig& arch, Rng& rng) {
    if (arch.receptive_field < 0) throw std::invalid_argument("init_policy: negative K");
    if (arch.latent_width < 1) throw std::invalid_argument("init_policy: latent width < 1");
    const int d = arch.latent_width;
    PolicyParams p;
    p.arch = arch;
    p.tensors.enc_node = make_mlp(arch.node_dim, d, d, rng);
    if (arch.variant == GnnVariant::nonlinear) {
        p.tensors.enc_edge = make_mlp(1, d, d, rng);
        for (int k = 0; k < arch.receptive_field; ++k)
            p.tensors.blocks.push_back({make_mlp(3 * d, d, d, rng), make_mlp(2 * d, d, d, rng)});
    }
    p.tensors.dec_edge = make_mlp(d, d, d, rng);
    p.tensors.dec_node = make_mlp(d, d, d, rng);
    p.tensors.out_w = Tensor::glorot((arch.receptive_field + 1) * d, 1, rng);
    p.tensors.out_b = Tensor::glorot(1, 1, rng);
    return p;
}

std::vector<Tensor*> param_ptrs(PolicyParams& params) {
    std::vector<Tensor*> out;
    visit_policy(params.tensors, [&](const std::string&, Tensor& t) {
        if (!t.empty()) out.push_back(&t);
    });
    return out;
}

std::vector<std::pair<std::string, Tensor*>> named_param_ptrs(PolicyParams& params) {
    std::vector<std::pair<std::string, Tensor*>> out;
    visit_policy(params.tensors, [&](const std::string& name, Tensor& t) {
        if (!t.empty()) out.emplace_back(name, &t);
    });
    return out;
}

PolicyT<VarId> lift_policy(Tape& tape, const PolicyParams& params) {
    PolicyT<VarId> vars;
    vars.blocks.resize(params.tensors.blocks.size());
    auto lift_one = [&](const Tensor& t) { return t.empty() ? VarId{-1} : tape.leaf(t); };
    // const_cast only to reuse the visitor; tensors are not modified.
    auto& tensors = const_cast<PolicyT<Tensor>&>(params.tensors);
    std::vector<VarId*> slots;
    visit_policy(vars, [&](const std::string&, VarId& v) { slots.push_back(&v); });
    size_t i = 0;
    visit_policy(tensors, [&](const std::string&, Tensor& t) { *slots[i++] = lift_one(t); });
    return vars;
}

LatentGraph gn_block(Tape& tape, const LatentGraph& in, const std::vector<int>& senders,
                     const std::vector<int>& receivers, int n_nodes,
                     const GnBlockT<VarId>* block, GnnVariant variant) {
    LatentGraph out;
    if (variant == GnnVariant::nonlinear) {
        if (!block) throw std::invalid_argument("gn_block: nonlinear variant needs parameters");
        const VarId v_recv = tape.gather_rows(in.nodes, receivers);
        const VarId v_send = tape.gather_rows(in.nodes, senders);
        out.edges = mlp_forward(tape, block->edge, tape.concat_cols({in.edges, v_recv, v_send}));
        const VarId agg = tape.segment_mean(out.edges, receivers, n_nodes);
        out.nodes = mlp_forward(tape, block->node, tape.concat_cols({agg, in.nodes}));
    } else {
        out.edges = tape.gather_rows(in.nodes, senders);
        out.nodes = tape.segment_mean(out.edges, receivers, n_nodes);
    }
    return out;
}

VarId policy_forward(Tape& tape, const PolicyT<VarId>& vars, const ArchConfig& arch,
                     const GraphSignal& signal) {
    if (signal.node_dim != arch.node_dim)
        throw std::invalid_argument("policy_forward: node feature width mismatch");
    const int n_edges = signal.num_edges();
    const int n_nodes = signal.n_nodes;
    if (n_edges == 0) throw std::invalid_argument("policy_forward: signal has no edges");

    Tensor nodes(n_nodes, arch.node_dim);
    nodes.v = signal.node_features;

    LatentGraph latent;
    latent.nodes = mlp_forward(tape, vars.enc_node, tape.leaf(std::move(nodes)));
    if (arch.variant == GnnVariant::nonlinear) {
        Tensor edges(n_edges, 1);
        for (int e = 0; e < n_edges; ++e)
            edges.v[e] = signal.edge_features[e] / signal.spacing;
        latent.edges = mlp_forward(tape, vars.enc_edge, tape.leaf(std::move(edges)));
    } else {
        // The linear blocks never read the previous edge latents, so raw edge
        // features stay out of the computation entirely.
        latent.edges = tape.zeros(n_edges, arch.latent_width);
    }

    std::vector<VarId> stages;
    stages.push_back(mlp_forward(tape, vars.dec_edge, latent.edges));
    for (int k = 0; k < arch.receptive_field; ++k) {
        const GnBlockT<VarId>* block =
            arch.variant == GnnVariant::nonlinear ? &vars.blocks[k] : nullptr;
        latent = gn_block(tape, latent, signal.senders, signal.receivers, n_nodes, block,
                          arch.variant);
        stages.push_back(mlp_forward(tape, vars.dec_edge, latent.edges));
    }
    const VarId concat = tape.concat_cols(stages);
    return tape.add_row(tape.matmul(concat, vars.out_w), vars.out_b);
}

std::vector<double> edge_logits(const PolicyParams& params, const GraphSignal& signal) {
    Tape tape(false);
    const VarId out = policy_forward(tape, lift_policy(tape, params), params.arch, signal);
    return tape.val(out).v;
}

JointAction select_actions(const std::vector<double>& logits, const GraphSignal& signal,
                           SelectMode mode, double temperature, Rng* rng) {
    JointAction action;
    action.target.resize(signal.num_robots(), kStay);
    for (int i = 0; i < signal.num_robots(); ++i) {
        const int n = signal.num_actions(i);
        if (n == 0) continue;
        if (mode == SelectMode::argmax) {
            int best = 0;
            for (int s = 1; s < n; ++s)
                if (logits[signal.action_edge_ids[i][s]] > logits[signal.action_edge_ids[i][best]])
                    best = s;
            action.target[i] = signal.action_targets[i][best];
        } else {
            if (!rng) throw std::invalid_argument("select_actions: sampling needs an rng");
            if (temperature <= 0) throw std::invalid_argument("select_actions: temperature <= 0");
            double max_logit = -1e300;
            for (int s = 0; s < n; ++s)
                max_logit = std::max(max_logit, logits[signal.action_edge_ids[i][s]]);
            double probs[4];
            double z = 0;
            for (int s = 0; s < n; ++s) {
                probs[s] = std::exp((logits[signal.action_edge_ids[i][s]] - max_logit) / temperature);
                z += probs[s];
            }
            const double u = rng->uniform01() * z;
            double acc = 0;
            int pick = n - 1;
            for (int s = 0; s < n; ++s) {
                acc += probs[s];
                if (u < acc) {
                    pick = s;
                    break;
                }
            }
            action.target[i] = signal.action_targets[i][pick];
        }
    }
    return action;
}

Controller make_gnn_controller(PolicyParams params, SelectMode mode, uint64_t seed) {
    auto shared = std::make_shared<PolicyParams>(std::move(params));
    auto rng = std::make_shared<Rng>(seed);
    return [shared, mode, rng](const WorldState& state) {
        const GraphSignal signal = observe(state);
        const std::vector<double> logits = edge_logits(*shared, signal);
        return select_actions(logits, signal, mode, shared->arch.temperature, rng.get());
    };
}

namespace {

nlohmann::json arch_to_json(const ArchConfig& arch) {
    return {{"variant", to_string(arch.variant)},
            {"receptive_field", arch.receptive_field},
            {"latent_width", arch.latent_width},
            {"node_dim", arch.node_dim},
            {"temperature", arch.temperature}};
}

ArchConfig arch_from_json(const nlohmann::json& j) {
    ArchConfig arch;
    arch.variant = variant_from_string(j.at("variant").get<std::string>());
    arch.receptive_field = j.at("receptive_field").get<int>();
    arch.latent_width = j.at("latent_width").get<int>();
    arch.node_dim = j.at("node_dim").get<int>();
    arch.temperature = j.at("temperature").get<double>();
    return arch;
}

}  // namespace

void save_checkpoint(const PolicyParams& params, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["arch"] = arch_to_json(params.arch);
    auto& tensors = j["tensors"] = nlohmann::json::object();
    auto& mut = const_cast<PolicyParams&>(params);
    for (const auto& [name, t] : named_param_ptrs(mut))
        tensors[name] = {{"rows", t->rows}, {"cols", t->cols}, {"data", t->v}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << j.dump() << "\n";
}

PolicyParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("load_checkpoint: parse error: " + std::string(e.what()));
    }
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("load_checkpoint: unsupported format version");

    Rng rng(0);
    PolicyParams params = init_policy(arch_from_json(j.at("arch")), rng);
    const auto& tensors = j.at("tensors");
    size_t expected = 0;
    for (const auto& [name, t] : named_param_ptrs(params)) {
        ++expected;
        if (!tensors.contains(name))
            throw std::runtime_error("load_checkpoint: missing tensor " + name);
        const auto& entry = tensors.at(name);
        if (entry.at("rows").get<int>() != t->rows || entry.at("cols").get<int>() != t->cols)
            throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
        const auto data = entry.at("data").get<std::vector<double>>();
        if (data.size() != t->size())
            throw std::runtime_error("load_checkpoint: data size mismatch for " + name);
        t->v = data;
    }
    if (tensors.size() != expected)
        throw std::runtime_error("load_checkpoint: unexpected tensors in file");
    return params;
}

}  // namespace covgnn
