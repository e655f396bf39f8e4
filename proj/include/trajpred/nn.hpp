#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "trajpred/graph.hpp"
#include "trajpred/params.hpp"

namespace trajpred {

/// Weights of a stacked linear / ReLU network.
template <typename T>
struct MlpParams {
    std::vector<ParamBlock<T>*> weights;
    std::vector<ParamBlock<T>*> biases;

    std::size_t in_width() const { return weights.front()->tensor.rows(); }
    std::size_t out_width() const { return weights.back()->tensor.cols(); }
};

template <typename T>
MlpParams<T> add_mlp(ParamRegistry<T>& reg, const std::string& name,
                     const std::vector<std::size_t>& widths) {
    if (widths.size() < 2) {
        throw ConfigError("mlp '" + name + "': need at least two widths");
    }
    MlpParams<T> p;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const std::string layer = name + "." + std::to_string(i);
        p.weights.push_back(&reg.add(layer + ".w", {widths[i], widths[i + 1]}));
        p.biases.push_back(&reg.add(layer + ".b", {widths[i + 1]}));
    }
    return p;
}

template <typename T>
void init_mlp(MlpParams<T>& p, Rng& rng) {
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
        init_kaiming_uniform(p.weights[i]->tensor, rng);
        p.biases[i]->tensor.zero();
    }
}

/// Alternating linear / ReLU with no activation after the final linear.
template <typename T>
Value<T> mlp(Graph<T>& g, Value<T> x, const MlpParams<T>& p) {
    Value<T> h = x;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
        h = g.linear(h, g.param(*p.weights[i]), g.param(*p.biases[i]));
        if (i + 1 < p.weights.size()) h = g.relu(h);
    }
    return h;
}

/// Projection weights of one multi-head attention layer.
template <typename T>
struct AttentionParams {
    ParamBlock<T>* wq = nullptr;
    ParamBlock<T>* bq = nullptr;
    ParamBlock<T>* wk = nullptr;
    ParamBlock<T>* bk = nullptr;
    ParamBlock<T>* wv = nullptr;
    ParamBlock<T>* bv = nullptr;
    ParamBlock<T>* wo = nullptr;
    ParamBlock<T>* bo = nullptr;
};

template <typename T>
AttentionParams<T> add_attention(ParamRegistry<T>& reg, const std::string& name,
                                 std::size_t d_model, std::size_t d_kv) {
    AttentionParams<T> p;
    p.wq = &reg.add(name + ".wq", {d_model, d_model});
    p.bq = &reg.add(name + ".bq", {d_model});
    p.wk = &reg.add(name + ".wk", {d_kv, d_model});
    p.bk = &reg.add(name + ".bk", {d_model});
    p.wv = &reg.add(name + ".wv", {d_kv, d_model});
    p.bv = &reg.add(name + ".bv", {d_model});
    p.wo = &reg.add(name + ".wo", {d_model, d_model});
    p.bo = &reg.add(name + ".bo", {d_model});
    return p;
}

template <typename T>
void init_attention(AttentionParams<T>& p, Rng& rng) {
    for (ParamBlock<T>* w : {p.wq, p.wk, p.wv, p.wo}) init_kaiming_uniform(w->tensor, rng);
    for (ParamBlock<T>* b : {p.bq, p.bk, p.bv, p.bo}) b->tensor.zero();
}

/// Scaled dot-product attention decomposed into parallel heads. Queries come
/// from q_in [Lq, d], keys/values from kv_in [Lk, d_kv]; per head the scores
/// are softmax(Q K^T / sqrt(d_head)), heads are concatenated and projected
/// back to d. An optional kv-row validity mask removes padded rows from the
/// softmax.
template <typename T>
Value<T> multi_head_attention(Graph<T>& g, Value<T> q_in, Value<T> kv_in,
                              const AttentionParams<T>& p, std::size_t heads,
                              const std::vector<std::uint8_t>* kv_valid = nullptr) {
    const std::size_t d = p.wq->tensor.cols();
    if (heads == 0 || d % heads != 0) {
        throw ConfigError("attention: width " + std::to_string(d) + " not divisible by " +
                          std::to_string(heads) + " heads");
    }
    if (kv_in.rows() == 0) {
        throw EmptyContextError("attention: empty key/value context");
    }
    if (kv_valid && kv_valid->size() != kv_in.rows()) {
        throw DimensionError("attention: kv mask length mismatch");
    }

    Value<T> q = g.linear(q_in, g.param(*p.wq), g.param(*p.bq));
    Value<T> k = g.linear(kv_in, g.param(*p.wk), g.param(*p.bk));
    Value<T> v = g.linear(kv_in, g.param(*p.wv), g.param(*p.bv));

    const std::size_t d_head = d / heads;
    const T inv_sqrt = T(1) / static_cast<T>(std::sqrt(static_cast<double>(d_head)));
    std::vector<Value<T>> head_outs;
    head_outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        Value<T> qh = g.slice_cols(q, h * d_head, (h + 1) * d_head);
        Value<T> kh = g.slice_cols(k, h * d_head, (h + 1) * d_head);
        Value<T> vh = g.slice_cols(v, h * d_head, (h + 1) * d_head);
        Value<T> scores = g.scale(g.matmul_nt(qh, kh), inv_sqrt);
        Value<T> attn = g.softmax_rows(scores, kv_valid);
        head_outs.push_back(g.matmul(attn, vh));
    }
    Value<T> concat = g.concat_cols(head_outs);
    return g.linear(concat, g.param(*p.wo), g.param(*p.bo));
}

/// Softmax over an axis of a rank-1 or rank-2 value.
template <typename T>
Value<T> softmax(Graph<T>& g, Value<T> x, std::size_t axis) {
    if (x.value().rank() == 1) {
        if (axis != 0) throw DimensionError("softmax: axis out of range for rank-1 input");
        const std::size_t n = x.value().dim(0);
        return g.reshape(g.softmax_rows(g.reshape(x, {1, n})), {n});
    }
    if (x.value().rank() != 2 || axis > 1) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " of " +
                             x.value().shape_string());
    }
    if (axis == 1) return g.softmax_rows(x);
    return g.transpose(g.softmax_rows(g.transpose(x)));
}

/// Layer normalization over the last axis of a rank-1 or rank-2 value.
template <typename T>
Value<T> layer_norm(Graph<T>& g, Value<T> x, Value<T> gamma, Value<T> beta) {
    return g.layer_norm_rows(x, gamma, beta);
}

} // namespace trajpred
