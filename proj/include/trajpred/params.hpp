#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "trajpred/errors.hpp"
#include "trajpred/rng.hpp"
#include "trajpred/tensor.hpp"

namespace trajpred {

/// One named learnable tensor with its gradient accumulator.
template <typename T>
struct ParamBlock {
    std::string name;
    Tensor<T> tensor;
    Tensor<T> grad;

    ParamBlock(std::string n, std::vector<std::size_t> shape)
        : name(std::move(n)), tensor(shape), grad(shape) {}
};

/// Registry of all model parameters. Registration order is fixed and
/// drives the flat-vector view used by the optimizer and gradient checker,
/// checkpoint record order, and every deterministic reduction over params.
template <typename T>
class ParamRegistry {
public:
    ParamBlock<T>& add(const std::string& name, std::vector<std::size_t> shape) {
        if (index_.count(name)) {
            throw ConfigError("duplicate parameter name: " + name);
        }
        index_[name] = blocks_.size();
        blocks_.push_back(std::make_unique<ParamBlock<T>>(name, std::move(shape)));
        flat_size_ += blocks_.back()->tensor.size();
        return *blocks_.back();
    }

    bool contains(const std::string& name) const { return index_.count(name) > 0; }

    ParamBlock<T>& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
        return *blocks_[it->second];
    }

    std::size_t block_count() const { return blocks_.size(); }
    ParamBlock<T>& block(std::size_t i) { return *blocks_[i]; }
    const ParamBlock<T>& block(std::size_t i) const { return *blocks_[i]; }

    void zero_grad() {
        for (auto& b : blocks_) b->grad.zero();
    }

    void scale_grad(T factor) {
        for (auto& b : blocks_) {
            for (std::size_t i = 0; i < b->grad.size(); ++i) b->grad[i] *= factor;
        }
    }

    std::size_t flat_size() const { return flat_size_; }

    /// Maps a flat coordinate to (block index, offset within block).
    std::pair<std::size_t, std::size_t> locate(std::size_t flat) const {
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            if (flat < blocks_[b]->tensor.size()) return {b, flat};
            flat -= blocks_[b]->tensor.size();
        }
        throw ConfigError("flat parameter index out of range");
    }

    T flat_value(std::size_t flat) const {
        auto [b, o] = locate(flat);
        return blocks_[b]->tensor[o];
    }

    void set_flat_value(std::size_t flat, T v) {
        auto [b, o] = locate(flat);
        blocks_[b]->tensor[o] = v;
    }

    T flat_grad(std::size_t flat) const {
        auto [b, o] = locate(flat);
        return blocks_[b]->grad[o];
    }

private:
    std::vector<std::unique_ptr<ParamBlock<T>>> blocks_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t flat_size_ = 0;
};

/// Per-parameter first/second moment state for Adam.
template <typename T>
struct AdamState {
    std::size_t step = 0;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;

    void ensure(const ParamRegistry<T>& params) {
        if (!m.empty()) return;
        for (std::size_t b = 0; b < params.block_count(); ++b) {
            m.emplace_back(params.block(b).tensor.shape());
            v.emplace_back(params.block(b).tensor.shape());
        }
    }
};

/// One Adam update with bias correction over every registered block.
/// lr == 0 leaves parameters untouched (moments still advance).
template <typename T>
void adam_step(ParamRegistry<T>& params, AdamState<T>& state, T lr) {
    state.ensure(params);
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(state.beta1), t));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(state.beta2), t));

    for (std::size_t b = 0; b < params.block_count(); ++b) {
        ParamBlock<T>& block = params.block(b);
        Tensor<T>& m = state.m[b];
        Tensor<T>& v = state.v[b];
        for (std::size_t i = 0; i < block.tensor.size(); ++i) {
            const T g = block.grad[i];
            if (!std::isfinite(static_cast<double>(g))) {
                throw TrainingError("non-finite gradient in parameter " + block.name);
            }
            m[i] = state.beta1 * m[i] + (T(1) - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (T(1) - state.beta2) * g * g;
            const T m_hat = m[i] / bc1;
            const T v_hat = v[i] / bc2;
            block.tensor[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

/// Kaiming-uniform fan-in initialization for a [in, out] weight matrix.
template <typename T>
void init_kaiming_uniform(Tensor<T>& w, Rng& rng) {
    const double fan_in = static_cast<double>(w.rows());
    const double bound = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = static_cast<T>(rng.uniform(-bound, bound));
    }
}

template <typename T>
void init_normal(Tensor<T>& t, Rng& rng, double stddev) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<T>(rng.normal(0.0, stddev));
    }
}

} // namespace trajpred
