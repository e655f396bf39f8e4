#pragma once

// Independent scalar-loop reference implementations used to check the
// library. These deliberately share no code with trajpred/graph.hpp.

#include <cmath>
#include <cstddef>
#include <vector>

#include "trajpred/tensor.hpp"

namespace oracles {

template <typename T>
trajpred::Tensor<T> matmul(const trajpred::Tensor<T>& a, const trajpred::Tensor<T>& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    trajpred::Tensor<T> c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            T acc = T(0);
            for (std::size_t l = 0; l < k; ++l) acc += a.at(i, l) * b.at(l, j);
            c.at(i, j) = acc;
        }
    }
    return c;
}

template <typename T>
trajpred::Tensor<T> linear(const trajpred::Tensor<T>& x, const trajpred::Tensor<T>& w,
                           const trajpred::Tensor<T>& b) {
    const std::size_t rows = x.rank() == 1 ? 1 : x.rows();
    const std::size_t in = x.rank() == 1 ? x.dim(0) : x.cols();
    const std::size_t out = w.cols();
    trajpred::Tensor<T> y = x.rank() == 1 ? trajpred::Tensor<T>({out})
                                          : trajpred::Tensor<T>({rows, out});
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < out; ++j) {
            T acc = b[j];
            for (std::size_t l = 0; l < in; ++l) acc += x[i * in + l] * w.at(l, j);
            y[i * out + j] = acc;
        }
    }
    return y;
}

template <typename T>
std::vector<T> softmax_row(const std::vector<T>& x) {
    T mx = x[0];
    for (T v : x) mx = std::max(mx, v);
    std::vector<T> y(x.size());
    T denom = T(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = std::exp(x[i] - mx);
        denom += y[i];
    }
    for (T& v : y) v /= denom;
    return y;
}

template <typename T>
trajpred::Tensor<T> layer_norm(const trajpred::Tensor<T>& x, const trajpred::Tensor<T>& gamma,
                               const trajpred::Tensor<T>& beta, T eps = T(1e-5)) {
    const std::size_t rows = x.rank() == 1 ? 1 : x.rows();
    const std::size_t d = x.rank() == 1 ? x.dim(0) : x.cols();
    trajpred::Tensor<T> y = x;
    for (std::size_t i = 0; i < rows; ++i) {
        T mean = T(0);
        for (std::size_t j = 0; j < d; ++j) mean += x[i * d + j];
        mean /= T(d);
        T var = T(0);
        for (std::size_t j = 0; j < d; ++j) {
            var += (x[i * d + j] - mean) * (x[i * d + j] - mean);
        }
        var /= T(d);
        const T inv = T(1) / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            y[i * d + j] = (x[i * d + j] - mean) * inv * gamma[j] + beta[j];
        }
    }
    return y;
}

/// Full multi-head attention with nothing but nested loops.
template <typename T>
trajpred::Tensor<T> multi_head_attention(
    const trajpred::Tensor<T>& q_in, const trajpred::Tensor<T>& kv_in,
    const trajpred::Tensor<T>& wq, const trajpred::Tensor<T>& bq,
    const trajpred::Tensor<T>& wk, const trajpred::Tensor<T>& bk,
    const trajpred::Tensor<T>& wv, const trajpred::Tensor<T>& bv,
    const trajpred::Tensor<T>& wo, const trajpred::Tensor<T>& bo, std::size_t heads) {
    const std::size_t lq = q_in.rows(), lk = kv_in.rows();
    const std::size_t d = wq.cols();
    const std::size_t dh = d / heads;
    trajpred::Tensor<T> q = linear(q_in, wq, bq);
    trajpred::Tensor<T> k = linear(kv_in, wk, bk);
    trajpred::Tensor<T> v = linear(kv_in, wv, bv);

    trajpred::Tensor<T> concat({lq, d});
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < lq; ++i) {
            std::vector<T> scores(lk);
            for (std::size_t j = 0; j < lk; ++j) {
                T dot = T(0);
                for (std::size_t c = 0; c < dh; ++c) {
                    dot += q.at(i, h * dh + c) * k.at(j, h * dh + c);
                }
                scores[j] = dot / static_cast<T>(std::sqrt(static_cast<double>(dh)));
            }
            std::vector<T> attn = softmax_row(scores);
            for (std::size_t c = 0; c < dh; ++c) {
                T acc = T(0);
                for (std::size_t j = 0; j < lk; ++j) acc += attn[j] * v.at(j, h * dh + c);
                concat.at(i, h * dh + c) = acc;
            }
        }
    }
    return linear(concat, wo, bo);
}

/// Hand-run Adam recurrence for a single scalar parameter.
struct AdamTrace {
    std::vector<double> values;
};

template <typename GradFn>
AdamTrace adam_scalar(double x0, GradFn&& grad, double lr, std::size_t steps,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    AdamTrace trace;
    double x = x0, m = 0.0, v = 0.0;
    for (std::size_t t = 1; t <= steps; ++t) {
        const double g = grad(x);
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        const double m_hat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
        const double v_hat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
        x -= lr * m_hat / (std::sqrt(v_hat) + eps);
        trace.values.push_back(x);
    }
    return trace;
}

} // namespace oracles
