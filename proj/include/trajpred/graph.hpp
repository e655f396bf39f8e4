#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "trajpred/errors.hpp"
#include "trajpred/params.hpp"
#include "trajpred/tensor.hpp"

namespace trajpred {

template <typename T>
class Graph;

/// Handle to a node on a Graph tape.
template <typename T>
class Value {
public:
    Value() = default;
    Value(Graph<T>* g, std::size_t idx) : g_(g), i_(idx) {}

    const Tensor<T>& value() const;
    const Tensor<T>& grad() const;
    const std::vector<std::size_t>& shape() const { return value().shape(); }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

    std::size_t index() const { return i_; }
    Graph<T>* graph() const { return g_; }
    bool valid() const { return g_ != nullptr; }

private:
    Graph<T>* g_ = nullptr;
    std::size_t i_ = 0;
};

/// Reverse-mode tape. Nodes are appended in forward execution order, so a
/// single reverse sweep visits every node after all its consumers. All
/// reductions run in fixed index order, which keeps repeated forward and
/// backward passes bit-identical for the same inputs. Forward reductions
/// accumulate in double even in fast (float) mode, so set-style inputs such
/// as permuted key/value rows land on the same stored values.
///
/// One Graph instance serves one forward/backward pass; build a fresh one
/// per evaluation.
template <typename T>
class Graph {
public:
    Graph() { nodes_.reserve(256); }

    // ---- leaves ------------------------------------------------------

    Value<T> constant(Tensor<T> v) { return make(std::move(v), {}, nullptr); }

    /// Leaf bound to a parameter block; backward() adds into block.grad.
    Value<T> param(ParamBlock<T>& p) {
        Value<T> v = make(p.tensor, {}, nullptr);
        nodes_[v.index()].param = &p;
        return v;
    }

    // ---- elementwise ---------------------------------------------------

    Value<T> add(Value<T> a, Value<T> b) {
        require_same_shape("add", a, b);
        Tensor<T> out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += val(b)[i];
        return make(std::move(out), {a.index(), b.index()}, [](Graph& g, Node& n) {
            Tensor<T>& ga = g.nodes_[n.parents[0]].grad;
            Tensor<T>& gb = g.nodes_[n.parents[1]].grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                ga[i] += n.grad[i];
                gb[i] += n.grad[i];
            }
        });
    }

    Value<T> sub(Value<T> a, Value<T> b) {
        require_same_shape("sub", a, b);
        Tensor<T> out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= val(b)[i];
        return make(std::move(out), {a.index(), b.index()}, [](Graph& g, Node& n) {
            Tensor<T>& ga = g.nodes_[n.parents[0]].grad;
            Tensor<T>& gb = g.nodes_[n.parents[1]].grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                ga[i] += n.grad[i];
                gb[i] -= n.grad[i];
            }
        });
    }

    Value<T> mul(Value<T> a, Value<T> b) {
        require_same_shape("mul", a, b);
        Tensor<T> out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= val(b)[i];
        return make(std::move(out), {a.index(), b.index()}, [](Graph& g, Node& n) {
            const Tensor<T>& va = g.nodes_[n.parents[0]].value;
            const Tensor<T>& vb = g.nodes_[n.parents[1]].value;
            Tensor<T>& ga = g.nodes_[n.parents[0]].grad;
            Tensor<T>& gb = g.nodes_[n.parents[1]].grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                ga[i] += n.grad[i] * vb[i];
                gb[i] += n.grad[i] * va[i];
            }
        });
    }

    Value<T> scale(Value<T> a, T s) {
        Tensor<T> out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
        return make(std::move(out), {a.index()}, [s](Graph& g, Node& n) {
            Tensor<T>& ga = g.nodes_[n.parents[0]].grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += s * n.grad[i];
        });
    }

    Value<T> relu(Value<T> a) {
        Tensor<T> out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) {
            relu_pattern_.push_back(out[i] > T(0) ? 1 : 0);
            if (out[i] < T(0)) out[i] = T(0);
        }
        return make(std::move(out), {a.index()}, [](Graph& g, Node& n) {
            const Tensor<T>& va = g.nodes_[n.parents[0]].value;
            Tensor<T>& ga = g.nodes_[n.parents[0]].grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                if (va[i] > T(0)) ga[i] += n.grad[i];
            }
        });
    }

    // ---- matrix ops ------------------------------------------------------

    /// [m,k] x [k,n] -> [m,n]
    Value<T> matmul(Value<T> a, Value<T> b) {
        const Tensor<T>& A = val(a);
        const Tensor<T>& B = val(b);
        if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) {
            throw DimensionError("matmul: shapes " + A.shape_string() + " x " +
                                 B.shape_string());
        }
        const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
        Tensor<T> out({m, n});
        matmul_into(A.data(), B.data(), out.data(), m, k, n);
        return make(std::move(out), {a.index(), b.index()}, [m, k, n](Graph& g, Node& node) {
            const Tensor<T>& A = g.nodes_[node.parents[0]].value;
            const Tensor<T>& B = g.nodes_[node.parents[1]].value;
            Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
            Tensor<T>& gB = g.nodes_[node.parents[1]].grad;
            // dA += dC B^T ; dB += A^T dC
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const T gij = node.grad[i * n + j];
                    for (std::size_t l = 0; l < k; ++l) {
                        gA[i * k + l] += gij * B[l * n + j];
                        gB[l * n + j] += A[i * k + l] * gij;
                    }
                }
            }
        });
    }

    /// [m,k] x [n,k]^T -> [m,n]
    Value<T> matmul_nt(Value<T> a, Value<T> b) {
        const Tensor<T>& A = val(a);
        const Tensor<T>& B = val(b);
        if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.cols()) {
            throw DimensionError("matmul_nt: shapes " + A.shape_string() + " x " +
                                 B.shape_string() + "^T");
        }
        const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
        Tensor<T> out({m, n});
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t l = 0; l < k; ++l) {
                    acc += static_cast<double>(A[i * k + l]) * static_cast<double>(B[j * k + l]);
                }
                out[i * n + j] = static_cast<T>(acc);
            }
        }
        return make(std::move(out), {a.index(), b.index()}, [m, k, n](Graph& g, Node& node) {
            const Tensor<T>& A = g.nodes_[node.parents[0]].value;
            const Tensor<T>& B = g.nodes_[node.parents[1]].value;
            Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
            Tensor<T>& gB = g.nodes_[node.parents[1]].grad;
            // C = A B^T: dA += dC B ; dB += dC^T A
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const T gij = node.grad[i * n + j];
                    for (std::size_t l = 0; l < k; ++l) {
                        gA[i * k + l] += gij * B[j * k + l];
                        gB[j * k + l] += gij * A[i * k + l];
                    }
                }
            }
        });
    }

    /// y = x W + b with x [L,in] or [in], W [in,out], b [out].
    Value<T> linear(Value<T> x, Value<T> w, Value<T> b) {
        const Tensor<T>& X = val(x);
        const Tensor<T>& W = val(w);
        const Tensor<T>& B = val(b);
        const bool vec = X.rank() == 1;
        const std::size_t in = vec ? X.dim(0) : X.cols();
        if (W.rank() != 2 || in != W.rows() || B.size() != W.cols()) {
            throw DimensionError("linear: x " + X.shape_string() + " W " + W.shape_string() +
                                 " b " + B.shape_string());
        }
        const std::size_t rows = vec ? 1 : X.rows();
        const std::size_t out_w = W.cols();
        Tensor<T> out(vec ? std::vector<std::size_t>{out_w}
                          : std::vector<std::size_t>{rows, out_w});
        std::vector<double> acc(out_w);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < out_w; ++j) acc[j] = static_cast<double>(B[j]);
            for (std::size_t l = 0; l < in; ++l) {
                const double xv = static_cast<double>(X[i * in + l]);
                for (std::size_t j = 0; j < out_w; ++j) {
                    acc[j] += xv * static_cast<double>(W[l * out_w + j]);
                }
            }
            for (std::size_t j = 0; j < out_w; ++j) out[i * out_w + j] = static_cast<T>(acc[j]);
        }
        return make(std::move(out), {x.index(), w.index(), b.index()},
                    [rows, in, out_w](Graph& g, Node& node) {
                        const Tensor<T>& X = g.nodes_[node.parents[0]].value;
                        const Tensor<T>& W = g.nodes_[node.parents[1]].value;
                        Tensor<T>& gX = g.nodes_[node.parents[0]].grad;
                        Tensor<T>& gW = g.nodes_[node.parents[1]].grad;
                        Tensor<T>& gB = g.nodes_[node.parents[2]].grad;
                        for (std::size_t i = 0; i < rows; ++i) {
                            for (std::size_t j = 0; j < out_w; ++j) {
                                const T gij = node.grad[i * out_w + j];
                                gB[j] += gij;
                                for (std::size_t l = 0; l < in; ++l) {
                                    gX[i * in + l] += gij * W[l * out_w + j];
                                    gW[l * out_w + j] += X[i * in + l] * gij;
                                }
                            }
                        }
                    });
    }

    // ---- normalization ---------------------------------------------------

    /// Row softmax with max-subtraction. An optional per-column validity
    /// mask zeroes masked columns and renormalizes over the valid ones.
    Value<T> softmax_rows(Value<T> a, const std::vector<std::uint8_t>* col_valid = nullptr) {
        const Tensor<T>& A = val(a);
        if (A.rank() != 2) throw DimensionError("softmax_rows: need rank-2, got " + A.shape_string());
        const std::size_t rows = A.rows(), cols = A.cols();
        if (col_valid && col_valid->size() != cols) {
            throw DimensionError("softmax_rows: mask size mismatch");
        }
        if (!A.all_finite()) throw NumericError("softmax: non-finite input");
        std::vector<std::uint8_t> mask =
            col_valid ? *col_valid : std::vector<std::uint8_t>(cols, 1);
        std::size_t n_valid = 0;
        for (auto m : mask) n_valid += m ? 1 : 0;
        if (n_valid == 0) throw EmptyContextError("softmax: every column masked");

        Tensor<T> out({rows, cols});
        for (std::size_t i = 0; i < rows; ++i) {
            T mx = -std::numeric_limits<T>::infinity();
            for (std::size_t j = 0; j < cols; ++j) {
                if (mask[j] && A[i * cols + j] > mx) mx = A[i * cols + j];
            }
            double denom = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                if (mask[j]) {
                    out[i * cols + j] = std::exp(A[i * cols + j] - mx);
                    denom += static_cast<double>(out[i * cols + j]);
                } else {
                    out[i * cols + j] = T(0);
                }
            }
            for (std::size_t j = 0; j < cols; ++j) {
                out[i * cols + j] = static_cast<T>(static_cast<double>(out[i * cols + j]) / denom);
            }
        }
        return make(std::move(out), {a.index()}, [rows, cols](Graph& g, Node& node) {
            const Tensor<T>& Y = node.value;
            Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
            // dx_j = y_j (dy_j - sum_k dy_k y_k); masked columns have y == 0.
            for (std::size_t i = 0; i < rows; ++i) {
                T dot = T(0);
                for (std::size_t j = 0; j < cols; ++j) {
                    dot += node.grad[i * cols + j] * Y[i * cols + j];
                }
                for (std::size_t j = 0; j < cols; ++j) {
                    gA[i * cols + j] += Y[i * cols + j] * (node.grad[i * cols + j] - dot);
                }
            }
        });
    }

    /// Per-row normalization over the last axis, epsilon inside the sqrt.
    Value<T> layer_norm_rows(Value<T> a, Value<T> gamma, Value<T> beta, T eps = T(1e-5)) {
        const Tensor<T>& A = val(a);
        const std::size_t rows = A.rank() == 1 ? 1 : A.rows();
        const std::size_t d = A.rank() == 1 ? A.dim(0) : A.cols();
        if (val(gamma).size() != d || val(beta).size() != d) {
            throw DimensionError("layer_norm: feature width " + std::to_string(d) +
                                 " vs gamma " + val(gamma).shape_string() + " beta " +
                                 val(beta).shape_string());
        }
        Tensor<T> out = A;
        std::vector<T> inv_sigma(rows), mu(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            double m_acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) m_acc += static_cast<double>(A[i * d + j]);
            const T m = static_cast<T>(m_acc / static_cast<double>(d));
            double var_acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double c = static_cast<double>(A[i * d + j]) - static_cast<double>(m);
                var_acc += c * c;
            }
            const T var = static_cast<T>(var_acc / static_cast<double>(d));
            mu[i] = m;
            inv_sigma[i] = T(1) / std::sqrt(var + eps);
            for (std::size_t j = 0; j < d; ++j) {
                out[i * d + j] = (A[i * d + j] - m) * inv_sigma[i] * val(gamma)[j] + val(beta)[j];
            }
        }
        return make(std::move(out), {a.index(), gamma.index(), beta.index()},
                    [rows, d, mu, inv_sigma](Graph& g, Node& node) {
                        const Tensor<T>& A = g.nodes_[node.parents[0]].value;
                        const Tensor<T>& G = g.nodes_[node.parents[1]].value;
                        Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
                        Tensor<T>& gG = g.nodes_[node.parents[1]].grad;
                        Tensor<T>& gB = g.nodes_[node.parents[2]].grad;
                        for (std::size_t i = 0; i < rows; ++i) {
                            T mean_h = T(0), mean_hx = T(0);
                            std::vector<T> xhat(d), h(d);
                            for (std::size_t j = 0; j < d; ++j) {
                                xhat[j] = (A[i * d + j] - mu[i]) * inv_sigma[i];
                                h[j] = node.grad[i * d + j] * G[j];
                                gG[j] += node.grad[i * d + j] * xhat[j];
                                gB[j] += node.grad[i * d + j];
                                mean_h += h[j];
                                mean_hx += h[j] * xhat[j];
                            }
                            mean_h /= T(d);
                            mean_hx /= T(d);
                            for (std::size_t j = 0; j < d; ++j) {
                                gA[i * d + j] +=
                                    inv_sigma[i] * (h[j] - mean_h - xhat[j] * mean_hx);
                            }
                        }
                    });
    }

    // ---- structure -------------------------------------------------------

    Value<T> transpose(Value<T> a) {
        const Tensor<T>& A = val(a);
        if (A.rank() != 2) throw DimensionError("transpose: need rank-2, got " + A.shape_string());
        const std::size_t r = A.rows(), c = A.cols();
        Tensor<T> out({c, r});
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) out[j * r + i] = A[i * c + j];
        return make(std::move(out), {a.index()}, [r, c](Graph& g, Node& node) {
            Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gA[i * c + j] += node.grad[j * r + i];
        });
    }

    Value<T> reshape(Value<T> a, std::vector<std::size_t> shape) {
        Tensor<T> out = Tensor<T>::from(shape, std::vector<T>(val(a).data(),
                                                              val(a).data() + val(a).size()));
        return make(std::move(out), {a.index()}, [](Graph& g, Node& node) {
            Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
            for (std::size_t i = 0; i < node.grad.size(); ++i) gA[i] += node.grad[i];
        });
    }

    Value<T> slice_rows(Value<T> a, std::size_t r0, std::size_t r1) {
        const Tensor<T>& A = val(a);
        if (A.rank() != 2 || r1 > A.rows() || r0 >= r1) {
            throw DimensionError("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) +
                                 ") of " + A.shape_string());
        }
        const std::size_t c = A.cols();
        Tensor<T> out({r1 - r0, c});
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[r0 * c + i];
        return make(std::move(out), {a.index()}, [r0, c](Graph& g, Node& node) {
            Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
            for (std::size_t i = 0; i < node.grad.size(); ++i) gA[r0 * c + i] += node.grad[i];
        });
    }

    Value<T> slice_cols(Value<T> a, std::size_t c0, std::size_t c1) {
        const Tensor<T>& A = val(a);
        if (A.rank() != 2 || c1 > A.cols() || c0 >= c1) {
            throw DimensionError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                                 ") of " + A.shape_string());
        }
        const std::size_t r = A.rows(), c = A.cols(), w = c1 - c0;
        Tensor<T> out({r, w});
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < w; ++j) out[i * w + j] = A[i * c + c0 + j];
        return make(std::move(out), {a.index()}, [r, c, c0, w](Graph& g, Node& node) {
            Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < w; ++j) gA[i * c + c0 + j] += node.grad[i * w + j];
        });
    }

    Value<T> concat_cols(const std::vector<Value<T>>& parts) {
        if (parts.empty()) throw DimensionError("concat_cols: no inputs");
        const std::size_t r = val(parts[0]).rows();
        std::size_t total = 0;
        std::vector<std::size_t> widths, indices;
        for (const auto& p : parts) {
            if (val(p).rank() != 2 || val(p).rows() != r) {
                throw DimensionError("concat_cols: row mismatch at " + val(p).shape_string());
            }
            widths.push_back(val(p).cols());
            indices.push_back(p.index());
            total += val(p).cols();
        }
        Tensor<T> out({r, total});
        std::size_t off = 0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            const Tensor<T>& P = val(parts[k]);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < widths[k]; ++j)
                    out[i * total + off + j] = P[i * widths[k] + j];
            off += widths[k];
        }
        return make(std::move(out), indices, [r, widths, total](Graph& g, Node& node) {
            std::size_t off = 0;
            for (std::size_t k = 0; k < node.parents.size(); ++k) {
                Tensor<T>& gP = g.nodes_[node.parents[k]].grad;
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < widths[k]; ++j)
                        gP[i * widths[k] + j] += node.grad[i * total + off + j];
                off += widths[k];
            }
        });
    }

    Value<T> concat_rows(const std::vector<Value<T>>& parts) {
        if (parts.empty()) throw DimensionError("concat_rows: no inputs");
        const std::size_t c = val(parts[0]).cols();
        std::size_t total = 0;
        std::vector<std::size_t> heights, indices;
        for (const auto& p : parts) {
            if (val(p).rank() != 2 || val(p).cols() != c) {
                throw DimensionError("concat_rows: col mismatch at " + val(p).shape_string());
            }
            heights.push_back(val(p).rows());
            indices.push_back(p.index());
            total += val(p).rows();
        }
        Tensor<T> out({total, c});
        std::size_t off = 0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            const Tensor<T>& P = val(parts[k]);
            for (std::size_t i = 0; i < P.size(); ++i) out[off * c + i] = P[i];
            off += heights[k];
        }
        return make(std::move(out), indices, [c, heights](Graph& g, Node& node) {
            std::size_t off = 0;
            for (std::size_t k = 0; k < node.parents.size(); ++k) {
                Tensor<T>& gP = g.nodes_[node.parents[k]].grad;
                for (std::size_t i = 0; i < gP.size(); ++i) gP[i] += node.grad[off * c + i];
                off += heights[k];
            }
        });
    }

    // ---- reductions --------------------------------------------------------

    /// [L,c] -> [1,c] column means.
    Value<T> mean_rows(Value<T> a) {
        const Tensor<T>& A = val(a);
        if (A.rank() != 2) throw DimensionError("mean_rows: need rank-2, got " + A.shape_string());
        const std::size_t r = A.rows(), c = A.cols();
        Tensor<T> out({1, c});
        std::vector<double> acc(c, 0.0);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) acc[j] += static_cast<double>(A[i * c + j]);
        for (std::size_t j = 0; j < c; ++j) {
            out[j] = static_cast<T>(acc[j] / static_cast<double>(r));
        }
        return make(std::move(out), {a.index()}, [r, c](Graph& g, Node& node) {
            Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gA[i * c + j] += node.grad[j] / T(r);
        });
    }

    /// Mean over every element -> [1,1].
    Value<T> mean_all(Value<T> a) {
        const Tensor<T>& A = val(a);
        const std::size_t n = A.size();
        Tensor<T> out({1, 1});
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(A[i]);
        out[0] = static_cast<T>(acc / static_cast<double>(n));
        return make(std::move(out), {a.index()}, [n](Graph& g, Node& node) {
            Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
            for (std::size_t i = 0; i < n; ++i) gA[i] += node.grad[0] / T(n);
        });
    }

    /// [L,c] -> [L,1] Euclidean norm per row. At an exactly zero row the
    /// subgradient 0 is used.
    Value<T> row_norms(Value<T> a) {
        const Tensor<T>& A = val(a);
        if (A.rank() != 2) throw DimensionError("row_norms: need rank-2, got " + A.shape_string());
        const std::size_t r = A.rows(), c = A.cols();
        Tensor<T> out({r, 1});
        for (std::size_t i = 0; i < r; ++i) {
            double q = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                q += static_cast<double>(A[i * c + j]) * static_cast<double>(A[i * c + j]);
            }
            out[i] = static_cast<T>(std::sqrt(q));
        }
        return make(std::move(out), {a.index()}, [r, c](Graph& g, Node& node) {
            const Tensor<T>& A = g.nodes_[node.parents[0]].value;
            Tensor<T>& gA = g.nodes_[node.parents[0]].grad;
            for (std::size_t i = 0; i < r; ++i) {
                if (node.value[i] == T(0)) continue;
                const T s = node.grad[i] / node.value[i];
                for (std::size_t j = 0; j < c; ++j) gA[i * c + j] += s * A[i * c + j];
            }
        });
    }

    // ---- engine ------------------------------------------------------------

    /// Reverse sweep from a scalar root. Parameter leaves accumulate their
    /// node gradient into the bound ParamBlock::grad.
    void backward(Value<T> root) {
        Node& r = nodes_.at(root.index());
        if (r.value.size() != 1) {
            throw ContractError("backward: root must be scalar, got " + r.value.shape_string());
        }
        r.grad[0] = T(1);
        for (std::size_t i = root.index() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.back) n.back(*this, n);
            if (n.param) {
                for (std::size_t j = 0; j < n.grad.size(); ++j) n.param->grad[j] += n.grad[j];
            }
        }
    }

    const Tensor<T>& node_value(std::size_t i) const { return nodes_.at(i).value; }
    const Tensor<T>& node_grad(std::size_t i) const { return nodes_.at(i).grad; }
    std::size_t node_count() const { return nodes_.size(); }

    /// Activation sign pattern of every relu evaluated on this tape, in
    /// execution order. The gradient checker compares patterns of the two
    /// perturbed passes to reject probes that straddle a relu kink.
    const std::vector<std::uint8_t>& relu_pattern() const { return relu_pattern_; }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        std::vector<std::size_t> parents;
        std::function<void(Graph&, Node&)> back;
        ParamBlock<T>* param = nullptr;
    };

    Value<T> make(Tensor<T> v, std::vector<std::size_t> parents,
                  std::function<void(Graph&, Node&)> back) {
        Node n;
        n.grad = Tensor<T>(v.shape());
        n.value = std::move(v);
        n.parents = std::move(parents);
        n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Value<T>(this, nodes_.size() - 1);
    }

    const Tensor<T>& val(Value<T> v) const { return nodes_.at(v.index()).value; }

    void require_same_shape(const char* op, Value<T> a, Value<T> b) const {
        if (!val(a).same_shape(val(b))) {
            throw DimensionError(std::string(op) + ": shapes " + val(a).shape_string() +
                                 " vs " + val(b).shape_string());
        }
    }

    static void matmul_into(const T* A, const T* B, T* C, std::size_t m, std::size_t k,
                            std::size_t n) {
        std::vector<double> acc(n);
        for (std::size_t i = 0; i < m; ++i) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t l = 0; l < k; ++l) {
                const double a = static_cast<double>(A[i * k + l]);
                for (std::size_t j = 0; j < n; ++j) {
                    acc[j] += a * static_cast<double>(B[l * n + j]);
                }
            }
            for (std::size_t j = 0; j < n; ++j) C[i * n + j] = static_cast<T>(acc[j]);
        }
    }

    std::vector<Node> nodes_;
    std::vector<std::uint8_t> relu_pattern_;

    friend class Value<T>;
};

template <typename T>
const Tensor<T>& Value<T>::value() const {
    return g_->node_value(i_);
}

template <typename T>
const Tensor<T>& Value<T>::grad() const {
    return g_->node_grad(i_);
}

} // namespace trajpred
