// Copyright 2026 The Memesent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Tape-based reverse-mode autodiff over small dense double tensors. The
// graph is rebuilt per batch; parameters live outside the tape and collect
// gradients when backward() reaches their leaf nodes.
//
// Tensors are rank-2 [rows x cols] on the dense path and rank-3 [C,H,W] on
// the convolutional path. Elementwise binaries broadcast a [1 x c], [r x 1]
// or [1 x 1] right operand across a [r x c] left operand.

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "memesent/errors.hpp"
#include "memesent/rng.hpp"

namespace memesent::nn {

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), 0.0);
    }
    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel_of(shape)) throw ContractError("tensor data/shape mismatch");
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int dim : s) {
            if (dim <= 0) throw ContractError("tensor dims must be positive");
            n *= static_cast<std::size_t>(dim);
        }
        return n;
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<int> s, double v) {
        Tensor t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    static Tensor row(std::vector<double> values) {
        const int n = static_cast<int>(values.size());
        return Tensor({1, n}, std::move(values));
    }

    std::size_t numel() const { return data.size(); }
    int rows() const { return shape.at(0); }
    int cols() const { return shape.at(1); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }
};

/// Trainable tensor with an accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
        grad = Tensor::zeros(value.shape);
    }

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

struct Var {
    int id = -1;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    const Tensor& value(Var v) const { return nodes_[check(v)].value; }
    const Tensor& grad(Var v) const { return nodes_[check(v)].grad; }

    Var leaf(Tensor t) {
        nodes_.push_back(Node{std::move(t), {}, nullptr, {}});
        return Var{static_cast<int>(nodes_.size() - 1)};
    }

    Var param(Parameter& p) {
        nodes_.push_back(Node{p.value, {}, &p, {}});
        return Var{static_cast<int>(nodes_.size() - 1)};
    }

    // ---- elementwise ----

    Var add(Var a, Var b) { return binary(a, b, [](double x, double y) { return x + y; },
                                          [](double, double, double g) { return g; },
                                          [](double, double, double g) { return g; }); }

    Var sub(Var a, Var b) { return binary(a, b, [](double x, double y) { return x - y; },
                                          [](double, double, double g) { return g; },
                                          [](double, double, double g) { return -g; }); }

    Var mul(Var a, Var b) { return binary(a, b, [](double x, double y) { return x * y; },
                                          [](double, double y, double g) { return g * y; },
                                          [](double x, double, double g) { return g * x; }); }

    Var div(Var a, Var b) {
        return binary(a, b, [](double x, double y) { return x / y; },
                      [](double, double y, double g) { return g / y; },
                      [](double x, double y, double g) { return -g * x / (y * y); });
    }

    Var scale(Var a, double k) {
        return unary(a, [k](double x) { return k * x; }, [k](double, double, double g) { return k * g; });
    }

    Var add_scalar(Var a, double k) {
        return unary(a, [k](double x) { return x + k; }, [](double, double, double g) { return g; });
    }

    Var relu(Var a) {
        return unary(a, [](double x) { return x > 0 ? x : 0.0; },
                     [](double x, double, double g) { return x > 0 ? g : 0.0; });
    }

    Var tanh_op(Var a) {
        return unary(a, [](double x) { return std::tanh(x); },
                     [](double, double y, double g) { return g * (1.0 - y * y); });
    }

    Var sigmoid(Var a) {
        return unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                     [](double, double y, double g) { return g * y * (1.0 - y); });
    }

    Var exp_op(Var a) {
        return unary(a, [](double x) { return std::exp(x); },
                     [](double, double y, double g) { return g * y; });
    }

    Var log_op(Var a) {
        return unary(a, [](double x) { return std::log(x); },
                     [](double x, double, double g) { return g / x; });
    }

    Var sqrt_op(Var a) {
        return unary(a, [](double x) { return std::sqrt(x); },
                     [](double, double y, double g) { return g * 0.5 / y; });
    }

    Var square(Var a) {
        return unary(a, [](double x) { return x * x; },
                     [](double x, double, double g) { return g * 2.0 * x; });
    }

    // ---- linear algebra ----

    Var matmul(Var a, Var b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        require(A.shape.size() == 2 && B.shape.size() == 2, "matmul wants rank-2 tensors");
        require(A.cols() == B.rows(), "matmul inner dims differ: " + shape_str(A) + " x " + shape_str(B));
        const int m = A.rows(), k = A.cols(), n = B.cols();
        Tensor out({m, n});
        for (int i = 0; i < m; ++i) {
            for (int p = 0; p < k; ++p) {
                const double av = A.at(i, p);
                if (av == 0.0) continue;
                for (int j = 0; j < n; ++j) out.at(i, j) += av * B.at(p, j);
            }
        }
        return make(std::move(out), [this, a, b, m, k, n](const Tensor& g) {
            const Tensor& A = value(a);
            const Tensor& B = value(b);
            Tensor& da = grad_ref(a);
            Tensor& db = grad_ref(b);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const double gv = g.at(i, j);
                    if (gv == 0.0) continue;
                    for (int p = 0; p < k; ++p) {
                        da.at(i, p) += gv * B.at(p, j);
                        db.at(p, j) += gv * A.at(i, p);
                    }
                }
        }, {a, b});
    }

    Var transpose(Var a) {
        const Tensor& A = value(a);
        require(A.shape.size() == 2, "transpose wants rank-2");
        Tensor out({A.cols(), A.rows()});
        for (int i = 0; i < A.rows(); ++i)
            for (int j = 0; j < A.cols(); ++j) out.at(j, i) = A.at(i, j);
        return make(std::move(out), [this, a](const Tensor& g) {
            Tensor& da = grad_ref(a);
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < g.cols(); ++j) da.at(j, i) += g.at(i, j);
        }, {a});
    }

    // ---- shape surgery ----

    Var concat_cols(Var a, Var b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        require(A.shape.size() == 2 && B.shape.size() == 2 && A.rows() == B.rows(),
                "concat_cols wants rank-2 with equal rows");
        Tensor out({A.rows(), A.cols() + B.cols()});
        for (int i = 0; i < A.rows(); ++i) {
            for (int j = 0; j < A.cols(); ++j) out.at(i, j) = A.at(i, j);
            for (int j = 0; j < B.cols(); ++j) out.at(i, A.cols() + j) = B.at(i, j);
        }
        const int ac = A.cols();
        return make(std::move(out), [this, a, b, ac](const Tensor& g) {
            Tensor& da = grad_ref(a);
            Tensor& db = grad_ref(b);
            for (int i = 0; i < g.rows(); ++i) {
                for (int j = 0; j < ac; ++j) da.at(i, j) += g.at(i, j);
                for (int j = ac; j < g.cols(); ++j) db.at(i, j - ac) += g.at(i, j);
            }
        }, {a, b});
    }

    Var concat_rows(const std::vector<Var>& parts) {
        require(!parts.empty(), "concat_rows wants at least one part");
        const int cols = value(parts[0]).cols();
        int rows = 0;
        for (Var p : parts) {
            require(value(p).shape.size() == 2 && value(p).cols() == cols,
                    "concat_rows wants matching column counts");
            rows += value(p).rows();
        }
        Tensor out({rows, cols});
        int r = 0;
        for (Var p : parts) {
            const Tensor& t = value(p);
            std::copy(t.data.begin(), t.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r) * cols);
            r += t.rows();
        }
        return make(std::move(out), [this, parts, cols](const Tensor& g) {
            int r = 0;
            for (Var p : parts) {
                Tensor& dp = grad_ref(p);
                const int pr = dp.rows();
                for (int i = 0; i < pr; ++i)
                    for (int j = 0; j < cols; ++j) dp.at(i, j) += g.at(r + i, j);
                r += pr;
            }
        }, parts);
    }

    Var slice_rows(Var a, int begin, int end) {
        const Tensor& A = value(a);
        require(A.shape.size() == 2 && begin >= 0 && end <= A.rows() && begin < end,
                "slice_rows range invalid");
        Tensor out({end - begin, A.cols()});
        std::copy(A.data.begin() + static_cast<std::ptrdiff_t>(begin) * A.cols(),
                  A.data.begin() + static_cast<std::ptrdiff_t>(end) * A.cols(), out.data.begin());
        return make(std::move(out), [this, a, begin](const Tensor& g) {
            Tensor& da = grad_ref(a);
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < g.cols(); ++j) da.at(begin + i, j) += g.at(i, j);
        }, {a});
    }

    Var slice_cols(Var a, int begin, int end) {
        const Tensor& A = value(a);
        require(A.shape.size() == 2 && begin >= 0 && end <= A.cols() && begin < end,
                "slice_cols range invalid");
        Tensor out({A.rows(), end - begin});
        for (int i = 0; i < A.rows(); ++i)
            for (int j = begin; j < end; ++j) out.at(i, j - begin) = A.at(i, j);
        return make(std::move(out), [this, a, begin](const Tensor& g) {
            Tensor& da = grad_ref(a);
            for (int i = 0; i < g.rows(); ++i)
                for (int j = 0; j < g.cols(); ++j) da.at(i, begin + j) += g.at(i, j);
        }, {a});
    }

    /// Row lookup: out[i] = table[ids[i]]. Backward scatter-adds.
    Var gather_rows(Var table, std::vector<int> ids) {
        const Tensor& T = value(table);
        require(T.shape.size() == 2, "gather_rows wants a rank-2 table");
        for (int id : ids) require(id >= 0 && id < T.rows(), "gather_rows id out of range");
        Tensor out({static_cast<int>(ids.size()), T.cols()});
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (int j = 0; j < T.cols(); ++j) out.at(static_cast<int>(i), j) = T.at(ids[i], j);
        return make(std::move(out), [this, table, ids = std::move(ids)](const Tensor& g) {
            Tensor& dt = grad_ref(table);
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (int j = 0; j < g.cols(); ++j) dt.at(ids[i], j) += g.at(static_cast<int>(i), j);
        }, {table});
    }

    // ---- reductions ----

    Var sum_all(Var a) {
        const Tensor& A = value(a);
        Tensor out({1, 1});
        out.data[0] = std::accumulate(A.data.begin(), A.data.end(), 0.0);
        return make(std::move(out), [this, a](const Tensor& g) {
            Tensor& da = grad_ref(a);
            for (double& v : da.data) v += g.data[0];
        }, {a});
    }

    /// Mean over columns: [r x c] -> [r x 1].
    Var mean_cols(Var a) {
        const Tensor& A = value(a);
        require(A.shape.size() == 2, "mean_cols wants rank-2");
        const int r = A.rows(), c = A.cols();
        Tensor out({r, 1});
        for (int i = 0; i < r; ++i) {
            double s = 0;
            for (int j = 0; j < c; ++j) s += A.at(i, j);
            out.at(i, 0) = s / c;
        }
        return make(std::move(out), [this, a, c](const Tensor& g) {
            Tensor& da = grad_ref(a);
            for (int i = 0; i < g.rows(); ++i) {
                const double gv = g.at(i, 0) / c;
                for (int j = 0; j < c; ++j) da.at(i, j) += gv;
            }
        }, {a});
    }

    /// Mean over rows: [r x c] -> [1 x c].
    Var mean_rows(Var a) {
        const Tensor& A = value(a);
        require(A.shape.size() == 2, "mean_rows wants rank-2");
        const int r = A.rows(), c = A.cols();
        Tensor out({1, c});
        for (int j = 0; j < c; ++j) {
            double s = 0;
            for (int i = 0; i < r; ++i) s += A.at(i, j);
            out.at(0, j) = s / r;
        }
        return make(std::move(out), [this, a, r](const Tensor& g) {
            Tensor& da = grad_ref(a);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < g.cols(); ++j) da.at(i, j) += g.at(0, j) / r;
        }, {a});
    }

    // ---- softmax family ----

    Var softmax_rows(Var a) {
        const Tensor& A = value(a);
        require(A.shape.size() == 2, "softmax_rows wants rank-2");
        Tensor out(A.shape);
        for (int i = 0; i < A.rows(); ++i) {
            double mx = A.at(i, 0);
            for (int j = 1; j < A.cols(); ++j) mx = std::max(mx, A.at(i, j));
            double z = 0;
            for (int j = 0; j < A.cols(); ++j) z += std::exp(A.at(i, j) - mx);
            for (int j = 0; j < A.cols(); ++j) out.at(i, j) = std::exp(A.at(i, j) - mx) / z;
        }
        const int self = static_cast<int>(nodes_.size());
        return make(std::move(out), [this, a, self](const Tensor& g) {
            const Tensor& y = nodes_[static_cast<std::size_t>(self)].value;
            Tensor& da = grad_ref(a);
            for (int i = 0; i < y.rows(); ++i) {
                double dot = 0;
                for (int j = 0; j < y.cols(); ++j) dot += g.at(i, j) * y.at(i, j);
                for (int j = 0; j < y.cols(); ++j)
                    da.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
            }
        }, {a});
    }

    /// Mean cross-entropy of logits [B x C] against integer labels, with
    /// optional per-class weights (weighted mean). Scalar output.
    Var cross_entropy(Var logits, const std::vector<int>& labels,
                      const std::vector<double>& class_weights = {}) {
        const Tensor& L = value(logits);
        require(L.shape.size() == 2, "cross_entropy wants rank-2 logits");
        require(static_cast<int>(labels.size()) == L.rows(), "one label per logits row");
        const int B = L.rows(), C = L.cols();
        for (int y : labels) require(y >= 0 && y < C, "label outside class range");
        if (!class_weights.empty()) {
            require(static_cast<int>(class_weights.size()) == C, "one weight per class");
        }

        Tensor probs({B, C});
        double loss = 0.0, weight_total = 0.0;
        std::vector<double> w(static_cast<std::size_t>(B), 1.0);
        for (int i = 0; i < B; ++i) {
            if (!class_weights.empty()) w[static_cast<std::size_t>(i)] = class_weights[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
            weight_total += w[static_cast<std::size_t>(i)];
            double mx = L.at(i, 0);
            for (int j = 1; j < C; ++j) mx = std::max(mx, L.at(i, j));
            double z = 0;
            for (int j = 0; j < C; ++j) z += std::exp(L.at(i, j) - mx);
            const double logz = std::log(z) + mx;
            for (int j = 0; j < C; ++j) probs.at(i, j) = std::exp(L.at(i, j) - logz);
            loss += w[static_cast<std::size_t>(i)] * (logz - L.at(i, labels[static_cast<std::size_t>(i)]));
        }
        loss /= weight_total;

        Tensor out({1, 1});
        out.data[0] = loss;
        return make(std::move(out),
                    [this, logits, labels, probs = std::move(probs), w = std::move(w),
                     weight_total](const Tensor& g) {
            Tensor& dl = grad_ref(logits);
            const double gv = g.data[0];
            for (int i = 0; i < probs.rows(); ++i) {
                const double wi = w[static_cast<std::size_t>(i)] / weight_total;
                for (int j = 0; j < probs.cols(); ++j) {
                    const double onehot = labels[static_cast<std::size_t>(i)] == j ? 1.0 : 0.0;
                    dl.at(i, j) += gv * wi * (probs.at(i, j) - onehot);
                }
            }
        }, {logits});
    }

    // ---- convolutional path (rank-3 [C,H,W]) ----

    /// Valid (unpadded) strided convolution. input [C,H,W], kernel
    /// [O,C,kh,kw], bias [1,O]; output [O,H',W'].
    Var conv2d(Var input, Var kernel, Var bias, int stride) {
        const Tensor& X = value(input);
        const Tensor& K = value(kernel);
        const Tensor& B = value(bias);
        require(X.shape.size() == 3, "conv2d input wants rank-3 [C,H,W]");
        require(K.shape.size() == 4, "conv2d kernel wants rank-4 [O,C,kh,kw]");
        require(stride >= 1, "conv2d stride must be >= 1");
        const int C = X.shape[0], H = X.shape[1], W = X.shape[2];
        const int O = K.shape[0], KC = K.shape[1], kh = K.shape[2], kw = K.shape[3];
        require(KC == C, "conv2d channel mismatch");
        require(B.shape.size() == 2 && B.rows() == 1 && B.cols() == O, "conv2d bias wants [1,O]");
        require(H >= kh && W >= kw, "conv2d kernel larger than input");
        const int oh = (H - kh) / stride + 1;
        const int ow = (W - kw) / stride + 1;

        const auto xi = [H, W](int c, int y, int x) {
            return (static_cast<std::size_t>(c) * H + y) * W + x;
        };
        const auto ki = [KC, kh, kw](int o, int c, int y, int x) {
            return ((static_cast<std::size_t>(o) * KC + c) * kh + y) * kw + x;
        };
        const auto oi = [oh, ow](int o, int y, int x) {
            return (static_cast<std::size_t>(o) * oh + y) * ow + x;
        };

        Tensor out({O, oh, ow});
        for (int o = 0; o < O; ++o) {
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) {
                    double acc = B.data[static_cast<std::size_t>(o)];
                    const int sy = y * stride, sx = x * stride;
                    for (int c = 0; c < C; ++c)
                        for (int dy = 0; dy < kh; ++dy)
                            for (int dx = 0; dx < kw; ++dx)
                                acc += X.data[xi(c, sy + dy, sx + dx)] * K.data[ki(o, c, dy, dx)];
                    out.data[oi(o, y, x)] = acc;
                }
            }
        }
        return make(std::move(out),
                    [this, input, kernel, bias, stride, C, H, W, O, kh, kw, oh, ow, xi, ki,
                     oi](const Tensor& g) {
            const Tensor& X = value(input);
            const Tensor& K = value(kernel);
            Tensor& dx = grad_ref(input);
            Tensor& dk = grad_ref(kernel);
            Tensor& db = grad_ref(bias);
            for (int o = 0; o < O; ++o) {
                for (int y = 0; y < oh; ++y) {
                    for (int x = 0; x < ow; ++x) {
                        const double gv = g.data[oi(o, y, x)];
                        if (gv == 0.0) continue;
                        db.data[static_cast<std::size_t>(o)] += gv;
                        const int sy = y * stride, sx = x * stride;
                        for (int c = 0; c < C; ++c)
                            for (int dy = 0; dy < kh; ++dy)
                                for (int dx2 = 0; dx2 < kw; ++dx2) {
                                    dx.data[xi(c, sy + dy, sx + dx2)] += gv * K.data[ki(o, c, dy, dx2)];
                                    dk.data[ki(o, c, dy, dx2)] += gv * X.data[xi(c, sy + dy, sx + dx2)];
                                }
                    }
                }
            }
        }, {input, kernel, bias});
    }

    /// [C,H,W] -> [1,C] channel means.
    Var global_avg_pool(Var input) {
        const Tensor& X = value(input);
        require(X.shape.size() == 3, "global_avg_pool wants rank-3");
        const int C = X.shape[0], H = X.shape[1], W = X.shape[2];
        const double inv = 1.0 / (static_cast<double>(H) * W);
        Tensor out({1, C});
        for (int c = 0; c < C; ++c) {
            double s = 0;
            const std::size_t base = static_cast<std::size_t>(c) * H * W;
            for (int i = 0; i < H * W; ++i) s += X.data[base + static_cast<std::size_t>(i)];
            out.at(0, c) = s * inv;
        }
        return make(std::move(out), [this, input, C, H, W, inv](const Tensor& g) {
            Tensor& dx = grad_ref(input);
            for (int c = 0; c < C; ++c) {
                const double gv = g.at(0, c) * inv;
                const std::size_t base = static_cast<std::size_t>(c) * H * W;
                for (int i = 0; i < H * W; ++i) dx.data[base + static_cast<std::size_t>(i)] += gv;
            }
        }, {input});
    }

    // ---- backward ----

    /// Seeds d(loss)/d(loss) = 1 and walks the tape backwards. Flushes
    /// parameter leaves into Parameter::grad. `loss` must be scalar.
    void backward(Var loss) {
        require(value(loss).numel() == 1, "backward wants a scalar loss");
        for (Node& n : nodes_) {
            n.grad = Tensor::zeros(n.value.shape);
        }
        nodes_[check(loss)].grad.data[0] = 1.0;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            Node& n = nodes_[i];
            if (n.backward) n.backward(n.grad);
            if (n.param) {
                for (std::size_t k = 0; k < n.grad.data.size(); ++k) {
                    n.param->grad.data[k] += n.grad.data[k];
                }
            }
        }
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Parameter* param = nullptr;
        std::function<void(const Tensor&)> backward;
    };

    static void require(bool ok, const std::string& msg) {
        if (!ok) throw ContractError(msg);
    }

    static std::string shape_str(const Tensor& t) {
        std::string s = "[";
        for (std::size_t i = 0; i < t.shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(t.shape[i]);
        }
        return s + "]";
    }

    std::size_t check(Var v) const {
        if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
            throw ContractError("Var does not belong to this tape");
        }
        return static_cast<std::size_t>(v.id);
    }

    Tensor& grad_ref(Var v) { return nodes_[check(v)].grad; }

    Var make(Tensor value, std::function<void(const Tensor&)> backward, std::vector<Var>) {
        nodes_.push_back(Node{std::move(value), {}, nullptr, std::move(backward)});
        return Var{static_cast<int>(nodes_.size() - 1)};
    }

    template <typename F, typename DF>
    Var unary(Var a, F f, DF df) {
        const Tensor& A = value(a);
        Tensor out(A.shape);
        for (std::size_t i = 0; i < A.data.size(); ++i) out.data[i] = f(A.data[i]);
        const int self = static_cast<int>(nodes_.size());
        return make(std::move(out), [this, a, df, self](const Tensor& g) {
            const Tensor& A = value(a);
            const Tensor& Y = nodes_[static_cast<std::size_t>(self)].value;
            Tensor& da = grad_ref(a);
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                da.data[i] += df(A.data[i], Y.data[i], g.data[i]);
            }
        }, {a});
    }

    // Binary elementwise with right-operand broadcasting over rank-2 shapes.
    template <typename F, typename DA, typename DB>
    Var binary(Var a, Var b, F f, DA dfa, DB dfb) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        enum class Mode { kSame, kRow, kCol, kScalar };
        Mode mode;
        if (A.same_shape(B)) {
            mode = Mode::kSame;
        } else {
            require(A.shape.size() == 2 && B.shape.size() == 2,
                    "broadcast only defined on rank-2: " + shape_str(A) + " vs " + shape_str(B));
            if (B.rows() == 1 && B.cols() == 1) mode = Mode::kScalar;
            else if (B.rows() == 1 && B.cols() == A.cols()) mode = Mode::kRow;
            else if (B.cols() == 1 && B.rows() == A.rows()) mode = Mode::kCol;
            else throw ContractError("incompatible shapes " + shape_str(A) + " vs " + shape_str(B));
        }

        const std::size_t a_cols =
            A.shape.size() == 2 ? static_cast<std::size_t>(A.cols()) : A.numel();
        const auto b_index = [mode, a_cols](std::size_t flat) -> std::size_t {
            switch (mode) {
                case Mode::kSame: return flat;
                case Mode::kScalar: return 0;
                case Mode::kRow: return flat % a_cols;
                case Mode::kCol: return flat / a_cols;
            }
            return 0;
        };

        Tensor out(A.shape);
        for (std::size_t i = 0; i < A.data.size(); ++i) {
            out.data[i] = f(A.data[i], B.data[b_index(i)]);
        }
        return make(std::move(out), [this, a, b, dfa, dfb, b_index](const Tensor& g) {
            const Tensor& A = value(a);
            const Tensor& B = value(b);
            Tensor& da = grad_ref(a);
            Tensor& db = grad_ref(b);
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                const std::size_t bi = b_index(i);
                da.data[i] += dfa(A.data[i], B.data[bi], g.data[i]);
                db.data[bi] += dfb(A.data[i], B.data[bi], g.data[i]);
            }
        }, {a, b});
    }

    std::vector<Node> nodes_;
};

} // namespace memesent::nn
