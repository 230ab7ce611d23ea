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

// Layer building blocks composed from tape ops. Modules own their
// Parameters; forward methods thread a Tape through.

#include <cmath>
#include <string>
#include <vector>

#include "memesent/autograd.hpp"
#include "memesent/rng.hpp"

namespace memesent::nn {

inline void init_uniform(Parameter& p, Rng& rng, double bound) {
    for (double& v : p.value.data) v = rng.uniform(-bound, bound);
}

/// Glorot-style bound from fan-in/fan-out.
inline void init_xavier(Parameter& p, Rng& rng, int fan_in, int fan_out) {
    init_uniform(p, rng, std::sqrt(6.0 / (fan_in + fan_out)));
}

struct Dense {
    Parameter weight;  // [in x out]
    Parameter bias;    // [1 x out]

    Dense() = default;
    Dense(const std::string& name, int in, int out)
        : weight(name + ".weight", Tensor({in, out})),
          bias(name + ".bias", Tensor({1, out})) {}

    void init(Rng& rng) { init_xavier(weight, rng, weight.value.rows(), weight.value.cols()); }

    Var forward(Tape& tape, Var x) {
        return tape.add(tape.matmul(x, tape.param(weight)), tape.param(bias));
    }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }
};

struct Conv2dLayer {
    Parameter kernel;  // [O,C,k,k]
    Parameter bias;    // [1,O]
    int stride = 1;

    Conv2dLayer() = default;
    Conv2dLayer(const std::string& name, int in_ch, int out_ch, int k, int stride_)
        : kernel(name + ".kernel", Tensor({out_ch, in_ch, k, k})),
          bias(name + ".bias", Tensor({1, out_ch})),
          stride(stride_) {}

    void init(Rng& rng) {
        const int k = kernel.value.shape[2];
        const int fan_in = kernel.value.shape[1] * k * k;
        const int fan_out = kernel.value.shape[0] * k * k;
        init_xavier(kernel, rng, fan_in, fan_out);
    }

    Var forward(Tape& tape, Var x) {
        return tape.conv2d(x, tape.param(kernel), tape.param(bias), stride);
    }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&kernel);
        out.push_back(&bias);
    }
};

struct Embedding {
    Parameter table;  // [V x E]

    Embedding() = default;
    Embedding(const std::string& name, int vocab, int dim)
        : table(name + ".table", Tensor({vocab, dim})) {}

    void init(Rng& rng) { init_uniform(table, rng, 0.1); }

    Var forward(Tape& tape, const std::vector<int>& ids) {
        return tape.gather_rows(tape.param(table), ids);
    }

    void collect(std::vector<Parameter*>& out) { out.push_back(&table); }
};

/// Single-direction LSTM scanning an embedded sequence [T x E]; returns the
/// final hidden state [1 x H]. Gate layout in the fused projection: input,
/// forget, cell, output.
struct Lstm {
    Parameter w_input;   // [E x 4H]
    Parameter w_hidden;  // [H x 4H]
    Parameter bias;      // [1 x 4H]
    int hidden_dim = 0;
    bool reverse = false;

    Lstm() = default;
    Lstm(const std::string& name, int embed_dim, int hidden, bool reverse_)
        : w_input(name + ".w_input", Tensor({embed_dim, 4 * hidden})),
          w_hidden(name + ".w_hidden", Tensor({hidden, 4 * hidden})),
          bias(name + ".bias", Tensor({1, 4 * hidden})),
          hidden_dim(hidden),
          reverse(reverse_) {}

    void init(Rng& rng) {
        init_xavier(w_input, rng, w_input.value.rows(), hidden_dim);
        init_xavier(w_hidden, rng, hidden_dim, hidden_dim);
        // forget-gate bias at 1 keeps early gradients flowing
        for (int j = hidden_dim; j < 2 * hidden_dim; ++j) bias.value.at(0, j) = 1.0;
    }

    Var forward(Tape& tape, Var embedded) {
        const int steps = tape.value(embedded).rows();
        Var wx = tape.param(w_input);
        Var wh = tape.param(w_hidden);
        Var b = tape.param(bias);
        Var h = tape.leaf(Tensor({1, hidden_dim}));
        Var c = tape.leaf(Tensor({1, hidden_dim}));
        const int H = hidden_dim;
        for (int s = 0; s < steps; ++s) {
            const int t = reverse ? steps - 1 - s : s;
            Var x_t = tape.slice_rows(embedded, t, t + 1);
            Var gates = tape.add(tape.add(tape.matmul(x_t, wx), tape.matmul(h, wh)), b);
            Var gi = tape.sigmoid(tape.slice_cols(gates, 0, H));
            Var gf = tape.sigmoid(tape.slice_cols(gates, H, 2 * H));
            Var gc = tape.tanh_op(tape.slice_cols(gates, 2 * H, 3 * H));
            Var go = tape.sigmoid(tape.slice_cols(gates, 3 * H, 4 * H));
            c = tape.add(tape.mul(gf, c), tape.mul(gi, gc));
            h = tape.mul(go, tape.tanh_op(c));
        }
        return h;
    }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&w_input);
        out.push_back(&w_hidden);
        out.push_back(&bias);
    }
};

struct LayerNorm {
    Parameter gain;   // [1 x E]
    Parameter shift;  // [1 x E]
    double eps = 1e-5;

    LayerNorm() = default;
    LayerNorm(const std::string& name, int dim)
        : gain(name + ".gain", Tensor::full({1, dim}, 1.0)),
          shift(name + ".shift", Tensor({1, dim})) {}

    Var forward(Tape& tape, Var x) {
        Var mu = tape.mean_cols(x);                       // [T x 1]
        Var centered = tape.sub(x, mu);
        Var var = tape.mean_cols(tape.square(centered));  // [T x 1]
        Var denom = tape.sqrt_op(tape.add_scalar(var, eps));
        Var normed = tape.div(centered, denom);
        return tape.add(tape.mul(normed, tape.param(gain)), tape.param(shift));
    }

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&gain);
        out.push_back(&shift);
    }
};

/// Post-norm transformer encoder block: multi-head self-attention plus a
/// two-layer feed-forward, residual connections around both.
struct TransformerBlock {
    int num_heads = 2;
    int model_dim = 0;
    std::vector<Dense> q_proj, k_proj, v_proj;  // one [E x dk] trio per head
    Dense out_proj;                             // [E x E]
    Dense ffn_in, ffn_out;
    LayerNorm norm_attn, norm_ffn;

    TransformerBlock() = default;
    TransformerBlock(const std::string& name, int dim, int heads)
        : num_heads(heads), model_dim(dim), out_proj(name + ".out", dim, dim),
          ffn_in(name + ".ffn_in", dim, 2 * dim),
          ffn_out(name + ".ffn_out", 2 * dim, dim),
          norm_attn(name + ".norm_attn", dim),
          norm_ffn(name + ".norm_ffn", dim) {
        if (dim % heads != 0) throw ConfigError("transformer dim must divide heads");
        const int dk = dim / heads;
        for (int h = 0; h < heads; ++h) {
            const std::string prefix = name + ".head" + std::to_string(h);
            q_proj.emplace_back(prefix + ".q", dim, dk);
            k_proj.emplace_back(prefix + ".k", dim, dk);
            v_proj.emplace_back(prefix + ".v", dim, dk);
        }
    }

    void init(Rng& rng) {
        for (int h = 0; h < num_heads; ++h) {
            q_proj[static_cast<std::size_t>(h)].init(rng);
            k_proj[static_cast<std::size_t>(h)].init(rng);
            v_proj[static_cast<std::size_t>(h)].init(rng);
        }
        out_proj.init(rng);
        ffn_in.init(rng);
        ffn_out.init(rng);
    }

    Var forward(Tape& tape, Var x) {
        const int dk = model_dim / num_heads;
        const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
        Var heads{};
        for (int h = 0; h < num_heads; ++h) {
            Var q = q_proj[static_cast<std::size_t>(h)].forward(tape, x);
            Var k = k_proj[static_cast<std::size_t>(h)].forward(tape, x);
            Var v = v_proj[static_cast<std::size_t>(h)].forward(tape, x);
            Var scores = tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt_dk);
            Var attn = tape.softmax_rows(scores);
            Var head = tape.matmul(attn, v);
            heads = h == 0 ? head : tape.concat_cols(heads, head);
        }
        Var attended = tape.add(x, out_proj.forward(tape, heads));
        attended = norm_attn.forward(tape, attended);
        Var ffn = ffn_out.forward(tape, tape.relu(ffn_in.forward(tape, attended)));
        return norm_ffn.forward(tape, tape.add(attended, ffn));
    }

    void collect(std::vector<Parameter*>& out) {
        for (auto& d : q_proj) d.collect(out);
        for (auto& d : k_proj) d.collect(out);
        for (auto& d : v_proj) d.collect(out);
        out_proj.collect(out);
        ffn_in.collect(out);
        ffn_out.collect(out);
        norm_attn.collect(out);
        norm_ffn.collect(out);
    }
};

} // namespace memesent::nn
