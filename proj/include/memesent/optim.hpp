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

#include <cmath>
#include <vector>

#include "memesent/autograd.hpp"
#include "memesent/errors.hpp"

namespace memesent::nn {

struct AdamWConfig {
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.9999;
    double epsilon = 1e-9;
    double weight_decay = 0.08;

    void validate() const {
        if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
        if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0) {
            throw ConfigError("betas must lie in (0, 1)");
        }
        if (epsilon <= 0.0) throw ConfigError("epsilon must be > 0");
        if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    }
};

/// Adam with decoupled weight decay. One step, per element:
///   m   <- b1*m + (1-b1)*g
///   v   <- b2*v + (1-b2)*g^2
///   p   <- p - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps) - wd * p
/// The decay term is decoupled from the learning rate: with lr = 0 the
/// gradient update vanishes but decay still shrinks the weights.
class AdamW {
public:
    AdamW(std::vector<Parameter*> params, AdamWConfig config)
        : params_(std::move(params)), config_(config) {
        config_.validate();
        for (Parameter* p : params_) {
            m_.push_back(Tensor::zeros(p->value.shape));
            v_.push_back(Tensor::zeros(p->value.shape));
        }
    }

    void zero_grad() {
        for (Parameter* p : params_) p->zero_grad();
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(config_.beta1, t_);
        const double bc2 = 1.0 - std::pow(config_.beta2, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Parameter& p = *params_[i];
            for (std::size_t k = 0; k < p.value.data.size(); ++k) {
                const double g = p.grad.data[k];
                double& m = m_[i].data[k];
                double& v = v_[i].data[k];
                m = config_.beta1 * m + (1.0 - config_.beta1) * g;
                v = config_.beta2 * v + (1.0 - config_.beta2) * g * g;
                const double m_hat = m / bc1;
                const double v_hat = v / bc2;
                const double prev = p.value.data[k];
                p.value.data[k] = prev -
                                  config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon) -
                                  config_.weight_decay * prev;
            }
        }
    }

    long steps_taken() const { return t_; }

private:
    std::vector<Parameter*> params_;
    AdamWConfig config_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    long t_ = 0;
};

} // namespace memesent::nn
