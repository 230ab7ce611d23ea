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

// Optimization loop for the three model variants: cross-entropy objective,
// decoupled-weight-decay Adam configured per TrainConfig, early stopping on
// validation loss, best-validation-epoch checkpointing, learning curves.

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "memesent/dataset.hpp"
#include "memesent/errors.hpp"
#include "memesent/model.hpp"
#include "memesent/optim.hpp"
#include "memesent/plot.hpp"
#include "memesent/rng.hpp"

namespace memesent {

/// Hyperparameters. Defaults are the reference configuration this project
/// ships with: batch 32, AdamW at lr 1e-5, betas (0.9, 0.9999), eps 1e-9,
/// weight decay 0.08.
struct TrainConfig {
    int batch_size = 32;
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.9999;
    double epsilon = 1e-9;
    double weight_decay = 0.08;
    int max_epochs = 30;
    int early_stop_patience = 5;
    std::uint64_t seed = 0;
    bool class_weighting = false;  // off by default: imbalance is handled at
                                   // evaluation time through weighted scores

    void validate() const {
        if (batch_size <= 0) throw ConfigError("batch_size must be positive");
        if (learning_rate < 0) throw ConfigError("learning_rate must be >= 0");
        if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1) {
            throw ConfigError("betas must lie in (0, 1)");
        }
        if (epsilon <= 0) throw ConfigError("epsilon must be > 0");
        if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
        if (max_epochs <= 0) throw ConfigError("max_epochs must be positive");
        if (early_stop_patience < 0) throw ConfigError("early_stop_patience must be >= 0");
    }

    nn::AdamWConfig optimizer() const {
        nn::AdamWConfig c;
        c.learning_rate = learning_rate;
        c.beta1 = beta1;
        c.beta2 = beta2;
        c.epsilon = epsilon;
        c.weight_decay = weight_decay;
        return c;
    }
};

struct TrainingTrace {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> train_accuracy;
    std::vector<double> val_accuracy;
    int best_epoch = -1;  // 0-based index of the minimum validation loss

    std::size_t epochs() const { return train_loss.size(); }
};

inline nlohmann::json trace_to_json(const TrainingTrace& trace) {
    return nlohmann::json{
        {"train_loss", trace.train_loss},
        {"val_loss", trace.val_loss},
        {"train_accuracy", trace.train_accuracy},
        {"val_accuracy", trace.val_accuracy},
        {"best_epoch", trace.best_epoch},
    };
}

inline TrainingTrace trace_from_json(const nlohmann::json& j) {
    TrainingTrace trace;
    trace.train_loss = j.at("train_loss").get<std::vector<double>>();
    trace.val_loss = j.at("val_loss").get<std::vector<double>>();
    trace.train_accuracy = j.at("train_accuracy").get<std::vector<double>>();
    trace.val_accuracy = j.at("val_accuracy").get<std::vector<double>>();
    trace.best_epoch = j.at("best_epoch").get<int>();
    return trace;
}

namespace detail {

struct Prepared {
    std::vector<EncodedSample> samples;
    std::vector<int> labels;
};

inline Prepared prepare_split(const MemeClassifier& model, const DatasetManifest& manifest,
                              const std::vector<std::string>& ids) {
    std::map<std::string, const Sample*> index;
    for (const Sample& s : manifest.samples) index[s.id] = &s;
    Prepared out;
    out.samples.reserve(ids.size());
    for (const std::string& id : ids) {
        auto it = index.find(id);
        if (it == index.end()) throw ValidationError("split id not in manifest: " + id);
        out.samples.push_back(model.encode_sample(*it->second));
        out.labels.push_back(label_index(it->second->label));
    }
    return out;
}

struct EvalPass {
    double loss = 0;
    double accuracy = 0;
};

inline EvalPass eval_pass(MemeClassifier& model, const Prepared& data, int batch_size,
                          const std::vector<double>& class_weights) {
    double loss_sum = 0, weight_sum = 0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < data.samples.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(data.samples.size(), begin + static_cast<std::size_t>(batch_size));
        nn::Tape tape;
        const nn::Var logits_var = model.batch_logits(tape, data.samples, begin, end);
        const nn::Tensor& logits = tape.value(logits_var);
        std::vector<int> labels(data.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                data.labels.begin() + static_cast<std::ptrdiff_t>(end));
        const nn::Tensor& loss = tape.value(tape.cross_entropy(logits_var, labels, class_weights));
        double batch_weight = 0;
        for (int y : labels) {
            batch_weight += class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
        }
        loss_sum += loss.data[0] * batch_weight;
        weight_sum += batch_weight;
        for (int i = 0; i < logits.rows(); ++i) {
            int arg = 0;
            for (int j = 1; j < logits.cols(); ++j) {
                if (logits.at(i, j) > logits.at(i, arg)) arg = j;
            }
            if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
        }
    }
    EvalPass out;
    out.loss = weight_sum == 0 ? 0 : loss_sum / weight_sum;
    out.accuracy = data.samples.empty()
                       ? 0
                       : static_cast<double>(correct) / static_cast<double>(data.samples.size());
    return out;
}

} // namespace detail

struct TrainResult {
    TrainingTrace trace;
};

/// Trains the model in place. The weights left in the model afterwards are
/// the best-validation-loss epoch's, not the last epoch's.
inline TrainResult train(MemeClassifier& model, const DatasetManifest& manifest,
                         const SplitResult& split, const TrainConfig& config) {
    config.validate();
    if (split.train.empty()) throw ConfigError("training split is empty");
    if (split.val.empty()) throw ConfigError("validation split is empty");

    const detail::Prepared train_data = detail::prepare_split(model, manifest, split.train);
    const detail::Prepared val_data = detail::prepare_split(model, manifest, split.val);

    std::vector<double> class_weights;
    if (config.class_weighting) {
        std::vector<double> support(kNumClasses, 0.0);
        for (int y : train_data.labels) support[static_cast<std::size_t>(y)] += 1.0;
        class_weights.resize(kNumClasses);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            class_weights[c] = support[c] > 0
                                   ? static_cast<double>(train_data.labels.size()) /
                                         (static_cast<double>(kNumClasses) * support[c])
                                   : 0.0;
        }
    }

    nn::AdamW optimizer(model.trainable_parameters(), config.optimizer());

    TrainingTrace trace;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<nn::Tensor> best_weights;
    const auto snapshot = [&model, &best_weights] {
        best_weights.clear();
        for (nn::Parameter* p : model.parameters()) best_weights.push_back(p->value);
    };

    std::vector<std::size_t> order(train_data.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, "train-epoch:" + std::to_string(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0, weight_sum = 0;
        std::size_t correct = 0;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(config.batch_size), ++batch_index) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            std::vector<EncodedSample> batch;
            std::vector<int> labels;
            batch.reserve(end - begin);
            for (std::size_t k = begin; k < end; ++k) {
                batch.push_back(train_data.samples[order[k]]);
                labels.push_back(train_data.labels[order[k]]);
            }
            nn::Tape tape;
            const nn::Var logits_var = model.batch_logits(tape, batch, 0, batch.size());
            const nn::Var loss_var = tape.cross_entropy(logits_var, labels, class_weights);
            const double loss = tape.value(loss_var).data[0];
            if (!std::isfinite(loss)) {
                throw Error("non-finite training loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));
            }
            optimizer.zero_grad();
            tape.backward(loss_var);
            optimizer.step();

            double batch_weight = 0;
            for (int y : labels) {
                batch_weight += class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
            }
            loss_sum += loss * batch_weight;
            weight_sum += batch_weight;
            const nn::Tensor& logits = tape.value(logits_var);
            for (int i = 0; i < logits.rows(); ++i) {
                int arg = 0;
                for (int j = 1; j < logits.cols(); ++j) {
                    if (logits.at(i, j) > logits.at(i, arg)) arg = j;
                }
                if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
            }
        }

        trace.train_loss.push_back(weight_sum == 0 ? 0 : loss_sum / weight_sum);
        trace.train_accuracy.push_back(static_cast<double>(correct) /
                                       static_cast<double>(train_data.samples.size()));

        const detail::EvalPass val =
            detail::eval_pass(model, val_data, config.batch_size, class_weights);
        if (!std::isfinite(val.loss)) {
            throw Error("non-finite validation loss at epoch " + std::to_string(epoch));
        }
        trace.val_loss.push_back(val.loss);
        trace.val_accuracy.push_back(val.accuracy);

        if (val.loss < best_val_loss) {
            best_val_loss = val.loss;
            trace.best_epoch = epoch;
            snapshot();
        } else if (epoch - trace.best_epoch > config.early_stop_patience) {
            break;
        }
    }

    // Restore the best-validation weights; the returned model IS the checkpoint.
    if (!best_weights.empty()) {
        std::size_t i = 0;
        for (nn::Parameter* p : model.parameters()) p->value = best_weights[i++];
    }
    return TrainResult{std::move(trace)};
}

/// Dual-axis learning-curve PNG (loss left, accuracy right), with a JSON
/// sidecar holding the exact series values. The sidecar path swaps the
/// extension for .json.
inline std::string emit_curves(const TrainingTrace& trace, const std::string& output_path) {
    if (trace.epochs() == 0) throw ContractError("cannot plot an empty training trace");
    std::vector<plot::Series> series = {
        {"TRAIN LOSS", plot::kBlue, false, trace.train_loss},
        {"VAL LOSS", plot::kOrange, false, trace.val_loss},
        {"TRAIN ACC", plot::kGreen, true, trace.train_accuracy},
        {"VAL ACC", plot::kRed, true, trace.val_accuracy},
    };
    plot::plot_series(output_path, "LOSS AND ACCURACY", series, "LOSS", "ACC");

    std::string sidecar = output_path;
    const std::size_t dot = sidecar.find_last_of('.');
    const std::size_t slash = sidecar.find_last_of('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
        sidecar.resize(dot);
    }
    sidecar += ".json";
    std::ofstream out(sidecar, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write trace sidecar: " + sidecar);
    out << trace_to_json(trace).dump(2) << "\n";
    return sidecar;
}

} // namespace memesent
