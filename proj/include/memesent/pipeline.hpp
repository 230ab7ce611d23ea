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

// Glue between checkpoints and the explanation pipeline: a trained
// MemeClassifier exposed as the black-box predict functions LIME consumes.
// Image explanations perturb the image with the caption held fixed; text
// explanations perturb the caption with the image held fixed.

#include <string>
#include <utility>
#include <vector>

#include "memesent/dataset.hpp"
#include "memesent/explain.hpp"
#include "memesent/model.hpp"

namespace memesent {

inline ImagePredictFn model_image_predict(MemeClassifier& model, std::vector<int> fixed_tokens) {
    return [&model, fixed_tokens = std::move(fixed_tokens)](const std::vector<ImageU8>& images) {
        std::vector<EncodedSample> batch;
        batch.reserve(images.size());
        for (const ImageU8& img : images) {
            batch.push_back(model.encode_parts(fixed_tokens, img));
        }
        return model.predict_probs(batch);
    };
}

inline TextPredictFn model_text_predict(MemeClassifier& model, ImageU8 fixed_image) {
    return [&model, fixed_image = std::move(fixed_image)](const std::vector<std::string>& captions) {
        std::vector<EncodedSample> batch;
        batch.reserve(captions.size());
        for (const std::string& caption : captions) {
            const std::string norm = normalize_caption(caption, model.config().preprocess);
            EncodedSample enc;
            enc.tokens = model.vocab().encode(
                norm, static_cast<std::size_t>(model.config().text.max_tokens));
            if (!fixed_image.empty()) {
                enc = model.encode_parts(enc.tokens, fixed_image);
            }
            batch.push_back(std::move(enc));
        }
        return model.predict_probs(batch);
    };
}

struct SampleExplanation {
    Explanation explanation;
    ImageU8 image;        // model-input-sized image (overlay target)
    std::string caption;  // normalized caption the tokens came from
};

inline SampleExplanation explain_sample_image(MemeClassifier& model, const Sample& sample,
                                              const LimeConfig& config) {
    if (model.config().modality == Modality::kText) {
        throw ConfigError("image explanation needs a checkpoint with a visual encoder");
    }
    const EncodedSample enc = model.encode_sample(sample);
    SampleExplanation out;
    out.image = enc.image;
    out.explanation =
        explain_instance_image(enc.image, model_image_predict(model, enc.tokens), config);
    return out;
}

inline SampleExplanation explain_sample_text(MemeClassifier& model, const Sample& sample,
                                             const LimeConfig& config) {
    if (model.config().modality == Modality::kImage) {
        throw ConfigError("text explanation needs a checkpoint with a text encoder");
    }
    const EncodedSample enc = model.encode_sample(sample);
    SampleExplanation out;
    out.image = enc.image;
    out.caption = normalize_caption(sample.caption, model.config().preprocess);
    out.explanation =
        explain_instance_text(out.caption, model_text_predict(model, enc.image), config);
    return out;
}

} // namespace memesent
