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

// Unimodal encoders, the late-fusion head, and the MemeClassifier that ties
// them together.
//
// Pretrained encoder weights are pluggable by reference: a reference that
// does not resolve to a readable weight blob is a ConfigError. Without a
// reference, encoders fall back to a compact, seeded, trainable stand-in
// architecture (the published backbones are consumed as external artifacts,
// not re-implemented), exposing the same pooled feature widths:
// 2048 (residual-50 family), 960 (mobile-v3-large), 2208 (dense-161).

#include <array>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "memesent/autograd.hpp"
#include "memesent/dataset.hpp"
#include "memesent/errors.hpp"
#include "memesent/image.hpp"
#include "memesent/keyvalue.hpp"
#include "memesent/labels.hpp"
#include "memesent/nn.hpp"
#include "memesent/preprocess.hpp"
#include "memesent/rng.hpp"

namespace memesent {

// ---------------------------------------------------------------------------
// Weight blobs
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr char kWeightsMagic[8] = {'M', 'S', 'W', 'T', '0', '0', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated weight blob: " + path);
    return v;
}

} // namespace detail

inline void write_weights_file(const std::string& path,
                               const std::vector<nn::Parameter*>& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write weights: " + path);
    out.write(detail::kWeightsMagic, sizeof(detail::kWeightsMagic));
    detail::write_pod<std::uint64_t>(out, params.size());
    for (const nn::Parameter* p : params) {
        detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.shape.size()));
        for (int d : p->value.shape) detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(p->value.data.data()),
                  static_cast<std::streamsize>(p->value.data.size() * sizeof(double)));
    }
    if (!out) throw IoError("write failed: " + path);
}

inline std::map<std::string, nn::Tensor> read_weights_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open weights: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, detail::kWeightsMagic, 8) != 0) {
        throw ValidationError("not a weight blob: " + path);
    }
    const auto count = detail::read_pod<std::uint64_t>(in, path);
    std::map<std::string, nn::Tensor> out;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = detail::read_pod<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rank = detail::read_pod<std::uint32_t>(in, path);
        std::vector<int> shape;
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape.push_back(static_cast<int>(detail::read_pod<std::uint32_t>(in, path)));
        }
        nn::Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) throw IoError("truncated weight blob: " + path);
        out.emplace(std::move(name), std::move(t));
    }
    return out;
}

/// Resolves a pretrained-weights reference: a readable path as-is, else
/// relative to $MEMESENT_PRETRAINED_DIR. Unresolvable references are a
/// ConfigError, as are resolvable blobs whose tensors do not fit.
inline std::string resolve_pretrained_ref(const std::string& ref) {
    namespace fs = std::filesystem;
    if (fs::exists(ref)) return ref;
    if (const char* dir = std::getenv("MEMESENT_PRETRAINED_DIR")) {
        const fs::path candidate = fs::path(dir) / ref;
        if (fs::exists(candidate)) return candidate.string();
    }
    throw ConfigError("pretrained weights '" + ref +
                      "' not found (checked as path and under $MEMESENT_PRETRAINED_DIR)");
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

/// Word-level vocabulary over normalized captions. Id 0 is the unknown
/// token, id 1 the mask placeholder; real tokens are ordered by descending
/// frequency then lexicographically, so construction is deterministic.
class Vocabulary {
public:
    static constexpr const char* kUnknown = "<unk>";
    static constexpr const char* kMask = "[MASK]";

    Vocabulary() : tokens_{kUnknown, kMask} { reindex(); }

    static Vocabulary build(const std::vector<std::string>& normalized_captions,
                            std::size_t max_size) {
        if (max_size < 2) throw ConfigError("vocab size must be at least 2");
        std::map<std::string, std::size_t> counts;
        for (const std::string& caption : normalized_captions) {
            for (const std::string& token : split_words(caption)) counts[token]++;
        }
        std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        Vocabulary vocab;
        for (const auto& [token, count] : entries) {
            (void)count;
            if (vocab.tokens_.size() >= max_size) break;
            if (token == kUnknown || token == kMask) continue;
            vocab.tokens_.push_back(token);
        }
        vocab.reindex();
        return vocab;
    }

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }

    int id_of(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? 0 : it->second;
    }

    std::vector<int> encode(const std::string& normalized_caption, std::size_t max_tokens) const {
        std::vector<int> ids;
        for (const std::string& token : split_words(normalized_caption)) {
            if (ids.size() >= max_tokens) break;
            ids.push_back(id_of(token));
        }
        return ids;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write vocabulary: " + path);
        for (const std::string& t : tokens_) out << t << '\n';
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open vocabulary: " + path);
        Vocabulary vocab;
        vocab.tokens_.clear();
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            vocab.tokens_.push_back(line);
        }
        if (vocab.tokens_.size() < 2 || vocab.tokens_[0] != kUnknown || vocab.tokens_[1] != kMask) {
            throw ValidationError("vocabulary file is malformed: " + path);
        }
        vocab.reindex();
        return vocab;
    }

private:
    void reindex() {
        index_.clear();
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            index_[tokens_[i]] = static_cast<int>(i);
        }
    }

    std::vector<std::string> tokens_;
    std::map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Text encoder
// ---------------------------------------------------------------------------

enum class TextEncoderKind { kRecurrentBidirectional, kPretrainedTransformer };

inline std::string text_kind_name(TextEncoderKind k) {
    return k == TextEncoderKind::kRecurrentBidirectional ? "bilstm" : "transformer";
}

inline TextEncoderKind parse_text_kind(const std::string& s) {
    if (s == "bilstm") return TextEncoderKind::kRecurrentBidirectional;
    if (s == "transformer") return TextEncoderKind::kPretrainedTransformer;
    throw ConfigError("unknown text encoder kind: '" + s + "'");
}

struct TextEncoderConfig {
    TextEncoderKind kind = TextEncoderKind::kRecurrentBidirectional;
    int vocab_size = 8000;     // cap when building the vocabulary
    int embedding_dim = 64;
    int hidden_dim = 128;      // per direction (recurrent kind)
    int num_blocks = 1;        // transformer depth
    int num_heads = 2;
    int max_tokens = 64;
    std::string pretrained_ref;

    /// Pooled feature width D_t: final-state concatenation for the
    /// bidirectional recurrent encoder, summary-token width for the
    /// transformer.
    int output_dim() const {
        return kind == TextEncoderKind::kRecurrentBidirectional ? 2 * hidden_dim : embedding_dim;
    }

    void validate() const {
        if (vocab_size < 2 || embedding_dim <= 0 || max_tokens <= 0) {
            throw ConfigError("text encoder dims must be positive");
        }
        if (kind == TextEncoderKind::kRecurrentBidirectional && hidden_dim <= 0) {
            throw ConfigError("recurrent text encoder requires hidden_dim > 0");
        }
        if (kind == TextEncoderKind::kPretrainedTransformer) {
            if (num_blocks <= 0 || num_heads <= 0 || embedding_dim % num_heads != 0) {
                throw ConfigError("transformer wants blocks > 0 and heads dividing embedding_dim");
            }
        }
    }
};

class TextEncoder {
public:
    TextEncoder(TextEncoderConfig config, Vocabulary vocab)
        : config_(config), vocab_(std::move(vocab)) {
        config_.validate();
        const int v = static_cast<int>(vocab_.size());
        embedding_ = nn::Embedding("text.embedding", v, config_.embedding_dim);
        if (config_.kind == TextEncoderKind::kRecurrentBidirectional) {
            fwd_ = nn::Lstm("text.fwd", config_.embedding_dim, config_.hidden_dim, false);
            bwd_ = nn::Lstm("text.bwd", config_.embedding_dim, config_.hidden_dim, true);
        } else {
            cls_ = nn::Parameter("text.cls", nn::Tensor({1, config_.embedding_dim}));
            positions_ = nn::Parameter("text.positions",
                                       nn::Tensor({config_.max_tokens + 1, config_.embedding_dim}));
            for (int b = 0; b < config_.num_blocks; ++b) {
                blocks_.emplace_back("text.block" + std::to_string(b), config_.embedding_dim,
                                     config_.num_heads);
            }
        }
    }

    void init_weights(std::uint64_t seed) {
        Rng re(derive_seed(seed, "text.embedding"));
        embedding_.init(re);
        if (config_.kind == TextEncoderKind::kRecurrentBidirectional) {
            Rng rf(derive_seed(seed, "text.fwd"));
            Rng rb(derive_seed(seed, "text.bwd"));
            fwd_.init(rf);
            bwd_.init(rb);
        } else {
            Rng rc(derive_seed(seed, "text.cls"));
            nn::init_uniform(cls_, rc, 0.1);
            Rng rp(derive_seed(seed, "text.positions"));
            nn::init_uniform(positions_, rp, 0.1);
            for (std::size_t b = 0; b < blocks_.size(); ++b) {
                Rng rbk(derive_seed(seed, "text.block" + std::to_string(b)));
                blocks_[b].init(rbk);
            }
        }
        if (!config_.pretrained_ref.empty()) {
            load_pretrained(config_.pretrained_ref);
        }
    }

    /// Copies matching tensors out of a weight blob. Every tensor the
    /// encoder owns must be present with the right shape.
    void load_pretrained(const std::string& ref) {
        const std::string path = resolve_pretrained_ref(ref);
        const std::map<std::string, nn::Tensor> blob = read_weights_file(path);
        for (nn::Parameter* p : parameters()) {
            auto it = blob.find(p->name);
            if (it == blob.end()) {
                throw ConfigError("pretrained blob " + path + " lacks tensor '" + p->name + "'");
            }
            if (it->second.shape != p->value.shape) {
                throw ConfigError("pretrained tensor '" + p->name + "' has wrong shape in " + path);
            }
            p->value = it->second;
        }
    }

    /// Fixed-width pooled representation of a token sequence; the empty
    /// sequence encodes too (zeros for the recurrent kind, the bare summary
    /// token for the transformer).
    nn::Var encode(nn::Tape& tape, const std::vector<int>& token_ids) {
        std::vector<int> ids = token_ids;
        if (static_cast<int>(ids.size()) > config_.max_tokens) {
            ids.resize(static_cast<std::size_t>(config_.max_tokens));
        }
        if (config_.kind == TextEncoderKind::kRecurrentBidirectional) {
            if (ids.empty()) return tape.leaf(nn::Tensor({1, output_dim()}));
            nn::Var embedded = embedding_.forward(tape, ids);
            return tape.concat_cols(fwd_.forward(tape, embedded), bwd_.forward(tape, embedded));
        }
        const int seq_len = static_cast<int>(ids.size()) + 1;
        nn::Var rows = tape.param(cls_);
        if (!ids.empty()) {
            rows = tape.concat_rows({rows, embedding_.forward(tape, ids)});
        }
        nn::Var pos = tape.slice_rows(tape.param(positions_), 0, seq_len);
        nn::Var x = tape.add(rows, pos);
        for (auto& block : blocks_) x = block.forward(tape, x);
        return tape.slice_rows(x, 0, 1);
    }

    std::vector<nn::Parameter*> parameters() {
        std::vector<nn::Parameter*> out;
        embedding_.collect(out);
        if (config_.kind == TextEncoderKind::kRecurrentBidirectional) {
            fwd_.collect(out);
            bwd_.collect(out);
        } else {
            out.push_back(&cls_);
            out.push_back(&positions_);
            for (auto& block : blocks_) block.collect(out);
        }
        return out;
    }

    int output_dim() const { return config_.output_dim(); }
    const TextEncoderConfig& config() const { return config_; }
    const Vocabulary& vocab() const { return vocab_; }

private:
    TextEncoderConfig config_;
    Vocabulary vocab_;
    nn::Embedding embedding_;
    nn::Lstm fwd_, bwd_;
    nn::Parameter cls_;
    nn::Parameter positions_;
    std::vector<nn::TransformerBlock> blocks_;
};

// ---------------------------------------------------------------------------
// Visual encoder
// ---------------------------------------------------------------------------

enum class VisualBackbone { kResidual50, kMobileV3Large, kDense161 };

inline std::string backbone_name(VisualBackbone b) {
    switch (b) {
        case VisualBackbone::kResidual50: return "resnet50";
        case VisualBackbone::kMobileV3Large: return "mobilenetv3";
        case VisualBackbone::kDense161: return "densenet161";
    }
    return "?";
}

inline VisualBackbone parse_backbone(const std::string& s) {
    if (s == "resnet50") return VisualBackbone::kResidual50;
    if (s == "mobilenetv3") return VisualBackbone::kMobileV3Large;
    if (s == "densenet161") return VisualBackbone::kDense161;
    throw ConfigError("unknown backbone: '" + s + "'");
}

/// Pooled-feature width of each backbone family.
inline int backbone_feature_width(VisualBackbone b) {
    switch (b) {
        case VisualBackbone::kResidual50: return 2048;
        case VisualBackbone::kMobileV3Large: return 960;
        case VisualBackbone::kDense161: return 2208;
    }
    return 0;
}

struct VisualEncoderConfig {
    VisualBackbone backbone = VisualBackbone::kResidual50;
    bool pretrained = false;
    std::string pretrained_ref;
    int input_size = 224;  // square input edge; must be a multiple of 32

    int output_dim() const { return backbone_feature_width(backbone); }

    void validate() const {
        if (input_size < 32 || input_size % 32 != 0) {
            throw ConfigError("visual input_size must be a positive multiple of 32");
        }
        if (pretrained && pretrained_ref.empty()) {
            throw ConfigError("pretrained visual encoder needs a pretrained_ref");
        }
    }
};

/// Fallback trunk: two strided valid convolutions, global average pooling,
/// and a projection up to the family's pooled width. Small enough to train
/// on a laptop CPU, wide enough to honor the feature contract.
class VisualEncoder {
public:
    explicit VisualEncoder(VisualEncoderConfig config) : config_(config) {
        config_.validate();
        conv1_ = nn::Conv2dLayer("visual.conv1", 3, 8, 8, 8);
        conv2_ = nn::Conv2dLayer("visual.conv2", 8, 16, 4, 4);
        project_ = nn::Dense("visual.project", 16, config_.output_dim());
    }

    void init_weights(std::uint64_t seed) {
        Rng r1(derive_seed(seed, "visual.conv1"));
        Rng r2(derive_seed(seed, "visual.conv2"));
        Rng r3(derive_seed(seed, "visual.project"));
        conv1_.init(r1);
        conv2_.init(r2);
        project_.init(r3);
        if (config_.pretrained) {
            load_pretrained(config_.pretrained_ref);
        }
    }

    void load_pretrained(const std::string& ref) {
        const std::string path = resolve_pretrained_ref(ref);
        const std::map<std::string, nn::Tensor> blob = read_weights_file(path);
        for (nn::Parameter* p : parameters()) {
            auto it = blob.find(p->name);
            if (it == blob.end()) {
                throw ConfigError("pretrained blob " + path + " lacks tensor '" + p->name + "'");
            }
            if (it->second.shape != p->value.shape) {
                throw ConfigError("pretrained tensor '" + p->name + "' has wrong shape in " + path);
            }
            p->value = it->second;
        }
    }

    nn::Var encode(nn::Tape& tape, const ImageTensor& image) {
        if (image.channels != 3 || image.height != config_.input_size ||
            image.width != config_.input_size) {
            throw ContractError("visual encoder wants a (3," + std::to_string(config_.input_size) +
                                "," + std::to_string(config_.input_size) + ") tensor, got (" +
                                std::to_string(image.channels) + "," + std::to_string(image.height) +
                                "," + std::to_string(image.width) + ")");
        }
        nn::Var x = tape.leaf(nn::Tensor({3, image.height, image.width}, image.data));
        x = tape.relu(conv1_.forward(tape, x));
        x = tape.relu(conv2_.forward(tape, x));
        nn::Var pooled = tape.global_avg_pool(x);
        return tape.relu(project_.forward(tape, pooled));
    }

    std::vector<nn::Parameter*> parameters() {
        std::vector<nn::Parameter*> out;
        conv1_.collect(out);
        conv2_.collect(out);
        project_.collect(out);
        return out;
    }

    int output_dim() const { return config_.output_dim(); }
    const VisualEncoderConfig& config() const { return config_; }

private:
    VisualEncoderConfig config_;
    nn::Conv2dLayer conv1_, conv2_;
    nn::Dense project_;
};

// ---------------------------------------------------------------------------
// Heads
// ---------------------------------------------------------------------------

/// Two per-modality projections, concatenation, and a linear classifier:
/// logits = W3 * concat(W_t * text_feat, W_v * image_feat). No activation
/// between projection and classifier unless `activation` is switched on.
struct FusionHead {
    nn::Dense text_proj;
    nn::Dense visual_proj;
    nn::Dense classifier;
    bool activation = false;

    FusionHead() = default;
    FusionHead(int text_dim, int visual_dim, int projection_dim, int num_classes, bool act)
        : text_proj("head.text_proj", text_dim, projection_dim),
          visual_proj("head.visual_proj", visual_dim, projection_dim),
          classifier("head.classifier", 2 * projection_dim, num_classes),
          activation(act) {}

    void init_weights(std::uint64_t seed) {
        Rng r1(derive_seed(seed, "head.text_proj"));
        Rng r2(derive_seed(seed, "head.visual_proj"));
        Rng r3(derive_seed(seed, "head.classifier"));
        text_proj.init(r1);
        visual_proj.init(r2);
        classifier.init(r3);
    }

    nn::Var forward(nn::Tape& tape, nn::Var text_feat, nn::Var visual_feat) {
        nn::Var a = text_proj.forward(tape, text_feat);
        nn::Var b = visual_proj.forward(tape, visual_feat);
        if (activation) {
            a = tape.relu(a);
            b = tape.relu(b);
        }
        return classifier.forward(tape, tape.concat_cols(a, b));
    }

    std::vector<nn::Parameter*> parameters() {
        std::vector<nn::Parameter*> out;
        text_proj.collect(out);
        visual_proj.collect(out);
        classifier.collect(out);
        return out;
    }
};

/// Single linear head for the standalone unimodal classifiers.
struct UnimodalHead {
    nn::Dense classifier;

    UnimodalHead() = default;
    UnimodalHead(int feature_dim, int num_classes)
        : classifier("head.classifier", feature_dim, num_classes) {}

    void init_weights(std::uint64_t seed) {
        Rng rng(derive_seed(seed, "head.classifier"));
        classifier.init(rng);
    }

    nn::Var forward(nn::Tape& tape, nn::Var feat) { return classifier.forward(tape, feat); }

    std::vector<nn::Parameter*> parameters() {
        std::vector<nn::Parameter*> out;
        classifier.collect(out);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Full classifier
// ---------------------------------------------------------------------------

enum class Modality { kText, kImage, kFusion };

inline std::string modality_name(Modality m) {
    switch (m) {
        case Modality::kText: return "text";
        case Modality::kImage: return "image";
        case Modality::kFusion: return "fusion";
    }
    return "?";
}

inline Modality parse_modality(const std::string& s) {
    if (s == "text") return Modality::kText;
    if (s == "image") return Modality::kImage;
    if (s == "fusion") return Modality::kFusion;
    throw ConfigError("unknown modality: '" + s + "'");
}

struct ModelConfig {
    Modality modality = Modality::kFusion;
    TextEncoderConfig text;
    VisualEncoderConfig visual;
    int projection_dim = 20;
    int num_classes = static_cast<int>(kNumClasses);
    bool projection_activation = false;
    bool freeze_encoders = false;
    std::uint64_t init_seed = 0;
    PreprocessConfig preprocess;

    void validate() const {
        if (projection_dim <= 0 || num_classes <= 0) {
            throw ConfigError("projection_dim and num_classes must be positive");
        }
        if (modality != Modality::kImage) text.validate();
        if (modality != Modality::kText) visual.validate();
        preprocess.validate();
    }
};

/// A sample in model-ready form: token ids for the caption and the decoded,
/// resized (but not yet standardized) image.
struct EncodedSample {
    std::vector<int> tokens;
    ImageU8 image;
    int label = 0;
};

class MemeClassifier {
public:
    MemeClassifier(ModelConfig config, Vocabulary vocab)
        : config_(std::move(config)), predict_mutex_(std::make_unique<std::mutex>()) {
        config_.validate();
        if (config_.modality != Modality::kImage) {
            text_.emplace(config_.text, std::move(vocab));
        }
        if (config_.modality != Modality::kText) {
            VisualEncoderConfig vc = config_.visual;
            vc.input_size = config_.preprocess.target_width;
            if (config_.preprocess.target_width != config_.preprocess.target_height) {
                throw ConfigError("visual pipeline wants square preprocess targets");
            }
            visual_.emplace(vc);
        }
        switch (config_.modality) {
            case Modality::kText:
                unimodal_ = UnimodalHead(text_->output_dim(), config_.num_classes);
                break;
            case Modality::kImage:
                unimodal_ = UnimodalHead(visual_->output_dim(), config_.num_classes);
                break;
            case Modality::kFusion:
                fusion_ = FusionHead(text_->output_dim(), visual_->output_dim(),
                                     config_.projection_dim, config_.num_classes,
                                     config_.projection_activation);
                break;
        }
        init_weights(config_.init_seed);
    }

    /// Builds the vocabulary from the training split's normalized captions,
    /// then the model.
    static MemeClassifier build(const ModelConfig& config, const DatasetManifest& manifest,
                                const std::vector<std::string>& train_ids) {
        Vocabulary vocab;
        if (config.modality != Modality::kImage) {
            std::map<std::string, const Sample*> index;
            for (const Sample& s : manifest.samples) index[s.id] = &s;
            std::vector<std::string> captions;
            captions.reserve(train_ids.size());
            for (const std::string& id : train_ids) {
                auto it = index.find(id);
                if (it == index.end()) throw ValidationError("split id not in manifest: " + id);
                captions.push_back(normalize_caption(it->second->caption, config.preprocess));
            }
            vocab = Vocabulary::build(captions, static_cast<std::size_t>(config.text.vocab_size));
        }
        return MemeClassifier(config, std::move(vocab));
    }

    void init_weights(std::uint64_t seed) {
        if (text_) text_->init_weights(derive_seed(seed, "text"));
        if (visual_) visual_->init_weights(derive_seed(seed, "visual"));
        if (fusion_) fusion_->init_weights(derive_seed(seed, "fusion"));
        if (unimodal_) unimodal_->init_weights(derive_seed(seed, "unimodal"));
    }

    EncodedSample encode_sample(const Sample& sample) const {
        EncodedSample enc;
        enc.label = label_index(sample.label);
        if (text_) {
            const std::string norm = normalize_caption(sample.caption, config_.preprocess);
            enc.tokens = text_->vocab().encode(norm,
                                               static_cast<std::size_t>(config_.text.max_tokens));
        }
        if (visual_) {
            const ImageU8 raw = read_image(sample.image_path);
            ImageTensor t = resize_bilinear(to_tensor(raw), config_.preprocess.target_height,
                                            config_.preprocess.target_width);
            enc.image = to_u8(t);
        }
        return enc;
    }

    /// Same, for an in-memory perturbed image (explanation pipelines).
    EncodedSample encode_parts(const std::vector<int>& tokens, const ImageU8& image) const {
        EncodedSample enc;
        enc.tokens = tokens;
        if (visual_) {
            ImageTensor t = resize_bilinear(to_tensor(image), config_.preprocess.target_height,
                                            config_.preprocess.target_width);
            enc.image = to_u8(t);
        }
        return enc;
    }

    nn::Var forward_logits(nn::Tape& tape, const EncodedSample& sample) {
        switch (config_.modality) {
            case Modality::kText:
                return unimodal_->forward(tape, text_->encode(tape, sample.tokens));
            case Modality::kImage:
                return unimodal_->forward(tape, encode_image_tensor(tape, sample.image));
            case Modality::kFusion: {
                nn::Var tf = text_->encode(tape, sample.tokens);
                nn::Var vf = encode_image_tensor(tape, sample.image);
                return fusion_->forward(tape, tf, vf);
            }
        }
        throw ContractError("unreachable modality");
    }

    nn::Var batch_logits(nn::Tape& tape, const std::vector<EncodedSample>& batch,
                         std::size_t begin, std::size_t end) {
        if (begin >= end || end > batch.size()) throw ContractError("bad batch range");
        std::vector<nn::Var> rows;
        rows.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            rows.push_back(forward_logits(tape, batch[i]));
        }
        return tape.concat_rows(rows);
    }

    /// Batched, internally serialized inference: rows of class probabilities
    /// in the fixed (neutral, positive, negative) order. Safe to call from
    /// several threads.
    std::vector<std::vector<double>> predict_probs(const std::vector<EncodedSample>& batch) {
        std::lock_guard<std::mutex> lock(*predict_mutex_);
        std::vector<std::vector<double>> out;
        out.reserve(batch.size());
        for (const EncodedSample& sample : batch) {
            nn::Tape tape;
            const nn::Tensor logits = tape.value(forward_logits(tape, sample));
            std::vector<double> probs(logits.data.size());
            double mx = logits.data[0];
            for (double v : logits.data) mx = std::max(mx, v);
            double z = 0;
            for (std::size_t j = 0; j < probs.size(); ++j) {
                probs[j] = std::exp(logits.data[j] - mx);
                z += probs[j];
            }
            for (double& p : probs) p /= z;
            out.push_back(std::move(probs));
        }
        return out;
    }

    /// Parameters that the optimizer updates (honors freeze_encoders).
    std::vector<nn::Parameter*> trainable_parameters() {
        std::vector<nn::Parameter*> out;
        if (!config_.freeze_encoders) {
            append(out, encoder_parameters());
        }
        append(out, head_parameters());
        return out;
    }

    std::vector<nn::Parameter*> parameters() {
        std::vector<nn::Parameter*> out = encoder_parameters();
        append(out, head_parameters());
        return out;
    }

    // ---- checkpointing ----

    void save(const std::string& dir) const {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir, ec);
        KeyValueMap kv;
        kv["format_version"] = "1";
        kv["modality"] = modality_name(config_.modality);
        kv["num_classes"] = std::to_string(config_.num_classes);
        kv["projection_dim"] = std::to_string(config_.projection_dim);
        kv["projection_activation"] = config_.projection_activation ? "1" : "0";
        kv["freeze_encoders"] = config_.freeze_encoders ? "1" : "0";
        kv["init_seed"] = std::to_string(config_.init_seed);
        kv["class_order"] = "neutral,positive,negative";
        kv["preprocess.target"] = std::to_string(config_.preprocess.target_width);
        for (int c = 0; c < 3; ++c) {
            kv["preprocess.mean" + std::to_string(c)] =
                format_double(config_.preprocess.pixel_mean[static_cast<std::size_t>(c)]);
            kv["preprocess.std" + std::to_string(c)] =
                format_double(config_.preprocess.pixel_std[static_cast<std::size_t>(c)]);
        }
        kv["preprocess.norm_version"] = config_.preprocess.normalization.version;
        if (config_.modality != Modality::kImage) {
            kv["text.kind"] = text_kind_name(config_.text.kind);
            kv["text.vocab_size"] = std::to_string(config_.text.vocab_size);
            kv["text.embedding_dim"] = std::to_string(config_.text.embedding_dim);
            kv["text.hidden_dim"] = std::to_string(config_.text.hidden_dim);
            kv["text.num_blocks"] = std::to_string(config_.text.num_blocks);
            kv["text.num_heads"] = std::to_string(config_.text.num_heads);
            kv["text.max_tokens"] = std::to_string(config_.text.max_tokens);
            kv["text.output_dim"] = std::to_string(config_.text.output_dim());
        }
        if (config_.modality != Modality::kText) {
            kv["visual.backbone"] = backbone_name(config_.visual.backbone);
            kv["visual.output_dim"] = std::to_string(backbone_feature_width(config_.visual.backbone));
        }
        write_keyvalue_file(dir + "/config.kv", kv);
        MemeClassifier* self = const_cast<MemeClassifier*>(this);
        write_weights_file(dir + "/weights.bin", self->parameters());
        if (text_) text_->vocab().save(dir + "/vocab.txt");
    }

    static MemeClassifier load(const std::string& dir) {
        const KeyValueMap kv = read_keyvalue_file(dir + "/config.kv");
        ModelConfig config;
        config.modality = parse_modality(kv_get(kv, "modality"));
        config.num_classes = std::stoi(kv_get(kv, "num_classes"));
        config.projection_dim = std::stoi(kv_get(kv, "projection_dim"));
        config.projection_activation = kv_get_or(kv, "projection_activation", "0") == "1";
        config.freeze_encoders = kv_get_or(kv, "freeze_encoders", "0") == "1";
        config.init_seed = std::stoull(kv_get_or(kv, "init_seed", "0"));
        config.preprocess.target_width = config.preprocess.target_height =
            std::stoi(kv_get(kv, "preprocess.target"));
        for (int c = 0; c < 3; ++c) {
            config.preprocess.pixel_mean[static_cast<std::size_t>(c)] =
                std::stod(kv_get(kv, "preprocess.mean" + std::to_string(c)));
            config.preprocess.pixel_std[static_cast<std::size_t>(c)] =
                std::stod(kv_get(kv, "preprocess.std" + std::to_string(c)));
        }
        Vocabulary vocab;
        if (config.modality != Modality::kImage) {
            config.text.kind = parse_text_kind(kv_get(kv, "text.kind"));
            config.text.vocab_size = std::stoi(kv_get(kv, "text.vocab_size"));
            config.text.embedding_dim = std::stoi(kv_get(kv, "text.embedding_dim"));
            config.text.hidden_dim = std::stoi(kv_get(kv, "text.hidden_dim"));
            config.text.num_blocks = std::stoi(kv_get_or(kv, "text.num_blocks", "1"));
            config.text.num_heads = std::stoi(kv_get_or(kv, "text.num_heads", "2"));
            config.text.max_tokens = std::stoi(kv_get(kv, "text.max_tokens"));
            vocab = Vocabulary::load(dir + "/vocab.txt");
        }
        if (config.modality != Modality::kText) {
            config.visual.backbone = parse_backbone(kv_get(kv, "visual.backbone"));
        }
        config.visual.input_size = config.preprocess.target_width;

        MemeClassifier model(config, std::move(vocab));
        const std::map<std::string, nn::Tensor> blob = read_weights_file(dir + "/weights.bin");
        for (nn::Parameter* p : model.parameters()) {
            auto it = blob.find(p->name);
            if (it == blob.end()) {
                throw ValidationError("checkpoint " + dir + " lacks tensor '" + p->name + "'");
            }
            if (it->second.shape != p->value.shape) {
                throw ValidationError("checkpoint tensor '" + p->name + "' has mismatched shape");
            }
            p->value = it->second;
        }
        return model;
    }

    const ModelConfig& config() const { return config_; }

    const Vocabulary& vocab() const {
        if (!text_) throw ContractError("image-only model has no vocabulary");
        return text_->vocab();
    }

private:
    static void append(std::vector<nn::Parameter*>& out, std::vector<nn::Parameter*> more) {
        out.insert(out.end(), more.begin(), more.end());
    }

    static std::string format_double(double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

    std::vector<nn::Parameter*> encoder_parameters() {
        std::vector<nn::Parameter*> out;
        if (text_) append(out, text_->parameters());
        if (visual_) append(out, visual_->parameters());
        return out;
    }

    std::vector<nn::Parameter*> head_parameters() {
        std::vector<nn::Parameter*> out;
        if (fusion_) append(out, fusion_->parameters());
        if (unimodal_) append(out, unimodal_->parameters());
        return out;
    }

    nn::Var encode_image_tensor(nn::Tape& tape, const ImageU8& image) {
        if (image.empty()) throw ContractError("sample has no image for a visual model");
        const ImageTensor t = standardize(to_tensor(image), config_.preprocess);
        return visual_->encode(tape, t);
    }

    ModelConfig config_;
    std::optional<TextEncoder> text_;
    std::optional<VisualEncoder> visual_;
    std::optional<FusionHead> fusion_;
    std::optional<UnimodalHead> unimodal_;
    std::unique_ptr<std::mutex> predict_mutex_;
};

} // namespace memesent
