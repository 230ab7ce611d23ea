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

// memesent - multimodal meme sentiment pipeline.
//
//   stats     dataset statistics and language breakdown
//   split     stratified train/val/test split
//   train     fit a text, image or fusion classifier
//   evaluate  weighted metrics and confusion matrix for a checkpoint
//   explain   LIME explanations for one sample
//   compare   side-by-side table of evaluation reports
//
// Every run writes run.json (the fully resolved configuration) into the
// output directory. Exit codes: 0 success, 1 runtime failure, 2 bad
// arguments.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "memesent/dataset.hpp"
#include "memesent/evaluation.hpp"
#include "memesent/keyvalue.hpp"
#include "memesent/explain_render.hpp"
#include "memesent/pipeline.hpp"
#include "memesent/plot.hpp"
#include "memesent/synthetic.hpp"
#include "memesent/training.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void log_line(const std::string& message) { std::cerr << "[memesent] " << message << "\n"; }

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw memesent::IoError("cannot write " + path);
    out << content;
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string ensure_out_dir(const std::string& out) {
    if (out.empty()) {
        throw memesent::ConfigError("no output directory: pass --out or set MEMESENT_OUT");
    }
    std::error_code ec;
    fs::create_directories(out, ec);
    return out;
}

void write_run_snapshot(const std::string& out_dir, const std::string& subcommand,
                        const json& options) {
    write_json_file((fs::path(out_dir) / "run.json").string(),
                    json{{"subcommand", subcommand}, {"options", options}});
}

memesent::DatasetManifest load_validated_manifest(const std::string& manifest_path) {
    const std::vector<memesent::Sample> raw = memesent::read_manifest_file(manifest_path);
    memesent::ValidationOutcome outcome = memesent::validate_manifest(raw, manifest_path);
    log_line("manifest: " + std::to_string(raw.size()) + " records, " +
             std::to_string(outcome.manifest.samples.size()) + " valid, " +
             std::to_string(outcome.rejected.size()) + " rejected");
    for (const memesent::Sample& s : outcome.rejected) {
        log_line("rejected sample '" + s.id + "': image missing or undecodable");
    }
    return std::move(outcome.manifest);
}

memesent::SplitRatios parse_ratios(const std::string& text) {
    std::array<double, 3> values{};
    std::size_t field = 0, start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == ',') {
            if (field >= 3) throw memesent::ConfigError("ratios want exactly 3 comma-separated values");
            values[field++] = std::stod(text.substr(start, i - start));
            start = i + 1;
        }
    }
    if (field != 3) throw memesent::ConfigError("ratios want exactly 3 comma-separated values");
    return memesent::SplitRatios{values[0], values[1], values[2]};
}

memesent::SplitResult acquire_split(const memesent::DatasetManifest& manifest,
                                    const std::string& split_file, const std::string& ratios,
                                    std::uint64_t split_seed) {
    if (!split_file.empty()) {
        std::ifstream in(split_file, std::ios::binary);
        if (!in) throw memesent::IoError("cannot open split file: " + split_file);
        json j;
        in >> j;
        return memesent::split_from_json(j);
    }
    return memesent::stratified_split(manifest, parse_ratios(ratios), split_seed);
}

// ---------------------------------------------------------------------------
// Common option bags
// ---------------------------------------------------------------------------

struct DataOptions {
    std::string manifest;
    std::string out;
    std::string split_file;
    std::string ratios = "0.7,0.1,0.2";
    std::uint64_t split_seed = 0;

    void attach(CLI::App* cmd, bool with_split) {
        cmd->add_option("--manifest", manifest, "Tab-separated dataset manifest")->required();
        cmd->add_option("--out", out, "Output directory")->envname("MEMESENT_OUT");
        if (with_split) {
            cmd->add_option("--split-file", split_file,
                            "Reuse a split.json instead of splitting in-process");
            cmd->add_option("--ratios", ratios, "train,val,test ratios")->capture_default_str();
            cmd->add_option("--split-seed", split_seed, "Seed for the stratified split")->capture_default_str();
        }
    }

    json to_json(bool with_split) const {
        json j{{"manifest", manifest}, {"out", out}};
        if (with_split) {
            j["split_file"] = split_file;
            j["ratios"] = ratios;
            j["split_seed"] = split_seed;
        }
        return j;
    }
};

struct ModelOptions {
    std::string modality = "fusion";
    std::string backbone = "resnet50";
    std::string text_encoder = "bilstm";
    int embedding_dim = 64;
    int hidden_dim = 128;
    int vocab_size = 8000;
    int max_tokens = 64;
    int projection_dim = 20;
    bool projection_activation = false;
    bool freeze_encoders = false;
    int image_size = 224;
    std::string pretrained_text;
    std::string pretrained_image;
    std::uint64_t init_seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--modality", modality, "text | image | fusion")->capture_default_str()
            ->check(CLI::IsMember({"text", "image", "fusion"}));
        cmd->add_option("--backbone", backbone, "resnet50 | mobilenetv3 | densenet161")->capture_default_str()
            ->check(CLI::IsMember({"resnet50", "mobilenetv3", "densenet161"}));
        cmd->add_option("--text-encoder", text_encoder, "bilstm | transformer")->capture_default_str()
            ->check(CLI::IsMember({"bilstm", "transformer"}));
        cmd->add_option("--embedding-dim", embedding_dim, "Token embedding width")->capture_default_str();
        cmd->add_option("--hidden-dim", hidden_dim, "Recurrent hidden width per direction")->capture_default_str();
        cmd->add_option("--vocab-size", vocab_size, "Vocabulary cap")->capture_default_str();
        cmd->add_option("--max-tokens", max_tokens, "Caption truncation length")->capture_default_str();
        cmd->add_option("--projection-dim", projection_dim, "Fusion projection width")->capture_default_str();
        cmd->add_flag("--projection-activation", projection_activation,
                      "ReLU between projection and classifier (off by default)");
        cmd->add_flag("--freeze-encoders", freeze_encoders, "Train heads only");
        cmd->add_option("--image-size", image_size, "Square model input edge (multiple of 32)")->capture_default_str();
        cmd->add_option("--pretrained-text", pretrained_text, "Text encoder weight blob reference");
        cmd->add_option("--pretrained-image", pretrained_image, "Visual encoder weight blob reference");
        cmd->add_option("--init-seed", init_seed, "Weight initialization seed")->capture_default_str();
    }

    memesent::ModelConfig to_config() const {
        memesent::ModelConfig config;
        config.modality = memesent::parse_modality(modality);
        config.text.kind = memesent::parse_text_kind(text_encoder);
        config.text.embedding_dim = embedding_dim;
        config.text.hidden_dim = hidden_dim;
        config.text.vocab_size = vocab_size;
        config.text.max_tokens = max_tokens;
        config.text.pretrained_ref = pretrained_text;
        config.visual.backbone = memesent::parse_backbone(backbone);
        config.visual.pretrained = !pretrained_image.empty();
        config.visual.pretrained_ref = pretrained_image;
        config.projection_dim = projection_dim;
        config.projection_activation = projection_activation;
        config.freeze_encoders = freeze_encoders;
        config.init_seed = init_seed;
        config.preprocess.target_width = config.preprocess.target_height = image_size;
        config.visual.input_size = image_size;
        return config;
    }

    json to_json() const {
        return json{{"modality", modality},
                    {"backbone", backbone},
                    {"text_encoder", text_encoder},
                    {"embedding_dim", embedding_dim},
                    {"hidden_dim", hidden_dim},
                    {"vocab_size", vocab_size},
                    {"max_tokens", max_tokens},
                    {"projection_dim", projection_dim},
                    {"projection_activation", projection_activation},
                    {"freeze_encoders", freeze_encoders},
                    {"image_size", image_size},
                    {"pretrained_text", pretrained_text},
                    {"pretrained_image", pretrained_image},
                    {"init_seed", init_seed}};
    }
};

struct TrainOptions {
    int batch_size = 32;
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.9999;
    double epsilon = 1e-9;
    double weight_decay = 0.08;
    int max_epochs = 30;
    int patience = 5;
    std::uint64_t seed = 0;
    bool class_weighting = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--batch-size", batch_size, "")->capture_default_str();
        cmd->add_option("--lr", learning_rate, "Learning rate")->capture_default_str();
        cmd->add_option("--beta1", beta1, "")->capture_default_str();
        cmd->add_option("--beta2", beta2, "")->capture_default_str();
        cmd->add_option("--eps", epsilon, "Optimizer epsilon")->capture_default_str();
        cmd->add_option("--weight-decay", weight_decay, "")->capture_default_str();
        cmd->add_option("--max-epochs", max_epochs, "")->capture_default_str();
        cmd->add_option("--patience", patience, "Early-stopping patience (epochs)")->capture_default_str();
        cmd->add_option("--seed", seed, "Training seed (shuffles)")->capture_default_str();
        cmd->add_flag("--class-weighting", class_weighting,
                      "Inverse-frequency class weights in the loss");
    }

    memesent::TrainConfig to_config() const {
        memesent::TrainConfig config;
        config.batch_size = batch_size;
        config.learning_rate = learning_rate;
        config.beta1 = beta1;
        config.beta2 = beta2;
        config.epsilon = epsilon;
        config.weight_decay = weight_decay;
        config.max_epochs = max_epochs;
        config.early_stop_patience = patience;
        config.seed = seed;
        config.class_weighting = class_weighting;
        return config;
    }

    json to_json() const {
        return json{{"batch_size", batch_size},   {"learning_rate", learning_rate},
                    {"beta1", beta1},             {"beta2", beta2},
                    {"epsilon", epsilon},         {"weight_decay", weight_decay},
                    {"max_epochs", max_epochs},   {"patience", patience},
                    {"seed", seed},               {"class_weighting", class_weighting}};
    }
};

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_stats(const DataOptions& data, bool plot) {
    const std::string out_dir = ensure_out_dir(data.out);
    json options = data.to_json(false);
    options["plot"] = plot;
    write_run_snapshot(out_dir, "stats", options);

    const memesent::DatasetManifest manifest = load_validated_manifest(data.manifest);
    const memesent::DatasetStats stats = memesent::compute_stats(manifest);
    write_json_file((fs::path(out_dir) / "stats.json").string(), memesent::stats_to_json(stats));

    std::cout << "samples: " << manifest.samples.size() << "\n";
    for (memesent::Label label : memesent::kAllLabels) {
        std::cout << "  " << memesent::label_name(label) << ": "
                  << stats.class_counts[static_cast<std::size_t>(memesent::label_index(label))]
                  << "\n";
    }
    std::cout << "languages: ";
    for (std::size_t i = 0; i < memesent::kNumLanguages; ++i) {
        std::cout << memesent::language_name(static_cast<memesent::CaptionLanguage>(i)) << "="
                  << stats.language_counts[i] << (i + 1 < memesent::kNumLanguages ? ", " : "\n");
    }
    std::cout << "caption words: min " << stats.caption_length.min << ", max "
              << stats.caption_length.max << ", mean " << stats.caption_length.mean << "\n";
    std::cout << "top words:";
    for (const auto& [token, count] : memesent::top_k_words(stats, 10)) {
        std::cout << " " << token << "(" << count << ")";
    }
    std::cout << "\n";

    if (plot) {
        const std::string hist = (fs::path(out_dir) / "length_hist.png").string();
        memesent::plot::plot_histogram(hist, "CAPTION LENGTH FREQUENCY",
                                       memesent::caption_length_distribution(manifest));
        log_line("wrote " + hist);
    }
    log_line("wrote " + (fs::path(out_dir) / "stats.json").string());
    return 0;
}

int run_split(const DataOptions& data) {
    const std::string out_dir = ensure_out_dir(data.out);
    write_run_snapshot(out_dir, "split", data.to_json(true));

    const memesent::DatasetManifest manifest = load_validated_manifest(data.manifest);
    const memesent::SplitResult split =
        memesent::stratified_split(manifest, parse_ratios(data.ratios), data.split_seed);
    write_json_file((fs::path(out_dir) / "split.json").string(), memesent::split_to_json(split));

    std::cout << "train " << split.train.size() << ", val " << split.val.size() << ", test "
              << split.test.size() << "\n";
    log_line("wrote " + (fs::path(out_dir) / "split.json").string());
    return 0;
}

int run_train(const DataOptions& data, const ModelOptions& model_opts,
              const TrainOptions& train_opts, bool plot) {
    const std::string out_dir = ensure_out_dir(data.out);
    json options = data.to_json(true);
    options.update(model_opts.to_json());
    options.update(train_opts.to_json());
    options["plot"] = plot;
    write_run_snapshot(out_dir, "train", options);

    const memesent::DatasetManifest manifest = load_validated_manifest(data.manifest);
    const memesent::SplitResult split =
        acquire_split(manifest, data.split_file, data.ratios, data.split_seed);
    write_json_file((fs::path(out_dir) / "split.json").string(), memesent::split_to_json(split));

    memesent::MemeClassifier model =
        memesent::MemeClassifier::build(model_opts.to_config(), manifest, split.train);
    log_line("training " + model_opts.modality + " model on " + std::to_string(split.train.size()) +
             " samples");
    const memesent::TrainResult result = train(model, manifest, split, train_opts.to_config());

    const std::string ckpt = (fs::path(out_dir) / "checkpoint").string();
    model.save(ckpt);
    write_json_file((fs::path(out_dir) / "trace.json").string(),
                    memesent::trace_to_json(result.trace));
    if (plot) {
        memesent::emit_curves(result.trace, (fs::path(out_dir) / "curves.png").string());
        log_line("wrote " + (fs::path(out_dir) / "curves.png").string());
    }

    std::cout << "epochs: " << result.trace.epochs() << ", best epoch: "
              << result.trace.best_epoch + 1 << ", best val loss: "
              << result.trace.val_loss[static_cast<std::size_t>(result.trace.best_epoch)] << "\n";
    log_line("wrote checkpoint " + ckpt);
    return 0;
}

int run_evaluate(const DataOptions& data, const std::string& checkpoint, const std::string& name,
                 double recall_threshold, bool plot) {
    const std::string out_dir = ensure_out_dir(data.out);
    json options = data.to_json(true);
    options["checkpoint"] = checkpoint;
    options["name"] = name;
    options["recall_threshold"] = recall_threshold;
    options["plot"] = plot;
    write_run_snapshot(out_dir, "evaluate", options);

    const memesent::DatasetManifest manifest = load_validated_manifest(data.manifest);
    const memesent::SplitResult split =
        acquire_split(manifest, data.split_file, data.ratios, data.split_seed);
    memesent::MemeClassifier model = memesent::MemeClassifier::load(checkpoint);

    const memesent::EvaluationReport report = memesent::evaluate(model, manifest, split.test);
    json report_json = memesent::report_to_json(report);
    report_json["run_name"] = name.empty() ? checkpoint : name;
    report_json["modality"] = memesent::comparison_modality(model.config().modality);
    write_json_file((fs::path(out_dir) / "report.json").string(), report_json);

    std::cout << std::fixed << std::setprecision(4) << "accuracy " << report.accuracy
              << ", precision " << report.weighted_precision << ", recall "
              << report.weighted_recall << ", f1 " << report.weighted_f1 << " (weighted)\n";
    const std::string failures = memesent::per_class_failure_report(report, recall_threshold);
    if (!failures.empty()) {
        std::cout << failures;
        write_text_file((fs::path(out_dir) / "failure_report.txt").string(), failures);
    }
    if (plot) {
        memesent::plot_confusion(report, (fs::path(out_dir) / "confusion.png").string());
        log_line("wrote " + (fs::path(out_dir) / "confusion.png").string());
    }
    log_line("wrote " + (fs::path(out_dir) / "report.json").string());
    return 0;
}

struct ExplainOptions {
    std::string checkpoint;
    std::string sample_id;
    std::string modality = "both";
    int samples = 1000;
    std::uint64_t seed = 0;
    int segments = 50;
    double kernel_width = 0.0;
    double ridge_lambda = 1.0;
    int top_k = 5;
    std::string image_baseline = "mean_color";
    std::string text_baseline = "remove_token";
    std::string segmenter = "grid";
    int target_class = -1;

    memesent::LimeConfig to_config() const {
        memesent::LimeConfig config;
        config.num_samples = samples;
        config.seed = seed;
        config.num_segments_target = segments;
        config.kernel_width = kernel_width;
        config.ridge_lambda = ridge_lambda;
        config.top_k = top_k;
        config.image_baseline = memesent::parse_image_baseline(image_baseline);
        config.text_baseline = memesent::parse_text_baseline(text_baseline);
        config.segmenter =
            segmenter == "slic" ? memesent::SegmenterKind::kSlic : memesent::SegmenterKind::kGrid;
        config.target_class = target_class;
        return config;
    }

    json to_json() const {
        return json{{"checkpoint", checkpoint},     {"sample_id", sample_id},
                    {"modality", modality},         {"samples", samples},
                    {"seed", seed},                 {"segments", segments},
                    {"kernel_width", kernel_width}, {"ridge_lambda", ridge_lambda},
                    {"top_k", top_k},               {"image_baseline", image_baseline},
                    {"text_baseline", text_baseline}, {"segmenter", segmenter},
                    {"target_class", target_class}};
    }
};

int run_explain(const DataOptions& data, const ExplainOptions& opts) {
    const std::string out_dir = ensure_out_dir(data.out);
    json options = data.to_json(false);
    options.update(opts.to_json());
    write_run_snapshot(out_dir, "explain", options);

    const memesent::DatasetManifest manifest = load_validated_manifest(data.manifest);
    const memesent::Sample& sample = manifest.by_id(opts.sample_id);
    memesent::MemeClassifier model = memesent::MemeClassifier::load(opts.checkpoint);
    const memesent::LimeConfig config = opts.to_config();

    if (opts.modality == "image" || opts.modality == "both") {
        const memesent::SampleExplanation result =
            memesent::explain_sample_image(model, sample, config);
        const std::string stem = (fs::path(out_dir) / (opts.sample_id + "_image")).string();
        const memesent::RenderedPaths paths =
            memesent::render_explanation(result.explanation, &result.image, stem, config.top_k);
        std::cout << "image explanation: target class "
                  << memesent::label_name(
                         memesent::label_from_index(result.explanation.target_class))
                  << ", r2 " << result.explanation.surrogate_r2 << ", "
                  << result.explanation.feature_space.count << " superpixels\n";
        log_line("wrote " + paths.overlay_png + " and " + paths.weights_json);
    }
    if (opts.modality == "text" || opts.modality == "both") {
        const memesent::SampleExplanation result =
            memesent::explain_sample_text(model, sample, config);
        const std::string stem = (fs::path(out_dir) / (opts.sample_id + "_text")).string();
        const memesent::RenderedPaths paths =
            memesent::render_explanation(result.explanation, nullptr, stem, config.top_k);
        std::cout << "text explanation: target class "
                  << memesent::label_name(
                         memesent::label_from_index(result.explanation.target_class))
                  << ", " << result.explanation.feature_space.count << " tokens\n";
        log_line("wrote " + paths.token_html + " and " + paths.weights_json);
    }
    return 0;
}

int run_compare(const std::string& out, const std::vector<std::string>& report_files,
                bool with_reference) {
    const std::string out_dir = ensure_out_dir(out);
    write_run_snapshot(out_dir, "compare",
                       json{{"out", out},
                            {"reports", report_files},
                            {"with_reference", with_reference}});

    std::vector<memesent::RunEntry> entries;
    if (with_reference) entries = memesent::reference_rows();
    for (const std::string& file : report_files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw memesent::IoError("cannot open report: " + file);
        json j;
        in >> j;
        const memesent::EvaluationReport report = memesent::report_from_json(j);
        const std::string name = j.value("run_name", file);
        const std::string modality = j.value("modality", "multimodal");
        entries.push_back(memesent::RunEntry::from_report(name, modality, report));
    }
    const memesent::Comparison comparison = memesent::compare_runs(entries);
    const std::string table = memesent::comparison_to_text(comparison);
    std::cout << table;
    write_text_file((fs::path(out_dir) / "comparison.txt").string(), table);
    write_json_file((fs::path(out_dir) / "comparison.json").string(),
                    memesent::comparison_to_json(comparison));
    log_line("wrote " + (fs::path(out_dir) / "comparison.json").string());
    return 0;
}

// Applies --config before parsing: each `key=value` line becomes a
// `--key=value` argument unless --key already appears on the command line,
// so explicit flags always win. Keys are option long names without dashes.
void merge_config_file_args(std::vector<std::string>& args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        }
    }
    if (config_path.empty()) return;
    for (const auto& [key, value] : memesent::read_keyvalue_file(config_path)) {
        const std::string flag = "--" + key;
        bool given = false;
        for (const std::string& arg : args) {
            if (arg == flag || arg.rfind(flag + "=", 0) == 0) {
                given = true;
                break;
            }
        }
        if (!given) args.push_back(flag + "=" + value);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multimodal meme sentiment pipeline"};
    app.require_subcommand(1);

    DataOptions stats_data, split_data, train_data, eval_data, explain_data;
    bool stats_plot = false, train_plot = false, eval_plot = false;

    CLI::App* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
    stats_data.attach(stats_cmd, false);
    stats_cmd->add_flag("--plot", stats_plot, "Emit the length-frequency histogram PNG");

    CLI::App* split_cmd = app.add_subcommand("split", "Stratified train/val/test split");
    split_data.attach(split_cmd, true);

    CLI::App* train_cmd = app.add_subcommand("train", "Train a classifier");
    ModelOptions model_opts;
    TrainOptions train_opts;
    train_data.attach(train_cmd, true);
    model_opts.attach(train_cmd);
    train_opts.attach(train_cmd);
    train_cmd->add_flag("--plot", train_plot, "Emit learning-curve PNG");

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test split");
    std::string eval_checkpoint, eval_name;
    double recall_threshold = 0.5;
    eval_data.attach(eval_cmd, true);
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint directory")->required();
    eval_cmd->add_option("--name", eval_name, "Run name used by compare");
    eval_cmd->add_option("--recall-threshold", recall_threshold,
                         "Per-class recall threshold for the failure report")->capture_default_str();
    eval_cmd->add_flag("--plot", eval_plot, "Emit confusion-matrix heatmap PNG");

    CLI::App* explain_cmd = app.add_subcommand("explain", "LIME explanation for one sample");
    ExplainOptions explain_opts;
    explain_data.attach(explain_cmd, false);
    explain_cmd->add_option("--checkpoint", explain_opts.checkpoint, "Checkpoint directory")
        ->required();
    explain_cmd->add_option("--sample-id", explain_opts.sample_id, "Manifest id to explain")
        ->required();
    explain_cmd->add_option("--modality", explain_opts.modality, "image | text | both")->capture_default_str()
        ->check(CLI::IsMember({"image", "text", "both"}));
    explain_cmd->add_option("--samples", explain_opts.samples, "Perturbation count")->capture_default_str();
    explain_cmd->add_option("--seed", explain_opts.seed, "")->capture_default_str();
    explain_cmd->add_option("--segments", explain_opts.segments, "Superpixel target count")->capture_default_str();
    explain_cmd->add_option("--kernel-width", explain_opts.kernel_width,
                            "Proximity kernel width (0 = 0.25*sqrt(d))")->capture_default_str();
    explain_cmd->add_option("--ridge-lambda", explain_opts.ridge_lambda, "")->capture_default_str();
    explain_cmd->add_option("--top-k", explain_opts.top_k, "Tinted superpixels per sign")->capture_default_str();
    explain_cmd->add_option("--baseline", explain_opts.image_baseline,
                            "mean_color | gray | zeros")->capture_default_str()
        ->check(CLI::IsMember({"mean_color", "gray", "zeros"}));
    explain_cmd->add_option("--text-baseline", explain_opts.text_baseline,
                            "remove_token | mask_token")->capture_default_str()
        ->check(CLI::IsMember({"remove_token", "mask_token"}));
    explain_cmd->add_option("--segmenter", explain_opts.segmenter, "grid | slic")->capture_default_str()
        ->check(CLI::IsMember({"grid", "slic"}));
    explain_cmd->add_option("--target-class", explain_opts.target_class,
                            "Class index to explain (-1 = model's prediction)")->capture_default_str();

    CLI::App* compare_cmd = app.add_subcommand("compare", "Compare evaluation reports");
    std::string compare_out;
    std::vector<std::string> compare_reports;
    bool with_reference = false;
    compare_cmd->add_option("--out", compare_out, "Output directory")->envname("MEMESENT_OUT");
    compare_cmd->add_option("--report", compare_reports, "report.json files")->required();
    compare_cmd->add_flag("--with-reference", with_reference,
                          "Include the published MemoSen benchmark rows");

    std::string config_file;
    for (CLI::App* cmd : {stats_cmd, split_cmd, train_cmd, eval_cmd, explain_cmd, compare_cmd}) {
        cmd->add_option("--config", config_file,
                        "Key-value config file (flags win over file values)");
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        merge_config_file_args(args);
        std::reverse(args.begin(), args.end());  // CLI11 wants reversed argv
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (stats_cmd->parsed()) return run_stats(stats_data, stats_plot);
        if (split_cmd->parsed()) return run_split(split_data);
        if (train_cmd->parsed()) return run_train(train_data, model_opts, train_opts, train_plot);
        if (eval_cmd->parsed()) {
            return run_evaluate(eval_data, eval_checkpoint, eval_name, recall_threshold, eval_plot);
        }
        if (explain_cmd->parsed()) return run_explain(explain_data, explain_opts);
        if (compare_cmd->parsed()) return run_compare(compare_out, compare_reports, with_reference);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
