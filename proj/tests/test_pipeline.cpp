#include <doctest.h>

#include <filesystem>
#include <thread>

#include "memesent/evaluation.hpp"
#include "memesent/explain_render.hpp"
#include "memesent/pipeline.hpp"
#include "memesent/synthetic.hpp"
#include "memesent/training.hpp"
#include "test_util.hpp"

using namespace memesent;
using test_util::TempDir;

namespace {

ModelConfig small_config(Modality modality) {
    ModelConfig config;
    config.modality = modality;
    config.text.embedding_dim = 12;
    config.text.hidden_dim = 8;
    config.text.vocab_size = 64;
    config.preprocess.target_width = config.preprocess.target_height = 64;
    config.visual.input_size = 64;
    config.init_seed = 21;
    return config;
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("synthetic generator writes a decodable, balanced dataset") {
    TempDir dir("synth");
    SyntheticConfig config;
    config.per_class = 4;
    config.image_size = 64;
    config.seed = 9;
    const std::string manifest_path = generate_bimodal_dataset(dir.path().string(), config);

    const std::vector<Sample> raw = read_manifest_file(manifest_path);
    REQUIRE(raw.size() == 12);
    const ValidationOutcome outcome = validate_manifest(raw, manifest_path);
    CHECK(outcome.rejected.empty());
    const DatasetStats stats = compute_stats(outcome.manifest);
    CHECK(stats.class_counts == std::array<std::size_t, 3>{4, 4, 4});

    // keyword appears exactly in the positive captions
    for (const Sample& s : outcome.manifest.samples) {
        const bool has_keyword = s.caption.find(kSyntheticKeyword) != std::string::npos;
        CHECK(has_keyword == (s.label == Label::kPositive));
    }

    // determinism of generation
    TempDir dir2("synth2");
    const std::string manifest2 = generate_bimodal_dataset(dir2.path().string(), config);
    const std::vector<Sample> raw2 = read_manifest_file(manifest2);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        CHECK(raw[i].caption == raw2[i].caption);
        CHECK(raw[i].label == raw2[i].label);
    }
}

TEST_CASE("fusion model trains, evaluates, and explains on synthetic data") {
    TempDir dir("pipe");
    SyntheticConfig sconfig;
    sconfig.per_class = 10;
    sconfig.image_size = 64;
    sconfig.seed = 3;
    const std::string manifest_path = generate_bimodal_dataset(dir.path().string(), sconfig);
    const ValidationOutcome outcome =
        validate_manifest(read_manifest_file(manifest_path), manifest_path);
    const SplitResult split = stratified_split(outcome.manifest, SplitRatios{0.7, 0.1, 0.2}, 7);

    MemeClassifier model =
        MemeClassifier::build(small_config(Modality::kFusion), outcome.manifest, split.train);
    TrainConfig tconfig;
    tconfig.batch_size = 8;
    tconfig.learning_rate = 0.01;
    tconfig.weight_decay = 0.0;
    tconfig.max_epochs = 5;
    tconfig.early_stop_patience = 5;
    tconfig.seed = 2;
    const TrainResult result = train(model, outcome.manifest, split, tconfig);
    CHECK(result.trace.epochs() >= 1);

    const EvaluationReport report = evaluate(model, outcome.manifest, split.test);
    CHECK(report.confusion.total() == static_cast<std::int64_t>(split.test.size()));

    // checkpoint round trip through disk keeps evaluation identical
    const std::string ckpt = dir.file("ckpt");
    model.save(ckpt);
    MemeClassifier loaded = MemeClassifier::load(ckpt);
    const EvaluationReport report2 = evaluate(loaded, outcome.manifest, split.test);
    CHECK(report.confusion.counts == report2.confusion.counts);

    // LIME against the real model, both modalities, deterministic
    const Sample& target = outcome.manifest.by_id(split.test.front());
    LimeConfig lconfig;
    lconfig.num_samples = 60;
    lconfig.num_segments_target = 16;
    lconfig.seed = 11;
    const SampleExplanation image_expl = explain_sample_image(loaded, target, lconfig);
    CHECK(image_expl.explanation.feature_space.count >= 1);
    CHECK(image_expl.explanation.masks_used == 60);
    const SampleExplanation image_expl2 = explain_sample_image(loaded, target, lconfig);
    CHECK(image_expl.explanation == image_expl2.explanation);

    LimeConfig text_config;
    text_config.num_samples = 40;
    text_config.seed = 12;
    const SampleExplanation text_expl = explain_sample_text(loaded, target, text_config);
    CHECK(text_expl.explanation.feature_space.kind == FeatureSpace::Kind::kTokens);
    CHECK(static_cast<int>(text_expl.explanation.class_weights.size()) == 3);

    // renders land on disk
    const RenderedPaths paths =
        render_explanation(image_expl.explanation, &image_expl.image, dir.file("img_expl"));
    CHECK(std::filesystem::file_size(paths.overlay_png) > 0);
    const RenderedPaths tpaths =
        render_explanation(text_expl.explanation, nullptr, dir.file("txt_expl"));
    CHECK(std::filesystem::file_size(tpaths.token_html) > 0);
}

TEST_CASE("parallel explanations through the serialized predict interface") {
    TempDir dir("parallel");
    SyntheticConfig sconfig;
    sconfig.per_class = 3;
    sconfig.image_size = 64;
    const std::string manifest_path = generate_bimodal_dataset(dir.path().string(), sconfig);
    const ValidationOutcome outcome =
        validate_manifest(read_manifest_file(manifest_path), manifest_path);
    std::vector<std::string> ids;
    for (const Sample& s : outcome.manifest.samples) ids.push_back(s.id);
    MemeClassifier model =
        MemeClassifier::build(small_config(Modality::kFusion), outcome.manifest, ids);

    LimeConfig config;
    config.num_samples = 30;
    config.num_segments_target = 9;
    config.seed = 17;
    const Explanation solo_a =
        explain_sample_image(model, outcome.manifest.samples[0], config).explanation;
    const Explanation solo_b =
        explain_sample_image(model, outcome.manifest.samples[1], config).explanation;

    Explanation threaded_a, threaded_b;
    std::thread ta([&] {
        threaded_a = explain_sample_image(model, outcome.manifest.samples[0], config).explanation;
    });
    std::thread tb([&] {
        threaded_b = explain_sample_image(model, outcome.manifest.samples[1], config).explanation;
    });
    ta.join();
    tb.join();
    CHECK(threaded_a == solo_a);
    CHECK(threaded_b == solo_b);
}

TEST_CASE("modality guards on explanation entry points") {
    TempDir dir("guards");
    SyntheticConfig sconfig;
    sconfig.per_class = 2;
    sconfig.image_size = 64;
    const std::string manifest_path = generate_bimodal_dataset(dir.path().string(), sconfig);
    const ValidationOutcome outcome =
        validate_manifest(read_manifest_file(manifest_path), manifest_path);
    std::vector<std::string> ids;
    for (const Sample& s : outcome.manifest.samples) ids.push_back(s.id);

    MemeClassifier text_model =
        MemeClassifier::build(small_config(Modality::kText), outcome.manifest, ids);
    CHECK_THROWS_AS(explain_sample_image(text_model, outcome.manifest.samples[0], LimeConfig{}),
                    ConfigError);

    MemeClassifier image_model =
        MemeClassifier::build(small_config(Modality::kImage), outcome.manifest, ids);
    CHECK_THROWS_AS(explain_sample_text(image_model, outcome.manifest.samples[0], LimeConfig{}),
                    ConfigError);
}

} // TEST_SUITE
