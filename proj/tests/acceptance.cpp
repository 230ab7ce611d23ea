// Acceptance suite. Each criterion prints one PASS/FAIL line; the binary
// exits nonzero if any criterion fails. Thresholds are fixed here, in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "memesent/dataset.hpp"
#include "memesent/evaluation.hpp"
#include "memesent/explain.hpp"
#include "memesent/optim.hpp"
#include "memesent/pipeline.hpp"
#include "memesent/synthetic.hpp"
#include "memesent/training.hpp"

using namespace memesent;

namespace {

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%d] %-28s %s  (%s)\n", index, name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

DatasetManifest manifest_with_class_counts(const std::vector<std::size_t>& counts) {
    DatasetManifest m;
    std::size_t n = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i) {
            m.samples.push_back({"s" + std::to_string(n++), "x.png", "cap",
                                 label_from_index(static_cast<int>(c))});
        }
    }
    return m;
}

std::array<std::size_t, kNumClasses> split_counts(const DatasetManifest& m,
                                                  const std::vector<std::string>& ids) {
    std::map<std::string, Label> index;
    for (const Sample& s : m.samples) index[s.id] = s.label;
    std::array<std::size_t, kNumClasses> counts = {0, 0, 0};
    for (const std::string& id : ids) counts[static_cast<std::size_t>(label_index(index.at(id)))]++;
    return counts;
}

// --------------------------------------------------------------------------
// 1. Split reproduction
// --------------------------------------------------------------------------
void criterion_split_reproduction() {
    Timer timer;
    const DatasetManifest m = manifest_with_class_counts({291, 1349, 2728});
    const SplitResult split = stratified_split(m, SplitRatios{0.7, 0.1, 0.2}, 1);
    const auto train = split_counts(m, split.train);
    const auto val = split_counts(m, split.val);
    const auto test = split_counts(m, split.test);
    const bool cells = train == std::array<std::size_t, 3>{204, 944, 1909} &&
                       val == std::array<std::size_t, 3>{29, 135, 273} &&
                       test == std::array<std::size_t, 3>{58, 270, 546};
    const double elapsed = timer.seconds();
    report(1, "split-reproduction", cells && elapsed < 1.0,
           std::string(cells ? "all 9 cells exact" : "cell mismatch") + ", " + fmt(elapsed) + " s");
}

// --------------------------------------------------------------------------
// 2. Weighted-metric identity
// --------------------------------------------------------------------------
void criterion_weighted_recall_identity() {
    Rng rng(2024);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        ConfusionMatrix cm;
        for (auto& row : cm.counts)
            for (auto& v : row) v = static_cast<std::int64_t>(rng.below(500));
        cm.counts[static_cast<std::size_t>(rng.below(3))][static_cast<std::size_t>(rng.below(3))]++;
        const EvaluationReport r = compute_report(cm);
        worst = std::max(worst, std::abs(r.weighted_recall - r.accuracy));
    }
    report(2, "weighted-recall=accuracy", worst <= 1e-12,
           "max |recall-accuracy| = " + fmt(worst) + " over 100 matrices");
}

// --------------------------------------------------------------------------
// 3. Metric oracle equivalence
// --------------------------------------------------------------------------
void criterion_metric_oracle() {
    Rng rng(515);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 40 + rng.below(300);
        std::vector<int> truth, pred;
        for (std::size_t i = 0; i < n; ++i) {
            truth.push_back(static_cast<int>(rng.below(3)));
            pred.push_back(static_cast<int>(rng.below(3)));
        }
        const EvaluationReport r = compute_report(ConfusionMatrix::from_predictions(truth, pred));

        // independent reference: straight from the prediction lists
        double acc = 0, wp = 0, wr = 0, wf = 0;
        for (std::size_t i = 0; i < n; ++i) acc += truth[i] == pred[i] ? 1.0 : 0.0;
        acc /= static_cast<double>(n);
        for (int c = 0; c < 3; ++c) {
            double tp = 0, fp = 0, fn = 0, support = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (truth[i] == c) {
                    support += 1;
                    (pred[i] == c ? tp : fn) += 1;
                } else if (pred[i] == c) {
                    fp += 1;
                }
            }
            const double precision = tp + fp == 0 ? 0.0 : tp / (tp + fp);
            const double recall = tp + fn == 0 ? 0.0 : tp / (tp + fn);
            const double f1 =
                precision + recall == 0 ? 0.0 : 2 * precision * recall / (precision + recall);
            const double w = support / static_cast<double>(n);
            wp += w * precision;
            wr += w * recall;
            wf += w * f1;
        }
        worst = std::max({worst, std::abs(r.accuracy - acc), std::abs(r.weighted_precision - wp),
                          std::abs(r.weighted_recall - wr), std::abs(r.weighted_f1 - wf)});
    }
    report(3, "metric-oracle-equivalence", worst <= 1e-12,
           "max deviation = " + fmt(worst) + " over 100 prediction sets");
}

// --------------------------------------------------------------------------
// 4. LIME surrogate recovery
// --------------------------------------------------------------------------
void criterion_surrogate_recovery() {
    Timer timer;
    LimeConfig config;
    config.ridge_lambda = 1e-8;
    double sum_b1 = 0, sum_b2 = 0;
    const std::vector<std::uint64_t> seeds = {11, 22, 33, 44, 55};
    for (std::uint64_t seed : seeds) {
        const auto masks = sample_masks(2, 1000, seed);
        std::vector<double> f;
        f.reserve(masks.size());
        for (const Mask& m : masks) f.push_back(2.0 * m[0] + 3.0 * m[1] + 1.0);
        const SurrogateFit fit = fit_surrogate(masks, f, mask_cosine_distances(masks), config);
        sum_b1 += fit.feature_weights[0];
        sum_b2 += fit.feature_weights[1];
    }
    const double b1 = sum_b1 / static_cast<double>(seeds.size());
    const double b2 = sum_b2 / static_cast<double>(seeds.size());
    const double err = std::max(std::abs(b1 - 2.0), std::abs(b2 - 3.0));
    const double elapsed = timer.seconds();
    report(4, "lime-surrogate-recovery", err < 1e-3 && elapsed < 5.0,
           "avg coefficients (" + fmt(b1) + ", " + fmt(b2) + "), err " + fmt(err) + ", " +
               fmt(elapsed) + " s");
}

// --------------------------------------------------------------------------
// 5. LIME null calibration
// --------------------------------------------------------------------------
void criterion_null_calibration() {
    // (a) black box independent of the image: every superpixel weight must
    // sit inside the 3-sigma band of a permutation null.
    ImageU8 img(64, 64);
    Rng pix(7);
    for (auto& v : img.pixels) v = static_cast<std::uint8_t>(pix.below(256));
    const ImagePredictFn constant = [](const std::vector<ImageU8>& batch) {
        return std::vector<std::vector<double>>(batch.size(), {0.25, 0.45, 0.30});
    };
    LimeConfig config;
    config.num_samples = 200;
    config.num_segments_target = 16;
    config.seed = 3;
    const Explanation e = explain_instance_image(img, constant, config);

    // permutation null: shuffle the prediction column against the masks
    const auto masks = sample_masks(e.feature_space.count, config.num_samples, config.seed);
    const auto distances = mask_cosine_distances(masks);
    std::vector<double> column(masks.size(), 0.45);
    Rng perm(91);
    const int permutations = 50;
    std::vector<double> sq_sum(static_cast<std::size_t>(e.feature_space.count), 0.0);
    for (int p = 0; p < permutations; ++p) {
        perm.shuffle(column);  // constant column: permutations are trivially constant too
        const SurrogateFit fit = fit_surrogate(masks, column, distances, config);
        for (std::size_t j = 0; j < sq_sum.size(); ++j) {
            sq_sum[j] += fit.feature_weights[j] * fit.feature_weights[j];
        }
    }
    bool within = true;
    double worst = 0;
    for (std::size_t j = 0; j < sq_sum.size(); ++j) {
        const double sigma = std::sqrt(sq_sum[j] / permutations);
        const double w = std::abs(e.feature_weights[j]);
        worst = std::max(worst, w);
        if (w > 3.0 * sigma + 1e-9) within = false;
    }

    // (b) a token-indicator black box ranks the indicator token strictly first
    const TextPredictFn indicator = [](const std::vector<std::string>& captions) {
        std::vector<std::vector<double>> rows;
        for (const std::string& c : captions) {
            const bool hit = c.find("jhakas") != std::string::npos;
            rows.push_back(hit ? std::vector<double>{0.05, 0.90, 0.05}
                               : std::vector<double>{0.40, 0.10, 0.50});
        }
        return rows;
    };
    LimeConfig text_config;
    text_config.num_samples = 300;
    text_config.seed = 8;
    const Explanation te =
        explain_instance_text("ei meme ta jhakas hoyeche bhai", indicator, text_config);
    std::size_t indicator_index = 0;
    for (std::size_t i = 0; i < te.feature_space.tokens.size(); ++i) {
        if (te.feature_space.tokens[i] == "jhakas") indicator_index = i;
    }
    bool strictly_first = te.feature_weights[indicator_index] > 0;
    for (std::size_t i = 0; i < te.feature_weights.size(); ++i) {
        if (i != indicator_index &&
            te.feature_weights[indicator_index] <= te.feature_weights[i]) {
            strictly_first = false;
        }
    }
    report(5, "lime-null-calibration", within && strictly_first,
           std::string("null |w|max ") + fmt(worst) + (within ? " in 3-sigma band" : " OUTSIDE") +
               "; indicator token " + (strictly_first ? "ranked first" : "NOT first"));
}

// --------------------------------------------------------------------------
// 6. Synthetic end-to-end: fusion beats both unimodal models
// --------------------------------------------------------------------------
void criterion_synthetic_end_to_end() {
    Timer timer;
    const std::string dir =
        (std::filesystem::temp_directory_path() / "memesent_acceptance_synth").string();
    std::filesystem::remove_all(dir);
    SyntheticConfig sconfig;
    sconfig.per_class = 100;
    sconfig.image_size = 64;
    sconfig.seed = 42;
    const std::string manifest_path = generate_bimodal_dataset(dir, sconfig);
    const DatasetManifest manifest =
        validate_manifest(read_manifest_file(manifest_path), manifest_path).manifest;
    const SplitResult split = stratified_split(manifest, SplitRatios{0.7, 0.1, 0.2}, 7);

    const auto run_variant = [&](Modality modality) {
        ModelConfig mconfig;
        mconfig.modality = modality;
        mconfig.text.embedding_dim = 16;
        mconfig.text.hidden_dim = 12;
        mconfig.text.vocab_size = 256;
        mconfig.preprocess.target_width = mconfig.preprocess.target_height = 64;
        mconfig.visual.input_size = 64;
        mconfig.init_seed = 5;
        MemeClassifier model = MemeClassifier::build(mconfig, manifest, split.train);
        TrainConfig tconfig;
        tconfig.batch_size = 32;
        tconfig.learning_rate = 0.01;
        tconfig.weight_decay = 0.0;
        tconfig.max_epochs = 15;
        tconfig.early_stop_patience = 15;
        tconfig.seed = 9;
        train(model, manifest, split, tconfig);
        return evaluate(model, manifest, split.test).weighted_f1;
    };

    const double fusion_f1 = run_variant(Modality::kFusion);
    const double image_f1 = run_variant(Modality::kImage);
    const double text_f1 = run_variant(Modality::kText);
    const double elapsed = timer.seconds();
    const bool pass = fusion_f1 >= 0.90 && image_f1 <= 0.75 && text_f1 <= 0.75 && elapsed < 300.0;
    report(6, "synthetic-end-to-end", pass,
           "weighted F1: fusion " + fmt(fusion_f1) + ", image " + fmt(image_f1) + ", text " +
               fmt(text_f1) + ", " + fmt(elapsed) + " s");
    std::filesystem::remove_all(dir);
}

// --------------------------------------------------------------------------
// 7. Optimizer reference check
// --------------------------------------------------------------------------
void criterion_optimizer_reference() {
    nn::Parameter p("p", nn::Tensor({1, 2}, {0.3, -0.7}));
    nn::AdamWConfig config;  // lr 1e-5, betas (0.9, 0.9999), eps 1e-9, decay 0.08
    nn::AdamW opt({&p}, config);

    double e0 = 0.3, e1 = -0.7;
    double m0 = 0, v0 = 0, m1 = 0, v1 = 0;
    double worst = 0;
    for (int t = 1; t <= 5; ++t) {
        opt.zero_grad();
        p.grad.data[0] = e0;        // gradient of 0.5*p0^2
        p.grad.data[1] = 2.0 * e1;  // gradient of p1^2
        opt.step();

        // direct formula evaluation of the decoupled-weight-decay update
        const auto reference = [&](double param, double grad, double& m, double& v) {
            m = config.beta1 * m + (1 - config.beta1) * grad;
            v = config.beta2 * v + (1 - config.beta2) * grad * grad;
            const double m_hat = m / (1 - std::pow(config.beta1, t));
            const double v_hat = v / (1 - std::pow(config.beta2, t));
            return param - config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon) -
                   config.weight_decay * param;
        };
        e0 = reference(e0, e0, m0, v0);
        e1 = reference(e1, 2.0 * e1, m1, v1);
        worst = std::max({worst, std::abs(p.value.data[0] - e0), std::abs(p.value.data[1] - e1)});
    }
    report(7, "optimizer-reference", worst <= 1e-8,
           "max |optimizer - formula| = " + fmt(worst) + " over 5 steps");
}

// --------------------------------------------------------------------------
// 8. Determinism suite
// --------------------------------------------------------------------------
void criterion_determinism() {
    // split assignment
    const DatasetManifest m = manifest_with_class_counts({30, 40, 50});
    const SplitResult s1 = stratified_split(m, SplitRatios{0.7, 0.1, 0.2}, 77);
    const SplitResult s2 = stratified_split(m, SplitRatios{0.7, 0.1, 0.2}, 77);
    const bool split_same = s1.train == s2.train && s1.val == s2.val && s1.test == s2.test;

    // training trace (CPU)
    const std::string dir =
        (std::filesystem::temp_directory_path() / "memesent_acceptance_det").string();
    std::filesystem::remove_all(dir);
    SyntheticConfig sconfig;
    sconfig.per_class = 8;
    sconfig.image_size = 64;
    sconfig.seed = 6;
    const std::string manifest_path = generate_bimodal_dataset(dir, sconfig);
    const DatasetManifest synth =
        validate_manifest(read_manifest_file(manifest_path), manifest_path).manifest;
    const SplitResult split = stratified_split(synth, SplitRatios{0.7, 0.1, 0.2}, 2);
    ModelConfig mconfig;
    mconfig.modality = Modality::kFusion;
    mconfig.text.embedding_dim = 8;
    mconfig.text.hidden_dim = 6;
    mconfig.preprocess.target_width = mconfig.preprocess.target_height = 64;
    mconfig.visual.input_size = 64;
    mconfig.init_seed = 4;
    TrainConfig tconfig;
    tconfig.batch_size = 8;
    tconfig.learning_rate = 0.005;
    tconfig.weight_decay = 0.0;
    tconfig.max_epochs = 3;
    tconfig.seed = 13;
    MemeClassifier model_a = MemeClassifier::build(mconfig, synth, split.train);
    const TrainingTrace trace_a = train(model_a, synth, split, tconfig).trace;
    MemeClassifier model_b = MemeClassifier::build(mconfig, synth, split.train);
    const TrainingTrace trace_b = train(model_b, synth, split, tconfig).trace;
    const bool trace_same =
        trace_a.train_loss == trace_b.train_loss && trace_a.val_loss == trace_b.val_loss &&
        trace_a.train_accuracy == trace_b.train_accuracy &&
        trace_a.val_accuracy == trace_b.val_accuracy && trace_a.best_epoch == trace_b.best_epoch;

    // explanation bytes
    LimeConfig lconfig;
    lconfig.num_samples = 40;
    lconfig.num_segments_target = 9;
    lconfig.seed = 21;
    const Sample& target = synth.by_id(split.test.front());
    const std::string bytes_a =
        explanation_to_json(explain_sample_image(model_a, target, lconfig).explanation).dump();
    const std::string bytes_b =
        explanation_to_json(explain_sample_image(model_b, target, lconfig).explanation).dump();
    const bool explanation_same = bytes_a == bytes_b;

    report(8, "determinism-suite", split_same && trace_same && explanation_same,
           std::string("split ") + (split_same ? "ok" : "DIFFERS") + ", trace " +
               (trace_same ? "ok" : "DIFFERS") + ", explanation bytes " +
               (explanation_same ? "ok" : "DIFFER"));
    std::filesystem::remove_all(dir);
}

// --------------------------------------------------------------------------
// 9. Desk-scale substitution is documented
// --------------------------------------------------------------------------
void criterion_reference_documented() {
    // The published MemoSen scores (0.71 weighted F1 headline) depend on the
    // dataset and large pretrained weights, which this repository does not
    // ship. Criteria 2-6 stand in at desk scale; the published rows must be
    // available for users who bring the data.
    const std::vector<RunEntry> rows = reference_rows();
    bool ok = rows.size() == 7;
    if (ok) {
        const RunEntry& headline = rows.back();
        ok = headline.name == "BanglishBERT + ResNet50" && headline.f1 == 0.71 &&
             headline.accuracy == 0.74 && headline.reference;
    }
    for (const RunEntry& r : rows) ok = ok && r.reference;
    report(9, "reference-rows-documented", ok,
           ok ? "7 published rows available to compare --with-reference; desk-scale "
                "criteria 2-6 substitute for full-scale reproduction"
              : "reference table mismatch");
}

} // namespace

int main() {
    std::printf("memesent acceptance suite\n");
    criterion_split_reproduction();
    criterion_weighted_recall_identity();
    criterion_metric_oracle();
    criterion_surrogate_recovery();
    criterion_null_calibration();
    criterion_synthetic_end_to_end();
    criterion_optimizer_reference();
    criterion_determinism();
    criterion_reference_documented();
    std::printf("%s: %d/9 criteria passed\n", failures == 0 ? "SUCCESS" : "FAILURE", 9 - failures);
    return failures == 0 ? 0 : 1;
}
