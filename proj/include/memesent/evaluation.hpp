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

// Weighted evaluation: the dataset is imbalanced, so headline scores are
// support-weighted. Per-class F1 with 0/0 defined as 0 (a class can end up
// with zero predicted positives). Support-weighted recall equals accuracy
// for single-label multiclass; the tests pin that identity.

#include <array>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memesent/dataset.hpp"
#include "memesent/errors.hpp"
#include "memesent/labels.hpp"
#include "memesent/model.hpp"
#include "memesent/plot.hpp"

namespace memesent {

struct ConfusionMatrix {
    // counts[true][predicted], class order (neutral, positive, negative)
    std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

    static ConfusionMatrix from_predictions(const std::vector<int>& truth,
                                            const std::vector<int>& predicted) {
        if (truth.size() != predicted.size()) {
            throw ContractError("truth/prediction length mismatch");
        }
        ConfusionMatrix cm;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const int t = truth[i], p = predicted[i];
            if (t < 0 || t >= static_cast<int>(kNumClasses) || p < 0 ||
                p >= static_cast<int>(kNumClasses)) {
                throw ValidationError("label outside the 3 classes at index " + std::to_string(i));
            }
            cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]++;
        }
        return cm;
    }

    std::int64_t row_sum(std::size_t i) const {
        std::int64_t s = 0;
        for (std::int64_t v : counts[i]) s += v;
        return s;
    }

    std::int64_t col_sum(std::size_t j) const {
        std::int64_t s = 0;
        for (const auto& row : counts) s += row[j];
        return s;
    }

    std::int64_t total() const {
        std::int64_t s = 0;
        for (std::size_t i = 0; i < kNumClasses; ++i) s += row_sum(i);
        return s;
    }
};

struct PerClassMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::int64_t support = 0;
};

struct EvaluationReport {
    double accuracy = 0;
    double weighted_precision = 0;
    double weighted_recall = 0;
    double weighted_f1 = 0;
    std::array<PerClassMetrics, kNumClasses> per_class;
    ConfusionMatrix confusion;
};

/// Metrics from a confusion matrix; weights are support fractions.
inline EvaluationReport compute_report(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) throw ContractError("empty confusion matrix");

    EvaluationReport report;
    report.confusion = cm;
    std::int64_t diag = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const std::int64_t tp = cm.counts[c][c];
        const std::int64_t support = cm.row_sum(c);
        const std::int64_t predicted = cm.col_sum(c);
        diag += tp;
        PerClassMetrics& m = report.per_class[c];
        m.support = support;
        m.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
        m.recall = support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(support);
        m.f1 = (m.precision + m.recall) == 0.0
                   ? 0.0
                   : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        const double weight = static_cast<double>(support) / static_cast<double>(total);
        report.weighted_precision += weight * m.precision;
        report.weighted_recall += weight * m.recall;
        report.weighted_f1 += weight * m.f1;
    }
    report.accuracy = static_cast<double>(diag) / static_cast<double>(total);
    return report;
}

/// Runs the checkpoint over the test ids and scores it.
inline EvaluationReport evaluate(MemeClassifier& model, const DatasetManifest& manifest,
                                 const std::vector<std::string>& test_ids, int batch_size = 32) {
    if (test_ids.empty()) throw ConfigError("test split is empty");
    std::map<std::string, const Sample*> index;
    for (const Sample& s : manifest.samples) index[s.id] = &s;

    std::vector<int> truth, predicted;
    truth.reserve(test_ids.size());
    predicted.reserve(test_ids.size());
    std::vector<EncodedSample> batch;
    const auto flush = [&] {
        if (batch.empty()) return;
        for (const auto& probs : model.predict_probs(batch)) {
            int arg = 0;
            for (std::size_t j = 1; j < probs.size(); ++j) {
                if (probs[j] > probs[static_cast<std::size_t>(arg)]) arg = static_cast<int>(j);
            }
            predicted.push_back(arg);
        }
        batch.clear();
    };
    for (const std::string& id : test_ids) {
        auto it = index.find(id);
        if (it == index.end()) throw ValidationError("test id not in manifest: " + id);
        truth.push_back(label_index(it->second->label));
        batch.push_back(model.encode_sample(*it->second));
        if (static_cast<int>(batch.size()) >= batch_size) flush();
    }
    flush();
    return compute_report(ConfusionMatrix::from_predictions(truth, predicted));
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json per_class;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const PerClassMetrics& m = report.per_class[c];
        per_class[std::string(label_name(static_cast<Label>(c)))] = {
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"support", m.support},
        };
    }
    nlohmann::json confusion = nlohmann::json::array();
    for (const auto& row : report.confusion.counts) {
        confusion.push_back(std::vector<std::int64_t>(row.begin(), row.end()));
    }
    return nlohmann::json{
        {"report_version", 1},
        {"class_order", {"neutral", "positive", "negative"}},
        {"accuracy", report.accuracy},
        {"weighted_precision", report.weighted_precision},
        {"weighted_recall", report.weighted_recall},
        {"weighted_f1", report.weighted_f1},
        {"per_class", per_class},
        {"confusion", confusion},
    };
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
    EvaluationReport report;
    report.accuracy = j.at("accuracy").get<double>();
    report.weighted_precision = j.at("weighted_precision").get<double>();
    report.weighted_recall = j.at("weighted_recall").get<double>();
    report.weighted_f1 = j.at("weighted_f1").get<double>();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& m = j.at("per_class").at(std::string(label_name(static_cast<Label>(c))));
        report.per_class[c].precision = m.at("precision").get<double>();
        report.per_class[c].recall = m.at("recall").get<double>();
        report.per_class[c].f1 = m.at("f1").get<double>();
        report.per_class[c].support = m.at("support").get<std::int64_t>();
    }
    const auto& confusion = j.at("confusion");
    for (std::size_t i = 0; i < kNumClasses; ++i)
        for (std::size_t k = 0; k < kNumClasses; ++k)
            report.confusion.counts[i][k] = confusion.at(i).at(k).get<std::int64_t>();
    return report;
}

inline void plot_confusion(const EvaluationReport& report, const std::string& path,
                           const std::string& title = "CONFUSION MATRIX") {
    std::vector<std::vector<std::int64_t>> m;
    for (const auto& row : report.confusion.counts) {
        m.push_back(std::vector<std::int64_t>(row.begin(), row.end()));
    }
    plot::plot_heatmap(path, title, m, {"NEU", "POS", "NEG"});
}

// ---------------------------------------------------------------------------
// Run comparison
// ---------------------------------------------------------------------------

struct RunEntry {
    std::string name;
    std::string modality;  // "visual", "textual" or "multimodal"
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    bool reference = false;  // published number, not produced by this run

    static RunEntry from_report(const std::string& name, const std::string& modality,
                                const EvaluationReport& report) {
        return RunEntry{name,          modality,
                        report.accuracy, report.weighted_precision,
                        report.weighted_recall, report.weighted_f1,
                        false};
    }
};

inline std::string comparison_modality(Modality m) {
    switch (m) {
        case Modality::kImage: return "visual";
        case Modality::kText: return "textual";
        case Modality::kFusion: return "multimodal";
    }
    return "?";
}

/// Published MemoSen benchmark scores, display-only reference rows for
/// `compare --with-reference`.
inline std::vector<RunEntry> reference_rows() {
    return {
        {"ResNet50", "visual", 0.72, 0.67, 0.72, 0.69, true},
        {"MobileNet v3 (Large)", "visual", 0.71, 0.66, 0.71, 0.67, true},
        {"DenseNet161", "visual", 0.73, 0.69, 0.73, 0.70, true},
        {"BiLSTM", "textual", 0.62, 0.39, 0.62, 0.48, true},
        {"BanglishBERT", "textual", 0.66, 0.66, 0.66, 0.66, true},
        {"BanglishBERT + DenseNet161", "multimodal", 0.73, 0.68, 0.73, 0.70, true},
        {"BanglishBERT + ResNet50", "multimodal", 0.74, 0.69, 0.74, 0.71, true},
    };
}

struct Comparison {
    std::vector<RunEntry> rows;  // grouped by modality
    std::size_t best_index = 0;  // highest F1, ties by accuracy then name
};

inline Comparison compare_runs(const std::vector<RunEntry>& entries) {
    if (entries.empty()) throw ContractError("compare_runs wants at least one run");
    std::map<std::string, int> seen;
    for (const RunEntry& e : entries) {
        if (++seen[e.name] > 1) throw ValidationError("duplicate run name: '" + e.name + "'");
    }
    Comparison out;
    for (const char* group : {"visual", "textual", "multimodal"}) {
        for (const RunEntry& e : entries) {
            if (e.modality == group) out.rows.push_back(e);
        }
    }
    for (const RunEntry& e : entries) {  // unknown modality strings go last
        if (e.modality != "visual" && e.modality != "textual" && e.modality != "multimodal") {
            out.rows.push_back(e);
        }
    }
    for (std::size_t i = 1; i < out.rows.size(); ++i) {
        const RunEntry& cur = out.rows[i];
        const RunEntry& best = out.rows[out.best_index];
        const bool wins = cur.f1 > best.f1 ||
                          (cur.f1 == best.f1 && cur.accuracy > best.accuracy) ||
                          (cur.f1 == best.f1 && cur.accuracy == best.accuracy &&
                           cur.name < best.name);
        if (wins) out.best_index = i;
    }
    return out;
}

inline std::string comparison_to_text(const Comparison& comparison) {
    std::ostringstream out;
    out << std::left << std::setw(12) << "MODALITY" << std::setw(30) << "MODEL"
        << std::right << std::setw(10) << "ACCURACY" << std::setw(11) << "PRECISION"
        << std::setw(8) << "RECALL" << std::setw(10) << "F1" << "\n";
    out << std::string(81, '-') << "\n";
    out << std::fixed << std::setprecision(4);
    for (std::size_t i = 0; i < comparison.rows.size(); ++i) {
        const RunEntry& r = comparison.rows[i];
        std::string name = r.name;
        if (r.reference) name += " [ref]";
        if (i == comparison.best_index) name += " *";
        out << std::left << std::setw(12) << r.modality << std::setw(30) << name
            << std::right << std::setw(10) << r.accuracy << std::setw(11) << r.precision
            << std::setw(8) << r.recall << std::setw(10) << r.f1 << "\n";
    }
    out << "* best row (F1, ties by accuracy then name)\n";
    return out.str();
}

inline nlohmann::json comparison_to_json(const Comparison& comparison) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < comparison.rows.size(); ++i) {
        const RunEntry& r = comparison.rows[i];
        rows.push_back({
            {"name", r.name},
            {"modality", r.modality},
            {"accuracy", r.accuracy},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1},
            {"reference", r.reference},
            {"best", i == comparison.best_index},
        });
    }
    return nlohmann::json{{"rows", rows}};
}

// ---------------------------------------------------------------------------
// Failure diagnostics
// ---------------------------------------------------------------------------

/// Flags classes with zero correct predictions and classes under the recall
/// threshold. An empty string means nothing to report.
inline std::string per_class_failure_report(const EvaluationReport& report,
                                            double recall_threshold = 0.5) {
    std::ostringstream out;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const PerClassMetrics& m = report.per_class[c];
        const std::string name(label_name(static_cast<Label>(c)));
        if (m.support > 0 && report.confusion.counts[c][c] == 0) {
            out << "class '" << name << "': no correct predictions ("
                << m.support << " samples)\n";
        } else if (m.support > 0 && m.recall < recall_threshold) {
            out << "class '" << name << "': recall " << std::fixed << std::setprecision(3)
                << m.recall << " below threshold " << recall_threshold << "\n";
        }
    }
    return out.str();
}

} // namespace memesent
