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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "memesent/errors.hpp"
#include "memesent/image_io.hpp"
#include "memesent/labels.hpp"
#include "memesent/rng.hpp"
#include "memesent/unicode.hpp"

namespace memesent {

/// One meme: an image on disk, its caption (possibly empty), its sentiment.
struct Sample {
    std::string id;
    std::string image_path;
    std::string caption;
    Label label = Label::kNeutral;
};

struct DatasetManifest {
    std::vector<Sample> samples;
    std::string source_uri;

    const Sample& by_id(const std::string& id) const {
        for (const Sample& s : samples) {
            if (s.id == id) return s;
        }
        throw ValidationError("sample id not in manifest: '" + id + "'");
    }
};

struct SplitRatios {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;

    void validate() const {
        if (train <= 0.0 || val <= 0.0 || test <= 0.0) {
            throw ConfigError("split ratios must all be positive");
        }
        if (std::abs(train + val + test - 1.0) > 1e-9) {
            throw ConfigError("split ratios must sum to 1");
        }
    }
};

struct SplitResult {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    SplitRatios ratios;
    std::uint64_t seed = 0;
};

enum class CaptionLanguage : int {
    kBengali = 0,
    kEnglish = 1,
    kMixed = 2,
    kNone = 3,
};

inline constexpr std::size_t kNumLanguages = 4;

inline std::string_view language_name(CaptionLanguage lang) {
    switch (lang) {
        case CaptionLanguage::kBengali: return "bengali";
        case CaptionLanguage::kEnglish: return "english";
        case CaptionLanguage::kMixed: return "mixed";
        case CaptionLanguage::kNone: return "none";
    }
    return "?";
}

struct CaptionLengthStats {
    std::size_t min = 0;
    std::size_t max = 0;
    double mean = 0.0;
};

struct DatasetStats {
    std::array<std::size_t, kNumClasses> class_counts = {0, 0, 0};
    std::array<std::size_t, kNumLanguages> language_counts = {0, 0, 0, 0};
    CaptionLengthStats caption_length;
    std::map<std::string, std::size_t> word_frequencies;
};

// ---------------------------------------------------------------------------
// Manifest file I/O
// ---------------------------------------------------------------------------

inline constexpr std::string_view kManifestHeader = "id\timage_path\tcaption\tlabel";

/// Reads a tab-separated manifest. Relative image paths are resolved against
/// the manifest's directory. No validation beyond field syntax happens here;
/// see validate_manifest.
inline std::vector<Sample> read_manifest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest: " + path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    std::string line;
    if (!std::getline(in, line)) throw IoError("manifest is empty: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kManifestHeader) {
        throw ValidationError("manifest " + path + ": first line must be the header '" +
                              std::string(kManifestHeader) + "'");
    }

    std::vector<Sample> samples;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<std::string, 4> fields;
        std::size_t field = 0, start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                if (field >= 4) {
                    throw ValidationError("manifest " + path + ":" + std::to_string(lineno) +
                                          ": too many fields (captions must not contain tabs)");
                }
                fields[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (field != 4) {
            throw ValidationError("manifest " + path + ":" + std::to_string(lineno) +
                                  ": expected 4 tab-separated fields, got " + std::to_string(field));
        }
        Sample s;
        s.id = fields[0];
        std::filesystem::path img(fields[1]);
        s.image_path = img.is_absolute() ? img.string() : (base / img).string();
        s.caption = fields[2];
        s.label = parse_label(fields[3]);
        samples.push_back(std::move(s));
    }
    return samples;
}

inline void write_manifest_file(const std::string& path, const std::vector<Sample>& samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << kManifestHeader << "\n";
    for (const Sample& s : samples) {
        out << s.id << '\t' << s.image_path << '\t' << s.caption << '\t'
            << label_name(s.label) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Keeps only samples whose image files exist and decode; everything else
/// lands in `rejected`, input order preserved in both lists. Duplicate ids
/// are an error, not a rejection.
struct ValidationOutcome {
    DatasetManifest manifest;
    std::vector<Sample> rejected;
};

inline ValidationOutcome validate_manifest(const std::vector<Sample>& raw,
                                           const std::string& source_uri = "") {
    std::set<std::string> seen;
    for (const Sample& s : raw) {
        if (!seen.insert(s.id).second) {
            throw ValidationError("duplicate sample id: '" + s.id + "'");
        }
    }
    ValidationOutcome outcome;
    outcome.manifest.source_uri = source_uri;
    for (const Sample& s : raw) {
        bool ok = false;
        try {
            const ImageU8 img = read_image(s.image_path);
            ok = !img.empty();
        } catch (const IoError&) {
            ok = false;
        }
        if (ok) {
            outcome.manifest.samples.push_back(s);
        } else {
            outcome.rejected.push_back(s);
        }
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Stratified split
// ---------------------------------------------------------------------------

/// Per class of size n: val = round(n*r_val), test = round(n*r_test), and
/// train takes the remainder. Assignment within a class is a deterministic
/// shuffle keyed by (seed, class).
inline SplitResult stratified_split(const DatasetManifest& manifest, SplitRatios ratios,
                                    std::uint64_t seed) {
    ratios.validate();

    std::array<std::vector<std::string>, kNumClasses> by_class;
    for (const Sample& s : manifest.samples) {
        by_class[static_cast<std::size_t>(label_index(s.label))].push_back(s.id);
    }

    SplitResult result;
    result.ratios = ratios;
    result.seed = seed;
    for (Label label : kAllLabels) {
        auto& ids = by_class[static_cast<std::size_t>(label_index(label))];
        const std::size_t n = ids.size();
        if (n == 0) continue;
        if (n < 3) {
            throw ValidationError("class '" + std::string(label_name(label)) + "' has " +
                                  std::to_string(n) + " samples; need at least 3 to fill all splits");
        }
        const auto n_val = static_cast<std::size_t>(
            std::lround(static_cast<double>(n) * ratios.val));
        const auto n_test = static_cast<std::size_t>(
            std::lround(static_cast<double>(n) * ratios.test));
        if (n_val + n_test >= n) {
            throw ValidationError("class '" + std::string(label_name(label)) +
                                  "': rounded val+test slots leave no training samples");
        }
        Rng rng(derive_seed(seed, "split:" + std::string(label_name(label))));
        rng.shuffle(ids);
        result.val.insert(result.val.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));
        result.test.insert(result.test.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_val),
                           ids.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
        result.train.insert(result.train.end(),
                            ids.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), ids.end());
    }
    return result;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_words(const std::string& caption) {
    std::vector<std::string> words;
    const std::u32string cps = utf8_decode(caption);
    std::u32string current;
    const auto flush = [&] {
        if (!current.empty()) {
            words.push_back(utf8_encode(current));
            current.clear();
        }
    };
    for (char32_t cp : cps) {
        if (is_space(cp)) {
            flush();
        } else {
            current.push_back(cp);
        }
    }
    flush();
    return words;
}

/// Bengali if the caption's word tokens carry only Bengali letters, English
/// if only Latin, Mixed if both scripts appear, None if no classifiable
/// letters at all (empty caption, digits or emoji only).
inline CaptionLanguage classify_caption_language(const std::string& caption) {
    bool has_bengali = false, has_latin = false;
    for (char32_t cp : utf8_decode(caption)) {
        has_bengali = has_bengali || is_bengali_letter(cp);
        has_latin = has_latin || is_latin_letter(cp);
    }
    if (has_bengali && has_latin) return CaptionLanguage::kMixed;
    if (has_bengali) return CaptionLanguage::kBengali;
    if (has_latin) return CaptionLanguage::kEnglish;
    return CaptionLanguage::kNone;
}

/// Frequency-count token form: edge punctuation stripped, ASCII lowercased.
/// Returns "" for tokens with no letters or digits left.
inline std::string normalize_token(const std::string& token) {
    std::u32string cps = utf8_decode(token);
    const auto keep = [](char32_t cp) {
        return is_bengali_letter(cp) || is_latin_letter(cp) || is_ascii_digit(cp) ||
               is_bengali_digit(cp);
    };
    std::size_t first = 0, last = cps.size();
    while (first < last && !keep(cps[first])) ++first;
    while (last > first && !keep(cps[last - 1])) --last;
    std::u32string trimmed = cps.substr(first, last - first);
    for (char32_t& cp : trimmed) {
        if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
    }
    return utf8_encode(trimmed);
}

inline DatasetStats compute_stats(const DatasetManifest& manifest) {
    DatasetStats stats;
    std::size_t total_words = 0;
    std::size_t counted_captions = 0;
    bool any = false;
    for (const Sample& s : manifest.samples) {
        stats.class_counts[static_cast<std::size_t>(label_index(s.label))]++;
        stats.language_counts[static_cast<std::size_t>(classify_caption_language(s.caption))]++;
        const std::vector<std::string> words = split_words(s.caption);
        if (!words.empty()) {
            ++counted_captions;
            total_words += words.size();
            if (!any || words.size() < stats.caption_length.min) stats.caption_length.min = words.size();
            if (!any || words.size() > stats.caption_length.max) stats.caption_length.max = words.size();
            any = true;
        }
        for (const std::string& w : words) {
            const std::string norm = normalize_token(w);
            if (!norm.empty()) stats.word_frequencies[norm]++;
        }
    }
    stats.caption_length.mean =
        counted_captions == 0 ? 0.0 : static_cast<double>(total_words) / static_cast<double>(counted_captions);
    return stats;
}

/// Caption word-count -> number of captions with that count. Index 0 holds
/// the caption-less samples. Feeds the length-frequency histogram plot.
inline std::map<std::size_t, std::size_t> caption_length_distribution(const DatasetManifest& manifest) {
    std::map<std::size_t, std::size_t> dist;
    for (const Sample& s : manifest.samples) {
        dist[split_words(s.caption).size()]++;
    }
    return dist;
}

/// Top k tokens by count, ties broken lexicographically.
inline std::vector<std::pair<std::string, std::size_t>> top_k_words(const DatasetStats& stats,
                                                                    std::size_t k) {
    if (k < 1) throw ContractError("top_k_words requires k >= 1");
    // map iteration is already lexicographic; a stable sort by count keeps
    // that order within ties.
    std::vector<std::pair<std::string, std::size_t>> entries(stats.word_frequencies.begin(),
                                                             stats.word_frequencies.end());
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (entries.size() > k) entries.resize(k);
    return entries;
}

// ---------------------------------------------------------------------------
// JSON views
// ---------------------------------------------------------------------------

inline nlohmann::json stats_to_json(const DatasetStats& stats) {
    nlohmann::json class_counts, language_counts, words;
    for (Label label : kAllLabels) {
        class_counts[std::string(label_name(label))] =
            stats.class_counts[static_cast<std::size_t>(label_index(label))];
    }
    for (std::size_t i = 0; i < kNumLanguages; ++i) {
        language_counts[std::string(language_name(static_cast<CaptionLanguage>(i)))] =
            stats.language_counts[i];
    }
    for (const auto& [token, count] : stats.word_frequencies) words[token] = count;
    return nlohmann::json{
        {"class_counts", class_counts},
        {"language_counts", language_counts},
        {"caption_length",
         {{"min", stats.caption_length.min},
          {"max", stats.caption_length.max},
          {"mean", stats.caption_length.mean}}},
        {"word_frequencies", words},
    };
}

inline nlohmann::json split_to_json(const SplitResult& split) {
    return nlohmann::json{
        {"train", split.train},
        {"val", split.val},
        {"test", split.test},
        {"ratios", {split.ratios.train, split.ratios.val, split.ratios.test}},
        {"seed", split.seed},
    };
}

inline SplitResult split_from_json(const nlohmann::json& j) {
    SplitResult split;
    split.train = j.at("train").get<std::vector<std::string>>();
    split.val = j.at("val").get<std::vector<std::string>>();
    split.test = j.at("test").get<std::vector<std::string>>();
    const auto& r = j.at("ratios");
    split.ratios = SplitRatios{r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    split.seed = j.at("seed").get<std::uint64_t>();
    return split;
}

} // namespace memesent
