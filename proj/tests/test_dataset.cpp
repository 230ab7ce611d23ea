#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "memesent/dataset.hpp"
#include "test_util.hpp"

using namespace memesent;
using test_util::TempDir;

namespace {

DatasetManifest synthetic_manifest(const std::vector<std::size_t>& class_counts) {
    DatasetManifest m;
    std::size_t n = 0;
    for (std::size_t c = 0; c < class_counts.size(); ++c) {
        for (std::size_t i = 0; i < class_counts[c]; ++i) {
            Sample s;
            s.id = "s" + std::to_string(n++);
            s.image_path = "unused.png";
            s.caption = "caption";
            s.label = label_from_index(static_cast<int>(c));
            m.samples.push_back(std::move(s));
        }
    }
    return m;
}

std::array<std::size_t, kNumClasses> count_by_class(const DatasetManifest& m,
                                                    const std::vector<std::string>& ids) {
    std::array<std::size_t, kNumClasses> counts = {0, 0, 0};
    for (const auto& id : ids) {
        counts[static_cast<std::size_t>(label_index(m.by_id(id).label))]++;
    }
    return counts;
}

} // namespace

TEST_SUITE("dataset.validate") {

TEST_CASE("missing file rejected, valid kept, order preserved") {
    TempDir dir("validate");
    const auto img = test_util::solid_image(8, 8, 10, 20, 30);
    std::vector<Sample> raw = {
        {"a", test_util::write_png(dir, "a.png", img), "hello", Label::kPositive},
        {"b", dir.file("missing.png"), "gone", Label::kNeutral},
        {"c", test_util::write_png(dir, "c.png", img), "", Label::kNegative},
    };
    const ValidationOutcome out = validate_manifest(raw, "test");
    REQUIRE(out.manifest.samples.size() == 2);
    REQUIRE(out.rejected.size() == 1);
    CHECK(out.manifest.samples[0].id == "a");
    CHECK(out.manifest.samples[1].id == "c");  // empty caption kept
    CHECK(out.rejected[0].id == "b");
}

TEST_CASE("all valid keeps order, empty rejected") {
    TempDir dir("validate2");
    const auto img = test_util::solid_image(4, 4, 0, 0, 0);
    std::vector<Sample> raw;
    for (int i = 0; i < 5; ++i) {
        raw.push_back({"id" + std::to_string(i),
                       test_util::write_png(dir, "i" + std::to_string(i) + ".png", img),
                       "c", Label::kPositive});
    }
    const ValidationOutcome out = validate_manifest(raw);
    CHECK(out.rejected.empty());
    REQUIRE(out.manifest.samples.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(out.manifest.samples[i].id == "id" + std::to_string(i));
}

TEST_CASE("undecodable file rejected") {
    TempDir dir("validate3");
    const std::string bad = dir.file("bad.png");
    detail::write_file_bytes(bad, {1, 2, 3, 4, 5});
    const ValidationOutcome out = validate_manifest({{"x", bad, "c", Label::kNeutral}});
    CHECK(out.manifest.samples.empty());
    REQUIRE(out.rejected.size() == 1);
}

TEST_CASE("duplicate id is an error naming the id") {
    std::vector<Sample> raw = {
        {"dup", "x.png", "", Label::kNeutral},
        {"dup", "y.png", "", Label::kPositive},
    };
    CHECK_THROWS_WITH_AS(validate_manifest(raw), doctest::Contains("dup"), ValidationError);
}

TEST_CASE("manifest file io") {
    TempDir dir("manifest");
    const auto img = test_util::solid_image(4, 4, 9, 9, 9);
    test_util::write_png(dir, "m0.png", img);
    const std::string path = dir.file("manifest.tsv");
    {
        std::ofstream out(path, std::ios::binary);
        out << "id\timage_path\tcaption\tlabel\n";
        out << "m0\tm0.png\tভালো মিম lol\tPOSITIVE\n";   // label case-insensitive
        out << "m1\tgone.png\t\tnegative\n";
    }
    const std::vector<Sample> raw = read_manifest_file(path);
    REQUIRE(raw.size() == 2);
    CHECK(raw[0].label == Label::kPositive);
    CHECK(raw[0].image_path == dir.file("m0.png"));  // relative resolved
    CHECK(raw[1].caption.empty());

    CHECK_THROWS_AS(read_manifest_file(dir.file("nope.tsv")), IoError);

    const std::string bad_header = dir.file("bad.tsv");
    { std::ofstream out(bad_header, std::ios::binary); out << "id,caption\n"; }
    CHECK_THROWS_AS(read_manifest_file(bad_header), ValidationError);

    const std::string bad_label = dir.file("badlabel.tsv");
    {
        std::ofstream out(bad_label, std::ios::binary);
        out << "id\timage_path\tcaption\tlabel\nx\ta.png\tc\tangry\n";
    }
    CHECK_THROWS_WITH_AS(read_manifest_file(bad_label), doctest::Contains("angry"),
                         ValidationError);
}

} // TEST_SUITE

TEST_SUITE("dataset.split") {

TEST_CASE("reproduces the reference 9-cell table") {
    const DatasetManifest m = synthetic_manifest({291, 1349, 2728});
    const SplitResult split = stratified_split(m, SplitRatios{0.7, 0.1, 0.2}, 1);
    const auto train = count_by_class(m, split.train);
    const auto val = count_by_class(m, split.val);
    const auto test = count_by_class(m, split.test);
    CHECK(train == std::array<std::size_t, 3>{204, 944, 1909});
    CHECK(val == std::array<std::size_t, 3>{29, 135, 273});
    CHECK(test == std::array<std::size_t, 3>{58, 270, 546});
}

TEST_CASE("exact division case") {
    const DatasetManifest m = synthetic_manifest({10});
    const SplitResult split = stratified_split(m, SplitRatios{0.7, 0.1, 0.2}, 3);
    CHECK(split.train.size() == 7);
    CHECK(split.val.size() == 1);
    CHECK(split.test.size() == 2);
}

TEST_CASE("same seed identical, different seed same counts") {
    const DatasetManifest m = synthetic_manifest({20, 30, 40});
    const SplitResult a = stratified_split(m, SplitRatios{0.7, 0.1, 0.2}, 9);
    const SplitResult b = stratified_split(m, SplitRatios{0.7, 0.1, 0.2}, 9);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);

    const SplitResult c = stratified_split(m, SplitRatios{0.7, 0.1, 0.2}, 10);
    CHECK(c.train.size() == a.train.size());
    CHECK(c.val.size() == a.val.size());
    CHECK(c.test.size() == a.test.size());
    CHECK(a.train != c.train);  // astronomically unlikely to collide
}

TEST_CASE("small class is an error naming the class") {
    const DatasetManifest m = synthetic_manifest({2, 10, 10});
    CHECK_THROWS_WITH_AS(stratified_split(m, SplitRatios{0.7, 0.1, 0.2}, 1),
                         doctest::Contains("neutral"), ValidationError);
}

TEST_CASE("bad ratios rejected") {
    const DatasetManifest m = synthetic_manifest({10, 10, 10});
    CHECK_THROWS_AS(stratified_split(m, SplitRatios{0.8, 0.1, 0.2}, 1), ConfigError);
    CHECK_THROWS_AS(stratified_split(m, SplitRatios{0.9, 0.1, 0.0}, 1), ConfigError);
}

TEST_CASE("partition and stratification properties over random manifests") {
    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::size_t> counts;
        for (std::size_t c = 0; c < kNumClasses; ++c) counts.push_back(3 + rng.below(60));
        const DatasetManifest m = synthetic_manifest(counts);
        const double r_val = 0.05 + rng.next_double() * 0.2;
        const double r_test = 0.05 + rng.next_double() * 0.3;
        const SplitRatios ratios{1.0 - r_val - r_test, r_val, r_test};
        const SplitResult split = stratified_split(m, ratios, rng.next_u64());

        CHECK(split.train.size() + split.val.size() + split.test.size() == m.samples.size());
        std::set<std::string> all(split.train.begin(), split.train.end());
        all.insert(split.val.begin(), split.val.end());
        all.insert(split.test.begin(), split.test.end());
        CHECK(all.size() == m.samples.size());  // disjoint and exhaustive

        const auto val = count_by_class(m, split.val);
        const auto test = count_by_class(m, split.test);
        const auto train = count_by_class(m, split.train);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const auto n = static_cast<double>(counts[c]);
            CHECK(val[c] == static_cast<std::size_t>(std::lround(n * ratios.val)));
            CHECK(test[c] == static_cast<std::size_t>(std::lround(n * ratios.test)));
            CHECK(train[c] == counts[c] - val[c] - test[c]);
        }
    }
}

TEST_CASE("split json round trip") {
    const DatasetManifest m = synthetic_manifest({5, 6, 7});
    const SplitResult split = stratified_split(m, SplitRatios{0.7, 0.1, 0.2}, 77);
    const SplitResult back = split_from_json(split_to_json(split));
    CHECK(back.train == split.train);
    CHECK(back.val == split.val);
    CHECK(back.test == split.test);
    CHECK(back.seed == split.seed);
}

} // TEST_SUITE

TEST_SUITE("dataset.stats") {

TEST_CASE("language classification definitional cases") {
    CHECK(classify_caption_language("lol") == CaptionLanguage::kEnglish);
    CHECK(classify_caption_language("") == CaptionLanguage::kNone);
    CHECK(classify_caption_language("ভালো মিম") == CaptionLanguage::kBengali);
    CHECK(classify_caption_language("ভালো meme") == CaptionLanguage::kMixed);
    CHECK(classify_caption_language("123 !!") == CaptionLanguage::kNone);
    CHECK(classify_caption_language("va7i ভাই") == CaptionLanguage::kMixed);
}

TEST_CASE("caption length stats by hand") {
    DatasetManifest m;
    const auto add = [&m](const std::string& id, const std::string& caption) {
        m.samples.push_back({id, "x.png", caption, Label::kPositive});
    };
    std::string words19, words121;
    for (int i = 0; i < 19; ++i) words19 += "w" + std::to_string(i) + " ";
    for (int i = 0; i < 121; ++i) words121 += "w" + std::to_string(i) + " ";
    add("a", "one");
    add("b", words19);
    add("c", words121);
    const DatasetStats stats = compute_stats(m);
    CHECK(stats.caption_length.min == 1);
    CHECK(stats.caption_length.max == 121);
    CHECK(stats.caption_length.mean == doctest::Approx(47.0));
}

TEST_CASE("language counts partition the manifest") {
    DatasetManifest m;
    const char* captions[] = {"শুধু বাংলা", "english only", "মিশ্র mix", "", "42", "lol ভাই"};
    int i = 0;
    for (const char* c : captions) {
        m.samples.push_back({"s" + std::to_string(i++), "x.png", c, Label::kNegative});
    }
    const DatasetStats stats = compute_stats(m);
    std::size_t total = 0;
    for (std::size_t n : stats.language_counts) total += n;
    CHECK(total == m.samples.size());
    CHECK(stats.language_counts[static_cast<std::size_t>(CaptionLanguage::kBengali)] == 1);
    CHECK(stats.language_counts[static_cast<std::size_t>(CaptionLanguage::kEnglish)] == 1);
    CHECK(stats.language_counts[static_cast<std::size_t>(CaptionLanguage::kMixed)] == 2);
    CHECK(stats.language_counts[static_cast<std::size_t>(CaptionLanguage::kNone)] == 2);

    std::size_t class_total = 0;
    for (std::size_t n : stats.class_counts) class_total += n;
    CHECK(class_total == m.samples.size());
}

TEST_CASE("empty manifest yields zero stats") {
    const DatasetStats stats = compute_stats(DatasetManifest{});
    CHECK(stats.caption_length.min == 0);
    CHECK(stats.caption_length.max == 0);
    CHECK(stats.caption_length.mean == 0.0);
    CHECK(stats.word_frequencies.empty());
}

TEST_CASE("word frequencies normalize tokens") {
    DatasetManifest m;
    m.samples.push_back({"a", "x.png", "Hello hello! \"HELLO\" world", Label::kNeutral});
    const DatasetStats stats = compute_stats(m);
    CHECK(stats.word_frequencies.at("hello") == 3);
    CHECK(stats.word_frequencies.at("world") == 1);
}

TEST_CASE("top k ordering and tie rule") {
    DatasetStats stats;
    stats.word_frequencies = {{"a", 2}, {"b", 2}, {"c", 1}};
    const auto top2 = top_k_words(stats, 2);
    REQUIRE(top2.size() == 2);
    CHECK(top2[0].first == "a");
    CHECK(top2[1].first == "b");

    const auto all = top_k_words(stats, 10);  // k larger than vocabulary
    CHECK(all.size() == 3);
    CHECK(all[2].first == "c");

    CHECK_THROWS_AS(top_k_words(stats, 0), ContractError);
}

TEST_CASE("length distribution counts empties at zero") {
    DatasetManifest m;
    m.samples.push_back({"a", "x.png", "", Label::kNeutral});
    m.samples.push_back({"b", "x.png", "two words", Label::kNeutral});
    const auto dist = caption_length_distribution(m);
    CHECK(dist.at(0) == 1);
    CHECK(dist.at(2) == 1);
}

TEST_CASE("stats json has the four language buckets") {
    DatasetManifest m;
    m.samples.push_back({"a", "x.png", "hi there", Label::kPositive});
    const nlohmann::json j = stats_to_json(compute_stats(m));
    CHECK(j["language_counts"].size() == 4);
    CHECK(j["class_counts"]["positive"] == 1);
    CHECK(j["caption_length"]["mean"] == 2.0);
}

} // TEST_SUITE
