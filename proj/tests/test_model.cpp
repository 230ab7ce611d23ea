#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "memesent/model.hpp"
#include "test_util.hpp"

using namespace memesent;
using test_util::TempDir;

namespace {

ModelConfig tiny_fusion_config() {
    ModelConfig config;
    config.modality = Modality::kFusion;
    config.text.kind = TextEncoderKind::kRecurrentBidirectional;
    config.text.embedding_dim = 8;
    config.text.hidden_dim = 6;
    config.text.vocab_size = 50;
    config.projection_dim = 4;
    config.preprocess.target_width = config.preprocess.target_height = 32;
    config.visual.input_size = 32;
    return config;
}

Vocabulary small_vocab() {
    return Vocabulary::build({"good bad meme lol ভালো"}, 50);
}

void finite_difference_check(std::vector<nn::Parameter*> params,
                             const std::function<nn::Var(nn::Tape&)>& build) {
    for (nn::Parameter* p : params) p->zero_grad();
    {
        nn::Tape t;
        t.backward(build(t));
    }
    const double h = 1e-6;
    for (nn::Parameter* p : params) {
        for (std::size_t k = 0; k < p->value.data.size(); ++k) {
            const double saved = p->value.data[k];
            p->value.data[k] = saved + h;
            nn::Tape tu;
            const double up = tu.value(build(tu)).data[0];
            p->value.data[k] = saved - h;
            nn::Tape td;
            const double down = td.value(build(td)).data[0];
            p->value.data[k] = saved;
            const double numeric = (up - down) / (2 * h);
            const double scale = std::max({1.0, std::abs(numeric), std::abs(p->grad.data[k])});
            CHECK(std::abs(numeric - p->grad.data[k]) / scale < 1e-4);
        }
    }
}

} // namespace

TEST_SUITE("model.vocab") {

TEST_CASE("build orders by frequency then token, reserves unk and mask") {
    const Vocabulary v = Vocabulary::build({"b a a", "c b a"}, 100);
    CHECK(v.token(0) == Vocabulary::kUnknown);
    CHECK(v.token(1) == Vocabulary::kMask);
    CHECK(v.token(2) == "a");  // count 3
    CHECK(v.token(3) == "b");  // count 2
    CHECK(v.token(4) == "c");  // count 1
    CHECK(v.id_of("zebra") == 0);
    CHECK(v.encode("a c zebra", 10) == std::vector<int>{2, 4, 0});
    CHECK(v.encode("a c zebra", 2) == std::vector<int>{2, 4});
}

TEST_CASE("vocab cap and save/load") {
    TempDir dir("vocab");
    const Vocabulary v = Vocabulary::build({"a a a b b c"}, 4);
    CHECK(v.size() == 4);  // unk, mask, a, b
    v.save(dir.file("vocab.txt"));
    const Vocabulary back = Vocabulary::load(dir.file("vocab.txt"));
    CHECK(back.size() == v.size());
    CHECK(back.id_of("a") == v.id_of("a"));
    CHECK_THROWS_AS(Vocabulary::load(dir.file("missing.txt")), IoError);
}

} // TEST_SUITE

TEST_SUITE("model.encoders") {

TEST_CASE("text encoder shape contract and determinism") {
    for (TextEncoderKind kind : {TextEncoderKind::kRecurrentBidirectional,
                                 TextEncoderKind::kPretrainedTransformer}) {
        TextEncoderConfig config;
        config.kind = kind;
        config.embedding_dim = 8;
        config.hidden_dim = 5;
        config.num_heads = 2;
        TextEncoder enc(config, small_vocab());
        enc.init_weights(7);

        const std::vector<int> ids = {2, 3, 4};
        nn::Tape t1, t2;
        const nn::Tensor a = t1.value(enc.encode(t1, ids));
        const nn::Tensor b = t2.value(enc.encode(t2, ids));
        CHECK(a.rows() == 1);
        CHECK(a.cols() == enc.output_dim());
        CHECK(a.data == b.data);  // same caption twice -> identical vectors

        // empty caption encodes without error
        nn::Tape t3;
        const nn::Tensor e = t3.value(enc.encode(t3, {}));
        CHECK(e.cols() == enc.output_dim());
    }
}

TEST_CASE("output widths follow the encoder kind") {
    TextEncoderConfig config;
    config.hidden_dim = 9;
    CHECK(config.output_dim() == 18);
    config.kind = TextEncoderKind::kPretrainedTransformer;
    config.embedding_dim = 12;
    CHECK(config.output_dim() == 12);
}

TEST_CASE("visual encoder widths per backbone") {
    CHECK(backbone_feature_width(VisualBackbone::kResidual50) == 2048);
    CHECK(backbone_feature_width(VisualBackbone::kMobileV3Large) == 960);
    CHECK(backbone_feature_width(VisualBackbone::kDense161) == 2208);

    VisualEncoderConfig config;
    config.input_size = 64;
    VisualEncoder enc(config);
    enc.init_weights(3);

    ImageTensor img(3, 64, 64);
    Rng rng(5);
    for (double& v : img.data) v = rng.normal();
    nn::Tape tape;
    const nn::Tensor feat = tape.value(enc.encode(tape, img));
    CHECK(feat.rows() == 1);
    CHECK(feat.cols() == 2048);

    // fixed seed -> reproducible output
    VisualEncoder enc2(config);
    enc2.init_weights(3);
    nn::Tape tape2;
    CHECK(tape2.value(enc2.encode(tape2, img)).data == feat.data);

    // shape mismatch is a contract error
    ImageTensor wrong(3, 32, 32);
    nn::Tape tape3;
    CHECK_THROWS_AS(enc.encode(tape3, wrong), ContractError);
}

TEST_CASE("unloadable pretrained weights raise ConfigError") {
    TextEncoderConfig config;
    config.embedding_dim = 4;
    config.hidden_dim = 3;
    config.pretrained_ref = "no/such/blob.bin";
    TextEncoder enc(config, small_vocab());
    CHECK_THROWS_AS(enc.init_weights(1), ConfigError);

    VisualEncoderConfig vc;
    vc.pretrained = true;
    vc.pretrained_ref = "also/missing.bin";
    VisualEncoder venc(vc);
    CHECK_THROWS_AS(venc.init_weights(1), ConfigError);

    VisualEncoderConfig no_ref;
    no_ref.pretrained = true;
    CHECK_THROWS_AS(VisualEncoder{no_ref}, ConfigError);
}

TEST_CASE("pretrained blob round trips through an encoder") {
    TempDir dir("pretrained");
    TextEncoderConfig config;
    config.embedding_dim = 4;
    config.hidden_dim = 3;
    TextEncoder donor(config, small_vocab());
    donor.init_weights(42);
    write_weights_file(dir.file("text.bin"), donor.parameters());

    config.pretrained_ref = dir.file("text.bin");
    TextEncoder receiver(config, small_vocab());
    receiver.init_weights(7);  // different seed, then overwritten by the blob
    nn::Tape ta, tb;
    const std::vector<int> ids = {2, 4};
    CHECK(ta.value(donor.encode(ta, ids)).data == tb.value(receiver.encode(tb, ids)).data);
}

} // TEST_SUITE

TEST_SUITE("model.heads") {

TEST_CASE("zero weights give zero logits and uniform softmax") {
    FusionHead head(4, 6, 3, 3, false);  // all parameters start at zero
    nn::Tape tape;
    nn::Var tf = tape.leaf(nn::Tensor({1, 4}, {1, 2, 3, 4}));
    nn::Var vf = tape.leaf(nn::Tensor({1, 6}, {1, 1, 1, 1, 1, 1}));
    const nn::Tensor logits = tape.value(head.forward(tape, tf, vf));
    REQUIRE(logits.cols() == 3);
    for (double v : logits.data) CHECK(v == 0.0);
    const nn::Tensor probs = tape.value(tape.softmax_rows(head.forward(tape, tf, vf)));
    for (double p : probs.data) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("hand-set fusion weights match hand matrix arithmetic") {
    // 2-feature toy: D_t = 2, D_v = 2, projection 2, classes 3.
    FusionHead head(2, 2, 2, 3, false);
    head.text_proj.weight.value = nn::Tensor({2, 2}, {1, 0, 0, 1});
    head.text_proj.bias.value = nn::Tensor({1, 2}, {0.5, -0.5});
    head.visual_proj.weight.value = nn::Tensor({2, 2}, {2, 0, 0, -1});
    head.visual_proj.bias.value = nn::Tensor({1, 2}, {0, 1});
    head.classifier.weight.value =
        nn::Tensor({4, 3}, {1, 0, 0,
                            0, 1, 0,
                            0, 0, 1,
                            1, 1, 1});
    head.classifier.bias.value = nn::Tensor({1, 3}, {0.1, 0.2, 0.3});

    nn::Tape tape;
    nn::Var tf = tape.leaf(nn::Tensor({1, 2}, {0.3, 0.7}));
    nn::Var vf = tape.leaf(nn::Tensor({1, 2}, {-0.2, 0.4}));
    const nn::Tensor logits = tape.value(head.forward(tape, tf, vf));

    // By hand: text proj = (0.3+0.5, 0.7-0.5) = (0.8, 0.2)
    //          visual proj = (-0.4+0, -0.4+1) = (-0.4, 0.6)
    //          concat z = (0.8, 0.2, -0.4, 0.6)
    //          logits = (0.8+0.6+0.1, 0.2+0.6+0.2, -0.4+0.6+0.3)
    CHECK(logits.at(0, 0) == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(logits.at(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(logits.at(0, 2) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("unimodal head identity-like behavior") {
    UnimodalHead head(3, 3);  // zero-initialized
    nn::Tape tape;
    const nn::Tensor uniform = tape.value(
        tape.softmax_rows(head.forward(tape, tape.leaf(nn::Tensor({1, 3}, {1, 0, 0})))));
    for (double p : uniform.data) CHECK(p == doctest::Approx(1.0 / 3));

    head.classifier.weight.value = nn::Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    nn::Tape tape2;
    const nn::Tensor logits =
        tape2.value(head.forward(tape2, tape2.leaf(nn::Tensor({1, 3}, {1, 0, 0}))));
    CHECK(logits.at(0, 0) == 1.0);
    CHECK(logits.at(0, 1) == 0.0);
}

TEST_CASE("gradient check: unimodal head cross entropy") {
    Rng rng(21);
    UnimodalHead head(4, 3);
    head.init_weights(5);
    nn::Parameter feat("feat", nn::Tensor({2, 4}));
    for (double& v : feat.value.data) v = rng.uniform(-0.8, 0.8);
    std::vector<nn::Parameter*> params = head.parameters();
    params.push_back(&feat);

    const std::vector<int> labels = {0, 2};
    finite_difference_check(params, [&](nn::Tape& t) {
        return t.cross_entropy(head.forward(t, t.param(feat)), labels);
    });
}

TEST_CASE("gradient check: fusion stack at toy width") {
    Rng rng(22);
    FusionHead head(3, 5, 4, 3, false);
    head.init_weights(6);
    nn::Parameter tfeat("tf", nn::Tensor({1, 3}));
    nn::Parameter vfeat("vf", nn::Tensor({1, 5}));
    for (double& v : tfeat.value.data) v = rng.uniform(-0.8, 0.8);
    for (double& v : vfeat.value.data) v = rng.uniform(-0.8, 0.8);
    std::vector<nn::Parameter*> params = head.parameters();
    params.push_back(&tfeat);
    params.push_back(&vfeat);

    const std::vector<int> labels = {1};
    finite_difference_check(params, [&](nn::Tape& t) {
        return t.cross_entropy(head.forward(t, t.param(tfeat), t.param(vfeat)), labels);
    });
}

} // TEST_SUITE

TEST_SUITE("model.classifier") {

TEST_CASE("pipeline composition: normalized-away punctuation gives identical vectors") {
    ModelConfig config = tiny_fusion_config();
    config.modality = Modality::kText;
    MemeClassifier model(config, Vocabulary::build({"great meme wow"}, 50));

    Sample a{"a", "", "great — meme  wow ", Label::kPositive};
    Sample b{"b", "", "great - meme wow", Label::kPositive};
    const EncodedSample ea = model.encode_sample(a);
    const EncodedSample eb = model.encode_sample(b);
    CHECK(ea.tokens == eb.tokens);

    const auto pa = model.predict_probs({ea});
    const auto pb = model.predict_probs({eb});
    CHECK(pa[0] == pb[0]);
}

TEST_CASE("fusion model end to end on a tiny sample") {
    TempDir dir("clf");
    const std::string img = test_util::write_png(dir, "m.png", test_util::noise_image(48, 48, 3));
    ModelConfig config = tiny_fusion_config();
    MemeClassifier model(config, small_vocab());

    Sample s{"s", img, "good meme", Label::kNegative};
    const EncodedSample enc = model.encode_sample(s);
    CHECK(enc.image.width == 32);
    CHECK(enc.image.height == 32);

    const auto probs = model.predict_probs({enc, enc});
    REQUIRE(probs.size() == 2);
    double sum = 0;
    for (double p : probs[0]) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(probs[0] == probs[1]);  // determinism in eval mode
}

TEST_CASE("batched logits shape") {
    TempDir dir("batch");
    const std::string img = test_util::write_png(dir, "m.png", test_util::noise_image(40, 40, 9));
    ModelConfig config = tiny_fusion_config();
    config.modality = Modality::kImage;
    MemeClassifier model(config, Vocabulary{});
    std::vector<EncodedSample> batch;
    for (int i = 0; i < 4; ++i) {
        batch.push_back(model.encode_sample({"x", img, "", Label::kNeutral}));
    }
    nn::Tape tape;
    const nn::Tensor logits = tape.value(model.batch_logits(tape, batch, 0, 4));
    CHECK(logits.rows() == 4);
    CHECK(logits.cols() == 3);
}

TEST_CASE("checkpoint save/load round trip preserves predictions") {
    TempDir dir("ckpt");
    const std::string img = test_util::write_png(dir, "m.png", test_util::noise_image(64, 64, 1));
    ModelConfig config = tiny_fusion_config();
    config.init_seed = 99;
    MemeClassifier model(config, small_vocab());
    const Sample s{"s", img, "good ভালো meme", Label::kPositive};
    const auto before = model.predict_probs({model.encode_sample(s)});

    const std::string ckpt = dir.file("checkpoint");
    model.save(ckpt);
    MemeClassifier loaded = MemeClassifier::load(ckpt);
    const auto after = loaded.predict_probs({loaded.encode_sample(s)});
    CHECK(before[0] == after[0]);
    CHECK(loaded.config().modality == Modality::kFusion);
    CHECK(loaded.vocab().size() == model.vocab().size());
}

TEST_CASE("same init seed gives identical weights, different seed differs") {
    ModelConfig config = tiny_fusion_config();
    config.init_seed = 5;
    MemeClassifier a(config, small_vocab());
    MemeClassifier b(config, small_vocab());
    config.init_seed = 6;
    MemeClassifier c(config, small_vocab());

    auto pa = a.parameters();
    auto pb = b.parameters();
    auto pc = c.parameters();
    REQUIRE(pa.size() == pb.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->value.data == pb[i]->value.data);
        if (pa[i]->value.data != pc[i]->value.data) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("shape contracts hold across random dims") {
    Rng rng(808);
    for (int trial = 0; trial < 12; ++trial) {
        const int dt = 1 + static_cast<int>(rng.below(30));
        const int dv = 1 + static_cast<int>(rng.below(40));
        const int proj = 1 + static_cast<int>(rng.below(25));
        const int classes = 2 + static_cast<int>(rng.below(5));
        FusionHead fusion(dt, dv, proj, classes, rng.bernoulli(0.5));
        fusion.init_weights(rng.next_u64());
        nn::Tape tape;
        nn::Tensor tf({1, dt}), vf({1, dv});
        for (double& v : tf.data) v = rng.normal();
        for (double& v : vf.data) v = rng.normal();
        const nn::Tensor logits =
            tape.value(fusion.forward(tape, tape.leaf(tf), tape.leaf(vf)));
        CHECK(logits.rows() == 1);
        CHECK(logits.cols() == classes);

        UnimodalHead head(dv, classes);
        head.init_weights(rng.next_u64());
        nn::Tape tape2;
        CHECK(tape2.value(head.forward(tape2, tape2.leaf(vf))).cols() == classes);

        TextEncoderConfig tc;
        tc.kind = rng.bernoulli(0.5) ? TextEncoderKind::kRecurrentBidirectional
                                     : TextEncoderKind::kPretrainedTransformer;
        tc.embedding_dim = 2 * (1 + static_cast<int>(rng.below(8)));
        tc.hidden_dim = 1 + static_cast<int>(rng.below(12));
        tc.num_heads = 2;
        TextEncoder enc(tc, small_vocab());
        enc.init_weights(rng.next_u64());
        std::vector<int> ids;
        for (std::size_t i = rng.below(6); i > 0; --i) {
            ids.push_back(static_cast<int>(rng.below(enc.vocab().size())));
        }
        nn::Tape tape3;
        CHECK(tape3.value(enc.encode(tape3, ids)).cols() == tc.output_dim());
    }
}

TEST_CASE("freeze flag drops encoder parameters from the trainable set") {
    ModelConfig config = tiny_fusion_config();
    MemeClassifier model(config, small_vocab());
    const std::size_t all = model.trainable_parameters().size();
    config.freeze_encoders = true;
    MemeClassifier frozen(config, small_vocab());
    CHECK(frozen.trainable_parameters().size() < all);
    CHECK(frozen.parameters().size() == model.parameters().size());
}

} // TEST_SUITE
