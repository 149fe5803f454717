#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "spinepatch/classifier.hpp"
#include "spinepatch/rng.hpp"

using namespace spinepatch;

namespace {

// Weight scale keeps |w.f + b| small enough that the sigmoid stays out of
// its clamped tails, where central differences stop approximating the
// analytic gradient.
Model random_model(Rng& rng) {
    Model m;
    for (double& w : m.weights) w = rng.uniform(-0.02, 0.02);
    m.bias = rng.uniform(-0.2, 0.2);
    return m;
}

std::vector<Sample> random_batch(Rng& rng, int n) {
    std::vector<Sample> batch(n);
    for (Sample& s : batch) {
        for (double& f : s.features) f = rng.uniform(0.0, 1.0);
        s.label = rng.bernoulli(0.5) ? 1 : 0;
    }
    return batch;
}

// Central finite differences over every parameter.
double max_grad_rel_error(const Model& model, const std::vector<Sample>& batch,
                          const TrainConfig& cfg) {
    const double h = 1e-6;
    LossGrad analytic = loss_and_grad(model, batch, cfg);
    double worst = 0.0;
    auto update = [&](double numeric, double exact) {
        double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
        worst = std::max(worst, std::abs(numeric - exact) / denom);
    };
    for (int i = 0; i < kFeatureDim; ++i) {
        Model up = model, down = model;
        up.weights[i] += h;
        down.weights[i] -= h;
        double numeric =
            (loss_and_grad(up, batch, cfg).loss - loss_and_grad(down, batch, cfg).loss) / (2 * h);
        update(numeric, analytic.grad_w[i]);
    }
    Model up = model, down = model;
    up.bias += h;
    down.bias -= h;
    double numeric =
        (loss_and_grad(up, batch, cfg).loss - loss_and_grad(down, batch, cfg).loss) / (2 * h);
    update(numeric, analytic.grad_b);
    return worst;
}

std::vector<LabeledPatch> separable_patches() {
    std::vector<LabeledPatch> patches;
    for (int i = 0; i < 4; ++i) {
        LabeledPatch bright;
        bright.patch_id = "b" + std::to_string(i);
        bright.image = GrayImage(kPatchSide, kPatchSide, static_cast<std::uint8_t>(200 + i * 10));
        bright.label = PatchLabel::present;
        patches.push_back(bright);
        LabeledPatch dark;
        dark.patch_id = "d" + std::to_string(i);
        dark.image = GrayImage(kPatchSide, kPatchSide, static_cast<std::uint8_t>(20 + i * 10));
        dark.label = PatchLabel::absent;
        patches.push_back(dark);
    }
    return patches;
}

TrainConfig quiet_train_cfg() {
    TrainConfig cfg;
    cfg.rotation_max_deg = 0.0;
    cfg.equalize_prob = 0.0;
    cfg.seed = 9;
    return cfg;
}

}  // namespace

TEST_CASE("extract_features on a constant image") {
    GrayImage img(kPatchSide, kPatchSide, 102);
    FeatureVector f = extract_features(img);
    for (int i = 0; i < kDownsampleGrid * kDownsampleGrid; ++i) {
        CHECK(f[i] == doctest::Approx(102.0 / 255.0));
    }
    CHECK(f[kDownsampleGrid * kDownsampleGrid] == doctest::Approx(1.0));
    for (int i = 1; i < kEdgeBins; ++i) {
        CHECK(f[kDownsampleGrid * kDownsampleGrid + i] == 0.0);
    }
    for (int i = 0; i < kBorderStrips; ++i) {
        CHECK(f[kDownsampleGrid * kDownsampleGrid + kEdgeBins + i] ==
              doctest::Approx(102.0 / 255.0));
    }
}

TEST_CASE("extract_features resizes non-square inputs first") {
    GrayImage img(37, 91, 60);
    FeatureVector f = extract_features(img);
    CHECK(f[0] == doctest::Approx(60.0 / 255.0));
}

TEST_CASE("a strong vertical edge fills high-magnitude gradient bins") {
    GrayImage img(kPatchSide, kPatchSide, 0);
    for (int y = 0; y < kPatchSide; ++y) {
        for (int x = kPatchSide / 2; x < kPatchSide; ++x) img.at(x, y) = 255;
    }
    FeatureVector f = extract_features(img);
    // The step produces gradient magnitude 127.5, landing in the top bin.
    CHECK(f[kDownsampleGrid * kDownsampleGrid + kEdgeBins - 1] > 0.0);
}

TEST_CASE("features are invariant under zero-degree rotation") {
    Rng rng(110);
    GrayImage img(kPatchSide, kPatchSide);
    for (std::uint8_t& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    CHECK(extract_features(rotate(img, 0.0)) == extract_features(img));
}

TEST_CASE("augment is the identity when disabled and deterministic when seeded") {
    GrayImage img(16, 16);
    for (int i = 0; i < 256; ++i) img.data[i] = static_cast<std::uint8_t>((i * 7) % 256);

    TrainConfig off;
    off.rotation_max_deg = 0.0;
    off.equalize_prob = 0.0;
    Rng rng(1);
    CHECK(augment(img, off, rng) == img);

    TrainConfig on;
    Rng r1(42), r2(42);
    CHECK(augment(img, on, r1) == augment(img, on, r2));
}

TEST_CASE("equalization triggers with the configured probability") {
    GrayImage img(16, 16, 200);
    img.at(0, 0) = 10;

    TrainConfig cfg;
    cfg.rotation_max_deg = 0.0;
    cfg.equalize_prob = 0.5;
    Rng rng(77);
    int applied = 0;
    for (int i = 0; i < 10000; ++i) {
        if (augment(img, cfg, rng) != img) ++applied;
    }
    CHECK(applied >= 4850);
    CHECK(applied <= 5150);
}

TEST_CASE("cross entropy at p=0.5 is ln 2") {
    Model zero;
    std::vector<Sample> batch(1);
    batch[0].label = 1;
    TrainConfig cfg;
    cfg.loss = LossKind::cross_entropy;
    LossGrad lg = loss_and_grad(zero, batch, cfg);
    CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("focal loss with gamma zero equals cross entropy") {
    Rng rng(111);
    for (int trial = 0; trial < 20; ++trial) {
        Model model = random_model(rng);
        auto batch = random_batch(rng, rng.uniform_int(1, 8));
        TrainConfig ce;
        ce.loss = LossKind::cross_entropy;
        TrainConfig focal;
        focal.loss = LossKind::focal;
        focal.focal_gamma = 0.0;
        LossGrad a = loss_and_grad(model, batch, ce);
        LossGrad b = loss_and_grad(model, batch, focal);
        CHECK(std::abs(a.loss - b.loss) < 1e-12);
        CHECK(std::abs(a.grad_b - b.grad_b) < 1e-12);
        for (int i = 0; i < kFeatureDim; ++i) CHECK(std::abs(a.grad_w[i] - b.grad_w[i]) < 1e-12);
    }
}

TEST_CASE("weighted cross entropy with unit weights equals cross entropy") {
    Rng rng(112);
    Model model = random_model(rng);
    auto batch = random_batch(rng, 6);
    TrainConfig ce;
    ce.loss = LossKind::cross_entropy;
    TrainConfig weighted;
    weighted.loss = LossKind::weighted_cross_entropy;
    weighted.weight_present = 1.0;
    weighted.weight_absent = 1.0;
    LossGrad a = loss_and_grad(model, batch, ce);
    LossGrad b = loss_and_grad(model, batch, weighted);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
    CHECK(a.grad_b == doctest::Approx(b.grad_b).epsilon(1e-12));
}

TEST_CASE("analytic gradients match finite differences for all losses") {
    Rng rng(113);
    for (LossKind kind :
         {LossKind::cross_entropy, LossKind::weighted_cross_entropy, LossKind::focal}) {
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            Model model = random_model(rng);
            auto batch = random_batch(rng, rng.uniform_int(1, 6));
            TrainConfig cfg;
            cfg.loss = kind;
            cfg.weight_present = rng.uniform(0.5, 2.0);
            cfg.weight_absent = rng.uniform(0.5, 2.0);
            cfg.focal_gamma = 2.0;
            worst = std::max(worst, max_grad_rel_error(model, batch, cfg));
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("training separates a separable toy set") {
    TrainConfig cfg = quiet_train_cfg();
    // The default rate is tuned for corpus-sized runs; a tiny toy set sees
    // too few optimizer steps before the schedule decays the rate away.
    cfg.learning_rate = 0.05;
    auto patches = separable_patches();
    Model model = train(patches, cfg);
    Metrics m = evaluate(model, patches);
    CHECK(m.accuracy == 1.0);
}

TEST_CASE("learning rate follows the step schedule") {
    TrainConfig cfg = quiet_train_cfg();
    cfg.epochs = 16;
    std::vector<EpochLog> log;
    train(separable_patches(), cfg, &log);
    REQUIRE(static_cast<int>(log.size()) == 16);
    CHECK(log[0].lr == doctest::Approx(0.002).epsilon(1e-12));
    CHECK(log[6].lr == doctest::Approx(0.002).epsilon(1e-12));
    CHECK(log[7].lr == doctest::Approx(0.0002).epsilon(1e-12));
    CHECK(log[14].lr == doctest::Approx(0.00002).epsilon(1e-12));
}

TEST_CASE("training twice from the same seed is bitwise identical") {
    TrainConfig cfg;
    cfg.seed = 4;
    auto patches = separable_patches();
    Model a = train(patches, cfg);
    Model b = train(patches, cfg);
    CHECK(a.bias == b.bias);
    for (int i = 0; i < kFeatureDim; ++i) CHECK(a.weights[i] == b.weights[i]);
}

TEST_CASE("training refuses a single-class set") {
    std::vector<LabeledPatch> patches;
    for (int i = 0; i < 4; ++i) {
        LabeledPatch p;
        p.patch_id = std::to_string(i);
        p.image = GrayImage(kPatchSide, kPatchSide, 100);
        p.label = PatchLabel::absent;
        patches.push_back(p);
    }
    CHECK_THROWS_AS(train(patches, TrainConfig{}), TrainingError);
}

TEST_CASE("evaluate matches hand-counted confusion") {
    // A model that always says absent.
    Model pessimist;
    pessimist.bias = -10.0;
    std::vector<LabeledPatch> balanced;
    for (int i = 0; i < 10; ++i) {
        LabeledPatch p;
        p.patch_id = std::to_string(i);
        p.image = GrayImage(kPatchSide, kPatchSide, 100);
        p.label = i < 5 ? PatchLabel::present : PatchLabel::absent;
        balanced.push_back(p);
    }
    Metrics m = evaluate(pessimist, balanced);
    CHECK(m.accuracy == 0.5);
    CHECK(m.sensitivity == 0.0);
    CHECK(m.specificity == 1.0);
    CHECK(m.tp == 0);
    CHECK(m.fn == 5);
    CHECK(m.tn == 5);
    CHECK(m.fp == 0);
}

TEST_CASE("occlusion saliency geometry and zero model") {
    Model zero;
    GrayImage img(kPatchSide, kPatchSide, 90);
    SaliencyMap map = occlusion_saliency(zero, img, 56, 28);
    CHECK(map.width == (kPatchSide - 56) / 28 + 1);
    CHECK(map.height == map.width);
    for (double v : map.values) CHECK(v == 0.0);

    CHECK_THROWS_AS(occlusion_saliency(zero, img, 500, 28), InvalidArgumentError);
}

TEST_CASE("occlusion saliency peaks at the feature the model reads") {
    // Weight only the top-left border strip mean.
    Model model;
    model.weights[kDownsampleGrid * kDownsampleGrid + kEdgeBins] = 50.0;
    GrayImage img(kPatchSide, kPatchSide, 30);
    for (int y = 0; y < 14; ++y) {
        for (int x = 0; x < 56; ++x) img.at(x, y) = 240;
    }
    SaliencyMap map = occlusion_saliency(model, img, 56, 56);
    int best = 0;
    for (int i = 1; i < static_cast<int>(map.values.size()); ++i) {
        if (std::abs(map.values[i]) > std::abs(map.values[best])) best = i;
    }
    CHECK(best / map.width == 0);
    CHECK(best % map.width == 0);
}

TEST_CASE("model serialization round-trips") {
    testutil::TempDir tmp("model");
    Rng rng(114);
    Model m = random_model(rng);
    std::string path = tmp.str() + "/model.txt";
    save_model(m, path);
    Model back = load_model(path);
    CHECK(back.bias == doctest::Approx(m.bias).epsilon(1e-15));
    for (int i = 0; i < kFeatureDim; ++i) {
        CHECK(back.weights[i] == doctest::Approx(m.weights[i]).epsilon(1e-15));
    }
    CHECK_THROWS_AS(load_model(tmp.str() + "/missing.txt"), ValidationError);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
    cfg = TrainConfig{};
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
    cfg = TrainConfig{};
    cfg.equalize_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
}
