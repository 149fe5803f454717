#include "spinepatch/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "spinepatch/error.hpp"
#include "spinepatch/image_io.hpp"
#include "spinepatch/pipeline.hpp"

namespace spinepatch {

std::string to_string(LossKind k) {
    switch (k) {
        case LossKind::cross_entropy: return "cross_entropy";
        case LossKind::weighted_cross_entropy: return "weighted_cross_entropy";
        case LossKind::focal: return "focal";
    }
    return "cross_entropy";
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "cross_entropy") return LossKind::cross_entropy;
    if (s == "weighted_cross_entropy") return LossKind::weighted_cross_entropy;
    if (s == "focal") return LossKind::focal;
    throw InvalidArgumentError("unknown loss '" + s + "'");
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw InvalidArgumentError("learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw InvalidArgumentError("momentum must be in [0, 1)");
    if (scheduler_step < 1) throw InvalidArgumentError("scheduler_step must be >= 1");
    if (epochs < 1) throw InvalidArgumentError("epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgumentError("batch_size must be >= 1");
    if (equalize_prob < 0.0 || equalize_prob > 1.0) {
        throw InvalidArgumentError("equalize_prob must be in [0, 1]");
    }
    if (rotation_max_deg < 0.0 || rotation_max_deg > 180.0) {
        throw InvalidArgumentError("rotation_max_deg must be in [0, 180]");
    }
    if (focal_gamma < 0.0) throw InvalidArgumentError("focal_gamma must be >= 0");
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

double predict_probability(const Model& model, const FeatureVector& f) {
    double z = model.bias;
    for (int i = 0; i < kFeatureDim; ++i) z += model.weights[i] * f[i];
    return sigmoid(z);
}

FeatureVector extract_features(const GrayImage& patch_img) {
    if (patch_img.width < 1 || patch_img.height < 1) {
        throw InvalidArgumentError("cannot extract features from an empty image");
    }
    GrayImage img = (patch_img.width == kPatchSide && patch_img.height == kPatchSide)
                        ? patch_img
                        : resize_bilinear(patch_img, kPatchSide, kPatchSide);
    FeatureVector f{};

    // 16x16 mean-pooled intensities.
    constexpr int cell = kPatchSide / kDownsampleGrid;  // 14
    for (int gy = 0; gy < kDownsampleGrid; ++gy) {
        for (int gx = 0; gx < kDownsampleGrid; ++gx) {
            double sum = 0.0;
            for (int y = gy * cell; y < (gy + 1) * cell; ++y) {
                for (int x = gx * cell; x < (gx + 1) * cell; ++x) {
                    sum += img.at(x, y);
                }
            }
            f[gy * kDownsampleGrid + gx] = sum / (cell * cell * 255.0);
        }
    }

    // Gradient magnitude histogram, 3x3 central differences, bin width 8.
    double hist[kEdgeBins] = {};
    long count = 0;
    for (int y = 1; y < kPatchSide - 1; ++y) {
        const std::uint8_t* rm = img.data.data() + static_cast<std::size_t>(y - 1) * kPatchSide;
        const std::uint8_t* rc = rm + kPatchSide;
        const std::uint8_t* rp = rc + kPatchSide;
        for (int x = 1; x < kPatchSide - 1; ++x) {
            double gx = (rc[x + 1] - rc[x - 1]) / 2.0;
            double gy = (rp[x] - rm[x]) / 2.0;
            double mag = std::sqrt(gx * gx + gy * gy);
            int bin = std::min(kEdgeBins - 1, static_cast<int>(mag / 8.0));
            hist[bin] += 1.0;
            ++count;
        }
    }
    for (int i = 0; i < kEdgeBins; ++i) {
        f[kDownsampleGrid * kDownsampleGrid + i] = hist[i] / static_cast<double>(count);
    }

    // Border strips: depth 14, four segments per side, clockwise from top.
    constexpr int depth = kPatchSide / kDownsampleGrid;
    constexpr int seg = kPatchSide / 4;
    int base = kDownsampleGrid * kDownsampleGrid + kEdgeBins;
    auto strip_mean = [&](int x0, int y0, int x1, int y1) {
        double sum = 0.0;
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) sum += img.at(x, y);
        }
        return sum / ((x1 - x0) * (y1 - y0) * 255.0);
    };
    for (int s = 0; s < 4; ++s) {
        f[base + s] = strip_mean(s * seg, 0, (s + 1) * seg, depth);                       // top
        f[base + 4 + s] = strip_mean(kPatchSide - depth, s * seg, kPatchSide, (s + 1) * seg);  // right
        f[base + 8 + s] = strip_mean(s * seg, kPatchSide - depth, (s + 1) * seg, kPatchSide);  // bottom
        f[base + 12 + s] = strip_mean(0, s * seg, depth, (s + 1) * seg);                  // left
    }
    return f;
}

GrayImage augment(const GrayImage& patch_img, const TrainConfig& cfg, Rng& rng) {
    double angle = rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg);
    bool equalize = rng.uniform() < cfg.equalize_prob;
    GrayImage out = rotate(patch_img, angle);
    if (equalize) out = equalize_histogram(out);
    return out;
}

LossGrad loss_and_grad(const Model& model, const std::vector<Sample>& batch,
                       const TrainConfig& cfg) {
    if (batch.empty()) throw InvalidArgumentError("loss_and_grad needs a non-empty batch");
    LossGrad out;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const Sample& s : batch) {
        double p = clamp_prob(predict_probability(model, s.features));
        double y = s.label ? 1.0 : 0.0;
        double wt = 1.0;
        if (cfg.loss == LossKind::weighted_cross_entropy) {
            wt = s.label ? cfg.weight_present : cfg.weight_absent;
        }
        double loss, dz;
        if (cfg.loss == LossKind::focal) {
            double pt = s.label ? p : 1.0 - p;
            double sign = s.label ? 1.0 : -1.0;
            double g = cfg.focal_gamma;
            double one_m = 1.0 - pt;
            loss = -std::pow(one_m, g) * std::log(pt);
            double dldpt = -std::pow(one_m, g) / pt;
            if (g != 0.0) dldpt += g * std::pow(one_m, g - 1.0) * std::log(pt);
            dz = sign * p * (1.0 - p) * dldpt;
        } else {
            loss = -wt * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
            dz = wt * (p - y);
        }
        out.loss += loss * inv_n;
        double scale = dz * inv_n;
        for (int i = 0; i < kFeatureDim; ++i) out.grad_w[i] += scale * s.features[i];
        out.grad_b += scale;
    }
    return out;
}

Model train(const std::vector<LabeledPatch>& patches, const TrainConfig& user_cfg,
            std::vector<EpochLog>* log) {
    TrainConfig cfg = user_cfg;
    cfg.validate();
    long n_pos = 0, n_neg = 0;
    for (const LabeledPatch& p : patches) {
        (p.label == PatchLabel::present ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0) {
        throw TrainingError("training set must contain both classes (present: " +
                            std::to_string(n_pos) + ", absent: " + std::to_string(n_neg) + ")");
    }
    // Class weights inversely proportional to frequency, frozen now.
    if (cfg.loss == LossKind::weighted_cross_entropy) {
        double n = static_cast<double>(n_pos + n_neg);
        cfg.weight_present = n / (2.0 * static_cast<double>(n_pos));
        cfg.weight_absent = n / (2.0 * static_cast<double>(n_neg));
    }

    Model model;
    std::array<double, kFeatureDim> vel_w{};
    double vel_b = 0.0;

    std::vector<std::size_t> order(patches.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double lr = cfg.learning_rate *
                    std::pow(cfg.scheduler_gamma, (epoch - 1) / cfg.scheduler_step);
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);

        double epoch_loss = 0.0;
        long correct = 0;
        int n_batches = 0;
        std::vector<Sample> batch;
        batch.reserve(cfg.batch_size);
        auto flush = [&] {
            if (batch.empty()) return;
            for (const Sample& s : batch) {
                double p = predict_probability(model, s.features);
                if ((p >= 0.5 ? 1 : 0) == s.label) ++correct;
            }
            LossGrad lg = loss_and_grad(model, batch, cfg);
            epoch_loss += lg.loss;
            ++n_batches;
            for (int i = 0; i < kFeatureDim; ++i) {
                vel_w[i] = cfg.momentum * vel_w[i] - lr * lg.grad_w[i];
                model.weights[i] += vel_w[i];
            }
            vel_b = cfg.momentum * vel_b - lr * lg.grad_b;
            model.bias += vel_b;
            batch.clear();
        };
        for (std::size_t idx : order) {
            const LabeledPatch& p = patches[idx];
            GrayImage aug = augment(p.image, cfg, rng);
            Sample s;
            s.features = extract_features(aug);
            s.label = p.label == PatchLabel::present ? 1 : 0;
            batch.push_back(std::move(s));
            if (static_cast<int>(batch.size()) == cfg.batch_size) flush();
        }
        flush();

        if (log) {
            EpochLog el;
            el.epoch = epoch;
            el.lr = lr;
            el.loss = n_batches ? epoch_loss / n_batches : 0.0;
            el.train_acc = static_cast<double>(correct) / static_cast<double>(patches.size());
            log->push_back(el);
        }
    }
    return model;
}

Metrics evaluate(const Model& model, const std::vector<LabeledPatch>& patches) {
    if (patches.empty()) throw InvalidArgumentError("evaluate needs a non-empty patch set");
    Metrics m;
    for (const LabeledPatch& p : patches) {
        double prob = predict_probability(model, extract_features(p.image));
        bool pred = prob >= 0.5;
        bool truth = p.label == PatchLabel::present;
        if (pred && truth) ++m.tp;
        else if (pred && !truth) ++m.fp;
        else if (!pred && !truth) ++m.tn;
        else ++m.fn;
    }
    double n = static_cast<double>(patches.size());
    m.accuracy = static_cast<double>(m.tp + m.tn) / n;
    m.sensitivity = (m.tp + m.fn) ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
    m.specificity = (m.tn + m.fp) ? static_cast<double>(m.tn) / (m.tn + m.fp) : 0.0;
    return m;
}

SaliencyMap occlusion_saliency(const Model& model, const GrayImage& patch_img, int window,
                               int stride) {
    if (window < 1 || stride < 1) throw InvalidArgumentError("window and stride must be >= 1");
    GrayImage img = (patch_img.width == kPatchSide && patch_img.height == kPatchSide)
                        ? patch_img
                        : resize_bilinear(patch_img, kPatchSide, kPatchSide);
    if (window > kPatchSide) {
        throw InvalidArgumentError("occlusion window larger than the patch");
    }
    std::uint8_t fill = static_cast<std::uint8_t>(std::lround(mean_intensity(img)));
    double p0 = predict_probability(model, extract_features(img));

    SaliencyMap map;
    map.window = window;
    map.stride = stride;
    map.width = (kPatchSide - window) / stride + 1;
    map.height = map.width;
    map.values.resize(static_cast<std::size_t>(map.width) * map.height);
    for (int j = 0; j < map.height; ++j) {
        for (int i = 0; i < map.width; ++i) {
            GrayImage occluded = img;
            for (int y = j * stride; y < j * stride + window; ++y) {
                for (int x = i * stride; x < i * stride + window; ++x) {
                    occluded.at(x, y) = fill;
                }
            }
            double p = predict_probability(model, extract_features(occluded));
            map.values[static_cast<std::size_t>(j) * map.width + i] = p0 - p;
        }
    }
    return map;
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "spinepatch-model 1\n" << kFeatureDim << "\n";
    char buf[64];
    for (int i = 0; i < kFeatureDim; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", model.weights[i]);
        out << buf << "\n";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", model.bias);
    out << buf << "\n";
    if (!out) throw IoError("write failure: " + path);
}

Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgumentError("model file not found: " + path);
    std::string magic;
    int version = 0, dim = 0;
    in >> magic >> version >> dim;
    if (magic != "spinepatch-model" || version != 1) {
        throw FileParseError("not a spinepatch model file: " + path, 0);
    }
    if (dim != kFeatureDim) {
        throw FileParseError("model dimension mismatch in " + path, 0);
    }
    Model model;
    for (int i = 0; i < kFeatureDim; ++i) {
        if (!(in >> model.weights[i])) throw FileParseError("truncated model file: " + path, 0);
    }
    if (!(in >> model.bias)) throw FileParseError("truncated model file: " + path, 0);
    return model;
}

void write_epoch_log_csv(const std::vector<EpochLog>& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "epoch,lr,loss,train_acc\n";
    char buf[128];
    for (const EpochLog& e : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.6f\n", e.epoch, e.lr, e.loss,
                      e.train_acc);
        out << buf;
    }
    if (!out) throw IoError("write failure: " + path);
}

std::vector<LabeledPatch> collect_patches(const DatasetManifest& manifest, PatchMethod method,
                                          const std::string& split, int jobs) {
    // Slot per matching patch, grouped by scan so each image loads once.
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < manifest.patches.size(); ++i) {
        const PatchRecord& p = manifest.patches[i];
        if (p.method != method) continue;
        if (!split.empty() && (!p.split || *p.split != split)) continue;
        selected.push_back(i);
    }
    std::map<std::string, std::vector<std::size_t>> by_scan;  // scan_id -> positions in 'selected'
    for (std::size_t k = 0; k < selected.size(); ++k) {
        by_scan[manifest.patches[selected[k]].scan_id].push_back(k);
    }
    std::vector<const std::vector<std::size_t>*> groups;
    std::vector<std::string> group_scan;
    for (const auto& [scan_id, ks] : by_scan) {
        groups.push_back(&ks);
        group_scan.push_back(scan_id);
    }

    std::vector<LabeledPatch> out(selected.size());
    parallel_for(groups.size(), jobs, [&](std::size_t g) {
        const ScanRecord* scan = manifest.find_scan(group_scan[g]);
        if (!scan) throw SchemaError("patch references unknown scan '" + group_scan[g] + "'");
        GrayImage img = load_image(manifest.resolve(scan->image_path));
        for (std::size_t k : *groups[g]) {
            const PatchRecord& rec = manifest.patches[selected[k]];
            GrayImage patch = crop(img, rec.crop);
            LabeledPatch lp;
            lp.patch_id = rec.patch_id;
            lp.image = resize_bilinear(patch, kPatchSide, kPatchSide);
            lp.label = rec.label;
            out[k] = std::move(lp);
        }
    });
    return out;
}

}  // namespace spinepatch
