// spinepatch: patch datasets from annotated spine radiographs.
//
// Machine-readable JSON goes to stdout, human logs to stderr. Exit codes:
// 0 success, 1 validation/schema errors, 2 I/O errors.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spinepatch/annotations.hpp"
#include "spinepatch/classifier.hpp"
#include "spinepatch/error.hpp"
#include "spinepatch/image_io.hpp"
#include "spinepatch/pipeline.hpp"
#include "spinepatch/raster.hpp"
#include "spinepatch/segpatch.hpp"
#include "spinepatch/synthgen.hpp"
#include "spinepatch/tiling.hpp"

namespace sp = spinepatch;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };
LogLevel g_log_level = LogLevel::info;

void log_at(LogLevel lvl, const std::string& msg) {
    static const char* names[] = {"debug", "info", "warn", "error"};
    if (lvl >= g_log_level) {
        std::cerr << "[" << names[static_cast<int>(lvl)] << "] " << msg << "\n";
    }
}
void log_info(const std::string& msg) { log_at(LogLevel::info, msg); }
void log_warn(const std::string& msg) { log_at(LogLevel::warn, msg); }

LogLevel parse_log_level(const std::string& s) {
    if (s == "debug") return LogLevel::debug;
    if (s == "info") return LogLevel::info;
    if (s == "warn") return LogLevel::warn;
    if (s == "error") return LogLevel::error;
    throw sp::InvalidArgumentError("unknown log level '" + s + "'");
}

void emit(const json& j) { std::cout << j.dump(2) << std::endl; }

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw sp::IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw sp::IoError("write failure: " + path);
}

json metrics_to_json(const sp::Metrics& m) {
    return json{{"accuracy", m.accuracy},
                {"sensitivity", m.sensitivity},
                {"specificity", m.specificity},
                {"confusion", {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}}}};
}

json summary_to_json(const sp::PatchRunSummary& s) {
    double total = s.present + s.absent;
    json j{{"present", s.present},
           {"absent", s.absent},
           {"positive_fraction", total > 0 ? s.present / total : 0.0}};
    if (!s.failures.empty()) j["failures"] = s.failures;
    return j;
}

json coverage_to_json(const sp::CoverageReport& r) {
    json unc = json::array();
    for (const sp::UncoveredOsteophyte& u : r.uncovered) {
        unc.push_back({{"scan_id", u.scan_id}, {"x", u.location.x}, {"y", u.location.y}});
    }
    return json{{"total_osteophytes", r.total},
                {"uncovered", unc},
                {"coverage", r.coverage()},
                {"total_by_region", r.total_by_region},
                {"uncovered_by_region", r.uncovered_by_region}};
}

// Per-method train/test evaluation used by demo and compare.
json evaluate_method(const sp::DatasetManifest& manifest, sp::PatchMethod method,
                     const sp::Model& model, int jobs) {
    json out;
    for (const char* split : {"train", "test"}) {
        auto patches = sp::collect_patches(manifest, method, split, jobs);
        sp::Metrics m = sp::evaluate(model, patches);
        json jm = metrics_to_json(m);
        int present = 0;
        for (const auto& p : patches) {
            if (p.label == sp::PatchLabel::present) ++present;
        }
        jm["n_patches"] = patches.size();
        jm["present"] = present;
        jm["absent"] = static_cast<int>(patches.size()) - present;
        jm["positive_fraction"] =
            patches.empty() ? 0.0 : static_cast<double>(present) / patches.size();
        out[split] = jm;
    }
    out["method"] = sp::to_string(method);
    return out;
}

json compare_report(const json& tiling_metrics, const json& segpatch_metrics) {
    for (const json* j : {&tiling_metrics, &segpatch_metrics}) {
        if (!j->contains("train") || !j->contains("test")) {
            throw sp::ValidationError("metrics JSON must contain 'train' and 'test' sections");
        }
    }
    double gap = segpatch_metrics["test"]["accuracy"].get<double>() -
                 tiling_metrics["test"]["accuracy"].get<double>();
    json j{{"tiling", tiling_metrics},
           {"segpatch", segpatch_metrics},
           {"test_accuracy_gap", gap}};
    return j;
}

std::string compare_markdown(const json& cmp) {
    std::ostringstream md;
    md << "| method | split | accuracy | sensitivity | specificity | positive fraction |\n";
    md << "|---|---|---|---|---|---|\n";
    char buf[256];
    for (const char* method : {"segpatch", "tiling"}) {
        for (const char* split : {"test", "train"}) {
            const json& m = cmp[method][split];
            std::snprintf(buf, sizeof(buf), "| %s | %s | %.4f | %.4f | %.4f | %.4f |\n", method,
                          split, m["accuracy"].get<double>(), m["sensitivity"].get<double>(),
                          m["specificity"].get<double>(), m["positive_fraction"].get<double>());
            md << buf;
        }
    }
    std::snprintf(buf, sizeof(buf), "\nTest accuracy gap (segpatch - tiling): %.4f\n",
                  cmp["test_accuracy_gap"].get<double>());
    md << buf;
    return md.str();
}

struct SynthFlags {
    std::string out_dir;
    sp::SynthConfig cfg;
    int jobs = 1;
};

sp::DatasetManifest run_synth(const SynthFlags& f) {
    sp::DatasetManifest manifest = sp::generate(f.cfg, f.out_dir, f.jobs);
    sp::write_manifest(manifest, f.out_dir + "/manifest.json");
    log_info("generated " + std::to_string(manifest.scans.size()) + " scans under " + f.out_dir);
    return manifest;
}

struct TrainFlags {
    sp::PatchMethod method = sp::PatchMethod::segpatch;
    sp::TrainConfig cfg;
    std::string model_out;
    std::string log_out;
    int jobs = 1;
};

sp::Model run_train(const sp::DatasetManifest& manifest, const TrainFlags& f) {
    if (manifest.splits.find("train") == manifest.splits.end()) {
        throw sp::ValidationError("manifest has no train split; run 'split' first");
    }
    auto patches = sp::collect_patches(manifest, f.method, "train", f.jobs);
    if (patches.empty()) {
        throw sp::ValidationError("no " + sp::to_string(f.method) +
                                  " patches in the train split; run the patcher first");
    }
    std::vector<sp::EpochLog> log;
    sp::Model model = sp::train(patches, f.cfg, &log);
    sp::save_model(model, f.model_out);
    if (!f.log_out.empty()) sp::write_epoch_log_csv(log, f.log_out);
    log_info("trained " + sp::to_string(f.method) + " model on " +
             std::to_string(patches.size()) + " patches -> " + f.model_out);
    return model;
}

// Osteophyte-to-vertebra association for imported data: nearest vertebra
// centroid when the CSV does not name one.
void associate_osteophytes(sp::ScanRecord& scan) {
    for (sp::OsteophytePoint& o : scan.osteophytes) {
        if (o.vertebra_id) continue;
        double best = -1.0;
        for (const sp::VertebraAnnotation& v : scan.vertebrae) {
            sp::Point c{0, 0};
            for (const sp::Point& p : v.points) {
                c.x += p.x / 6.0;
                c.y += p.y / 6.0;
            }
            double d = std::hypot(o.location.x - c.x, o.location.y - c.y);
            if (best < 0 || d < best) {
                best = d;
                o.vertebra_id = v.vertebra_id;
            }
        }
    }
}

sp::DatasetManifest import_csv(const std::string& csv_path, const std::string& images_dir,
                               const std::string& out_dir) {
    std::ifstream in(csv_path);
    if (!in) throw sp::IoError("cannot open CSV: " + csv_path);

    struct RawScan {
        std::string region;
        std::map<int, sp::Point> vertebra_pts;  // index -> point
        std::vector<sp::Point> osteophytes;
    };
    std::map<std::string, RawScan> raw;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line_no == 1 && line.rfind("scan_id", 0) == 0) continue;  // header
        std::istringstream ls(line);
        std::string scan_id, kind, idx_s, x_s, y_s, region;
        if (!std::getline(ls, scan_id, ',') || !std::getline(ls, kind, ',') ||
            !std::getline(ls, idx_s, ',') || !std::getline(ls, x_s, ',') ||
            !std::getline(ls, y_s, ',') || !std::getline(ls, region)) {
            throw sp::SchemaError("CSV line " + std::to_string(line_no) +
                                  ": expected scan_id,kind,index,x,y,region");
        }
        RawScan& rs = raw[scan_id];
        if (rs.region.empty()) rs.region = region;
        else if (rs.region != region) {
            throw sp::SchemaError("CSV line " + std::to_string(line_no) + ": scan '" + scan_id +
                                  "' has inconsistent regions");
        }
        sp::Point p{std::stod(x_s), std::stod(y_s)};
        if (kind == "vertebra_pt") {
            rs.vertebra_pts[std::stoi(idx_s)] = p;
        } else if (kind == "osteophyte") {
            rs.osteophytes.push_back(p);
        } else {
            throw sp::SchemaError("CSV line " + std::to_string(line_no) + ": unknown kind '" +
                                  kind + "'");
        }
    }

    sp::ensure_dir(out_dir);
    sp::DatasetManifest manifest;
    manifest.base_dir = out_dir;
    for (auto& [scan_id, rs] : raw) {
        sp::ScanRecord scan;
        scan.scan_id = scan_id;
        scan.region = sp::region_from_string(rs.region);
        std::string img_path;
        for (const char* ext : {".pgm", ".png"}) {
            std::string candidate = images_dir + "/" + scan_id + ext;
            if (fs::exists(candidate)) {
                img_path = candidate;
                break;
            }
        }
        if (img_path.empty()) {
            throw sp::IoError("no image for scan '" + scan_id + "' under " + images_dir);
        }
        sp::GrayImage img = sp::load_image(img_path);
        scan.width = img.width;
        scan.height = img.height;
        scan.image_path = fs::relative(img_path, out_dir).string();

        // Six consecutive indices form one vertebra.
        std::vector<std::pair<int, sp::Point>> pts(rs.vertebra_pts.begin(),
                                                   rs.vertebra_pts.end());
        if (pts.size() % 6 != 0) {
            throw sp::SchemaError("scan '" + scan_id + "' has " + std::to_string(pts.size()) +
                                  " vertebra points; each vertebra needs exactly six pixel points");
        }
        for (std::size_t v = 0; v * 6 < pts.size(); ++v) {
            sp::VertebraAnnotation ann;
            ann.vertebra_id = "v" + std::to_string(v);
            ann.region = scan.region;
            for (std::size_t k = 0; k < 6; ++k) ann.points.push_back(pts[v * 6 + k].second);
            scan.vertebrae.push_back(std::move(ann));
        }
        for (const sp::Point& p : rs.osteophytes) {
            scan.osteophytes.push_back(sp::OsteophytePoint{p, std::nullopt});
        }
        associate_osteophytes(scan);
        manifest.scans.push_back(std::move(scan));
    }
    sp::validate_manifest(manifest);
    sp::write_manifest(manifest, out_dir + "/manifest.json");
    return manifest;
}

struct DemoFlags {
    std::string out_dir;
    std::uint64_t seed = 7;
    int n_scans = 40;
    int jobs = 1;
};

json run_demo(const DemoFlags& f) {
    sp::ensure_dir(f.out_dir);

    SynthFlags synth;
    synth.out_dir = f.out_dir;
    synth.cfg.seed = f.seed;
    synth.cfg.n_scans = f.n_scans;
    synth.jobs = f.jobs;
    sp::DatasetManifest manifest = run_synth(synth);

    sp::TilingConfig tcfg;
    sp::PatchRunSummary tiling_summary = sp::run_tiling(manifest, tcfg, f.out_dir, f.jobs);
    for (const std::string& w : tiling_summary.failures) log_warn(w);

    sp::SegPatchConfig scfg;
    sp::PatchRunSummary seg_summary = sp::run_segpatch(manifest, scfg, f.out_dir, f.jobs);
    for (const std::string& w : seg_summary.failures) log_warn(w);

    sp::split_dataset(manifest, 0.75, f.seed);
    sp::write_manifest(manifest, f.out_dir + "/manifest.json");

    sp::CoverageReport coverage = sp::coverage_report(manifest);
    write_text_file(f.out_dir + "/segpatch/coverage.json", coverage_to_json(coverage).dump(2) + "\n");

    json metrics;
    for (sp::PatchMethod method : {sp::PatchMethod::tiling, sp::PatchMethod::segpatch}) {
        TrainFlags tf;
        tf.method = method;
        tf.cfg.seed = f.seed;
        tf.model_out = f.out_dir + "/model_" + sp::to_string(method) + ".txt";
        tf.log_out = f.out_dir + "/train_log_" + sp::to_string(method) + ".csv";
        tf.jobs = f.jobs;
        sp::Model model = run_train(manifest, tf);
        json m = evaluate_method(manifest, method, model, f.jobs);
        write_text_file(f.out_dir + "/metrics_" + sp::to_string(method) + ".json",
                        m.dump(2) + "\n");
        metrics[sp::to_string(method)] = m;
    }

    json cmp = compare_report(metrics["tiling"], metrics["segpatch"]);
    cmp["coverage"] = coverage_to_json(coverage);
    cmp["patch_counts"] = {{"tiling", summary_to_json(tiling_summary)},
                           {"segpatch", summary_to_json(seg_summary)}};
    write_text_file(f.out_dir + "/compare.json", cmp.dump(2) + "\n");
    write_text_file(f.out_dir + "/compare.md", compare_markdown(cmp));
    return cmp;
}

int run(int argc, char** argv) {
    CLI::App app{"spinepatch: osteophyte patch datasets from spine radiographs"};
    app.require_subcommand(1);

    std::string log_level = "info";
    app.add_option("--log-level", log_level, "debug|info|warn|error");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic annotated corpus");
    SynthFlags synth;
    synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();
    synth_cmd->add_option("--seed", synth.cfg.seed, "RNG seed");
    synth_cmd->add_option("--n-scans", synth.cfg.n_scans, "number of scans");
    synth_cmd->add_option("--region-mix", synth.cfg.region_mix, "fraction of cervical scans");
    synth_cmd->add_option("--osteophyte-rate", synth.cfg.osteophyte_rate,
                          "probability per vertebra corner");
    synth_cmd->add_option("--bump-radius", synth.cfg.bump_radius, "osteophyte bump radius, px");
    synth_cmd->add_option("--noise-sigma", synth.cfg.noise_sigma, "Gaussian noise sigma");
    synth_cmd->add_option("--curvature", synth.cfg.curvature_deg, "max spine deviation, degrees");
    synth_cmd->add_option("--artifact-text-rate", synth.cfg.artifact_text_rate,
                          "probability of a burned-in film marker");
    synth_cmd->add_option("--jobs", synth.jobs, "parallel scan generation");

    // import
    auto* import_cmd = app.add_subcommand("import", "build a manifest from an annotation CSV");
    std::string import_csv_path, import_images, import_out;
    import_cmd->add_option("--csv", import_csv_path, "CSV of scan_id,kind,index,x,y,region")
        ->required();
    import_cmd->add_option("--images-dir", import_images, "directory of scan images")->required();
    import_cmd->add_option("--out-dir", import_out, "directory for manifest.json")->required();

    // shared manifest flag helper
    auto add_manifest = [](CLI::App* cmd, std::string& var) {
        cmd->add_option("--manifest", var, "manifest JSON path")->required();
    };

    // tile
    auto* tile_cmd = app.add_subcommand("tile", "baseline grid tiling patcher");
    std::string tile_manifest, tile_out;
    sp::TilingConfig tile_cfg;
    int tile_jobs = 1;
    add_manifest(tile_cmd, tile_manifest);
    tile_cmd->add_option("--out-dir", tile_out, "patch output dir (default: manifest dir)");
    tile_cmd->add_option("--tile-w", tile_cfg.tile_w, "tile width")
        ->check(CLI::PositiveNumber);
    tile_cmd->add_option("--tile-h", tile_cfg.tile_h, "tile height")
        ->check(CLI::PositiveNumber);
    tile_cmd->add_option("--half-extent", tile_cfg.annotation_half_extent,
                         "osteophyte annotation box half extent")
        ->check(CLI::PositiveNumber);
    tile_cmd->add_option("--jobs", tile_jobs, "parallel scans");

    // segpatch
    auto* seg_cmd = app.add_subcommand("segpatch", "segmentation-driven patcher");
    std::string seg_manifest, seg_out, seg_source = "mask", seg_geom = "expanded_polygon";
    sp::SegPatchConfig seg_cfg;
    int seg_jobs = 1;
    add_manifest(seg_cmd, seg_manifest);
    seg_cmd->add_option("--out-dir", seg_out, "patch output dir (default: manifest dir)");
    seg_cmd->add_option("--dx-cervical", seg_cfg.dx_minus_x[sp::Region::cervical],
                        "-X expansion, cervical");
    seg_cmd->add_option("--dx-lumbar", seg_cfg.dx_minus_x[sp::Region::lumbar],
                        "-X expansion, lumbar");
    seg_cmd->add_option("--dy-cervical", seg_cfg.dy_plus_y[sp::Region::cervical],
                        "+Y expansion, cervical");
    seg_cmd->add_option("--dy-lumbar", seg_cfg.dy_plus_y[sp::Region::lumbar],
                        "+Y expansion, lumbar");
    seg_cmd->add_option("--contour-source", seg_source, "mask|six_points");
    seg_cmd->add_option("--label-geometry", seg_geom, "expanded_polygon|crop_bbox");
    seg_cmd->add_option("--jobs", seg_jobs, "parallel scans");

    // split
    auto* split_cmd = app.add_subcommand("split", "stratified scan-level train/test split");
    std::string split_manifest;
    double train_fraction = 0.75;
    std::uint64_t split_seed = 7;
    add_manifest(split_cmd, split_manifest);
    split_cmd->add_option("--train-fraction", train_fraction, "train fraction (default 0.75)");
    split_cmd->add_option("--seed", split_seed, "shuffle seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the patch classifier");
    std::string train_manifest, train_method = "segpatch", train_loss = "weighted_cross_entropy";
    TrainFlags train_flags;
    add_manifest(train_cmd, train_manifest);
    train_cmd->add_option("--method", train_method, "tiling|segpatch");
    train_cmd->add_option("--model-out", train_flags.model_out,
                          "model path (default: <manifest dir>/model_<method>.txt)");
    train_cmd->add_option("--log-out", train_flags.log_out, "per-epoch CSV path");
    train_cmd->add_option("--loss", train_loss, "cross_entropy|weighted_cross_entropy|focal");
    train_cmd->add_option("--lr", train_flags.cfg.learning_rate, "learning rate");
    train_cmd->add_option("--momentum", train_flags.cfg.momentum, "SGD momentum");
    train_cmd->add_option("--scheduler-step", train_flags.cfg.scheduler_step, "LR step epochs");
    train_cmd->add_option("--scheduler-gamma", train_flags.cfg.scheduler_gamma, "LR decay");
    train_cmd->add_option("--epochs", train_flags.cfg.epochs, "training epochs");
    train_cmd->add_option("--batch-size", train_flags.cfg.batch_size, "minibatch size");
    train_cmd->add_option("--focal-gamma", train_flags.cfg.focal_gamma, "focal loss gamma");
    train_cmd->add_option("--rotation-max", train_flags.cfg.rotation_max_deg,
                          "max augmentation rotation, degrees");
    train_cmd->add_option("--equalize-prob", train_flags.cfg.equalize_prob,
                          "random equalization probability");
    train_cmd->add_option("--seed", train_flags.cfg.seed, "training seed");
    train_cmd->add_option("--jobs", train_flags.jobs, "parallel patch loading");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model");
    std::string eval_manifest, eval_method = "segpatch", eval_model, eval_split = "test";
    int eval_jobs = 1;
    add_manifest(eval_cmd, eval_manifest);
    eval_cmd->add_option("--method", eval_method, "tiling|segpatch");
    eval_cmd->add_option("--model", eval_model, "model file")->required();
    eval_cmd->add_option("--split", eval_split, "train|test");
    eval_cmd->add_option("--jobs", eval_jobs, "parallel patch loading");

    // saliency
    auto* sal_cmd = app.add_subcommand("saliency", "occlusion saliency for one patch");
    std::string sal_model, sal_image, sal_prefix;
    int sal_window = 56, sal_stride = 28;
    sal_cmd->add_option("--model", sal_model, "model file")->required();
    sal_cmd->add_option("--image", sal_image, "patch image (PNG or PGM)")->required();
    sal_cmd->add_option("--window", sal_window, "occlusion window, px");
    sal_cmd->add_option("--stride", sal_stride, "occlusion stride, px");
    sal_cmd->add_option("--out-prefix", sal_prefix, "output prefix")->required();

    // overlay
    auto* ov_cmd = app.add_subcommand("overlay", "render annotations over a scan");
    std::string ov_manifest, ov_scan, ov_out, ov_method;
    add_manifest(ov_cmd, ov_manifest);
    ov_cmd->add_option("--scan", ov_scan, "scan_id")->required();
    ov_cmd->add_option("--out", ov_out, "output PNG")->required();
    ov_cmd->add_option("--method", ov_method, "also draw this method's patch boxes");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "corpus summary");
    std::string stats_manifest;
    add_manifest(stats_cmd, stats_manifest);

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "side-by-side method report");
    std::string cmp_tiling, cmp_segpatch, cmp_json_out, cmp_md_out;
    cmp_cmd->add_option("--tiling-metrics", cmp_tiling, "metrics JSON from eval/demo")->required();
    cmp_cmd->add_option("--segpatch-metrics", cmp_segpatch, "metrics JSON")->required();
    cmp_cmd->add_option("--out-json", cmp_json_out, "write comparison JSON here");
    cmp_cmd->add_option("--out-md", cmp_md_out, "write markdown table here");

    // demo
    auto* demo_cmd = app.add_subcommand(
        "demo", "synth -> tile + segpatch -> split -> train both -> compare");
    DemoFlags demo;
    demo_cmd->add_option("--out-dir", demo.out_dir, "output directory")->required();
    demo_cmd->add_option("--seed", demo.seed, "pipeline seed");
    demo_cmd->add_option("--n-scans", demo.n_scans, "corpus size");
    demo_cmd->add_option("--jobs", demo.jobs, "parallel scans");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (const char* env = std::getenv("SPINEPATCH_LOG")) {
        g_log_level = parse_log_level(env);
    } else {
        g_log_level = parse_log_level(log_level);
    }

    if (synth_cmd->parsed()) {
        sp::DatasetManifest manifest = run_synth(synth);
        sp::CorpusStats stats = sp::corpus_stats(manifest);
        emit(json{{"manifest", synth.out_dir + "/manifest.json"},
                  {"scans", stats.scans},
                  {"scans_by_region", stats.scans_by_region},
                  {"vertebrae", stats.vertebrae},
                  {"osteophytes", stats.osteophytes}});
    } else if (import_cmd->parsed()) {
        sp::DatasetManifest manifest = import_csv(import_csv_path, import_images, import_out);
        emit(json{{"manifest", import_out + "/manifest.json"},
                  {"scans", manifest.scans.size()}});
    } else if (tile_cmd->parsed()) {
        sp::DatasetManifest manifest = sp::parse_manifest(tile_manifest);
        std::string out = tile_out.empty() ? manifest.base_dir : tile_out;
        sp::PatchRunSummary s = sp::run_tiling(manifest, tile_cfg, out, tile_jobs);
        sp::write_manifest(manifest, tile_manifest);
        for (const std::string& w : s.failures) log_warn(w);
        emit(json{{"method", "tiling"}, {"counts", summary_to_json(s)}});
        if (!s.failures.empty()) return 2;
    } else if (seg_cmd->parsed()) {
        seg_cfg.contour_source = seg_source == "mask" ? sp::ContourSource::mask
                                 : seg_source == "six_points"
                                     ? sp::ContourSource::six_points
                                     : throw sp::InvalidArgumentError(
                                           "unknown contour source '" + seg_source + "'");
        seg_cfg.label_geometry =
            seg_geom == "expanded_polygon" ? sp::LabelGeometry::expanded_polygon
            : seg_geom == "crop_bbox"
                ? sp::LabelGeometry::crop_bbox
                : throw sp::InvalidArgumentError("unknown label geometry '" + seg_geom + "'");
        sp::DatasetManifest manifest = sp::parse_manifest(seg_manifest);
        std::string out = seg_out.empty() ? manifest.base_dir : seg_out;
        sp::PatchRunSummary s = sp::run_segpatch(manifest, seg_cfg, out, seg_jobs);
        sp::write_manifest(manifest, seg_manifest);
        sp::CoverageReport coverage = sp::coverage_report(manifest);
        write_text_file(out + "/segpatch/coverage.json",
                        coverage_to_json(coverage).dump(2) + "\n");
        for (const std::string& w : s.failures) log_warn(w);
        emit(json{{"method", "segpatch"},
                  {"counts", summary_to_json(s)},
                  {"coverage", coverage.coverage()},
                  {"uncovered", coverage.uncovered.size()}});
        if (!s.failures.empty()) return 2;
    } else if (split_cmd->parsed()) {
        sp::DatasetManifest manifest = sp::parse_manifest(split_manifest);
        sp::split_dataset(manifest, train_fraction, split_seed);
        sp::write_manifest(manifest, split_manifest);
        emit(json{{"train", manifest.splits["train"].size()},
                  {"test", manifest.splits["test"].size()}});
    } else if (train_cmd->parsed()) {
        train_flags.method = sp::patch_method_from_string(train_method);
        train_flags.cfg.loss = sp::loss_kind_from_string(train_loss);
        sp::DatasetManifest manifest = sp::parse_manifest(train_manifest);
        if (train_flags.model_out.empty()) {
            train_flags.model_out =
                manifest.base_dir + "/model_" + sp::to_string(train_flags.method) + ".txt";
        }
        sp::Model model = run_train(manifest, train_flags);
        json m = evaluate_method(manifest, train_flags.method, model, train_flags.jobs);
        emit(json{{"model", train_flags.model_out}, {"metrics", m}});
    } else if (eval_cmd->parsed()) {
        sp::DatasetManifest manifest = sp::parse_manifest(eval_manifest);
        sp::Model model = sp::load_model(eval_model);
        auto patches = sp::collect_patches(manifest, sp::patch_method_from_string(eval_method),
                                           eval_split, eval_jobs);
        if (patches.empty()) {
            throw sp::ValidationError("no " + eval_method + " patches in split '" + eval_split +
                                      "'");
        }
        sp::Metrics m = sp::evaluate(model, patches);
        json jm = metrics_to_json(m);
        jm["method"] = eval_method;
        jm["split"] = eval_split;
        jm["n_patches"] = patches.size();
        emit(jm);
    } else if (sal_cmd->parsed()) {
        sp::Model model = sp::load_model(sal_model);
        sp::GrayImage img = sp::load_image(sal_image);
        sp::SaliencyMap map = sp::occlusion_saliency(model, img, sal_window, sal_stride);

        // Normalized |saliency| as a small grayscale map.
        double peak = 1e-12;
        for (double v : map.values) peak = std::max(peak, std::abs(v));
        sp::GrayImage map_img(map.width, map.height);
        std::size_t argmax = 0;
        for (std::size_t k = 0; k < map.values.size(); ++k) {
            map_img.data[k] =
                static_cast<std::uint8_t>(std::lround(255.0 * std::abs(map.values[k]) / peak));
            if (std::abs(map.values[k]) > std::abs(map.values[argmax])) argmax = k;
        }
        sp::save_image(map_img, sal_prefix + "_map.png");

        // Most salient window burned into the (resized) patch.
        sp::GrayImage base = sp::resize_bilinear(img, sp::kPatchSide, sp::kPatchSide);
        int mx = static_cast<int>(argmax % map.width) * map.stride;
        int my = static_cast<int>(argmax / map.width) * map.stride;
        sp::render_overlay(base, {}, {},
                           {sp::BBox{static_cast<double>(mx), static_cast<double>(my),
                                     static_cast<double>(mx + map.window),
                                     static_cast<double>(my + map.window)}},
                           sal_prefix + "_top.png");
        json vals = json::array();
        for (double v : map.values) vals.push_back(v);
        write_text_file(sal_prefix + ".json",
                        json{{"width", map.width},
                             {"height", map.height},
                             {"window", map.window},
                             {"stride", map.stride},
                             {"values", vals}}
                                .dump(2) +
                            "\n");
        emit(json{{"map", sal_prefix + ".json"},
                  {"peak_abs", peak},
                  {"argmax", {{"x", mx}, {"y", my}}}});
    } else if (ov_cmd->parsed()) {
        sp::DatasetManifest manifest = sp::parse_manifest(ov_manifest);
        const sp::ScanRecord* scan = manifest.find_scan(ov_scan);
        if (!scan) throw sp::ValidationError("unknown scan_id '" + ov_scan + "'");
        sp::GrayImage img = sp::load_image(manifest.resolve(scan->image_path));
        std::vector<sp::Polygon> polys;
        for (const sp::VertebraAnnotation& v : scan->vertebrae) {
            polys.push_back(sp::vertebra_polygon(v));
        }
        std::vector<sp::OverlayDot> dots;
        for (const sp::OsteophytePoint& o : scan->osteophytes) {
            dots.push_back(sp::OverlayDot{o.location, 3.0});
        }
        std::vector<sp::BBox> boxes;
        if (!ov_method.empty()) {
            sp::PatchMethod method = sp::patch_method_from_string(ov_method);
            for (const sp::PatchRecord& p : manifest.patches) {
                if (p.method == method && p.scan_id == ov_scan) boxes.push_back(p.crop);
            }
        }
        sp::render_overlay(img, polys, dots, boxes, ov_out);
        emit(json{{"out", ov_out},
                  {"polygons", polys.size()},
                  {"dots", dots.size()},
                  {"boxes", boxes.size()}});
    } else if (stats_cmd->parsed()) {
        sp::DatasetManifest manifest = sp::parse_manifest(stats_manifest);
        sp::CorpusStats stats = sp::corpus_stats(manifest);
        json splits;
        for (const auto& [name, ids] : manifest.splits) splits[name] = ids.size();
        emit(json{{"scans", stats.scans},
                  {"scans_by_region", stats.scans_by_region},
                  {"vertebrae", stats.vertebrae},
                  {"osteophytes", stats.osteophytes},
                  {"osteophytes_by_region", stats.osteophytes_by_region},
                  {"patches", stats.patches_by_method_label},
                  {"splits", splits}});
    } else if (cmp_cmd->parsed()) {
        auto read_json = [](const std::string& path) {
            std::ifstream in(path);
            if (!in) throw sp::IoError("cannot open metrics file: " + path);
            json j;
            in >> j;
            return j;
        };
        json cmp = compare_report(read_json(cmp_tiling), read_json(cmp_segpatch));
        if (!cmp_json_out.empty()) write_text_file(cmp_json_out, cmp.dump(2) + "\n");
        if (!cmp_md_out.empty()) write_text_file(cmp_md_out, compare_markdown(cmp));
        emit(cmp);
    } else if (demo_cmd->parsed()) {
        emit(run_demo(demo));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sp::IoError& e) {
        std::cerr << "[error] " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "[error] " << e.what() << "\n";
        return 1;
    }
}
