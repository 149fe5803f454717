#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "spinepatch/annotations.hpp"
#include "spinepatch/image_io.hpp"
#include "spinepatch/synthgen.hpp"

using namespace spinepatch;

TEST_CASE("generation is a pure function of the config") {
    testutil::TempDir a("syn_a");
    testutil::TempDir b("syn_b");
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.n_scans = 4;
    DatasetManifest ma = generate(cfg, a.str(), 2);
    DatasetManifest mb = generate(cfg, b.str(), 1);
    CHECK(manifest_to_text(ma) == manifest_to_text(mb));
    for (const ScanRecord& s : ma.scans) {
        CHECK(testutil::files_equal(a.path / s.image_path, b.path / s.image_path));
        for (const auto& [vid, mask_path] : s.mask_paths) {
            CHECK(testutil::files_equal(a.path / mask_path, b.path / mask_path));
        }
    }
}

TEST_CASE("osteophyte_rate zero produces no osteophytes") {
    testutil::TempDir tmp("syn_rate0");
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.n_scans = 4;
    cfg.osteophyte_rate = 0.0;
    DatasetManifest m = generate(cfg, tmp.str(), 2);
    for (const ScanRecord& s : m.scans) CHECK(s.osteophytes.empty());
}

TEST_CASE("apexes sit outside their vertebra polygon but close to it") {
    testutil::TempDir tmp("syn_apex");
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.n_scans = 8;
    DatasetManifest m = generate(cfg, tmp.str(), 2);
    int checked = 0;
    for (const ScanRecord& s : m.scans) {
        for (const OsteophytePoint& o : s.osteophytes) {
            REQUIRE(o.vertebra_id.has_value());
            const VertebraAnnotation* ann = nullptr;
            for (const VertebraAnnotation& v : s.vertebrae) {
                if (v.vertebra_id == *o.vertebra_id) ann = &v;
            }
            REQUIRE(ann != nullptr);
            Polygon poly = vertebra_polygon(*ann);
            CHECK_FALSE(point_in_polygon(o.location, poly));
            CHECK(testutil::dist_to_polygon_boundary(o.location, poly.vertices()) <=
                  cfg.bump_radius + 2.0);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("osteophyte count stays within binomial bounds") {
    testutil::TempDir tmp("syn_binom");
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.n_scans = 40;
    DatasetManifest m = generate(cfg, tmp.str(), 4);
    long draws = 0;
    long observed = 0;
    for (const ScanRecord& s : m.scans) {
        draws += 4 * static_cast<long>(s.vertebrae.size());
        observed += static_cast<long>(s.osteophytes.size());
    }
    double mean = cfg.osteophyte_rate * static_cast<double>(draws);
    double sigma = std::sqrt(mean * (1.0 - cfg.osteophyte_rate));
    CHECK(std::abs(observed - mean) <= 3.0 * sigma);
}

TEST_CASE("mask foreground stays within the emitted polygon dilated by one pixel") {
    testutil::TempDir tmp("syn_mask");
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.n_scans = 2;
    DatasetManifest m = generate(cfg, tmp.str(), 2);
    for (const ScanRecord& s : m.scans) {
        for (const VertebraAnnotation& ann : s.vertebrae) {
            auto it = s.mask_paths.find(ann.vertebra_id);
            REQUIRE(it != s.mask_paths.end());
            BinaryMask mask = load_mask((testutil::fs::path(tmp.str()) / it->second).string());
            Polygon poly = vertebra_polygon(ann);
            BBox b = bbox_of(poly);
            int fg = 0;
            for (int y = 0; y < mask.height; ++y) {
                for (int x = 0; x < mask.width; ++x) {
                    if (!mask.at(x, y)) continue;
                    ++fg;
                    Point p{static_cast<double>(x), static_cast<double>(y)};
                    bool ok = point_in_polygon(p, poly) ||
                              testutil::dist_to_polygon_boundary(p, poly.vertices()) <= 1.0;
                    if (!ok) {
                        CHECK_MESSAGE(ok, s.scan_id, "/", ann.vertebra_id, " pixel ", x, ",", y);
                    }
                }
            }
            CHECK(fg > 0);
            CHECK(fg <= (b.width() + 3) * (b.height() + 3));
        }
    }
}

TEST_CASE("corpus_stats counts exactly and ignores scan order") {
    testutil::TempDir tmp("syn_stats");
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.n_scans = 6;
    DatasetManifest m = generate(cfg, tmp.str(), 2);

    CorpusStats stats = corpus_stats(m);
    CHECK(stats.scans == 6);
    int vertebrae = 0, osteophytes = 0;
    for (const ScanRecord& s : m.scans) {
        vertebrae += static_cast<int>(s.vertebrae.size());
        osteophytes += static_cast<int>(s.osteophytes.size());
    }
    CHECK(stats.vertebrae == vertebrae);
    CHECK(stats.osteophytes == osteophytes);

    DatasetManifest shuffled = m;
    std::reverse(shuffled.scans.begin(), shuffled.scans.end());
    CorpusStats stats2 = corpus_stats(shuffled);
    CHECK(stats2.scans == stats.scans);
    CHECK(stats2.vertebrae == stats.vertebrae);
    CHECK(stats2.osteophytes == stats.osteophytes);
    CHECK(stats2.osteophytes_by_region == stats.osteophytes_by_region);

    DatasetManifest empty;
    CorpusStats zero = corpus_stats(empty);
    CHECK(zero.scans == 0);
    CHECK(zero.vertebrae == 0);
    CHECK(zero.osteophytes == 0);
}

TEST_CASE("synth config validation") {
    SynthConfig cfg;
    cfg.n_scans = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
    cfg = SynthConfig{};
    cfg.osteophyte_rate = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
    cfg = SynthConfig{};
    cfg.region_mix = -0.1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
}
