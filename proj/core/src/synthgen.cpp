#include "spinepatch/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "spinepatch/error.hpp"
#include "spinepatch/image_io.hpp"
#include "spinepatch/pipeline.hpp"
#include "spinepatch/raster.hpp"
#include "spinepatch/rng.hpp"

namespace spinepatch {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string scan_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scan%03d", index);
    return buf;
}

void fill_polygon(GrayImage& img, const Polygon& poly, std::uint8_t value) {
    BBox b = bbox_of(poly);
    int x0 = std::max(0, static_cast<int>(std::floor(b.x0)));
    int y0 = std::max(0, static_cast<int>(std::floor(b.y0)));
    int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(b.x1)));
    int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(b.y1)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (point_in_polygon(Point{static_cast<double>(x), static_cast<double>(y)}, poly)) {
                img.at(x, y) = std::max(img.at(x, y), value);
            }
        }
    }
}

void fill_disk(GrayImage& img, const Point& c, double radius, std::uint8_t value) {
    int x0 = std::max(0, static_cast<int>(std::floor(c.x - radius)));
    int y0 = std::max(0, static_cast<int>(std::floor(c.y - radius)));
    int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(c.x + radius)));
    int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(c.y + radius)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (std::hypot(x - c.x, y - c.y) <= radius) {
                img.at(x, y) = std::max(img.at(x, y), value);
            }
        }
    }
}

void fill_rect(GrayImage& img, int x0, int y0, int w, int h, std::uint8_t value) {
    for (int y = std::max(0, y0); y < std::min(img.height, y0 + h); ++y) {
        for (int x = std::max(0, x0); x < std::min(img.width, x0 + w); ++x) {
            img.at(x, y) = value;
        }
    }
}

}  // namespace

void SynthConfig::validate() const {
    if (n_scans < 1) throw InvalidArgumentError("n_scans must be >= 1");
    if (region_mix < 0.0 || region_mix > 1.0) {
        throw InvalidArgumentError("region_mix must be in [0, 1]");
    }
    if (osteophyte_rate < 0.0 || osteophyte_rate > 1.0) {
        throw InvalidArgumentError("osteophyte_rate must be in [0, 1]");
    }
    if (artifact_text_rate < 0.0 || artifact_text_rate > 1.0) {
        throw InvalidArgumentError("artifact_text_rate must be in [0, 1]");
    }
    if (vertebrae_min < 1 || vertebrae_max < vertebrae_min) {
        throw InvalidArgumentError("invalid vertebrae_per_scan range");
    }
    if (bump_radius <= 0.0) throw InvalidArgumentError("bump_radius must be positive");
    for (const auto& [region, wh] : image_size) {
        if (wh.first < 64 || wh.second < 64) {
            throw InvalidArgumentError("image sizes must be at least 64x64");
        }
    }
}

DatasetManifest generate(const SynthConfig& cfg, const std::string& out_dir, int jobs) {
    cfg.validate();
    ensure_dir(out_dir + "/images");
    ensure_dir(out_dir + "/masks");

    const int n_cervical = static_cast<int>(std::lround(cfg.region_mix * cfg.n_scans));

    std::vector<ScanRecord> scans(cfg.n_scans);
    parallel_for(static_cast<std::size_t>(cfg.n_scans), jobs, [&](std::size_t idx) {
        const int i = static_cast<int>(idx);
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));

        ScanRecord scan;
        scan.scan_id = scan_name(i);
        scan.region = i < n_cervical ? Region::cervical : Region::lumbar;
        auto [w, h] = cfg.image_size.at(scan.region);
        scan.width = w;
        scan.height = h;
        scan.image_path = "images/" + scan.scan_id + ".pgm";

        const int n_vert = rng.uniform_int(cfg.vertebrae_min, cfg.vertebrae_max);
        const double vh = h / 28.0;
        const double vw = 1.3 * vh;
        const double gap = 1.05 * vh;
        const double chain = n_vert * vh + (n_vert - 1) * gap;
        const double y_start = (h - chain) / 2.0;

        // Lateral spine-axis offset: half sine whose max slope matches the
        // configured curvature, clamped so bodies and bumps stay in frame.
        double amp = std::tan(cfg.curvature_deg * kPi / 180.0) * chain / kPi;
        double amp_max = w / 2.0 - vw / 2.0 - cfg.bump_radius - 12.0;
        amp = std::min(amp, std::max(0.0, amp_max));
        const double phase = rng.uniform(0.0, kPi);
        const double dir = rng.bernoulli(0.5) ? 1.0 : -1.0;
        auto x_offset = [&](double s) { return dir * amp * std::sin(kPi * s / chain + phase); };

        // Soft-tissue background: a few low-frequency intensity waves over a
        // dim base, so film regions away from bone are textured rather than
        // uniformly black. Kept well below body intensity.
        GrayImage img(w, h, 30);
        {
            double fx1 = rng.uniform(1.0, 2.5), fy1 = rng.uniform(1.0, 2.5);
            double fx2 = rng.uniform(3.0, 6.0), fy2 = rng.uniform(3.0, 6.0);
            double p1 = rng.uniform(0.0, 2.0 * kPi), p2 = rng.uniform(0.0, 2.0 * kPi);
            double p3 = rng.uniform(0.0, 2.0 * kPi), p4 = rng.uniform(0.0, 2.0 * kPi);
            for (int y = 0; y < h; ++y) {
                double v1 = std::sin(2.0 * kPi * fy1 * y / h + p1);
                double v2 = std::sin(2.0 * kPi * fy2 * y / h + p3);
                for (int x = 0; x < w; ++x) {
                    double u1 = std::sin(2.0 * kPi * fx1 * x / w + p2);
                    double u2 = std::sin(2.0 * kPi * fx2 * x / w + p4);
                    double v = 70.0 + 30.0 * u1 * v1 + 18.0 * u2 * v2;
                    img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
                }
            }
        }

        for (int j = 0; j < n_vert; ++j) {
            double s = j * (vh + gap) + vh / 2.0;
            Point c{w / 2.0 + x_offset(s), y_start + s};
            // Bodies stay axis-aligned; the lateral offset alone carries the
            // spinal curvature. Tilting bodies with the local slope lets
            // neighboring endplates interleave, which puts osteophytes from
            // one vertebra inside another's gap and muddies the geometry.
            auto place = [&](double lx, double ly) { return Point{c.x + lx, c.y + ly}; };
            // Hexagon: four jittered corners plus left/right edge midpoints.
            double jit[6];
            for (double& v : jit) v = rng.uniform(0.94, 1.06);
            Point tl = place(-vw / 2 * jit[0], -vh / 2 * jit[0]);
            Point tr = place(vw / 2 * jit[1], -vh / 2 * jit[1]);
            Point br = place(vw / 2 * jit[2], vh / 2 * jit[2]);
            Point bl = place(-vw / 2 * jit[3], vh / 2 * jit[3]);
            Point ml = place(-vw / 2 * jit[4], 0.0);
            Point mr = place(vw / 2 * jit[5], 0.0);

            VertebraAnnotation ann;
            ann.vertebra_id = "v" + std::to_string(j);
            ann.region = scan.region;
            ann.points = {tl, tr, br, bl, ml, mr};
            for (Point& p : ann.points) {
                p.x = std::clamp(p.x, 1.0, static_cast<double>(w - 2));
                p.y = std::clamp(p.y, 1.0, static_cast<double>(h - 2));
            }
            Polygon body = vertebra_polygon(ann);

            std::uint8_t body_int = static_cast<std::uint8_t>(rng.uniform_int(160, 205));
            fill_polygon(img, body, body_int);

            // Mask covers the body only; bumps are deliberately excluded so
            // a raw contour cannot reach the osteophyte apex.
            GrayImage mask_img(w, h, 0);
            fill_polygon(mask_img, body, 255);
            std::string mask_rel = "masks/" + scan.scan_id + "_" + ann.vertebra_id + ".png";
            save_image(mask_img, out_dir + "/" + mask_rel);
            scan.mask_paths[ann.vertebra_id] = mask_rel;

            // Four independent corner draws. Bumps attach at the inferior
            // margin, where osteophytes form on lateral films, with the
            // anterior-inferior corner dominating: superior-corner draws
            // re-attach there, and a draw whose corner already has a bump
            // is dropped. Apexes protrude straight down past the endplate.
            const double r = cfg.bump_radius;
            const Point inferior[2] = {bl, br};  // sides: 0 = anterior, 1 = posterior
            bool taken[2] = {false, false};
            const int draw_side[4] = {0, 0, 0, 1};  // tl, tr, bl, br
            for (int side : draw_side) {
                if (!rng.bernoulli(cfg.osteophyte_rate)) continue;
                if (taken[side]) continue;
                const Point& corner = inferior[side];
                // Center the disk 4 px toward the body midline. Mask
                // rasterization can shave a pixel off the outline, so a disk
                // centered exactly on the corner risks an apex past the patch
                // edge; the inward shift also keeps posterior bumps from
                // hugging the patch border where they blend into the body.
                Point center{corner.x + (side == 0 ? 4.0 : -4.0), corner.y};
                Point apex{center.x, center.y + r};
                if (apex.x < 1 || apex.y < 1 || apex.x > w - 2 || apex.y > h - 2) continue;
                if (point_in_polygon(apex, body)) continue;  // keep apexes outside the body
                taken[side] = true;
                std::uint8_t bump_int =
                    static_cast<std::uint8_t>(std::min(255, static_cast<int>(body_int) + 70));
                fill_disk(img, center, r, bump_int);
                OsteophytePoint o;
                o.location = apex;
                o.vertebra_id = ann.vertebra_id;
                scan.osteophytes.push_back(o);
            }
            scan.vertebrae.push_back(std::move(ann));
        }

        // Bright incidental artifacts (calcifications, clips, skin folds)
        // scattered away from the spinal column. They are not annotated and
        // the keep-out margin keeps them clear of every expansion-sized
        // vertebra neighborhood.
        {
            const double margin = 120.0;
            const double strip_x0 = w / 2.0 - amp - vw / 2.0 * 1.06 - margin;
            const double strip_x1 = w / 2.0 + amp + vw / 2.0 * 1.06 + margin;
            const double strip_y0 = y_start - margin;
            const double strip_y1 = y_start + chain + margin;
            const int n_specks = rng.uniform_int(4, 10);
            for (int k = 0; k < n_specks; ++k) {
                double rad = rng.uniform(4.0, 11.0);
                std::uint8_t val = static_cast<std::uint8_t>(rng.uniform_int(185, 250));
                Point p{rng.uniform(rad + 1.0, w - rad - 2.0),
                        rng.uniform(rad + 1.0, h - rad - 2.0)};
                bool in_strip = p.x > strip_x0 && p.x < strip_x1 && p.y > strip_y0 &&
                                p.y < strip_y1;
                if (in_strip) continue;
                fill_disk(img, p, rad, val);
            }
        }

        if (rng.bernoulli(cfg.artifact_text_rate)) {
            // Blocky "L"-style film marker near the top-left corner.
            fill_rect(img, 24, 24, 7, 48, 240);
            fill_rect(img, 24, 66, 26, 7, 240);
            fill_rect(img, 60, 24, 7, 48, 240);
        }

        if (cfg.noise_sigma > 0.0) {
            for (std::uint8_t& px : img.data) {
                double v = px + rng.normal(0.0, cfg.noise_sigma);
                px = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }

        save_image(img, out_dir + "/" + scan.image_path);
        scans[idx] = std::move(scan);
    });

    DatasetManifest manifest;
    manifest.version = 1;
    manifest.scans = std::move(scans);
    manifest.base_dir = out_dir;
    validate_manifest(manifest);
    return manifest;
}

CorpusStats corpus_stats(const DatasetManifest& manifest) {
    CorpusStats stats;
    stats.scans = static_cast<int>(manifest.scans.size());
    for (const ScanRecord& s : manifest.scans) {
        stats.scans_by_region[to_string(s.region)] += 1;
        stats.vertebrae += static_cast<int>(s.vertebrae.size());
        stats.osteophytes += static_cast<int>(s.osteophytes.size());
        stats.osteophytes_by_region[to_string(s.region)] +=
            static_cast<int>(s.osteophytes.size());
    }
    for (const PatchRecord& p : manifest.patches) {
        stats.patches_by_method_label[to_string(p.method) + "/" + to_string(p.label)] += 1;
    }
    return stats;
}

}  // namespace spinepatch
