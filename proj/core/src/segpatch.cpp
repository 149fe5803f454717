#include "spinepatch/segpatch.hpp"

#include <algorithm>
#include <mutex>

#include "spinepatch/error.hpp"
#include "spinepatch/image_io.hpp"
#include "spinepatch/pipeline.hpp"
#include "spinepatch/raster.hpp"

namespace spinepatch {

Polygon vertebra_contour(const DatasetManifest& manifest, const ScanRecord& scan,
                         const VertebraAnnotation& vertebra, const SegPatchConfig& cfg) {
    if (cfg.contour_source == ContourSource::mask) {
        auto it = scan.mask_paths.find(vertebra.vertebra_id);
        if (it == scan.mask_paths.end()) {
            throw ConfigError("contour_source is 'mask' but scan '" + scan.scan_id +
                              "' has no mask for vertebra '" + vertebra.vertebra_id + "'");
        }
        BinaryMask mask = load_mask(manifest.resolve(it->second));
        return trace_mask_contour(mask);
    }
    return vertebra_polygon(vertebra);
}

std::optional<SegPatch> make_segpatch(const DatasetManifest& manifest, const ScanRecord& scan,
                                      const VertebraAnnotation& vertebra,
                                      const SegPatchConfig& cfg, std::string* warning) {
    Polygon contour = vertebra_contour(manifest, scan, vertebra, cfg);
    double dx = cfg.dx_minus_x.at(scan.region);
    double dy = cfg.dy_plus_y.at(scan.region);
    Polygon expanded = expand_contour(contour, dx, dy);
    BBox raw = bbox_of(expanded);

    PixelRect r = clamp_box_to_image(raw, scan.width, scan.height);
    if (r.w == 0 || r.h == 0) {
        if (warning) {
            *warning = "scan '" + scan.scan_id + "' vertebra '" + vertebra.vertebra_id +
                       "': expanded crop is empty after clamping, skipped";
        }
        return std::nullopt;
    }
    BBox clamped{static_cast<double>(r.x), static_cast<double>(r.y),
                 static_cast<double>(r.x + r.w), static_cast<double>(r.y + r.h)};

    PatchRecord rec;
    rec.patch_id = "segpatch_" + scan.scan_id + "_" + vertebra.vertebra_id;
    rec.scan_id = scan.scan_id;
    rec.method = PatchMethod::segpatch;
    rec.crop = clamped;
    rec.source_vertebra = vertebra.vertebra_id;
    rec.label = PatchLabel::absent;
    for (const OsteophytePoint& o : scan.osteophytes) {
        bool inside = cfg.label_geometry == LabelGeometry::expanded_polygon
                          ? (!expanded.degenerate() && point_in_polygon(o.location, expanded))
                          : bbox_contains(clamped, o.location);
        if (inside) {
            rec.label = PatchLabel::present;
            break;
        }
    }
    return SegPatch{std::move(rec), std::move(expanded)};
}

PatchRunSummary run_segpatch(DatasetManifest& manifest, const SegPatchConfig& cfg,
                             const std::string& out_dir, int jobs) {
    ensure_dir(out_dir + "/segpatch/present");
    ensure_dir(out_dir + "/segpatch/absent");

    std::vector<std::vector<PatchRecord>> per_scan(manifest.scans.size());
    PatchRunSummary summary;
    std::mutex mu;

    parallel_for(manifest.scans.size(), jobs, [&](std::size_t i) {
        const ScanRecord& scan = manifest.scans[i];
        try {
            GrayImage img = load_image(manifest.resolve(scan.image_path));
            if (img.width != scan.width || img.height != scan.height) {
                throw SchemaError("scan '" + scan.scan_id + "' dims do not match the manifest");
            }
            std::vector<PatchRecord> records;
            for (const VertebraAnnotation& v : scan.vertebrae) {
                std::string warning;
                std::optional<SegPatch> sp = make_segpatch(manifest, scan, v, cfg, &warning);
                if (!sp) {
                    std::lock_guard<std::mutex> lock(mu);
                    summary.failures.push_back(warning);
                    continue;
                }
                GrayImage patch = crop(img, sp->record.crop);
                save_image(patch, out_dir + "/segpatch/" + to_string(sp->record.label) + "/" +
                                      scan.scan_id + "_" + v.vertebra_id + ".png");
                records.push_back(std::move(sp->record));
            }
            per_scan[i] = std::move(records);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(mu);
            summary.failures.push_back(scan.scan_id + ": " + e.what());
        }
    });

    std::vector<PatchRecord> merged;
    for (PatchRecord& p : manifest.patches) {
        if (p.method != PatchMethod::segpatch) merged.push_back(std::move(p));
    }
    std::vector<std::size_t> order(per_scan.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return manifest.scans[a].scan_id < manifest.scans[b].scan_id;
    });
    for (std::size_t i : order) {
        for (PatchRecord& rec : per_scan[i]) {
            (rec.label == PatchLabel::present ? summary.present : summary.absent) += 1;
            merged.push_back(std::move(rec));
        }
    }
    manifest.patches = std::move(merged);

    std::map<std::string, std::string> scan_split;
    for (const auto& [name, ids] : manifest.splits) {
        for (const std::string& id : ids) scan_split[id] = name;
    }
    for (PatchRecord& p : manifest.patches) {
        auto it = scan_split.find(p.scan_id);
        if (it != scan_split.end()) p.split = it->second;
    }
    return summary;
}

CoverageReport coverage_report(const DatasetManifest& manifest) {
    CoverageReport report;
    for (const ScanRecord& scan : manifest.scans) {
        std::string region = to_string(scan.region);
        for (const OsteophytePoint& o : scan.osteophytes) {
            report.total += 1;
            report.total_by_region[region] += 1;
            bool covered = false;
            for (const PatchRecord& p : manifest.patches) {
                if (p.method != PatchMethod::segpatch || p.scan_id != scan.scan_id) continue;
                if (bbox_contains(p.crop, o.location)) {
                    covered = true;
                    break;
                }
            }
            if (!covered) {
                report.uncovered.push_back({scan.scan_id, o.location});
                report.uncovered_by_region[region] += 1;
            }
        }
    }
    return report;
}

}  // namespace spinepatch
