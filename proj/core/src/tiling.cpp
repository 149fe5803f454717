#include "spinepatch/tiling.hpp"

#include <algorithm>
#include <mutex>

#include "spinepatch/error.hpp"
#include "spinepatch/image_io.hpp"
#include "spinepatch/pipeline.hpp"
#include "spinepatch/raster.hpp"

namespace spinepatch {

namespace {

std::vector<int> grid_offsets(int img_extent, int tile_extent) {
    std::vector<int> offs;
    if (img_extent <= tile_extent) {
        offs.push_back(0);
        return offs;
    }
    for (int p = 0; p + tile_extent <= img_extent; p += tile_extent) offs.push_back(p);
    if (offs.back() + tile_extent < img_extent) {
        offs.push_back(img_extent - tile_extent);  // anchored at the edge
    }
    return offs;
}

}  // namespace

std::vector<BBox> tile_grid(int img_w, int img_h, const TilingConfig& cfg) {
    if (cfg.tile_w < 1 || cfg.tile_h < 1) {
        throw InvalidArgumentError("tile dimensions must be positive");
    }
    std::vector<int> xs = grid_offsets(img_w, cfg.tile_w);
    std::vector<int> ys = grid_offsets(img_h, cfg.tile_h);
    std::vector<BBox> tiles;
    tiles.reserve(xs.size() * ys.size());
    for (int y : ys) {
        for (int x : xs) {
            tiles.push_back(BBox{static_cast<double>(x), static_cast<double>(y),
                                 static_cast<double>(std::min(x + cfg.tile_w, img_w)),
                                 static_cast<double>(std::min(y + cfg.tile_h, img_h))});
        }
    }
    return tiles;
}

std::vector<PatchRecord> label_tiles(const std::vector<BBox>& tiles,
                                     const std::vector<OsteophytePoint>& osteophytes,
                                     const TilingConfig& cfg, const ScanRecord& scan) {
    std::vector<BBox> boxes;
    boxes.reserve(osteophytes.size());
    for (const OsteophytePoint& o : osteophytes) {
        boxes.push_back(point_to_box(o.location, cfg.annotation_half_extent));
    }
    std::vector<PatchRecord> records;
    records.reserve(tiles.size());
    for (const BBox& tile : tiles) {
        PatchRecord rec;
        rec.scan_id = scan.scan_id;
        rec.method = PatchMethod::tiling;
        rec.crop = tile;
        rec.label = PatchLabel::absent;
        for (const BBox& box : boxes) {
            if (bbox_intersects(tile, box)) {
                rec.label = PatchLabel::present;
                break;
            }
        }
        rec.patch_id = "tiling_" + scan.scan_id + "_" +
                       std::to_string(static_cast<int>(tile.x0)) + "_" +
                       std::to_string(static_cast<int>(tile.y0));
        records.push_back(std::move(rec));
    }
    return records;
}

PatchRunSummary run_tiling(DatasetManifest& manifest, const TilingConfig& cfg,
                           const std::string& out_dir, int jobs) {
    ensure_dir(out_dir + "/tiling/present");
    ensure_dir(out_dir + "/tiling/absent");

    std::vector<std::vector<PatchRecord>> per_scan(manifest.scans.size());
    PatchRunSummary summary;
    std::mutex mu;

    parallel_for(manifest.scans.size(), jobs, [&](std::size_t i) {
        const ScanRecord& scan = manifest.scans[i];
        try {
            GrayImage img = load_image(manifest.resolve(scan.image_path));
            if (img.width != scan.width || img.height != scan.height) {
                throw SchemaError("scan '" + scan.scan_id + "' dims " + std::to_string(img.width) +
                                  "x" + std::to_string(img.height) +
                                  " do not match the manifest");
            }
            std::vector<BBox> tiles = tile_grid(img.width, img.height, cfg);
            std::vector<PatchRecord> records = label_tiles(tiles, scan.osteophytes, cfg, scan);
            for (const PatchRecord& rec : records) {
                GrayImage patch = crop(img, rec.crop);
                std::string name = scan.scan_id + "_" +
                                   std::to_string(static_cast<int>(rec.crop.x0)) + "_" +
                                   std::to_string(static_cast<int>(rec.crop.y0)) + ".png";
                save_image(patch, out_dir + "/tiling/" + to_string(rec.label) + "/" + name);
            }
            per_scan[i] = std::move(records);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(mu);
            summary.failures.push_back(scan.scan_id + ": " + e.what());
        }
    });

    // Order-stabilized merge: scan order, then grid order within a scan.
    std::vector<PatchRecord> merged;
    for (PatchRecord& p : manifest.patches) {
        if (p.method != PatchMethod::tiling) merged.push_back(std::move(p));
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

    // Keep patch splits consistent with any existing scan-level split.
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

}  // namespace spinepatch
