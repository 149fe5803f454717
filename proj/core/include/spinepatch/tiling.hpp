#pragma once

#include <string>
#include <vector>

#include "spinepatch/annotations.hpp"
#include "spinepatch/geometry.hpp"

namespace spinepatch {

struct TilingConfig {
    int tile_w = 224;
    int tile_h = 224;
    double annotation_half_extent = 18.0;  // osteophyte box side 36 px
};

// Regular grid from (0,0); the final row/column is anchored at (img - tile)
// so every pixel is covered, which may overlap the neighbor. Images smaller
// than a tile yield a single clamped tile. Boxes are half-open in pixel
// units: [x, x+tile_w) x [y, y+tile_h).
std::vector<BBox> tile_grid(int img_w, int img_h, const TilingConfig& cfg);

// A tile is present iff its closed box intersects the annotation box of any
// osteophyte (point_to_box with annotation_half_extent).
std::vector<PatchRecord> label_tiles(const std::vector<BBox>& tiles,
                                     const std::vector<OsteophytePoint>& osteophytes,
                                     const TilingConfig& cfg, const ScanRecord& scan);

struct PatchRunSummary {
    int present = 0;
    int absent = 0;
    std::vector<std::string> failures;  // per-scan error messages
};

// Labels and crops every tile of every scan; crops land under
// out_dir/tiling/{present,absent}/{scan_id}_{x}_{y}.png. Per-scan failures
// are collected and the run continues. Replaces any previous tiling patches
// in the manifest.
PatchRunSummary run_tiling(DatasetManifest& manifest, const TilingConfig& cfg,
                           const std::string& out_dir, int jobs = 1);

}  // namespace spinepatch
