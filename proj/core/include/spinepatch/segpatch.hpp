#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spinepatch/annotations.hpp"
#include "spinepatch/geometry.hpp"
#include "spinepatch/tiling.hpp"

namespace spinepatch {

enum class ContourSource { mask, six_points };
enum class LabelGeometry { expanded_polygon, crop_bbox };

struct SegPatchConfig {
    // Region-specific expansion, in pixels.
    std::map<Region, double> dx_minus_x{{Region::cervical, 40.0}, {Region::lumbar, 60.0}};
    std::map<Region, double> dy_plus_y{{Region::cervical, 30.0}, {Region::lumbar, 45.0}};
    ContourSource contour_source = ContourSource::mask;
    LabelGeometry label_geometry = LabelGeometry::expanded_polygon;
};

// The vertebra's body contour: traced from its mask, or the hexagon through
// the six annotated points. Missing masks in mask mode raise ConfigError
// naming the vertebra.
Polygon vertebra_contour(const DatasetManifest& manifest, const ScanRecord& scan,
                         const VertebraAnnotation& vertebra, const SegPatchConfig& cfg);

struct SegPatch {
    PatchRecord record;
    Polygon expanded;  // the geometry the label was decided against
};

// Contour -> directional expansion -> bbox crop (clamped) -> containment
// label. Returns nullopt (with a warning) when the clamped crop is empty.
std::optional<SegPatch> make_segpatch(const DatasetManifest& manifest, const ScanRecord& scan,
                                      const VertebraAnnotation& vertebra,
                                      const SegPatchConfig& cfg, std::string* warning);

// One patch per annotated vertebra; crops land under
// out_dir/segpatch/{present,absent}/{scan_id}_{vertebra_id}.png.
PatchRunSummary run_segpatch(DatasetManifest& manifest, const SegPatchConfig& cfg,
                             const std::string& out_dir, int jobs = 1);

struct UncoveredOsteophyte {
    std::string scan_id;
    Point location;
};

struct CoverageReport {
    std::vector<UncoveredOsteophyte> uncovered;
    std::map<std::string, int> total_by_region;      // region name -> osteophyte count
    std::map<std::string, int> uncovered_by_region;  // region name -> uncovered count
    int total = 0;

    double coverage() const {
        return total == 0 ? 1.0
                          : 1.0 - static_cast<double>(uncovered.size()) / static_cast<double>(total);
    }
};

// Every osteophyte not inside any segpatch crop box, with per-region stats.
CoverageReport coverage_report(const DatasetManifest& manifest);

}  // namespace spinepatch
