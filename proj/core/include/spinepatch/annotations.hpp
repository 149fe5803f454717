#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spinepatch/geometry.hpp"

namespace spinepatch {

enum class Region { cervical, lumbar };

std::string to_string(Region r);
Region region_from_string(const std::string& s);

enum class PatchMethod { tiling, segpatch };
std::string to_string(PatchMethod m);
PatchMethod patch_method_from_string(const std::string& s);

enum class PatchLabel { present, absent };
std::string to_string(PatchLabel l);
PatchLabel patch_label_from_string(const std::string& s);

struct VertebraAnnotation {
    std::string vertebra_id;
    std::vector<Point> points;  // exactly six
    Region region = Region::cervical;
};

struct OsteophytePoint {
    Point location;
    std::optional<std::string> vertebra_id;
};

struct ScanRecord {
    std::string scan_id;
    std::string image_path;
    Region region = Region::cervical;
    int width = 0;
    int height = 0;
    std::vector<VertebraAnnotation> vertebrae;
    std::vector<OsteophytePoint> osteophytes;
    std::map<std::string, std::string> mask_paths;  // vertebra_id -> mask file
};

struct PatchRecord {
    std::string patch_id;
    std::string scan_id;
    PatchMethod method = PatchMethod::tiling;
    BBox crop;
    PatchLabel label = PatchLabel::absent;
    std::optional<std::string> source_vertebra;
    std::optional<std::string> split;  // "train" | "test" once assigned
};

struct DatasetManifest {
    int version = 1;
    std::vector<ScanRecord> scans;
    std::map<std::string, std::vector<std::string>> splits;  // name -> scan_ids
    std::vector<PatchRecord> patches;

    // Directory the manifest was loaded from; image/mask paths are stored
    // relative to it. Not serialized.
    std::string base_dir;

    const ScanRecord* find_scan(const std::string& scan_id) const;
    std::string resolve(const std::string& rel_path) const;
};

// Parses and fully validates a manifest file. Unknown fields are rejected;
// schema violations name the offending scan.
DatasetManifest parse_manifest(const std::string& path);
DatasetManifest parse_manifest_text(const std::string& text, const std::string& origin);

// Deterministic serialization: scans sorted by scan_id, object keys in fixed
// order, floats printed with exactly three decimals. Whole-file atomic
// (write to temp, rename). parse(write(m)) == m structurally.
void write_manifest(const DatasetManifest& manifest, const std::string& path);
std::string manifest_to_text(const DatasetManifest& manifest);

void validate_manifest(const DatasetManifest& manifest);

// The six annotated points ordered by angle about their centroid, giving a
// simple hexagonal contour. Collinear point sets are rejected.
Polygon vertebra_polygon(const VertebraAnnotation& ann);

// Scan-level 75:25 split stratified by region; per-region train count is
// round(train_fraction * n). Patches present in the manifest get their split
// field synced to their scan. Requires >= 4 scans.
void split_dataset(DatasetManifest& manifest, double train_fraction, std::uint64_t seed);

}  // namespace spinepatch
