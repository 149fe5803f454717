#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "spinepatch/annotations.hpp"

namespace spinepatch {

struct SynthConfig {
    std::uint64_t seed = 7;
    int n_scans = 40;
    double region_mix = 0.4;  // fraction of cervical scans
    // Half the native film resolution per region.
    std::map<Region, std::pair<int, int>> image_size{
        {Region::cervical, {731, 877}},
        {Region::lumbar, {1024, 1243}},
    };
    int vertebrae_min = 5;
    int vertebrae_max = 7;
    double curvature_deg = 25.0;      // max spine-axis deviation from vertical
    double osteophyte_rate = 0.15;    // per vertebra corner
    double bump_radius = 8.0;
    double noise_sigma = 6.0;
    double artifact_text_rate = 0.1;  // burned-in text per scan

    void validate() const;
};

// Renders a curved chain of bright quadrilateral vertebra bodies over noisy
// background, attaches osteophyte bumps at random corners (protruding
// outside the body polygon and excluded from the per-vertebra masks), and
// writes images/, masks/ and the annotations into a manifest whose paths
// are relative to out_dir. Fully reproducible from cfg.seed; per-scan
// sub-seeds make parallel and serial runs identical.
DatasetManifest generate(const SynthConfig& cfg, const std::string& out_dir, int jobs = 1);

struct CorpusStats {
    int scans = 0;
    std::map<std::string, int> scans_by_region;
    int vertebrae = 0;
    int osteophytes = 0;
    std::map<std::string, int> osteophytes_by_region;
    std::map<std::string, int> patches_by_method_label;  // "method/label" -> count
};

CorpusStats corpus_stats(const DatasetManifest& manifest);

}  // namespace spinepatch
