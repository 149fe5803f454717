#include "spinepatch/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spinepatch/error.hpp"
#include "spinepatch/rng.hpp"

namespace spinepatch {

using nlohmann::json;

std::string to_string(Region r) { return r == Region::cervical ? "cervical" : "lumbar"; }

Region region_from_string(const std::string& s) {
    if (s == "cervical") return Region::cervical;
    if (s == "lumbar") return Region::lumbar;
    throw SchemaError("unknown region '" + s + "' (expected cervical|lumbar)");
}

std::string to_string(PatchMethod m) { return m == PatchMethod::tiling ? "tiling" : "segpatch"; }

PatchMethod patch_method_from_string(const std::string& s) {
    if (s == "tiling") return PatchMethod::tiling;
    if (s == "segpatch") return PatchMethod::segpatch;
    throw SchemaError("unknown patch method '" + s + "'");
}

std::string to_string(PatchLabel l) { return l == PatchLabel::present ? "present" : "absent"; }

PatchLabel patch_label_from_string(const std::string& s) {
    if (s == "present") return PatchLabel::present;
    if (s == "absent") return PatchLabel::absent;
    throw SchemaError("unknown patch label '" + s + "'");
}

std::string DatasetManifest::resolve(const std::string& rel_path) const {
    std::filesystem::path p(rel_path);
    if (p.is_absolute() || base_dir.empty()) return rel_path;
    return (std::filesystem::path(base_dir) / p).string();
}

const ScanRecord* DatasetManifest::find_scan(const std::string& scan_id) const {
    for (const ScanRecord& s : scans) {
        if (s.scan_id == scan_id) return &s;
    }
    return nullptr;
}

namespace {

void require_fields(const json& obj, const std::set<std::string>& allowed,
                    const std::set<std::string>& required, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw SchemaError("unknown field '" + it.key() + "' in " + where);
        }
    }
    for (const std::string& k : required) {
        if (!obj.contains(k)) {
            throw SchemaError("missing field '" + k + "' in " + where);
        }
    }
}

Point parse_point(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw SchemaError("point must be a [x, y] number pair in " + where);
    }
    return Point{j[0].get<double>(), j[1].get<double>()};
}

void check_in_bounds(const Point& p, const ScanRecord& scan, const std::string& what) {
    if (p.x < 0 || p.y < 0 || p.x > scan.width - 1 || p.y > scan.height - 1) {
        throw SchemaError(what + " (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") outside scan bounds in scan '" + scan.scan_id + "'");
    }
}

// %.3f with no locale surprises.
std::string fmt3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

}  // namespace

DatasetManifest parse_manifest_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FileParseError("JSON syntax error in " + origin + ": " + e.what(), e.byte);
    }
    if (!root.is_object()) throw SchemaError("manifest root must be an object in " + origin);
    require_fields(root, {"version", "scans", "splits", "patches"}, {"version", "scans"},
                   "manifest " + origin);

    DatasetManifest m;
    if (!root["version"].is_number_integer()) throw SchemaError("version must be an integer");
    m.version = root["version"].get<int>();

    for (const json& js : root["scans"]) {
        require_fields(js,
                       {"scan_id", "image_path", "region", "width", "height", "vertebrae",
                        "osteophytes", "mask_paths"},
                       {"scan_id", "image_path", "region", "width", "height"},
                       "scan record");
        ScanRecord scan;
        scan.scan_id = js["scan_id"].get<std::string>();
        scan.image_path = js["image_path"].get<std::string>();
        scan.region = region_from_string(js["region"].get<std::string>());
        scan.width = js["width"].get<int>();
        scan.height = js["height"].get<int>();
        const std::string where = "scan '" + scan.scan_id + "'";
        if (js.contains("vertebrae")) {
            for (const json& jv : js["vertebrae"]) {
                require_fields(jv, {"vertebra_id", "points", "region"},
                               {"vertebra_id", "points", "region"}, where);
                VertebraAnnotation ann;
                ann.vertebra_id = jv["vertebra_id"].get<std::string>();
                ann.region = region_from_string(jv["region"].get<std::string>());
                for (const json& jp : jv["points"]) {
                    ann.points.push_back(parse_point(jp, where));
                }
                scan.vertebrae.push_back(std::move(ann));
            }
        }
        if (js.contains("osteophytes")) {
            for (const json& jo : js["osteophytes"]) {
                require_fields(jo, {"x", "y", "vertebra_id"}, {"x", "y"}, where);
                OsteophytePoint o;
                o.location = Point{jo["x"].get<double>(), jo["y"].get<double>()};
                if (jo.contains("vertebra_id")) {
                    o.vertebra_id = jo["vertebra_id"].get<std::string>();
                }
                scan.osteophytes.push_back(std::move(o));
            }
        }
        if (js.contains("mask_paths")) {
            for (auto it = js["mask_paths"].begin(); it != js["mask_paths"].end(); ++it) {
                scan.mask_paths[it.key()] = it.value().get<std::string>();
            }
        }
        m.scans.push_back(std::move(scan));
    }

    if (root.contains("splits")) {
        for (auto it = root["splits"].begin(); it != root["splits"].end(); ++it) {
            std::vector<std::string> ids;
            for (const json& j : it.value()) ids.push_back(j.get<std::string>());
            m.splits[it.key()] = std::move(ids);
        }
    }

    if (root.contains("patches")) {
        for (const json& jp : root["patches"]) {
            require_fields(jp,
                           {"patch_id", "scan_id", "method", "crop", "label", "source_vertebra",
                            "split"},
                           {"patch_id", "scan_id", "method", "crop", "label"}, "patch record");
            PatchRecord p;
            p.patch_id = jp["patch_id"].get<std::string>();
            p.scan_id = jp["scan_id"].get<std::string>();
            p.method = patch_method_from_string(jp["method"].get<std::string>());
            const json& jc = jp["crop"];
            if (!jc.is_array() || jc.size() != 4) {
                throw SchemaError("crop must be [x0, y0, x1, y1] in patch '" + p.patch_id + "'");
            }
            p.crop = BBox{jc[0].get<double>(), jc[1].get<double>(), jc[2].get<double>(),
                          jc[3].get<double>()};
            p.label = patch_label_from_string(jp["label"].get<std::string>());
            if (jp.contains("source_vertebra")) {
                p.source_vertebra = jp["source_vertebra"].get<std::string>();
            }
            if (jp.contains("split")) p.split = jp["split"].get<std::string>();
            m.patches.push_back(std::move(p));
        }
    }

    validate_manifest(m);
    return m;
}

DatasetManifest parse_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    DatasetManifest m = parse_manifest_text(text, path);
    m.base_dir = std::filesystem::path(path).parent_path().string();
    return m;
}

void validate_manifest(const DatasetManifest& m) {
    if (m.version != 1) {
        throw SchemaError("unsupported manifest version " + std::to_string(m.version));
    }
    std::set<std::string> scan_ids;
    for (const ScanRecord& scan : m.scans) {
        if (scan.scan_id.empty()) throw SchemaError("scan with empty scan_id");
        if (!scan_ids.insert(scan.scan_id).second) {
            throw SchemaError("duplicate scan_id '" + scan.scan_id + "'");
        }
        if (scan.width < 1 || scan.height < 1) {
            throw SchemaError("scan '" + scan.scan_id + "' has non-positive dimensions");
        }
        for (const VertebraAnnotation& ann : scan.vertebrae) {
            if (ann.points.size() != 6) {
                throw SchemaError("vertebra '" + ann.vertebra_id + "' in scan '" + scan.scan_id +
                                  "' has " + std::to_string(ann.points.size()) +
                                  " points; each vertebra must be delineated by six pixel points");
            }
            if (ann.region != scan.region) {
                throw SchemaError("vertebra '" + ann.vertebra_id + "' region differs from scan '" +
                                  scan.scan_id + "' region");
            }
            for (const Point& p : ann.points) {
                check_in_bounds(p, scan, "vertebra point");
            }
        }
        for (const OsteophytePoint& o : scan.osteophytes) {
            check_in_bounds(o.location, scan, "osteophyte point");
        }
    }
    std::set<std::string> seen_in_split;
    for (const auto& [name, ids] : m.splits) {
        for (const std::string& id : ids) {
            if (!scan_ids.count(id)) {
                throw SchemaError("split '" + name + "' references unknown scan_id '" + id + "'");
            }
            if (!seen_in_split.insert(id).second) {
                throw SchemaError("scan_id '" + id + "' appears in more than one split");
            }
        }
    }
    for (const PatchRecord& p : m.patches) {
        if (!scan_ids.count(p.scan_id)) {
            throw SchemaError("patch '" + p.patch_id + "' references unknown scan_id '" +
                              p.scan_id + "'");
        }
        if (p.crop.x1 < p.crop.x0 || p.crop.y1 < p.crop.y0) {
            throw SchemaError("patch '" + p.patch_id + "' has an inverted crop box");
        }
        if (p.split && *p.split != "train" && *p.split != "test") {
            throw SchemaError("patch '" + p.patch_id + "' has unknown split '" + *p.split + "'");
        }
    }
}

std::string manifest_to_text(const DatasetManifest& manifest) {
    validate_manifest(manifest);
    DatasetManifest m = manifest;
    std::sort(m.scans.begin(), m.scans.end(),
              [](const ScanRecord& a, const ScanRecord& b) { return a.scan_id < b.scan_id; });
    std::sort(m.patches.begin(), m.patches.end(), [](const PatchRecord& a, const PatchRecord& b) {
        if (a.method != b.method) return to_string(a.method) < to_string(b.method);
        if (a.scan_id != b.scan_id) return a.scan_id < b.scan_id;
        return a.patch_id < b.patch_id;
    });

    std::ostringstream out;
    out << "{\n";
    out << "  \"version\": " << m.version << ",\n";
    out << "  \"scans\": [";
    for (std::size_t i = 0; i < m.scans.size(); ++i) {
        const ScanRecord& s = m.scans[i];
        out << (i ? ",\n" : "\n");
        out << "    {\n";
        out << "      \"height\": " << s.height << ",\n";
        out << "      \"image_path\": \"" << json_escape(s.image_path) << "\",\n";
        if (!s.mask_paths.empty()) {
            out << "      \"mask_paths\": {";
            bool first = true;
            for (const auto& [vid, path] : s.mask_paths) {
                out << (first ? "" : ", ") << "\"" << json_escape(vid) << "\": \""
                    << json_escape(path) << "\"";
                first = false;
            }
            out << "},\n";
        }
        out << "      \"osteophytes\": [";
        for (std::size_t k = 0; k < s.osteophytes.size(); ++k) {
            const OsteophytePoint& o = s.osteophytes[k];
            out << (k ? ", " : "") << "{\"x\": " << fmt3(o.location.x)
                << ", \"y\": " << fmt3(o.location.y);
            if (o.vertebra_id) out << ", \"vertebra_id\": \"" << json_escape(*o.vertebra_id) << "\"";
            out << "}";
        }
        out << "],\n";
        out << "      \"region\": \"" << to_string(s.region) << "\",\n";
        out << "      \"scan_id\": \"" << json_escape(s.scan_id) << "\",\n";
        out << "      \"vertebrae\": [";
        for (std::size_t k = 0; k < s.vertebrae.size(); ++k) {
            const VertebraAnnotation& v = s.vertebrae[k];
            out << (k ? ",\n                     " : "");
            out << "{\"points\": [";
            for (std::size_t j = 0; j < v.points.size(); ++j) {
                out << (j ? ", " : "") << "[" << fmt3(v.points[j].x) << ", " << fmt3(v.points[j].y)
                    << "]";
            }
            out << "], \"region\": \"" << to_string(v.region) << "\", \"vertebra_id\": \""
                << json_escape(v.vertebra_id) << "\"}";
        }
        out << "],\n";
        out << "      \"width\": " << s.width << "\n";
        out << "    }";
    }
    out << (m.scans.empty() ? "]" : "\n  ]");
    out << ",\n  \"splits\": {";
    {
        bool first = true;
        for (const auto& [name, ids] : m.splits) {
            out << (first ? "" : ", ") << "\"" << json_escape(name) << "\": [";
            for (std::size_t k = 0; k < ids.size(); ++k) {
                out << (k ? ", " : "") << "\"" << json_escape(ids[k]) << "\"";
            }
            out << "]";
            first = false;
        }
    }
    out << "},\n  \"patches\": [";
    for (std::size_t i = 0; i < m.patches.size(); ++i) {
        const PatchRecord& p = m.patches[i];
        out << (i ? ",\n" : "\n");
        out << "    {\"crop\": [" << fmt3(p.crop.x0) << ", " << fmt3(p.crop.y0) << ", "
            << fmt3(p.crop.x1) << ", " << fmt3(p.crop.y1) << "], \"label\": \""
            << to_string(p.label) << "\", \"method\": \"" << to_string(p.method)
            << "\", \"patch_id\": \"" << json_escape(p.patch_id) << "\", \"scan_id\": \""
            << json_escape(p.scan_id) << "\"";
        if (p.source_vertebra) {
            out << ", \"source_vertebra\": \"" << json_escape(*p.source_vertebra) << "\"";
        }
        if (p.split) out << ", \"split\": \"" << json_escape(*p.split) << "\"";
        out << "}";
    }
    out << (m.patches.empty() ? "]" : "\n  ]");
    out << "\n}\n";
    return out.str();
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::string text = manifest_to_text(manifest);
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out << text;
        if (!out) throw IoError("write failure: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

Polygon vertebra_polygon(const VertebraAnnotation& ann) {
    if (ann.points.size() != 6) {
        throw InvalidGeometryError("vertebra '" + ann.vertebra_id + "' must have six points");
    }
    Point c{0, 0};
    for (const Point& p : ann.points) {
        c.x += p.x;
        c.y += p.y;
    }
    c.x /= 6.0;
    c.y /= 6.0;
    std::vector<Point> sorted = ann.points;
    std::sort(sorted.begin(), sorted.end(), [&](const Point& a, const Point& b) {
        double aa = std::atan2(a.y - c.y, a.x - c.x);
        double ab = std::atan2(b.y - c.y, b.x - c.x);
        if (aa != ab) return aa < ab;
        double ra = std::hypot(a.x - c.x, a.y - c.y);
        double rb = std::hypot(b.x - c.x, b.y - c.y);
        return ra < rb;
    });
    Polygon poly(std::move(sorted));
    if (poly.degenerate() || polygon_area(poly) < 1e-9) {
        throw InvalidGeometryError("vertebra '" + ann.vertebra_id +
                                   "' points are collinear or degenerate");
    }
    return poly;
}

void split_dataset(DatasetManifest& manifest, double train_fraction, std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw InvalidArgumentError("train_fraction must be in (0, 1)");
    }
    if (manifest.scans.size() < 4) {
        throw SplitError("need at least 4 scans to split, have " +
                         std::to_string(manifest.scans.size()));
    }
    std::vector<std::string> train_ids, test_ids;
    const Region regions[2] = {Region::cervical, Region::lumbar};
    for (int ri = 0; ri < 2; ++ri) {
        std::vector<std::string> ids;
        for (const ScanRecord& s : manifest.scans) {
            if (s.region == regions[ri]) ids.push_back(s.scan_id);
        }
        std::sort(ids.begin(), ids.end());
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(ri)));
        rng.shuffle(ids);
        std::size_t n_train = static_cast<std::size_t>(
            std::lround(train_fraction * static_cast<double>(ids.size())));
        for (std::size_t i = 0; i < ids.size(); ++i) {
            (i < n_train ? train_ids : test_ids).push_back(ids[i]);
        }
    }
    std::sort(train_ids.begin(), train_ids.end());
    std::sort(test_ids.begin(), test_ids.end());
    manifest.splits.clear();
    manifest.splits["train"] = std::move(train_ids);
    manifest.splits["test"] = std::move(test_ids);

    // Scan-level assignment: patches inherit their scan's split.
    std::map<std::string, std::string> scan_split;
    for (const auto& [name, ids] : manifest.splits) {
        for (const std::string& id : ids) scan_split[id] = name;
    }
    for (PatchRecord& p : manifest.patches) {
        auto it = scan_split.find(p.scan_id);
        if (it != scan_split.end()) p.split = it->second;
    }
}

}  // namespace spinepatch
