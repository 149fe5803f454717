#pragma once

// Independent reference implementations used to cross-check the library,
// plus small utilities shared by the test binaries. Everything here is
// intentionally written from scratch rather than calling back into the
// code under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "spinepatch/geometry.hpp"
#include "spinepatch/raster.hpp"
#include "spinepatch/rng.hpp"

namespace testutil {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Geometry oracles
// ---------------------------------------------------------------------------

// Signed-angle winding number. Inside iff the total turn is ~ +-2*pi.
inline bool winding_number_inside(const spinepatch::Point& p,
                                  const std::vector<spinepatch::Point>& verts) {
    double total = 0.0;
    const std::size_t n = verts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const spinepatch::Point& a = verts[i];
        const spinepatch::Point& b = verts[(i + 1) % n];
        double ax = a.x - p.x, ay = a.y - p.y;
        double bx = b.x - p.x, by = b.y - p.y;
        total += std::atan2(ax * by - ay * bx, ax * bx + ay * by);
    }
    return std::abs(total) > 3.14159265358979323846;
}

inline double dist_point_segment(const spinepatch::Point& p, const spinepatch::Point& a,
                                 const spinepatch::Point& b) {
    double vx = b.x - a.x, vy = b.y - a.y;
    double wx = p.x - a.x, wy = p.y - a.y;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
    double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
    return std::hypot(dx, dy);
}

inline double dist_to_polygon_boundary(const spinepatch::Point& p,
                                       const std::vector<spinepatch::Point>& verts) {
    double best = 1e300;
    const std::size_t n = verts.size();
    for (std::size_t i = 0; i < n; ++i) {
        best = std::min(best, dist_point_segment(p, verts[i], verts[(i + 1) % n]));
    }
    return best;
}

// Star-shaped polygon around a random center: always simple.
inline std::vector<spinepatch::Point> random_star_polygon(spinepatch::Rng& rng, double cx,
                                                          double cy, double r_min,
                                                          double r_max, int n_verts) {
    std::vector<double> angles(n_verts);
    for (double& a : angles) a = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    std::sort(angles.begin(), angles.end());
    std::vector<spinepatch::Point> pts;
    for (double a : angles) {
        double r = rng.uniform(r_min, r_max);
        pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    return pts;
}

inline std::vector<spinepatch::Point> random_convex_polygon(spinepatch::Rng& rng, double cx,
                                                            double cy, double radius,
                                                            int n_verts) {
    // Points on a circle with jittered angles stay convex.
    std::vector<double> angles(n_verts);
    for (double& a : angles) a = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    std::sort(angles.begin(), angles.end());
    std::vector<spinepatch::Point> pts;
    for (double a : angles) pts.push_back({cx + radius * std::cos(a), cy + radius * std::sin(a)});
    return pts;
}

// Closed-interval rectangle overlap written independently of the library.
inline bool rects_overlap(double ax0, double ay0, double ax1, double ay1, double bx0,
                          double by0, double bx1, double by1) {
    if (ax1 < bx0) return false;
    if (bx1 < ax0) return false;
    if (ay1 < by0) return false;
    if (by1 < ay0) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Raster oracles
// ---------------------------------------------------------------------------

// Rasterize a polygon over a w*h grid, counting boundary pixels as inside.
inline spinepatch::BinaryMask fill_polygon_mask(const spinepatch::Polygon& poly, int w, int h) {
    spinepatch::BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (spinepatch::point_in_polygon(
                    {static_cast<double>(x), static_cast<double>(y)}, poly)) {
                out.set(x, y, true);
            }
        }
    }
    return out;
}

inline double mask_iou(const spinepatch::BinaryMask& a, const spinepatch::BinaryMask& b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        bool fa = a.data[i] != 0, fb = b.data[i] != 0;
        if (fa && fb) ++inter;
        if (fa || fb) ++uni;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Connected blob from a chain of overlapping disks.
inline spinepatch::BinaryMask random_blob(spinepatch::Rng& rng, int w, int h) {
    spinepatch::BinaryMask mask(w, h);
    double x = rng.uniform(w * 0.3, w * 0.7);
    double y = rng.uniform(h * 0.3, h * 0.7);
    int n_disks = rng.uniform_int(3, 8);
    for (int i = 0; i < n_disks; ++i) {
        double r = rng.uniform(6.0, 12.0);
        int x0 = std::max(0, static_cast<int>(x - r)), x1 = std::min(w - 1, static_cast<int>(x + r));
        int y0 = std::max(0, static_cast<int>(y - r)), y1 = std::min(h - 1, static_cast<int>(y + r));
        for (int py = y0; py <= y1; ++py) {
            for (int px = x0; px <= x1; ++px) {
                if (std::hypot(px - x, py - y) <= r) mask.set(px, py, true);
            }
        }
        // Step less than the radius so consecutive disks stay connected.
        x = std::clamp(x + rng.uniform(-r * 0.8, r * 0.8), 8.0, w - 9.0);
        y = std::clamp(y + rng.uniform(-r * 0.8, r * 0.8), 8.0, h - 9.0);
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Process / filesystem helpers
// ---------------------------------------------------------------------------

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("spinepatch_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

// Runs a shell command, returns its exit status; stdout/stderr land in the
// given files when non-empty.
inline int run_cmd(const std::string& cmd, const std::string& stdout_file = "",
                   const std::string& stderr_file = "") {
    std::string full = cmd;
    if (!stdout_file.empty()) full += " > " + stdout_file;
    if (!stderr_file.empty()) full += " 2> " + stderr_file;
    int rc = std::system(full.c_str());
    if (rc == -1) return -1;
    return WEXITSTATUS(rc);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline bool files_equal(const fs::path& a, const fs::path& b) {
    return read_file(a.string()) == read_file(b.string());
}

// Byte-compares two directory trees (relative structure and file contents).
inline bool dirs_equal(const fs::path& a, const fs::path& b, std::string* diff = nullptr) {
    std::vector<fs::path> rel_a, rel_b;
    for (auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
    }
    for (auto& e : fs::recursive_directory_iterator(b)) {
        if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
    }
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) {
        if (diff) *diff = "file lists differ";
        return false;
    }
    for (const fs::path& rel : rel_a) {
        if (!files_equal(a / rel, b / rel)) {
            if (diff) *diff = "content differs: " + rel.string();
            return false;
        }
    }
    return true;
}

}  // namespace testutil
