#include "spinepatch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spinepatch {

namespace {

double shoelace(const std::vector<Point>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % v.size()];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double dist_point_segment(const Point& p, const Point& a, const Point& b) {
    double vx = b.x - a.x, vy = b.y - a.y;
    double wx = p.x - a.x, wy = p.y - a.y;
    double c1 = vx * wx + vy * wy;
    if (c1 <= 0.0) return std::hypot(wx, wy);
    double c2 = vx * vx + vy * vy;
    if (c1 >= c2) return std::hypot(p.x - b.x, p.y - b.y);
    double t = c1 / c2;
    return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

// Andrew monotone chain. Returns hull in counter-clockwise screen order
// (+Y down), collinear points dropped.
std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point& a, const Point& b) { return a == b; }),
              pts.end());
    std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<Point> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace

Polygon::Polygon(std::vector<Point> vertices) : verts_(std::move(vertices)) {
    for (const Point& p : verts_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw InvalidGeometryError("polygon vertex is not finite");
        }
    }
    // Drop consecutive duplicates, including the wrap-around pair.
    std::vector<Point> clean;
    clean.reserve(verts_.size());
    for (const Point& p : verts_) {
        if (clean.empty() || !(clean.back() == p)) clean.push_back(p);
    }
    while (clean.size() > 1 && clean.front() == clean.back()) clean.pop_back();
    verts_ = std::move(clean);

    if (verts_.size() >= 3 && shoelace(verts_) < 0.0) {
        std::reverse(verts_.begin() + 1, verts_.end());
    }
}

bool operator==(const Polygon& a, const Polygon& b) {
    return a.vertices() == b.vertices();
}

double polygon_area(const Polygon& poly) {
    if (poly.degenerate()) {
        throw InvalidGeometryError("polygon area requires >= 3 vertices");
    }
    return std::abs(shoelace(poly.vertices()));
}

Point vertex_centroid(const Polygon& poly) {
    if (poly.size() == 0) {
        throw InvalidGeometryError("centroid of empty polygon");
    }
    Point c;
    for (const Point& p : poly.vertices()) {
        c.x += p.x;
        c.y += p.y;
    }
    c.x /= static_cast<double>(poly.size());
    c.y /= static_cast<double>(poly.size());
    return c;
}

bool point_in_polygon(const Point& p, const Polygon& poly) {
    if (poly.degenerate()) {
        throw InvalidGeometryError("point_in_polygon requires >= 3 vertices");
    }
    const std::vector<Point>& v = poly.vertices();
    const std::size_t n = v.size();

    constexpr double kBoundaryTol = 1e-9;
    for (std::size_t i = 0; i < n; ++i) {
        if (dist_point_segment(p, v[i], v[(i + 1) % n]) <= kBoundaryTol) {
            return true;
        }
    }

    // Even-odd ray crossing, ray toward +X.
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((v[i].y > p.y) != (v[j].y > p.y)) {
            double xint = v[j].x + (p.y - v[j].y) / (v[i].y - v[j].y) * (v[i].x - v[j].x);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

BBox bbox_of(const Polygon& poly) {
    if (poly.size() == 0) {
        throw InvalidGeometryError("bbox of empty polygon");
    }
    BBox b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
           std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const Point& p : poly.vertices()) {
        b.x0 = std::min(b.x0, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.x1 = std::max(b.x1, p.x);
        b.y1 = std::max(b.y1, p.y);
    }
    return b;
}

Polygon expand_contour(const Polygon& poly, double dx_minus_x, double dy_plus_y) {
    if (dx_minus_x < 0.0 || dy_plus_y < 0.0) {
        throw InvalidArgumentError("contour expansion displacements must be >= 0");
    }
    if (poly.size() == 0) {
        throw InvalidGeometryError("expand_contour on empty polygon");
    }
    if (dx_minus_x == 0.0 && dy_plus_y == 0.0) return poly;

    const Point c = vertex_centroid(poly);
    std::vector<Point> pts = poly.vertices();
    for (const Point& v : poly.vertices()) {
        Point m = v;
        if (v.x <= c.x) m.x -= dx_minus_x;
        if (v.y >= c.y) m.y += dy_plus_y;
        pts.push_back(m);
    }
    if (poly.degenerate()) return Polygon(std::move(pts));
    return Polygon(convex_hull(std::move(pts)));
}

bool bbox_intersects(const BBox& a, const BBox& b) {
    return a.x0 <= b.x1 && b.x0 <= a.x1 && a.y0 <= b.y1 && b.y0 <= a.y1;
}

BBox point_to_box(const Point& p, double half_extent) {
    if (half_extent <= 0.0) {
        throw InvalidArgumentError("half_extent must be positive");
    }
    return BBox{p.x - half_extent, p.y - half_extent, p.x + half_extent, p.y + half_extent};
}

bool bbox_contains(const BBox& box, const Point& p) {
    return p.x >= box.x0 && p.x <= box.x1 && p.y >= box.y0 && p.y <= box.y1;
}

}  // namespace spinepatch
