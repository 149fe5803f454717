#pragma once

#include <vector>

#include "spinepatch/error.hpp"

namespace spinepatch {

// Pixel coordinates: origin top-left, +X right, +Y down.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(const Point& a, const Point& b) {
    return a.x == b.x && a.y == b.y;
}

// Axis-aligned box, continuous coordinates, x0 <= x1 and y0 <= y1.
struct BBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

inline bool operator==(const BBox& a, const BBox& b) {
    return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1;
}

// Closed contour. Construction drops consecutive duplicate vertices (and a
// trailing copy of the first vertex) and normalizes vertex order to
// counter-clockwise as seen on screen in the +Y-down frame. Degenerate
// polygons (< 3 vertices) are representable; containment and area throw.
class Polygon {
public:
    Polygon() = default;
    explicit Polygon(std::vector<Point> vertices);

    const std::vector<Point>& vertices() const { return verts_; }
    std::size_t size() const { return verts_.size(); }
    bool degenerate() const { return verts_.size() < 3; }

private:
    std::vector<Point> verts_;
};

bool operator==(const Polygon& a, const Polygon& b);

// Shoelace area, positive for the normalized (counter-clockwise on screen)
// orientation. Throws InvalidGeometryError for degenerate polygons.
double polygon_area(const Polygon& poly);

// Mean of the vertices.
Point vertex_centroid(const Polygon& poly);

// True iff p is inside or on the boundary (boundary tolerance 1e-9 px).
bool point_in_polygon(const Point& p, const Polygon& poly);

BBox bbox_of(const Polygon& poly);

// Directional contour enlargement: vertices on the centroid's left half
// (v.x <= cx) shift by -dx, vertices on the lower half (v.y >= cy) shift
// by +dy; the result is the convex hull of the original and shifted vertex
// sets, so the input region is always contained. dx = dy = 0 returns the
// input unchanged.
Polygon expand_contour(const Polygon& poly, double dx_minus_x, double dy_plus_y);

// Closed-rectangle intersection test (edge touching counts).
bool bbox_intersects(const BBox& a, const BBox& b);

// Square box of side 2*half_extent centered at p.
BBox point_to_box(const Point& p, double half_extent);

bool bbox_contains(const BBox& box, const Point& p);

}  // namespace spinepatch
