#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "spinepatch/geometry.hpp"
#include "spinepatch/rng.hpp"

using namespace spinepatch;

namespace {

Polygon unit_square4() {
    return Polygon({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
}

}  // namespace

TEST_CASE("point_in_polygon basic containment") {
    Polygon sq = unit_square4();
    CHECK(point_in_polygon({1, 1}, sq));
    CHECK_FALSE(point_in_polygon({5, 5}, sq));
    CHECK(point_in_polygon({0, 0}, sq));
    CHECK(point_in_polygon({4, 2}, sq));
    CHECK(point_in_polygon({2, 0}, sq));
}

TEST_CASE("point_in_polygon rejects degenerate polygons") {
    Polygon line({{0, 0}, {1, 1}});
    CHECK_THROWS_AS(point_in_polygon({0, 0}, line), InvalidGeometryError);
}

TEST_CASE("point_in_polygon matches winding-number oracle on 1000 random cases") {
    Rng rng(101);
    int checked = 0;
    int mismatches = 0;
    while (checked < 1000) {
        int n = rng.uniform_int(3, 10);
        auto verts = testutil::random_star_polygon(rng, rng.uniform(40, 60),
                                                   rng.uniform(40, 60), 5.0, 30.0, n);
        Polygon poly(verts);
        if (poly.degenerate()) continue;
        Point p{rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)};
        if (testutil::dist_to_polygon_boundary(p, poly.vertices()) < 1e-6) continue;
        bool oracle = testutil::winding_number_inside(p, poly.vertices());
        if (point_in_polygon(p, poly) != oracle) ++mismatches;
        ++checked;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("bbox_of equals vertex min/max") {
    CHECK(bbox_of(unit_square4()) == BBox{0, 0, 4, 4});
    CHECK(bbox_of(Polygon({{0, 0}, {10, 0}, {5, 2}})) == BBox{0, 0, 10, 2});

    Rng rng(102);
    for (int i = 0; i < 50; ++i) {
        auto verts = testutil::random_star_polygon(rng, 50, 50, 3.0, 40.0, rng.uniform_int(3, 9));
        Polygon poly(verts);
        if (poly.degenerate()) continue;
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        for (const Point& v : poly.vertices()) {
            x0 = std::min(x0, v.x);
            y0 = std::min(y0, v.y);
            x1 = std::max(x1, v.x);
            y1 = std::max(y1, v.y);
        }
        BBox b = bbox_of(poly);
        CHECK(b.x0 == x0);
        CHECK(b.y0 == y0);
        CHECK(b.x1 == x1);
        CHECK(b.y1 == y1);
    }
}

TEST_CASE("expand_contour with zero displacement is the identity") {
    Polygon sq({{0, 0}, {2, 0}, {2, 2}, {0, 2}});
    Polygon out = expand_contour(sq, 0.0, 0.0);
    CHECK(out == sq);
}

TEST_CASE("expand_contour unit square example") {
    Polygon sq({{0, 0}, {2, 0}, {2, 2}, {0, 2}});
    Polygon out = expand_contour(sq, 1.0, 1.0);
    CHECK(bbox_of(out) == BBox{-1, 0, 2, 3});
}

TEST_CASE("expand_contour contains the input region") {
    Rng rng(103);
    for (int i = 0; i < 100; ++i) {
        auto verts =
            testutil::random_convex_polygon(rng, 50, 50, rng.uniform(10, 30), rng.uniform_int(4, 8));
        Polygon poly(verts);
        if (poly.degenerate()) continue;
        Polygon expanded = expand_contour(poly, 3.0, 3.0);
        BBox b = bbox_of(poly);
        // Dense sample of the input polygon must land inside the output.
        for (int s = 0; s < 200; ++s) {
            Point p{rng.uniform(b.x0, b.x1), rng.uniform(b.y0, b.y1)};
            if (!point_in_polygon(p, poly)) continue;
            CHECK(point_in_polygon(p, expanded));
        }
    }
}

TEST_CASE("expand_contour grows the bbox by the displacement") {
    Rng rng(104);
    for (int i = 0; i < 50; ++i) {
        auto verts =
            testutil::random_convex_polygon(rng, 50, 50, rng.uniform(10, 30), rng.uniform_int(4, 8));
        Polygon poly(verts);
        if (poly.degenerate()) continue;
        Point c = vertex_centroid(poly);
        BBox before = bbox_of(poly);
        bool leftmost_left_of_centroid = false, lowest_below_centroid = false;
        for (const Point& v : poly.vertices()) {
            if (v.x == before.x0 && v.x < c.x) leftmost_left_of_centroid = true;
            if (v.y == before.y1 && v.y > c.y) lowest_below_centroid = true;
        }
        double dx = rng.uniform(1.0, 10.0), dy = rng.uniform(1.0, 10.0);
        BBox after = bbox_of(expand_contour(poly, dx, dy));
        CHECK(after.x0 <= before.x0);
        CHECK(after.y0 <= before.y0);
        CHECK(after.x1 >= before.x1);
        CHECK(after.y1 >= before.y1);
        if (leftmost_left_of_centroid) CHECK(after.width() == doctest::Approx(before.width() + dx));
        if (lowest_below_centroid) CHECK(after.height() == doctest::Approx(before.height() + dy));
    }
}

TEST_CASE("bbox_intersects closed-set convention") {
    CHECK(bbox_intersects({0, 0, 10, 10}, {5, 5, 15, 15}));
    CHECK_FALSE(bbox_intersects({0, 0, 10, 10}, {11, 0, 20, 10}));
    CHECK(bbox_intersects({0, 0, 10, 10}, {10, 0, 20, 10}));
}

TEST_CASE("bbox_intersects is symmetric and reflexive") {
    Rng rng(105);
    for (int i = 0; i < 200; ++i) {
        double ax0 = rng.uniform(0, 50), ay0 = rng.uniform(0, 50);
        double bx0 = rng.uniform(0, 50), by0 = rng.uniform(0, 50);
        BBox a{ax0, ay0, ax0 + rng.uniform(0, 30), ay0 + rng.uniform(0, 30)};
        BBox b{bx0, by0, bx0 + rng.uniform(0, 30), by0 + rng.uniform(0, 30)};
        CHECK(bbox_intersects(a, a));
        CHECK(bbox_intersects(a, b) == bbox_intersects(b, a));
        CHECK(bbox_intersects(a, b) ==
              testutil::rects_overlap(a.x0, a.y0, a.x1, a.y1, b.x0, b.y0, b.x1, b.y1));
    }
}

TEST_CASE("point_to_box produces centered squares") {
    CHECK(point_to_box({100, 100}, 18) == BBox{82, 82, 118, 118});
    CHECK(point_to_box({0, 0}, 5) == BBox{-5, -5, 5, 5});
    for (double half : {5.0, 9.0, 18.0, 27.0}) {
        BBox b = point_to_box({40, 70}, half);
        CHECK(b.width() == doctest::Approx(2 * half));
        CHECK(b.height() == doctest::Approx(2 * half));
        CHECK((b.x0 + b.x1) / 2 == doctest::Approx(40));
        CHECK((b.y0 + b.y1) / 2 == doctest::Approx(70));
    }
    CHECK_THROWS_AS(point_to_box({0, 0}, 0.0), InvalidArgumentError);
    CHECK_THROWS_AS(point_to_box({0, 0}, -1.0), InvalidArgumentError);
}

TEST_CASE("polygon normalizes orientation and drops duplicate vertices") {
    Polygon cw({{0, 0}, {0, 4}, {4, 4}, {4, 0}});
    Polygon ccw({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
    CHECK(cw == ccw);
    CHECK(polygon_area(cw) == doctest::Approx(16.0));

    Polygon dup({{0, 0}, {0, 0}, {4, 0}, {4, 4}, {0, 4}, {0, 0}});
    CHECK(dup.size() == 4);
}
