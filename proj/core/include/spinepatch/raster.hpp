#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spinepatch/geometry.hpp"

namespace spinepatch {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major, width*height

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

inline bool operator==(const GrayImage& a, const GrayImage& b) {
    return a.width == b.width && a.height == b.height && a.data == b.data;
}

// Foreground = nonzero. Contract: one vertebra body per mask (tracing keeps
// the largest 4-connected component if speckle is present).
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v) {
        data[static_cast<std::size_t>(y) * width + x] = v ? 255 : 0;
    }
};

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major RGB triplets

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        data[i] = r;
        data[i + 1] = g;
        data[i + 2] = b;
    }
};

// Integer pixel window of a continuous box: columns [floor(x0), ceil(x1)),
// rows [floor(y0), ceil(y1)), intersected with the image.
struct PixelRect {
    int x = 0, y = 0, w = 0, h = 0;
};
PixelRect clamp_box_to_image(const BBox& box, int img_w, int img_h);

// Crop the clamped window; throws EmptyCropError when it is empty.
GrayImage crop(const GrayImage& img, const BBox& box);

// Corner-aligned bilinear resampling; identity when dims are unchanged.
GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h);

// Classic CDF remap: out = round(255*(cdf(v)-cdf_min)/(N-cdf_min)).
GrayImage equalize_histogram(const GrayImage& img);

// Rotation about the image center, bilinear sampling, zero fill, output
// dims unchanged. Positive angles rotate content counter-clockwise in the
// math frame, i.e. out(x,y) samples in(R(-deg)(p-c)+c). |degrees| <= 180.
GrayImage rotate(const GrayImage& img, double degrees);

// Ordered boundary (Moore-neighbor tracing over pixel centers) of the
// largest 4-connected foreground component. Single-pixel / thin components
// yield degenerate polygons.
Polygon trace_mask_contour(const BinaryMask& mask);

struct OverlayDot {
    Point center;
    double radius = 3.0;
};

// Burns contours, dots and boxes into an RGB copy of img and writes a PNG.
// Contours and boxes are drawn in purple, dots in red.
void render_overlay(const GrayImage& img, const std::vector<Polygon>& polygons,
                    const std::vector<OverlayDot>& points, const std::vector<BBox>& boxes,
                    const std::string& path);

double mean_intensity(const GrayImage& img);

}  // namespace spinepatch
