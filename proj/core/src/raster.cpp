#include "spinepatch/raster.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "spinepatch/error.hpp"
#include "spinepatch/image_io.hpp"

namespace spinepatch {

namespace {

constexpr double kPi = 3.14159265358979323846;

double bilinear_sample(const GrayImage& img, double sx, double sy) {
    int x0 = static_cast<int>(std::floor(sx));
    int y0 = static_cast<int>(std::floor(sy));
    double fx = sx - x0;
    double fy = sy - y0;
    auto px = [&](int x, int y) -> double {
        x = std::clamp(x, 0, img.width - 1);
        y = std::clamp(y, 0, img.height - 1);
        return img.at(x, y);
    };
    double top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
    double bot = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

std::uint8_t to_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

PixelRect clamp_box_to_image(const BBox& box, int img_w, int img_h) {
    if (box.x1 < box.x0 || box.y1 < box.y0) {
        throw InvalidArgumentError("box has negative extent");
    }
    int x0 = std::max(0, static_cast<int>(std::floor(box.x0)));
    int y0 = std::max(0, static_cast<int>(std::floor(box.y0)));
    int x1 = std::min(img_w, static_cast<int>(std::ceil(box.x1)));
    int y1 = std::min(img_h, static_cast<int>(std::ceil(box.y1)));
    PixelRect r;
    r.x = x0;
    r.y = y0;
    r.w = std::max(0, x1 - x0);
    r.h = std::max(0, y1 - y0);
    return r;
}

GrayImage crop(const GrayImage& img, const BBox& box) {
    PixelRect r = clamp_box_to_image(box, img.width, img.height);
    if (r.w == 0 || r.h == 0) {
        throw EmptyCropError("crop window is empty after clamping to image bounds");
    }
    GrayImage out(r.w, r.h);
    for (int y = 0; y < r.h; ++y) {
        const std::uint8_t* src = img.data.data() + static_cast<std::size_t>(r.y + y) * img.width + r.x;
        std::copy(src, src + r.w, out.data.begin() + static_cast<std::size_t>(y) * r.w);
    }
    return out;
}

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw InvalidArgumentError("resize target must be >= 1");
    if (out_w == img.width && out_h == img.height) return img;
    GrayImage out(out_w, out_h);
    // Corner-aligned: first/last samples map to first/last source pixels.
    double sx_step = out_w > 1 ? static_cast<double>(img.width - 1) / (out_w - 1) : 0.0;
    double sy_step = out_h > 1 ? static_cast<double>(img.height - 1) / (out_h - 1) : 0.0;
    for (int y = 0; y < out_h; ++y) {
        double sy = y * sy_step;
        for (int x = 0; x < out_w; ++x) {
            out.at(x, y) = to_u8(bilinear_sample(img, x * sx_step, sy));
        }
    }
    return out;
}

GrayImage equalize_histogram(const GrayImage& img) {
    std::size_t hist[256] = {};
    for (std::uint8_t v : img.data) ++hist[v];
    std::size_t cdf[256];
    std::size_t acc = 0;
    for (int i = 0; i < 256; ++i) {
        acc += hist[i];
        cdf[i] = acc;
    }
    std::size_t cdf_min = 0;
    for (int i = 0; i < 256; ++i) {
        if (cdf[i] != 0) {
            cdf_min = cdf[i];
            break;
        }
    }
    const std::size_t n = img.data.size();
    std::uint8_t lut[256];
    if (n == cdf_min) {
        // Single intensity level: remap is the identity.
        for (int i = 0; i < 256; ++i) lut[i] = static_cast<std::uint8_t>(i);
    } else {
        double denom = static_cast<double>(n - cdf_min);
        for (int i = 0; i < 256; ++i) {
            double v = 255.0 * (static_cast<double>(cdf[i]) - static_cast<double>(cdf_min)) / denom;
            lut[i] = to_u8(v);
        }
    }
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < n; ++i) out.data[i] = lut[img.data[i]];
    return out;
}

GrayImage rotate(const GrayImage& img, double degrees) {
    if (std::abs(degrees) > 180.0) {
        throw InvalidArgumentError("rotation angle must satisfy |degrees| <= 180");
    }
    if (degrees == 0.0) return img;
    double rad = degrees * kPi / 180.0;
    double c = std::cos(rad);
    double s = std::sin(rad);
    double cx = (img.width - 1) / 2.0;
    double cy = (img.height - 1) / 2.0;
    GrayImage out(img.width, img.height);
    const int w = img.width;
    const int h = img.height;
    const std::uint8_t* src = img.data.data();
    for (int y = 0; y < h; ++y) {
        // Inverse map: rotate output coords by -degrees. The source
        // coordinates are affine in x, so hoist the row-constant parts.
        const double dy = y - cy;
        const double row_sx = cx - c * cx + s * dy;
        const double row_sy = cy + s * cx + c * dy;
        std::uint8_t* dst = out.data.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double sx = row_sx + c * x;
            double sy = row_sy - s * x;
            if (sx < -0.5 || sy < -0.5 || sx > w - 0.5 || sy > h - 0.5) {
                dst[x] = 0;
                continue;
            }
            int x0 = static_cast<int>(std::floor(sx));
            int y0 = static_cast<int>(std::floor(sy));
            double fx = sx - x0;
            double fy = sy - y0;
            if (x0 >= 0 && y0 >= 0 && x0 + 1 < w && y0 + 1 < h) {
                const std::uint8_t* r0 = src + static_cast<std::size_t>(y0) * w + x0;
                const std::uint8_t* r1 = r0 + w;
                double top = r0[0] * (1.0 - fx) + r0[1] * fx;
                double bot = r1[0] * (1.0 - fx) + r1[1] * fx;
                dst[x] = to_u8(top * (1.0 - fy) + bot * fy);
            } else {
                dst[x] = to_u8(bilinear_sample(img, sx, sy));
            }
        }
    }
    return out;
}

namespace {

// Largest 4-connected foreground component, returned as a component mask.
BinaryMask largest_component(const BinaryMask& mask, Point* start_out) {
    std::vector<int> label(mask.data.size(), -1);
    int best_label = -1;
    std::size_t best_size = 0;
    Point best_start{0, 0};
    int next = 0;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
            if (!mask.data[idx] || label[idx] >= 0) continue;
            int cur = next++;
            std::size_t size = 0;
            std::queue<std::pair<int, int>> q;
            q.emplace(x, y);
            label[idx] = cur;
            while (!q.empty()) {
                auto [px, py] = q.front();
                q.pop();
                ++size;
                const int nx[4] = {px - 1, px + 1, px, px};
                const int ny[4] = {py, py, py - 1, py + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || ny[k] < 0 || nx[k] >= mask.width || ny[k] >= mask.height)
                        continue;
                    std::size_t ni = static_cast<std::size_t>(ny[k]) * mask.width + nx[k];
                    if (mask.data[ni] && label[ni] < 0) {
                        label[ni] = cur;
                        q.emplace(nx[k], ny[k]);
                    }
                }
            }
            if (size > best_size) {
                best_size = size;
                best_label = cur;
                best_start = Point{static_cast<double>(x), static_cast<double>(y)};
            }
        }
    }
    BinaryMask comp(mask.width, mask.height);
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
        comp.data[i] = (label[i] == best_label) ? 255 : 0;
    }
    if (start_out) *start_out = best_start;
    return comp;
}

}  // namespace

Polygon trace_mask_contour(const BinaryMask& mask) {
    bool any = false;
    for (std::uint8_t v : mask.data) {
        if (v) {
            any = true;
            break;
        }
    }
    if (!any) throw EmptyMaskError("mask has no foreground pixels");

    Point start;
    BinaryMask comp = largest_component(mask, &start);
    int sx = static_cast<int>(start.x);
    int sy = static_cast<int>(start.y);

    auto fg = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < comp.width && y < comp.height && comp.at(x, y);
    };

    // Moore neighborhood in clockwise screen order starting from W.
    const int dx8[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    const int dy8[8] = {0, -1, -1, -1, 0, 1, 1, 1};

    std::vector<Point> boundary;
    boundary.push_back(Point{static_cast<double>(sx), static_cast<double>(sy)});

    // Start is the first component pixel in scan order, so its W neighbor is
    // background; that is the initial backtrack position.
    int cx = sx, cy = sy;
    int back = 0;  // neighbor index of the backtrack (background) pixel
    int first_exit = -1;
    const std::size_t limit = comp.data.size() * 8 + 16;
    for (std::size_t steps = 0; steps < limit; ++steps) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            int d = (back + k) % 8;
            if (fg(cx + dx8[d], cy + dy8[d])) {
                found = d;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        if (cx == sx && cy == sy) {
            // Jacob's stopping criterion: leaving the start pixel the same way
            // as the first time means the boundary is closed.
            if (first_exit < 0) {
                first_exit = found;
            } else if (found == first_exit) {
                break;
            }
        }
        // The neighbor checked just before 'found' is background and becomes
        // the backtrack for the next step (it equals the old backtrack when
        // 'found' was the first candidate).
        int bx = cx + dx8[(found + 7) % 8];
        int by = cy + dy8[(found + 7) % 8];
        cx += dx8[found];
        cy += dy8[found];
        boundary.push_back(Point{static_cast<double>(cx), static_cast<double>(cy)});
        for (int d = 0; d < 8; ++d) {
            if (cx + dx8[d] == bx && cy + dy8[d] == by) {
                back = d;
                break;
            }
        }
    }
    return Polygon(std::move(boundary));
}

double mean_intensity(const GrayImage& img) {
    if (img.data.empty()) return 0.0;
    double sum = 0.0;
    for (std::uint8_t v : img.data) sum += v;
    return sum / static_cast<double>(img.data.size());
}

namespace {

void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g,
               std::uint8_t b) {
    int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        if (x0 >= 0 && y0 >= 0 && x0 < img.width && y0 < img.height) img.set(x0, y0, r, g, b);
        if (x0 == x1 && y0 == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace

void render_overlay(const GrayImage& img, const std::vector<Polygon>& polygons,
                    const std::vector<OverlayDot>& points, const std::vector<BBox>& boxes,
                    const std::string& path) {
    if (img.width < 1 || img.height < 1) throw InvalidArgumentError("overlay needs a valid image");
    RgbImage rgb(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            std::uint8_t v = img.at(x, y);
            rgb.set(x, y, v, v, v);
        }
    }
    const std::uint8_t pr = 160, pg = 32, pb = 240;  // purple contours/boxes
    for (const Polygon& poly : polygons) {
        const auto& v = poly.vertices();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Point& a = v[i];
            const Point& b = v[(i + 1) % v.size()];
            draw_line(rgb, static_cast<int>(std::lround(a.x)), static_cast<int>(std::lround(a.y)),
                      static_cast<int>(std::lround(b.x)), static_cast<int>(std::lround(b.y)), pr,
                      pg, pb);
        }
    }
    for (const BBox& box : boxes) {
        int x0 = static_cast<int>(std::lround(box.x0));
        int y0 = static_cast<int>(std::lround(box.y0));
        int x1 = static_cast<int>(std::lround(box.x1));
        int y1 = static_cast<int>(std::lround(box.y1));
        draw_line(rgb, x0, y0, x1, y0, pr, pg, pb);
        draw_line(rgb, x1, y0, x1, y1, pr, pg, pb);
        draw_line(rgb, x1, y1, x0, y1, pr, pg, pb);
        draw_line(rgb, x0, y1, x0, y0, pr, pg, pb);
    }
    for (const OverlayDot& dot : points) {
        int r = static_cast<int>(std::ceil(dot.radius));
        int cx = static_cast<int>(std::lround(dot.center.x));
        int cy = static_cast<int>(std::lround(dot.center.y));
        for (int y = cy - r; y <= cy + r; ++y) {
            for (int x = cx - r; x <= cx + r; ++x) {
                if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
                double d = std::hypot(x - dot.center.x, y - dot.center.y);
                if (d <= dot.radius) rgb.set(x, y, 220, 20, 20);
            }
        }
    }
    save_png_rgb(rgb, path);
}

}  // namespace spinepatch
