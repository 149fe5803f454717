#include "spinepatch/image_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "spinepatch/error.hpp"

namespace spinepatch {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure: " + path);
    return bytes;
}

// PGM header tokens are separated by whitespace; '#' starts a comment.
std::size_t skip_pgm_space(const std::string& s, std::size_t pos) {
    while (pos < s.size()) {
        char c = s[pos];
        if (c == '#') {
            while (pos < s.size() && s[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++pos;
        } else {
            break;
        }
    }
    return pos;
}

long parse_pgm_int(const std::string& s, std::size_t& pos, const char* what) {
    pos = skip_pgm_space(s, pos);
    if (pos >= s.size() || s[pos] < '0' || s[pos] > '9') {
        throw FileParseError(std::string("malformed PGM header, expected ") + what, pos);
    }
    long v = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
        v = v * 10 + (s[pos] - '0');
        if (v > 1000000000L) throw FileParseError("PGM header value out of range", pos);
        ++pos;
    }
    return v;
}

GrayImage load_pgm(const std::string& bytes, const std::string& path) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw FileParseError("not a P5 PGM file: " + path, 0);
    }
    std::size_t pos = 2;
    long w = parse_pgm_int(bytes, pos, "width");
    long h = parse_pgm_int(bytes, pos, "height");
    long maxval = parse_pgm_int(bytes, pos, "maxval");
    if (w < 1 || h < 1) throw FileParseError("PGM dimensions must be >= 1", pos);
    if (maxval != 255) {
        throw FileParseError("unsupported PGM bit depth (maxval " + std::to_string(maxval) +
                                 ", only 255 supported)",
                             pos);
    }
    if (pos >= bytes.size()) throw FileParseError("PGM payload missing", pos);
    ++pos;  // single whitespace byte after maxval
    std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - pos < need) {
        throw FileParseError("truncated PGM payload in " + path, bytes.size());
    }
    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    std::memcpy(img.data.data(), bytes.data() + pos, need);
    return img;
}

// libpng error handling: record the message and longjmp back to the caller
// via png_jmpbuf; exceptions must not unwind through libpng's C frames.
void png_error_fn(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err) *err = msg;
    longjmp(png_jmpbuf(png), 1);
}

void png_warn_fn(png_structp, png_const_charp) {}

struct PngByteReader {
    const std::string* bytes;
    std::size_t pos;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len) {
    auto* r = static_cast<PngByteReader*>(png_get_io_ptr(png));
    if (r->pos + len > r->bytes->size()) {
        png_error(png, "truncated PNG payload");
    }
    std::memcpy(out, r->bytes->data() + r->pos, len);
    r->pos += len;
}

GrayImage load_png(const std::string& bytes, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failure");
    }
    std::string png_err;
    png_set_error_fn(png, &png_err, png_error_fn, png_warn_fn);

    PngByteReader reader{&bytes, 0};
    GrayImage img;
    std::vector<png_bytep> rows;
    std::string bad;  // non-empty -> FileParseError after cleanup
    std::size_t bad_offset = 0;

    if (setjmp(png_jmpbuf(png))) {
        std::size_t off = reader.pos;
        png_destroy_read_struct(&png, &info, nullptr);
        throw FileParseError("PNG decode error in " + path + ": " + png_err, off);
    }

    png_set_read_fn(png, &reader, png_read_cb);
    png_read_info(png, info);
    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int depth = png_get_bit_depth(png, info);
    int color = png_get_color_type(png, info);
    if (depth == 16) {
        bad = "unsupported PNG bit depth 16 in " + path;
        bad_offset = reader.pos;
    } else if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
        bad = "unsupported PNG color type (grayscale required) in " + path;
        bad_offset = reader.pos;
    }
    if (!bad.empty()) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FileParseError(bad, bad_offset);
    }
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img = GrayImage(static_cast<int>(w), static_cast<int>(h));
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) {
        rows[y] = img.data.data() + static_cast<std::size_t>(y) * w;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, int width, int height, int color_type,
               const std::uint8_t* data, std::size_t stride) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("libpng init failure");
    }
    std::string png_err;
    png_set_error_fn(png, &png_err, png_error_fn, png_warn_fn);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("PNG encode error for " + path + ": " + png_err);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * stride));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(fp) != 0) throw IoError("write failure: " + path);
}

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

GrayImage load_image(const std::string& path) {
    std::string bytes = read_file(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), "\x89PNG\r\n\x1a\n", 8) == 0) {
        return load_png(bytes, path);
    }
    return load_pgm(bytes, path);
}

void save_image(const GrayImage& img, const std::string& path) {
    if (img.width < 1 || img.height < 1) throw InvalidArgumentError("cannot save empty image");
    if (has_suffix(path, ".pgm")) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + path);
        out << "P5\n" << img.width << " " << img.height << "\n255\n";
        out.write(reinterpret_cast<const char*>(img.data.data()),
                  static_cast<std::streamsize>(img.data.size()));
        if (!out) throw IoError("write failure: " + path);
        return;
    }
    write_png(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, img.data.data(),
              static_cast<std::size_t>(img.width));
}

void save_png_rgb(const RgbImage& img, const std::string& path) {
    if (img.width < 1 || img.height < 1) throw InvalidArgumentError("cannot save empty image");
    write_png(path, img.width, img.height, PNG_COLOR_TYPE_RGB, img.data.data(),
              static_cast<std::size_t>(img.width) * 3);
}

BinaryMask load_mask(const std::string& path) {
    GrayImage img = load_image(path);
    BinaryMask mask(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        mask.data[i] = img.data[i] ? 255 : 0;
    }
    return mask;
}

void save_mask(const BinaryMask& mask, const std::string& path) {
    GrayImage img(mask.width, mask.height);
    img.data = mask.data;
    save_image(img, path);
}

}  // namespace spinepatch
