#pragma once

#include <string>

#include "spinepatch/raster.hpp"

namespace spinepatch {

// Loads PGM (P5, maxval 255) or 8-bit grayscale PNG, dispatched on the
// file's magic bytes. Malformed input raises FileParseError with the byte
// offset where decoding stopped; missing files raise IoError.
GrayImage load_image(const std::string& path);

// Writes PGM when the path ends in .pgm, PNG otherwise. PGM round-trips
// byte-exactly for 8-bit images.
void save_image(const GrayImage& img, const std::string& path);

void save_png_rgb(const RgbImage& img, const std::string& path);

// Masks share the image formats; nonzero = foreground.
BinaryMask load_mask(const std::string& path);
void save_mask(const BinaryMask& mask, const std::string& path);

}  // namespace spinepatch
