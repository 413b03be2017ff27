#pragma once

#include <filesystem>

#include "stdic/image.hpp"

namespace stdic {

enum class PgmDepth { Bits8, Bits16 };

// Binary "P5" PGM. 8-bit and 16-bit (big-endian) files are widened to double
// on load. Writing rounds and clips to the output depth.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image,
               PgmDepth depth = PgmDepth::Bits8);

// Lossless float grid: 8-byte magic "STDICF64", u32 width, u32 height (both
// little-endian), then width*height little-endian IEEE-754 doubles, row-major.
GrayImage read_f64(const std::filesystem::path& path);
void write_f64(const std::filesystem::path& path, const GrayImage& image);

// Dispatches on extension: ".pgm" or ".f64".
GrayImage read_image(const std::filesystem::path& path);

}  // namespace stdic
