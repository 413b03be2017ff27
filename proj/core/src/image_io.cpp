#include "stdic/image_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "stdic/error.hpp"

namespace stdic {
namespace {

constexpr std::array<char, 8> kF64Magic = {'S', 'T', 'D', 'I', 'C', 'F', '6', '4'};

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string pgm_token(std::istream& in, const std::filesystem::path& path) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!tok.empty()) return tok;
    } else {
      tok.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  if (tok.empty()) throw Error(ErrorCode::Parse, "truncated PGM header in " + path.string());
  return tok;
}

int parse_positive(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "bad PGM header field '" + tok + "' in " + path.string());
  }
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xFFu),
                              static_cast<unsigned char>((v >> 8) & 0xFFu),
                              static_cast<unsigned char>((v >> 16) & 0xFFu),
                              static_cast<unsigned char>((v >> 24) & 0xFFu)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (pgm_token(in, path) != "P5") throw Error(ErrorCode::Parse, path.string() + " is not a binary P5 PGM");
  const int width = parse_positive(pgm_token(in, path), path);
  const int height = parse_positive(pgm_token(in, path), path);
  const int maxval = parse_positive(pgm_token(in, path), path);
  if (maxval > 65535) throw Error(ErrorCode::Parse, "PGM maxval exceeds 65535 in " + path.string());

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(count * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw Error(ErrorCode::Parse, "truncated PGM raster in " + path.string());
  }
  std::vector<double> pixels(count);
  for (std::size_t i = 0; i < count; ++i) {
    pixels[i] = bytes_per == 1 ? raw[i] : static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return GrayImage(width, height, std::move(pixels));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image, PgmDepth depth) {
  auto out = open_out(path);
  const int maxval = depth == PgmDepth::Bits8 ? 255 : 65535;
  out << "P5\n" << image.width() << ' ' << image.height() << '\n' << maxval << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(image.pixels().size() * (depth == PgmDepth::Bits8 ? 1 : 2));
  for (const double v : image.pixels()) {
    const auto q = static_cast<unsigned>(std::clamp(std::lround(v), 0L, static_cast<long>(maxval)));
    if (depth == PgmDepth::Bits16) raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q & 0xFFu));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

GrayImage read_f64(const std::filesystem::path& path) {
  auto in = open_in(path);
  unsigned char header[16];
  in.read(reinterpret_cast<char*>(header), 16);
  if (in.gcount() != 16 || std::memcmp(header, kF64Magic.data(), 8) != 0) {
    throw Error(ErrorCode::Parse, path.string() + " is not an STDICF64 file");
  }
  const std::uint32_t width = get_u32_le(header + 8);
  const std::uint32_t height = get_u32_le(header + 12);
  const std::size_t count = static_cast<std::size_t>(width) * height;
  std::vector<unsigned char> raw(count * 8);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw Error(ErrorCode::Parse, "truncated STDICF64 raster in " + path.string());
  }
  std::vector<double> pixels(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | raw[8 * i + static_cast<std::size_t>(b)];
    pixels[i] = std::bit_cast<double>(bits);
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

void write_f64(const std::filesystem::path& path, const GrayImage& image) {
  auto out = open_out(path);
  out.write(kF64Magic.data(), 8);
  put_u32_le(out, static_cast<std::uint32_t>(image.width()));
  put_u32_le(out, static_cast<std::uint32_t>(image.height()));
  std::vector<unsigned char> raw;
  raw.reserve(image.pixels().size() * 8);
  for (const double v : image.pixels()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      raw.push_back(static_cast<unsigned char>(bits & 0xFFu));
      bits >>= 8;
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

GrayImage read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".f64") return read_f64(path);
  throw Error(ErrorCode::InvalidArgument, "unsupported image extension: " + path.string());
}

}  // namespace stdic
