#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "knotpair/errors.hpp"

namespace knotpair {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit RGB frame, row-major.
struct RawImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  friend bool operator==(const RawImage&, const RawImage&) = default;
};

namespace detail {

class PpmCursor {
 public:
  explicit PpmCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::uint8_t peek() const { return bytes_[pos_]; }
  std::uint8_t take() { return bytes_[pos_++]; }
  bool eof() const { return pos_ >= bytes_.size(); }

  // PPM headers allow '#' comments running to end of line.
  void skip_space_and_comments() {
    while (!eof()) {
      const std::uint8_t c = peek();
      if (std::isspace(c)) {
        take();
      } else if (c == '#') {
        while (!eof() && take() != '\n') {
        }
      } else {
        break;
      }
    }
  }

  int read_header_int(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long long value = 0;
    while (!eof() && std::isdigit(peek())) {
      value = value * 10 + (take() - '0');
      if (value > 1'000'000'000) {
        throw format_error(std::string("ppm header: ") + what +
                           " out of range at byte offset " +
                           std::to_string(start));
      }
    }
    if (pos_ == start) {
      throw format_error(std::string("ppm header: expected ") + what +
                         " at byte offset " + std::to_string(start));
    }
    return static_cast<int>(value);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Decodes a binary (P6) PPM. Errors name the byte offset of the problem.
inline RawImage parse_ppm(std::span<const std::uint8_t> bytes) {
  detail::PpmCursor cur(bytes);
  if (cur.remaining() < 2 || cur.take() != 'P' || cur.take() != '6') {
    throw format_error("ppm header: missing P6 magic at byte offset 0");
  }
  const int width = cur.read_header_int("width");
  const int height = cur.read_header_int("height");
  if (width <= 0 || height <= 0) {
    throw format_error("ppm header: non-positive dimensions " +
                       std::to_string(width) + "x" + std::to_string(height));
  }
  if (static_cast<long long>(width) * height > 100'000'000LL) {
    throw format_error("ppm header: implausible pixel count");
  }
  const std::size_t maxval_at = cur.offset();
  const int maxval = cur.read_header_int("maxval");
  if (maxval != 255) {
    throw format_error("ppm header: maxval " + std::to_string(maxval) +
                       " unsupported (need 255) at byte offset " +
                       std::to_string(maxval_at));
  }
  if (cur.eof() || !std::isspace(cur.peek())) {
    throw format_error("ppm header: expected whitespace after maxval at byte "
                       "offset " +
                       std::to_string(cur.offset()));
  }
  cur.take();  // exactly one whitespace byte separates header from payload

  const std::size_t need = 3u * static_cast<std::size_t>(width) * height;
  if (cur.remaining() != need) {
    throw format_error("ppm payload: expected " + std::to_string(need) +
                       " bytes, found " + std::to_string(cur.remaining()) +
                       " at byte offset " + std::to_string(cur.offset()));
  }
  RawImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<std::size_t>(width) * height);
  for (auto& px : img.pixels) {
    px.r = cur.take();
    px.g = cur.take();
    px.b = cur.take();
  }
  return img;
}

/// Canonical P6 serialization; parse_ppm(write_ppm(img)) == img byte-exact.
inline std::vector<std::uint8_t> write_ppm(const RawImage& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw validation_error("write_ppm: image dimensions do not match pixels");
  }
  std::string header = "P6\n" + std::to_string(img.width) + " " +
                       std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.pixels.size() * 3);
  for (const auto& px : img.pixels) {
    bytes.push_back(px.r);
    bytes.push_back(px.g);
    bytes.push_back(px.b);
  }
  return bytes;
}

inline RawImage load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_ppm(bytes);
}

inline void save_ppm(const RawImage& img, const std::filesystem::path& path) {
  const auto bytes = write_ppm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("write failed: " + path.string());
}

/// Fraction of pixels within +/- tolerance of the reference color on every
/// channel (inclusive bound).
inline double wood_pixel_fraction(const RawImage& img, Rgb reference,
                                  int tolerance) {
  if (tolerance < 0) throw validation_error("wood_pixel_fraction: tolerance < 0");
  if (img.pixels.empty()) {
    throw validation_error("wood_pixel_fraction: empty image");
  }
  std::size_t hits = 0;
  for (const auto& px : img.pixels) {
    const bool close = std::abs(int(px.r) - int(reference.r)) <= tolerance &&
                       std::abs(int(px.g) - int(reference.g)) <= tolerance &&
                       std::abs(int(px.b) - int(reference.b)) <= tolerance;
    hits += close ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(img.pixels.size());
}

/// Average wood color measured from a sample of clean frames.
inline constexpr Rgb kWoodReference{190, 161, 125};

struct FilterParams {
  Rgb reference = kWoodReference;
  int tolerance = 5;
  double min_fraction = 0.05;
};

enum class FrameDecision { keep, remove };

/// A frame is an outlier when strictly less than min_fraction of its pixels
/// are close to the wood color.
inline FrameDecision filter_outlier(const RawImage& img,
                                    const FilterParams& params = {}) {
  if (!(params.min_fraction > 0.0 && params.min_fraction < 1.0)) {
    throw validation_error("filter_outlier: min_fraction must be in (0,1)");
  }
  const double frac =
      wood_pixel_fraction(img, params.reference, params.tolerance);
  return frac < params.min_fraction ? FrameDecision::remove
                                    : FrameDecision::keep;
}

}  // namespace knotpair
