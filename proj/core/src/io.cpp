#include "dualview/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace dualview {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

constexpr float kFloTag = 202021.25f;
constexpr int kMaxDimension = 1 << 16;

std::string path_str(const std::filesystem::path& p) { return p.string(); }

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path_str(path));
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for " + path_str(path));
  return bytes;
}

void dump(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path_str(path) + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path_str(path));
}

template <typename T>
T load_le(const char* p) {
  std::array<char, sizeof(T)> raw;
  std::memcpy(raw.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::ranges::reverse(raw);
  return std::bit_cast<T>(raw);
}

template <typename T>
void store_le(std::string& out, T value) {
  auto raw = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::ranges::reverse(raw);
  out.append(raw.data(), raw.size());
}

void check_extent(long long width, long long height, const std::filesystem::path& path) {
  if (width <= 0 || height <= 0 || width > kMaxDimension || height > kMaxDimension) {
    throw Error(ErrorCode::kDimensionOverflow,
                path_str(path) + ": " + std::to_string(width) + "x" + std::to_string(height));
  }
}

bool has_extension(const std::filesystem::path& path, std::string_view ext) {
  auto e = path.extension().string();
  std::ranges::transform(e, e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e == ext;
}

}  // namespace

// ---------------------------------------------------------------------------
// PFM

Image read_pfm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  // Header is three whitespace-separated tokens after the magic; a single
  // whitespace byte separates the scale from the payload.
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.data() + start, pos - start);
  };
  const std::string magic = next_token();
  int channels = 0;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw Error(ErrorCode::kBadMagic, path_str(path) + " is not a PFM file");
  }
  long long width = 0;
  long long height = 0;
  double scale = 0.0;
  try {
    width = std::stoll(next_token());
    height = std::stoll(next_token());
    scale = std::stod(next_token());
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kUnsupportedFormat, path_str(path) + ": malformed PFM header");
  }
  check_extent(width, height, path);
  if (scale == 0.0) throw Error(ErrorCode::kUnsupportedFormat, path_str(path) + ": zero PFM scale");
  ++pos;  // single separator byte

  const bool little = scale < 0.0;
  const auto w = static_cast<int>(width);
  const auto h = static_cast<int>(height);
  const std::size_t need = static_cast<std::size_t>(w) * h * channels * sizeof(float);
  if (pos > bytes.size() || bytes.size() - pos < need) {
    throw Error(ErrorCode::kTruncated, path_str(path));
  }

  Image img(w, h, channels);
  const char* p = bytes.data() + pos;
  for (int row = 0; row < h; ++row) {
    const int y = h - 1 - row;  // PFM stores bottom row first
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        std::array<char, 4> raw;
        std::memcpy(raw.data(), p, 4);
        p += 4;
        if (little != (std::endian::native == std::endian::little)) std::ranges::reverse(raw);
        img.at(x, y, c) = std::bit_cast<float>(raw);
      }
    }
  }
  return img;
}

void write_pfm(const Image& img, const std::filesystem::path& path) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorCode::kUnsupportedFormat, "PFM supports 1 or 3 channels");
  }
  std::string out = (img.channels() == 3 ? "PF\n" : "Pf\n") + std::to_string(img.width()) + " " +
                    std::to_string(img.height()) + "\n-1.0\n";
  out.reserve(out.size() + img.size() * sizeof(float));
  for (int row = 0; row < img.height(); ++row) {
    const int y = img.height() - 1 - row;
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) store_le(out, img.at(x, y, c));
    }
  }
  dump(path, out);
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* message = static_cast<std::string*>(png_get_error_ptr(png));
  if (message) *message = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path_str(path).c_str(), "rb"));
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path_str(path));
  std::array<unsigned char, 8> sig{};
  if (std::fread(sig.data(), 1, sig.size(), file.get()) != sig.size() || png_sig_cmp(sig.data(), 0, 8) != 0) {
    throw Error(ErrorCode::kBadMagic, path_str(path) + " is not a PNG file");
  }

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  if (!png) throw Error(ErrorCode::kIo, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::kIo, "png_create_info_struct failed");
  }

  // Everything touched after setjmp that must survive a longjmp lives here.
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int channels = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kUnsupportedFormat, path_str(path) + ": " + message);
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

  if (width == 0 || height == 0 || width > static_cast<png_uint_32>(kMaxDimension) ||
      height > static_cast<png_uint_32>(kMaxDimension)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kDimensionOverflow, path_str(path));
  }
  if (bit_depth != 8 && bit_depth != 16 && !(color_type == PNG_COLOR_TYPE_PALETTE ||
                                            (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kUnsupportedFormat, path_str(path) + ": bit depth " + std::to_string(bit_depth));
  }

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);

  bit_depth = png_get_bit_depth(png, info);
  channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  pixels.resize(row_bytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const int color_channels = (channels >= 3) ? 3 : 1;
  Image img(static_cast<int>(width), static_cast<int>(height), color_channels);
  const double denom = bit_depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 y = 0; y < height; ++y) {
    const std::uint8_t* row = rows[y];
    for (png_uint_32 x = 0; x < width; ++x) {
      for (int c = 0; c < color_channels; ++c) {
        const std::size_t idx = static_cast<std::size_t>(x) * channels + c;
        double v = 0.0;
        if (bit_depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, row + 2 * idx, 2);
          v = s;
        } else {
          v = row[idx];
        }
        img.at(static_cast<int>(x), static_cast<int>(y), c) = static_cast<float>(v / denom);
      }
    }
  }
  return img;
}

void write_png(const Image& img, const std::filesystem::path& path, PngDepth depth) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorCode::kUnsupportedFormat, "PNG writer supports 1 or 3 channels");
  }
  if (img.width() <= 0 || img.height() <= 0) throw Error(ErrorCode::kInvalidArgument, "empty image");
  const int bits = static_cast<int>(depth);
  const int bytes_per_sample = bits / 8;
  const double levels = bits == 16 ? 65535.0 : 255.0;

  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * img.channels() * bytes_per_sample;
  std::vector<std::uint8_t> pixels(row_bytes * img.height());
  for (int y = 0; y < img.height(); ++y) {
    std::uint8_t* row = pixels.data() + y * row_bytes;
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        const double s = std::clamp(static_cast<double>(img.at(x, y, c)), 0.0, 1.0);
        const auto q = static_cast<unsigned>(std::lround(s * levels));
        const std::size_t idx = static_cast<std::size_t>(x) * img.channels() + c;
        if (bits == 16) {
          row[2 * idx] = static_cast<std::uint8_t>(q >> 8);  // PNG is big-endian
          row[2 * idx + 1] = static_cast<std::uint8_t>(q & 0xff);
        } else {
          row[idx] = static_cast<std::uint8_t>(q);
        }
      }
    }
  }

  FilePtr file(std::fopen(path_str(path).c_str(), "wb"));
  if (!file) throw Error(ErrorCode::kIo, "cannot open " + path_str(path) + " for writing");

  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  if (!png) throw Error(ErrorCode::kIo, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::kIo, "png_create_info_struct failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
  for (int y = 0; y < img.height(); ++y) rows[y] = pixels.data() + y * row_bytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, path_str(path) + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), bits,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw Error(ErrorCode::kIo, "flush failed for " + path_str(path));
}

// ---------------------------------------------------------------------------
// Dispatch

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path_str(path));
  std::array<char, 2> head{};
  in.read(head.data(), head.size());
  if (in.gcount() == 2 && head[0] == 'P' && (head[1] == 'F' || head[1] == 'f')) return read_pfm(path);
  return read_png(path);
}

void write_image(const Image& img, const std::filesystem::path& path, PngDepth depth) {
  if (has_extension(path, ".pfm")) {
    write_pfm(img, path);
  } else if (has_extension(path, ".png")) {
    write_png(img, path, depth);
  } else {
    throw Error(ErrorCode::kUnsupportedFormat, "unknown image extension: " + path_str(path));
  }
}

// ---------------------------------------------------------------------------
// FLO

FlowField read_flo(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() < 12) {
    if (bytes.size() >= 4 && load_le<float>(bytes.data()) == kFloTag) {
      throw Error(ErrorCode::kTruncated, path_str(path) + ": header");
    }
    throw Error(ErrorCode::kBadMagic, path_str(path));
  }
  if (load_le<float>(bytes.data()) != kFloTag) throw Error(ErrorCode::kBadMagic, path_str(path));
  const auto width = load_le<std::int32_t>(bytes.data() + 4);
  const auto height = load_le<std::int32_t>(bytes.data() + 8);
  check_extent(width, height, path);
  const std::size_t need = static_cast<std::size_t>(width) * height * 2 * sizeof(float);
  if (bytes.size() - 12 < need) throw Error(ErrorCode::kTruncated, path_str(path));

  FlowField flow(width, height);
  const char* p = bytes.data() + 12;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      flow.u(x, y) = load_le<float>(p);
      flow.v(x, y) = load_le<float>(p + 4);
      p += 8;
    }
  }
  return flow;
}

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  std::string out;
  out.reserve(12 + flow.size() * 8);
  store_le(out, kFloTag);
  store_le(out, static_cast<std::int32_t>(flow.width()));
  store_le(out, static_cast<std::int32_t>(flow.height()));
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      store_le(out, flow.u(x, y));
      store_le(out, flow.v(x, y));
    }
  }
  dump(path, out);
}

}  // namespace dualview
