#include <gtest/gtest.h>
#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "dualview/error.hpp"
#include "dualview/image.hpp"
#include "dualview/io.hpp"
#include "test_support.hpp"

namespace dualview {
namespace {

using test::TempDir;

// Encodes raw samples with libpng directly, bypassing the library writer.
void write_raw_png(const std::filesystem::path& path, int w, int h, int depth, int color_type,
                   const std::vector<std::uint8_t>& bytes) {
  FILE* f = std::fopen(path.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row = bytes.size() / h;
  for (int y = 0; y < h; ++y) png_write_row(png, const_cast<png_bytep>(bytes.data() + y * row));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string le_float(float v) {
  std::string s(4, '\0');
  std::memcpy(s.data(), &v, 4);  // host is little-endian on every supported target
  return s;
}

TEST(Image, ShapeAndFill) {
  Image img(4, 3, 3, 0.25f);
  EXPECT_EQ(img.size(), 4u * 3u * 3u);
  for (float v : img.data()) EXPECT_EQ(v, 0.25f);
}

TEST(ReadImage, EightBitGrayEndpoints) {
  TempDir dir("png8");
  write_raw_png(dir / "a.png", 2, 1, 8, PNG_COLOR_TYPE_GRAY, {0, 255});
  const Image img = read_image(dir / "a.png");
  ASSERT_EQ(img.channels(), 1);
  EXPECT_EQ(img.at(0, 0), 0.0f);
  EXPECT_EQ(img.at(1, 0), 1.0f);
}

TEST(ReadImage, SixteenBitScalesBy65535) {
  TempDir dir("png16");
  write_raw_png(dir / "a.png", 1, 1, 16, PNG_COLOR_TYPE_GRAY, {0x80, 0x00});  // big-endian 32768
  const Image img = read_image(dir / "a.png");
  EXPECT_FLOAT_EQ(img.at(0, 0), static_cast<float>(32768.0 / 65535.0));
  EXPECT_NEAR(img.at(0, 0), 0.50000763, 1e-7);
}

TEST(ReadImage, PfmLittleEndianVerbatim) {
  TempDir dir("pfm");
  // Bottom row first: values 3, 4 are row y = 1.
  write_bytes(dir / "a.pfm", "Pf\n2 2\n-1.0\n" + le_float(3.0f) + le_float(4.0f) + le_float(-1.5f) + le_float(1e-20f));
  const Image img = read_image(dir / "a.pfm");
  ASSERT_EQ(img.channels(), 1);
  EXPECT_EQ(img.at(0, 0), -1.5f);
  EXPECT_EQ(img.at(1, 0), 1e-20f);
  EXPECT_EQ(img.at(0, 1), 3.0f);
  EXPECT_EQ(img.at(1, 1), 4.0f);
}

TEST(ReadImage, TruncatedPfmIsReported) {
  TempDir dir("pfmtrunc");
  write_bytes(dir / "a.pfm", "Pf\n2 2\n-1.0\n" + le_float(3.0f));
  try {
    read_image(dir / "a.pfm");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTruncated);
  }
}

TEST(ReadImage, MissingFileIsIoError) {
  try {
    read_image("/nonexistent/dualview/none.png");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(ReadImage, HugeDimensionsOverflow) {
  TempDir dir("pfmhuge");
  write_bytes(dir / "a.pfm", "Pf\n2000000000 2000000000\n-1.0\n" + le_float(0.0f));
  try {
    read_image(dir / "a.pfm");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionOverflow);
  }
}

TEST(WriteImage, PfmRoundTripIsExact) {
  TempDir dir("pfmrt");
  for (int c : {1, 3}) {
    const Image img = test::random_image(17, 9, c, 42 + c, -3.0f, 3.0f);
    write_image(img, dir / "x.pfm");
    EXPECT_EQ(read_image(dir / "x.pfm"), img);
  }
}

TEST(WriteImage, Png8RoundTripWithinHalfLevel) {
  TempDir dir("png8rt");
  const Image img = test::random_image(13, 7, 3, 7);
  write_image(img, dir / "x.png");
  const Image back = read_image(dir / "x.png");
  ASSERT_TRUE(back.same_shape(img));
  EXPECT_LE(test::max_abs_diff(back, img), 1.0 / 510.0 + 1e-7);
}

TEST(WriteImage, Png16RoundTripWithinHalfLevel) {
  TempDir dir("png16rt");
  const Image img = test::random_image(5, 4, 1, 8);
  write_image(img, dir / "x.png", PngDepth::k16);
  EXPECT_LE(test::max_abs_diff(read_image(dir / "x.png"), img), 1.0 / 131070.0 + 1e-7);
}

TEST(WriteImage, PngClampsOutOfRange) {
  TempDir dir("pngclamp");
  Image img(2, 1, 1);
  img.at(0, 0) = 1.5f;
  img.at(1, 0) = -0.5f;
  write_image(img, dir / "x.png");
  const Image back = read_image(dir / "x.png");
  EXPECT_EQ(back.at(0, 0), 1.0f);
  EXPECT_EQ(back.at(1, 0), 0.0f);
}

TEST(Flo, RoundTripIsExact) {
  TempDir dir("flo");
  Rng rng(3);
  FlowField f(7, 3);
  for (float& u : f.u_data()) u = static_cast<float>(rng.uniform(-50, 50));
  for (float& v : f.v_data()) v = static_cast<float>(rng.uniform(-50, 50));
  write_flo(f, dir / "f.flo");
  EXPECT_EQ(read_flo(dir / "f.flo"), f);
}

TEST(Flo, ZeroFieldPreserved) {
  TempDir dir("flozero");
  const FlowField f(4, 5);
  write_flo(f, dir / "f.flo");
  const FlowField back = read_flo(dir / "f.flo");
  for (float u : back.u_data()) EXPECT_EQ(u, 0.0f);
  for (float v : back.v_data()) EXPECT_EQ(v, 0.0f);
}

TEST(Flo, HeaderLayout) {
  TempDir dir("flohdr");
  FlowField f(2, 1);
  f.u(1, 0) = 0.5f;
  f.v(1, 0) = -2.0f;
  write_flo(f, dir / "f.flo");
  std::ifstream in(dir / "f.flo", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  ASSERT_EQ(bytes.size(), 12u + 2u * 2u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "PIEH");
  EXPECT_EQ(bytes.substr(0, 4), le_float(202021.25f));
  std::int32_t w = 0, h = 0;
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  EXPECT_EQ(w, 2);
  EXPECT_EQ(h, 1);
  EXPECT_EQ(bytes.substr(20, 4), le_float(0.5f));
  EXPECT_EQ(bytes.substr(24, 4), le_float(-2.0f));
}

TEST(Flo, WrongMagicIsBadMagic) {
  TempDir dir("flobad");
  write_bytes(dir / "f.flo", "NOPE" + std::string(8, '\0'));
  try {
    read_flo(dir / "f.flo");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadMagic);
  }
}

TEST(Flo, TruncatedPayload) {
  TempDir dir("flotrunc");
  std::string bytes = le_float(202021.25f);
  const std::int32_t w = 3, h = 3;
  bytes.append(reinterpret_cast<const char*>(&w), 4);
  bytes.append(reinterpret_cast<const char*>(&h), 4);
  bytes += le_float(1.0f);
  write_bytes(dir / "f.flo", bytes);
  try {
    read_flo(dir / "f.flo");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTruncated);
  }
}

TEST(ToGray, GrayIsUnchanged) {
  const Image g = test::random_image(5, 5, 1, 1);
  EXPECT_EQ(to_gray(g), g);
}

TEST(ToGray, WhiteAndRed) {
  Image img(2, 1, 3, 0.0f);
  for (int c = 0; c < 3; ++c) img.at(0, 0, c) = 1.0f;
  img.at(1, 0, 0) = 1.0f;
  const Image g = to_gray(img);
  EXPECT_NEAR(g.at(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(g.at(1, 0), 0.299, 1e-7);
}

TEST(ToGray, IsLinear) {
  const Image x = test::random_image(8, 8, 3, 11);
  const Image y = test::random_image(8, 8, 3, 12);
  const double a = 0.7, b = -1.3;
  Image mix(8, 8, 3);
  for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = static_cast<float>(a * x.data()[i] + b * y.data()[i]);
  const Image gm = to_gray(mix), gx = to_gray(x), gy = to_gray(y);
  for (std::size_t i = 0; i < gm.size(); ++i) {
    EXPECT_NEAR(gm.data()[i], a * gx.data()[i] + b * gy.data()[i], 1e-6);
  }
}

TEST(Clamp, BoundsEverySample) {
  const Image img = test::random_image(6, 6, 3, 5, -2.0f, 2.0f);
  const Image clamped = clamp(img, 0.0f, 1.0f);
  for (float v : clamped.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

}  // namespace
}  // namespace dualview
