#pragma once

#include <filesystem>

#include "dualview/image.hpp"

namespace dualview {

enum class PngDepth { k8 = 8, k16 = 16 };

/// Reads PNG (8 or 16 bit, gray or RGB; alpha is dropped, palettes expanded)
/// or PFM. The format is sniffed from the file signature, not the extension.
/// PNG samples are scaled to [0,1]; PFM samples are returned verbatim.
Image read_image(const std::filesystem::path& path);

/// Writes by extension: ".pfm" is lossless little-endian PFM, ".png" clamps to
/// [0,1] and quantizes to the requested depth.
void write_image(const Image& img, const std::filesystem::path& path, PngDepth depth = PngDepth::k8);

Image read_pfm(const std::filesystem::path& path);
void write_pfm(const Image& img, const std::filesystem::path& path);

Image read_png(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path, PngDepth depth = PngDepth::k8);

/// Middlebury .flo: float tag 202021.25 ("PIEH"), int32 width, int32 height,
/// then interleaved (u, v) float32 pairs, row-major, little-endian.
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& flow, const std::filesystem::path& path);

}  // namespace dualview
