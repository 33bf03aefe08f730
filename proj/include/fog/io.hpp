#pragma once

#include "fog/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace fog {

// ---- PNG rasters -----------------------------------------------------------
//
// Images are exchanged as 8-bit RGB PNG. Disparity uses 16-bit single-channel
// PNG with the Cityscapes convention disparity = (raw - 1) / 256, raw == 0
// meaning invalid. Transmittance maps are 16-bit single-channel, t * 65535.
// Label maps are 8-bit single-channel id rasters plus a JSON sidecar carrying
// the id -> class table.

RgbImage read_rgb8(const std::string& path);
void write_rgb8(const std::string& path, const RgbImage& img);

Eigen::Array<uint16_t, Eigen::Dynamic, Eigen::Dynamic> read_gray16(const std::string& path);
void write_gray16(const std::string& path,
                  const Eigen::Array<uint16_t, Eigen::Dynamic, Eigen::Dynamic>& raw);

ScalarMap read_disparity(const std::string& path);
void write_disparity(const std::string& path, const ScalarMap& disparity);

ScalarMap read_transmittance(const std::string& path);
void write_transmittance(const std::string& path, const ScalarMap& t);

SemanticLabeling read_labels(const std::string& png_path, const std::string& sidecar_path);
void write_labels(const std::string& png_path, const std::string& sidecar_path,
                  const SemanticLabeling& labels);

// ---- digests ---------------------------------------------------------------

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ull);
std::string digest_hex(uint64_t h);
std::string digest_file(const std::string& path);
std::string digest_string(const std::string& s);

// ---- misc ------------------------------------------------------------------

// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace fog
