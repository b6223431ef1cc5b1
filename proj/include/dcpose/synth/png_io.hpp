#pragma once

#include <cstdint>
#include <filesystem>

#include "dcpose/geometry/image.hpp"

namespace dcpose {

// Lossless PNG storage for 8-bit and 16-bit gray / RGB images.

void write_png(const std::filesystem::path& path, const Image<std::uint8_t>& image);
void write_png(const std::filesystem::path& path, const Image<std::uint16_t>& image);

/// Throws DataError on missing or unreadable files, or when the bit depth differs.
Image<std::uint8_t> read_png8(const std::filesystem::path& path);
Image<std::uint16_t> read_png16(const std::filesystem::path& path);

}  // namespace dcpose
