#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

namespace gazebench::gateway {

inline constexpr int64_t kDefaultPixelCap = 200704;  // 448 * 448

struct Dims {
    int width = 0;
    int height = 0;
    bool operator==(const Dims&) const = default;
};

// Target dimensions under a total-pixel budget, preserving aspect ratio.
// Pass-through when already within budget. The smaller scaled side is
// floored and the larger side derived from the source aspect, which keeps
// the product under the cap and the aspect deviation within 1%.
Dims fit_pixel_cap(int width, int height, int64_t pixel_cap = kDefaultPixelCap);

// Target dimensions with the longest side scaled to exactly n.
Dims fit_longest_side(int width, int height, int longest);

enum class ResizeMode { cap_total, longest_side };

struct PreparedImage {
    std::string bytes;  // PNG-encoded raster
    int width_px = 0;
    int height_px = 0;
    std::string source_hash;  // sha256 of the source bytes
    std::string media_type = "image/png";
};

// Decodes, resizes (area averaging on downscale) and re-encodes an image.
// Throws on undecodable input or a zero-dimension result.
PreparedImage prepare_image(const std::string& source_bytes, int64_t pixel_cap = kDefaultPixelCap,
                            ResizeMode mode = ResizeMode::cap_total, int longest_side = 448);

PreparedImage prepare_image_file(const std::filesystem::path& path,
                                 int64_t pixel_cap = kDefaultPixelCap,
                                 ResizeMode mode = ResizeMode::cap_total, int longest_side = 448);

std::string base64_encode(std::string_view bytes);
std::string to_data_uri(const PreparedImage& image);

}  // namespace gazebench::gateway
