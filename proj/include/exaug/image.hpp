#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace exaug {

/// Interleaved 8-bit RGB raster, row-major.
struct ColorImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    static ColorImage filled(int width, int height, std::array<std::uint8_t, 3> color);

    std::size_t index(int u, int v) const { return (static_cast<std::size_t>(v) * width + u) * 3; }
    std::array<std::uint8_t, 3> at(int u, int v) const {
        const std::size_t i = index(u, v);
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }
    void set(int u, int v, std::array<std::uint8_t, 3> color) {
        const std::size_t i = index(u, v);
        rgb[i] = color[0];
        rgb[i + 1] = color[1];
        rgb[i + 2] = color[2];
    }
};

/// Binary PPM (P6, maxval 255).
ColorImage read_ppm(const std::string& path);
void write_ppm(const ColorImage& image, const std::string& path);

/// Bilinear resampling with pixel centers aligned to raster corners.
/// The mask resamples conservatively: a target pixel stays set only when
/// every contributing source pixel is set.
struct ResampleResult {
    ColorImage image;
    std::vector<std::uint8_t> mask;
};
ResampleResult resample_bilinear(const ColorImage& image, const std::vector<std::uint8_t>& mask,
                                 int new_width, int new_height);

/// Mean absolute per-channel difference over pixels set in `mask`
/// (all pixels when mask is empty). Returns 0 for an empty selection.
double mean_absolute_error(const ColorImage& a, const ColorImage& b,
                           const std::vector<std::uint8_t>& mask = {});

} // namespace exaug
