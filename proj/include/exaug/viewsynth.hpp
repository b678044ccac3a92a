#pragma once

#include "exaug/cloud.hpp"
#include "exaug/geometry.hpp"
#include "exaug/image.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace exaug {

/// Continuous projections closer than this to an integer grid position are
/// treated as exact hits. Matches the camera round-trip tolerance, so an
/// identity warp degenerates to a per-pixel copy.
inline constexpr double kSplatSnapEps = 1e-6;

/// One written candidate entry: the color, the depth of the point that wrote
/// it, and the point's continuous projection (needed for merge weights).
struct SplatSample {
    std::uint8_t written = 0;
    std::array<std::uint8_t, 3> color = {0, 0, 0};
    float depth = 0.0f;
    float uc = 0.0f;
    float vc = 0.0f;
};

/// Four accumulation rasters, one per integer-neighbor candidate of the
/// continuous projection: (ceil u, ceil v), (ceil u, floor v),
/// (floor u, ceil v), (floor u, floor v).
struct SplatBuffer {
    int width = 0;
    int height = 0;
    std::array<std::vector<SplatSample>, 4> rasters;

    std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
};

/// Projects every valid point into the target camera and scatters its source
/// color into the four candidate rasters. Points are processed in strictly
/// decreasing depth order so nearer writes overwrite farther ones; equal
/// depths are processed in row-major source order.
SplatBuffer splat(const ColorImage& source, const PointCloud& cloud_target_frame,
                  const CameraModel& target);

struct MergeResult {
    ColorImage image;
    std::vector<std::uint8_t> filled;
};

/// Per-pixel weighted sum of the written candidates. Candidate s gets weight
/// (sum_l - l_s) / sum_l with l the distances from the writing point's
/// continuous projection to the pixel. A zero distance sum (exact integer
/// hit) takes the first written candidate outright.
MergeResult merge(const SplatBuffer& buffer);

/// Fills every unset pixel from the nearest filled pixel in each of the four
/// cardinal directions, weighted like merge. Pixels with no cardinal
/// candidate fall back to the globally nearest filled pixel.
ColorImage fill_blanks(const ColorImage& image, const std::vector<std::uint8_t>& filled);

struct SynthesisResult {
    ColorImage image;
    /// Pixels covered by splatted points (before blank filling), resampled
    /// conservatively when the working resolution differs from the target.
    std::vector<std::uint8_t> filled;
};

/// Full pipeline: back-project the source depth, transform the cloud by
/// t_source_to_target, splat into the target camera at the source's working
/// resolution, merge, fill blanks, and resample to the target raster.
SynthesisResult synthesize_view(const ColorImage& source_image, const DepthMap& source_depth,
                                const CameraModel& source_camera, const CameraModel& target_camera,
                                const Transform3D& t_source_to_target);

} // namespace exaug
