#include "exaug/viewsynth.hpp"

#include "exaug/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace exaug {

namespace {

double snap_to_grid(double x) {
    const double r = std::round(x);
    return std::abs(x - r) < kSplatSnapEps ? r : x;
}

double point_depth(const CameraModel& camera, const Eigen::Vector3d& p) {
    return camera.depth_is_range() ? p.norm() : p.z();
}

} // namespace

SplatBuffer splat(const ColorImage& source, const PointCloud& cloud_target_frame,
                  const CameraModel& target) {
    if (source.width != cloud_target_frame.width || source.height != cloud_target_frame.height) {
        throw ShapeError("splat: source image and cloud rasters differ");
    }
    SplatBuffer buffer;
    buffer.width = target.width;
    buffer.height = target.height;
    for (auto& raster : buffer.rasters) {
        raster.assign(static_cast<std::size_t>(target.width) * target.height, SplatSample{});
    }

    struct Projected {
        std::size_t src_index;
        float depth;
        float uc, vc;
    };
    std::vector<Projected> projected;
    projected.reserve(cloud_target_frame.points.size());
    for (int v = 0; v < source.height; ++v) {
        for (int u = 0; u < source.width; ++u) {
            const std::size_t i = cloud_target_frame.index(u, v);
            if (!cloud_target_frame.validity[i]) continue;
            const Eigen::Vector3d& p = cloud_target_frame.points[i];
            const auto pix = project(target, p);
            if (!pix) continue;
            const double depth = point_depth(target, p);
            if (!(depth > 0.0)) continue;
            projected.push_back(Projected{i, static_cast<float>(depth),
                                          static_cast<float>(snap_to_grid(pix->u)),
                                          static_cast<float>(snap_to_grid(pix->v))});
        }
    }
    // Farthest first; stable keeps row-major order for equal depths.
    std::stable_sort(projected.begin(), projected.end(),
                     [](const Projected& a, const Projected& b) { return a.depth > b.depth; });

    for (const Projected& p : projected) {
        const int u_lo = static_cast<int>(std::floor(p.uc));
        const int u_hi = static_cast<int>(std::ceil(p.uc));
        const int v_lo = static_cast<int>(std::floor(p.vc));
        const int v_hi = static_cast<int>(std::ceil(p.vc));
        const int cu[4] = {u_hi, u_hi, u_lo, u_lo};
        const int cv[4] = {v_hi, v_lo, v_hi, v_lo};
        const int su = static_cast<int>(p.src_index % source.width);
        const int sv = static_cast<int>(p.src_index / source.width);
        const std::array<std::uint8_t, 3> color = source.at(su, sv);
        for (int k = 0; k < 4; ++k) {
            if (cu[k] < 0 || cu[k] >= buffer.width || cv[k] < 0 || cv[k] >= buffer.height) continue;
            SplatSample& sample = buffer.rasters[k][buffer.index(cu[k], cv[k])];
            sample.written = 1;
            sample.color = color;
            sample.depth = p.depth;
            sample.uc = p.uc;
            sample.vc = p.vc;
        }
    }
    return buffer;
}

MergeResult merge(const SplatBuffer& buffer) {
    MergeResult out;
    out.image = ColorImage::filled(buffer.width, buffer.height, {0, 0, 0});
    out.filled.assign(static_cast<std::size_t>(buffer.width) * buffer.height, 0);

    for (int v = 0; v < buffer.height; ++v) {
        for (int u = 0; u < buffer.width; ++u) {
            const std::size_t i = buffer.index(u, v);
            double l[4];
            int written[4];
            int n = 0;
            double l_sum = 0.0;
            for (int k = 0; k < 4; ++k) {
                const SplatSample& s = buffer.rasters[k][i];
                if (!s.written) continue;
                written[n] = k;
                l[n] = std::hypot(static_cast<double>(s.uc) - u, static_cast<double>(s.vc) - v);
                l_sum += l[n];
                ++n;
            }
            if (n == 0) continue;
            out.filled[i] = 1;
            if (l_sum == 0.0 || n == 1) {
                out.image.set(u, v, buffer.rasters[written[0]][i].color);
                continue;
            }
            double acc[3] = {0.0, 0.0, 0.0};
            double w_sum = 0.0;
            for (int k = 0; k < n; ++k) {
                const double w = (l_sum - l[k]) / l_sum;
                const auto& c = buffer.rasters[written[k]][i].color;
                for (int ch = 0; ch < 3; ++ch) acc[ch] += w * c[ch];
                w_sum += w;
            }
            std::array<std::uint8_t, 3> color;
            for (int ch = 0; ch < 3; ++ch) {
                color[ch] = static_cast<std::uint8_t>(
                    std::lround(std::clamp(acc[ch] / w_sum, 0.0, 255.0)));
            }
            out.image.set(u, v, color);
        }
    }
    return out;
}

namespace {

struct FillCandidate {
    double distance;
    std::array<std::uint8_t, 3> color;
};

// Nearest filled pixel along each raster axis, both directions, via sweeps.
std::vector<std::array<int, 4>> cardinal_nearest(int width, int height,
                                                 const std::vector<std::uint8_t>& filled) {
    std::vector<std::array<int, 4>> nearest(filled.size(), {-1, -1, -1, -1}); // left,right,up,down
    for (int v = 0; v < height; ++v) {
        int last = -1;
        for (int u = 0; u < width; ++u) {
            const std::size_t i = static_cast<std::size_t>(v) * width + u;
            if (filled[i]) last = u;
            nearest[i][0] = last;
        }
        last = -1;
        for (int u = width - 1; u >= 0; --u) {
            const std::size_t i = static_cast<std::size_t>(v) * width + u;
            if (filled[i]) last = u;
            nearest[i][1] = last;
        }
    }
    for (int u = 0; u < width; ++u) {
        int last = -1;
        for (int v = 0; v < height; ++v) {
            const std::size_t i = static_cast<std::size_t>(v) * width + u;
            if (filled[i]) last = v;
            nearest[i][2] = last;
        }
        last = -1;
        for (int v = height - 1; v >= 0; --v) {
            const std::size_t i = static_cast<std::size_t>(v) * width + u;
            if (filled[i]) last = v;
            nearest[i][3] = last;
        }
    }
    return nearest;
}

std::array<std::uint8_t, 3> blend_candidates(const std::vector<FillCandidate>& candidates) {
    if (candidates.size() == 1) return candidates[0].color;
    double l_sum = 0.0;
    for (const auto& c : candidates) l_sum += c.distance;
    double acc[3] = {0.0, 0.0, 0.0};
    double w_sum = 0.0;
    for (const auto& c : candidates) {
        const double w = (l_sum - c.distance) / l_sum;
        for (int ch = 0; ch < 3; ++ch) acc[ch] += w * c.color[ch];
        w_sum += w;
    }
    std::array<std::uint8_t, 3> color;
    for (int ch = 0; ch < 3; ++ch) {
        color[ch] = static_cast<std::uint8_t>(std::lround(std::clamp(acc[ch] / w_sum, 0.0, 255.0)));
    }
    return color;
}

} // namespace

ColorImage fill_blanks(const ColorImage& image, const std::vector<std::uint8_t>& filled) {
    if (filled.size() != static_cast<std::size_t>(image.width) * image.height) {
        throw ShapeError("fill_blanks: mask does not match image");
    }
    const std::size_t filled_count =
        static_cast<std::size_t>(std::count(filled.begin(), filled.end(), std::uint8_t{1}));
    if (filled_count == 0) throw EmptySynthesis("fill_blanks: no filled pixels to interpolate from");
    if (filled_count == filled.size()) return image;

    const auto nearest = cardinal_nearest(image.width, image.height, filled);
    ColorImage out = image;
    for (int v = 0; v < image.height; ++v) {
        for (int u = 0; u < image.width; ++u) {
            const std::size_t i = static_cast<std::size_t>(v) * image.width + u;
            if (filled[i]) continue;
            std::vector<FillCandidate> candidates;
            const auto& near = nearest[i];
            if (near[0] >= 0) candidates.push_back({static_cast<double>(u - near[0]), image.at(near[0], v)});
            if (near[1] >= 0) candidates.push_back({static_cast<double>(near[1] - u), image.at(near[1], v)});
            if (near[2] >= 0) candidates.push_back({static_cast<double>(v - near[2]), image.at(u, near[2])});
            if (near[3] >= 0) candidates.push_back({static_cast<double>(near[3] - v), image.at(u, near[3])});
            if (candidates.empty()) {
                // No filled pixel shares a row or column: fall back to the
                // globally nearest filled pixel (ties in raster order).
                double best = std::numeric_limits<double>::infinity();
                std::array<std::uint8_t, 3> best_color = {0, 0, 0};
                for (int fv = 0; fv < image.height; ++fv) {
                    for (int fu = 0; fu < image.width; ++fu) {
                        if (!filled[static_cast<std::size_t>(fv) * image.width + fu]) continue;
                        const double d = std::hypot(fu - u, fv - v);
                        if (d < best) {
                            best = d;
                            best_color = image.at(fu, fv);
                        }
                    }
                }
                out.set(u, v, best_color);
                continue;
            }
            out.set(u, v, blend_candidates(candidates));
        }
    }
    return out;
}

SynthesisResult synthesize_view(const ColorImage& source_image, const DepthMap& source_depth,
                                const CameraModel& source_camera, const CameraModel& target_camera,
                                const Transform3D& t_source_to_target) {
    if (source_image.width != source_depth.width || source_image.height != source_depth.height) {
        throw ShapeError("synthesize_view: source image and depth rasters differ");
    }
    if (!t_source_to_target.is_valid(1e-6)) {
        throw InvalidInput("synthesize_view: invalid source-to-target transform");
    }
    const PointCloud cloud_s = depth_to_cloud(source_camera, source_depth, "source-camera");
    const PointCloud cloud_t = transform_cloud(cloud_s, t_source_to_target, "target-camera");

    const bool same_size =
        source_image.width == target_camera.width && source_image.height == target_camera.height;
    const CameraModel working =
        same_size ? target_camera : target_camera.scaled_to(source_image.width, source_image.height);

    const SplatBuffer buffer = splat(source_image, cloud_t, working);
    const MergeResult merged = merge(buffer);
    const ColorImage full = fill_blanks(merged.image, merged.filled);

    if (same_size) return SynthesisResult{full, merged.filled};
    ResampleResult resampled =
        resample_bilinear(full, merged.filled, target_camera.width, target_camera.height);
    return SynthesisResult{std::move(resampled.image), std::move(resampled.mask)};
}

} // namespace exaug
