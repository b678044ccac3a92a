#pragma once

#include "exaug/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace exaug {

/// Dense per-pixel range raster. Invalid pixels carry no depth; stored values
/// at invalid pixels are unspecified. Row-major, index = v * width + u.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<float> values;
    std::vector<std::uint8_t> validity;

    static DepthMap invalid(int width, int height);
    static DepthMap constant(int width, int height, float depth);

    std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
    bool valid_at(int u, int v) const { return validity[index(u, v)] != 0; }
    float at(int u, int v) const { return values[index(u, v)]; }
    void set(int u, int v, float depth);
    void set_invalid(int u, int v);
};

/// Raster-organized point cloud. Shape matches the source depth map; invalid
/// pixels carry no point.
struct PointCloud {
    int width = 0;
    int height = 0;
    std::string frame;
    std::vector<Eigen::Vector3d> points;
    std::vector<std::uint8_t> validity;

    static PointCloud invalid(int width, int height, std::string frame);

    std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
    bool valid_at(int u, int v) const { return validity[index(u, v)] != 0; }
    const Eigen::Vector3d& at(int u, int v) const { return points[index(u, v)]; }
};

/// Back-projects every valid depth pixel into the camera frame.
PointCloud depth_to_cloud(const CameraModel& camera, const DepthMap& depth,
                          const std::string& frame = "camera");

/// Applies a rigid transform to every valid point; validity is preserved.
PointCloud transform_cloud(const PointCloud& cloud, const Transform3D& t,
                           const std::string& new_frame = "");

/// True where the point is valid and h_min <= z <= h_max (closed interval).
/// The cloud must be expressed in the robot frame (z up).
std::vector<std::uint8_t> height_mask(const PointCloud& cloud, double h_min, double h_max);

/// Per-pixel area weight: the product of the 3D distances between the two
/// vertical and the two horizontal neighbors. Border pixels and pixels with
/// any invalid neighbor get weight 0.
std::vector<double> sparsity_weights(const PointCloud& cloud);

/// Binary depth raster: magic "EXDM", u32 width, u32 height, then
/// width*height little-endian f32 row-major. Non-positive or non-finite
/// values mark invalid pixels.
DepthMap read_depth(const std::string& path);
void write_depth(const DepthMap& depth, const std::string& path);

} // namespace exaug
