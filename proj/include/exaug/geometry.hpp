#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <string>

namespace exaug {

/// Wraps an angle into (-pi, pi].
double normalize_angle(double theta);

/// Planar robot pose. x forward, y left, theta counter-clockwise about z.
struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    static Pose2D make(double x, double y, double theta) {
        return Pose2D{x, y, normalize_angle(theta)};
    }
};

/// Rigid transform p' = rotation * p + translation.
struct Transform3D {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static Transform3D identity() { return Transform3D{}; }

    /// True when rotation is orthonormal with det +1 within tol.
    bool is_valid(double tol = 1e-9) const;
};

Eigen::Vector3d apply(const Transform3D& t, const Eigen::Vector3d& p);
Transform3D compose(const Transform3D& a, const Transform3D& b);
Transform3D inverse(const Transform3D& t);

/// Transform of a planar robot pose: rotation about z plus (x, y, 0).
Transform3D pose_to_transform(const Pose2D& pose);

/// Pose of `target` expressed in the frame of `reference`.
Pose2D relative_pose(const Pose2D& reference, const Pose2D& target);

/// Continuous pixel position. u indexes columns, v indexes rows.
struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

/// Integer raster position.
struct PixelIndex {
    int u = 0;
    int v = 0;
};

enum class CameraKind {
    Pinhole,
    FisheyeEquidistant,
    Equirectangular,
};

std::string to_string(CameraKind kind);
CameraKind camera_kind_from_string(const std::string& name);

/// Parametric camera. Camera frame: z forward, x right, y down.
///
/// Intrinsics fx, fy, cx, cy are used by all three kinds:
///  - pinhole:  u = fx*x/z + cx
///  - fisheye:  u = fx*theta*cos(phi) + cx  (equidistant, r = f*theta)
///  - equirect: u = fx*azimuth + cx, v = cy - fy*elevation
/// so the equirectangular field-of-view bounds are the angles mapped to the
/// raster edges and round-trip through serialization for free.
///
/// Depth convention: axis depth (z) for pinhole, Euclidean range otherwise.
/// `mount` maps robot-frame points into the camera frame.
struct CameraModel {
    CameraKind kind = CameraKind::Pinhole;
    int width = 0;
    int height = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    Transform3D mount;

    static CameraModel pinhole(int width, int height, double fx, double fy, double cx, double cy);
    static CameraModel fisheye(int width, int height, double fx, double fy, double cx, double cy);
    /// Builds the angle-to-pixel map so az_min/el_max land on pixel centers
    /// (0, 0) and az_max/el_min on (width-1, height-1).
    static CameraModel equirectangular(int width, int height, double az_min, double az_max,
                                       double el_min, double el_max);
    static CameraModel equirectangular_full_sphere(int width, int height);

    double azimuth_min() const { return (0.0 - cx) / fx; }
    double azimuth_max() const { return (width - 1.0 - cx) / fx; }
    double elevation_min() const { return (cy - (height - 1.0)) / fy; }
    double elevation_max() const { return cy / fy; }

    /// Same angular geometry on a new raster size (per-axis pixel scaling,
    /// pixel centers aligned to the raster corners).
    CameraModel scaled_to(int new_width, int new_height) const;

    bool depth_is_range() const { return kind != CameraKind::Pinhole; }
};

/// Projects a camera-frame point to continuous pixel coordinates.
/// Returns nullopt when the point is outside the field of view (off-raster,
/// behind a pinhole camera, or at a model singularity).
/// Throws InvalidInput for non-finite points.
std::optional<Pixel> project(const CameraModel& camera, const Eigen::Vector3d& point);

/// Inverse of project at integer pixels. `depth` follows the camera's depth
/// convention (z for pinhole, range otherwise) and must be positive.
Eigen::Vector3d back_project(const CameraModel& camera, const PixelIndex& pixel, double depth);

/// Unit-norm ray through an integer pixel, in the camera frame.
Eigen::Vector3d pixel_ray(const CameraModel& camera, const PixelIndex& pixel);

/// Mount for a camera looking along robot +x, positioned at `position`
/// in the robot frame (robot: x forward, y left, z up).
Transform3D forward_mount(const Eigen::Vector3d& position);

std::string camera_to_json(const CameraModel& camera);
CameraModel camera_from_json(const std::string& text);
CameraModel load_camera(const std::string& path);
void save_camera(const CameraModel& camera, const std::string& path);

std::string transform_to_json(const Transform3D& t);
Transform3D transform_from_json(const std::string& text);

} // namespace exaug
