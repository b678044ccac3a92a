#pragma once

#include "exaug/cloud.hpp"
#include "exaug/geometry.hpp"
#include "exaug/image.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace exaug {

/// Axis-aligned box, corners min <= max componentwise.
struct BoxPrimitive {
    Eigen::Vector3d min = Eigen::Vector3d::Zero();
    Eigen::Vector3d max = Eigen::Vector3d::Zero();
    Eigen::Vector3d albedo = Eigen::Vector3d(0.6, 0.6, 0.6);
};

/// Vertical cylinder, axis parallel to z through (cx, cy).
struct CylinderPrimitive {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    double z_min = 0.0;
    double z_max = 0.0;
    Eigen::Vector3d albedo = Eigen::Vector3d(0.6, 0.6, 0.6);
};

/// Infinite ground plane at z = 0.
struct GroundPrimitive {
    Eigen::Vector3d albedo = Eigen::Vector3d(0.45, 0.5, 0.4);
};

using Primitive = std::variant<BoxPrimitive, CylinderPrimitive, GroundPrimitive>;

struct SceneDescription {
    std::vector<Primitive> primitives;
    Pose2D start;
    Pose2D goal;
    std::vector<Pose2D> subgoals; // ordered start -> goal
};

struct RenderOutput {
    ColorImage color;
    DepthMap depth;
};

struct RayHit {
    double t = 0.0; // Euclidean distance along the unit ray
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::Zero();
    Eigen::Vector3d albedo = Eigen::Vector3d::Zero();
};

/// Nearest intersection of a unit-direction ray with the scene.
std::optional<RayHit> intersect_scene(const SceneDescription& scene, const Eigen::Vector3d& origin,
                                      const Eigen::Vector3d& dir, double max_range);

/// Lambertian shading with the fixed directional light used everywhere.
std::array<std::uint8_t, 3> shade(const Eigen::Vector3d& albedo, const Eigen::Vector3d& normal);

/// Renders color and depth for a camera at `camera_pose` (camera frame to
/// world frame). Depth follows the camera's depth convention; rays that miss
/// every primitive within max_range are invalid and painted background.
RenderOutput raycast(const SceneDescription& scene, const CameraModel& camera,
                     const Transform3D& camera_pose, double max_range);

/// Renders through the camera's mount at a planar robot pose and returns the
/// cloud expressed in the robot frame.
PointCloud scene_cloud(const SceneDescription& scene, const Pose2D& robot_pose,
                       const CameraModel& camera, double max_range = 40.0);

/// Signed horizontal distance from (x, y) to the nearest obstacle footprint
/// (negative inside). Only primitives overlapping [z_low, z_high] count; the
/// ground plane never does.
double obstacle_clearance(const SceneDescription& scene, double x, double y, double z_low = 0.0,
                          double z_high = 1.0);

struct SuiteParams {
    double corridor_length = 6.0;
    double corridor_halfwidth = 2.5;
    int obstacle_count = 3;
    double clearance = 0.6;           // certified corridor clearance radius
    double min_obstacle_radius = 0.2;
    double max_obstacle_radius = 0.45;
    double subgoal_spacing = 0.5;     // meters between sampled subgoal poses
    int max_attempts = 50;
};

/// Deterministically generates scenes that each admit a start-to-goal
/// corridor of the configured clearance, verified by grid search. The
/// verified path is stored as the subgoal pose list.
std::vector<SceneDescription> generate_suite(std::uint64_t seed, int count, const SuiteParams& params);

std::string scene_to_json(const SceneDescription& scene);
SceneDescription scene_from_json(const std::string& text);
SceneDescription load_scene(const std::string& path);
void save_scene(const SceneDescription& scene, const std::string& path);

} // namespace exaug
