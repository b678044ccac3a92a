#pragma once

// Shared fixtures for the unit and acceptance suites.

#include "exaug/navsim.hpp"
#include "exaug/optimizer.hpp"
#include "exaug/scene.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace fixtures {

/// Wall across the corridor with a single gap at y = 0. The gap admits a
/// small robot (clearance 0.35 at the centerline) but not a 1.0 m one; the
/// wall ends at |y| = 0.75 so a detour within the command horizon exists.
inline exaug::SceneDescription narrow_gap_scene() {
    exaug::SceneDescription scene;
    scene.primitives.emplace_back(exaug::GroundPrimitive{});
    exaug::BoxPrimitive left;
    left.min = Eigen::Vector3d(1.5, -0.75, 0.0);
    left.max = Eigen::Vector3d(1.6, -0.35, 1.0);
    left.albedo = Eigen::Vector3d(0.8, 0.3, 0.3);
    exaug::BoxPrimitive right = left;
    right.min.y() = 0.35;
    right.max.y() = 0.75;
    right.albedo = Eigen::Vector3d(0.3, 0.4, 0.8);
    scene.primitives.emplace_back(left);
    scene.primitives.emplace_back(right);
    scene.start = exaug::Pose2D::make(0.0, 0.0, 0.0);
    scene.goal = exaug::Pose2D::make(3.0, 0.0, 0.0);
    return scene;
}

/// Ring of thin pillars whose surfaces sit 0.17 m from the start pose:
/// outside the physical body (0.15 m) but inside the safety radius (0.2 m),
/// in every direction.
inline exaug::SceneDescription blocked_start_scene() {
    exaug::SceneDescription scene;
    scene.primitives.emplace_back(exaug::GroundPrimitive{});
    const int pillars = 12;
    for (int i = 0; i < pillars; ++i) {
        const double angle = 2.0 * M_PI * i / pillars;
        exaug::CylinderPrimitive pillar;
        pillar.radius = 0.10;
        pillar.cx = 0.27 * std::cos(angle);
        pillar.cy = 0.27 * std::sin(angle);
        pillar.z_min = 0.0;
        pillar.z_max = 1.0;
        pillar.albedo = Eigen::Vector3d(0.7, 0.4, 0.2);
        scene.primitives.emplace_back(pillar);
    }
    scene.start = exaug::Pose2D::make(0.0, 0.0, 0.0);
    scene.goal = exaug::Pose2D::make(3.0, 0.0, 0.0);
    scene.subgoals = {scene.start, exaug::Pose2D::make(1.5, 0.0, 0.0), scene.goal};
    return scene;
}

/// Obstacle-free straight run.
inline exaug::SceneDescription straight_scene(double length = 4.0) {
    exaug::SceneDescription scene;
    scene.primitives.emplace_back(exaug::GroundPrimitive{});
    scene.start = exaug::Pose2D::make(0.0, 0.0, 0.0);
    scene.goal = exaug::Pose2D::make(length, 0.0, 0.0);
    for (double x = 0.0; x < length; x += 0.5) {
        scene.subgoals.push_back(exaug::Pose2D::make(x, 0.0, 0.0));
    }
    scene.subgoals.push_back(scene.goal);
    return scene;
}

/// Wide-field perception camera used by the trajectory tests: full azimuth
/// sweep (seam represented once), limited elevation band.
inline exaug::CameraModel nav_camera(int width = 144, int height = 48) {
    exaug::CameraModel cam = exaug::CameraModel::equirectangular(
        width, height, -M_PI, M_PI - 2.0 * M_PI / width, -0.7, 0.7);
    cam.mount = exaug::forward_mount(Eigen::Vector3d(0.2, 0.0, 0.3));
    return cam;
}

/// Random raster-organized cloud in the robot frame: points scattered in a
/// box around the origin with a sprinkling of invalid pixels.
inline exaug::PointCloud random_cloud(std::mt19937_64& rng, int width = 50, int height = 40,
                                      double spread = 3.0) {
    std::uniform_real_distribution<double> coord(-spread, spread);
    std::uniform_real_distribution<double> zdist(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    exaug::PointCloud cloud = exaug::PointCloud::invalid(width, height, "robot");
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if (unit(rng) < 0.08) continue;
        cloud.points[i] = Eigen::Vector3d(coord(rng), coord(rng), zdist(rng));
        cloud.validity[i] = 1;
    }
    return cloud;
}

inline std::vector<exaug::VelocityCommand> random_commands(std::mt19937_64& rng, int n,
                                                           double v_max, double omega_max) {
    std::uniform_real_distribution<double> uv(-v_max, v_max);
    std::uniform_real_distribution<double> uw(-omega_max, omega_max);
    std::vector<exaug::VelocityCommand> cmds(n);
    for (auto& c : cmds) {
        c.v = uv(rng);
        c.omega = uw(rng);
    }
    return cmds;
}

/// Robot parameters and optimizer settings under which the gap fixture's
/// detour is kinematically comfortable for a 1.0 m conditioning radius.
inline exaug::OptimizeInstance gap_instance(const exaug::SceneDescription& scene) {
    exaug::OptimizeInstance instance;
    instance.cloud = exaug::scene_cloud(scene, scene.start, nav_camera(96, 24), 30.0);
    instance.goal = exaug::relative_pose(scene.start, scene.goal);
    instance.params.v_max = 2.5;
    instance.params.omega_max = 2.0;
    return instance;
}

inline exaug::OptimizerConfig gap_config() {
    exaug::OptimizerConfig config;
    config.learning_rate = 0.05;
    config.max_iters = 2500;
    config.restarts = 5;
    config.patience = 150;
    return config;
}

/// Planar rigid composition: pose of (frame . p) in the world, used by the
/// translation-equivariance checks.
inline exaug::Pose2D compose_pose(const exaug::Pose2D& frame, const exaug::Pose2D& p) {
    const double c = std::cos(frame.theta);
    const double s = std::sin(frame.theta);
    return exaug::Pose2D::make(frame.x + c * p.x - s * p.y, frame.y + s * p.x + c * p.y,
                               frame.theta + p.theta);
}

} // namespace fixtures
