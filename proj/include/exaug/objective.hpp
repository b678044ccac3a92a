#pragma once

#include "exaug/cloud.hpp"
#include "exaug/geometry.hpp"

#include <cstdint>
#include <vector>

namespace exaug {

/// Default planning horizon and integration step.
inline constexpr int kDefaultHorizon = 8;
inline constexpr double kDefaultDt = 0.33;

/// Robot description conditioning the objective. r_s shapes the collision
/// cost; r_s_prime thresholds traversability independently.
struct RobotParams {
    double r_s = 0.3;
    double r_s_prime = 0.2;
    double h_min = 0.2;
    double h_max = 0.65;
    double v_max = 1.0;
    double omega_max = 1.0;

    bool is_valid() const {
        return r_s >= 0.0 && r_s_prime >= 0.0 && h_min < h_max && v_max > 0.0 && omega_max > 0.0;
    }
};

struct ObjectiveWeights {
    double w_g = 5e3;
    double w_d = 0.025;
    double w_t = 0.25;
};

struct VelocityCommand {
    double v = 0.0;
    double omega = 0.0;
};

struct Trajectory {
    std::vector<VelocityCommand> commands;
    std::vector<Pose2D> waypoints;
    std::vector<double> traversability;
};

/// Forward-Euler unicycle integration from the origin. The heading update
/// lands first in each step but the position update uses the pre-update
/// heading.
std::vector<Pose2D> rollout(const std::vector<VelocityCommand>& commands, double dt);

/// Height-band slice of a robot-frame cloud with its sparsity weights,
/// flattened for repeated distance queries. Zero-weight points still count
/// toward the mask normalizer.
struct GeoPoints {
    std::vector<Eigen::Vector2d> xy;
    std::vector<double> z;
    std::vector<double> weight;

    std::size_t size() const { return xy.size(); }
};

GeoPoints collect_geo_points(const PointCloud& cloud_robot_frame, const RobotParams& params);

/// Active (waypoint, point) pairs of the collision cost at one evaluation
/// point, with the normalizer L. Freezing this set makes the cost smooth so
/// it can be differentiated.
struct GeoMask {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> active;
    std::size_t count() const { return active.size(); }
};

GeoMask geo_mask(const std::vector<Pose2D>& waypoints, const GeoPoints& points, double r_s);

/// Mean of weight * (r_s - d)^2 over the points strictly inside the robot
/// disk at each waypoint, where d is the horizontal distance from the
/// waypoint. Returns 0 when no point is masked.
double j_geo(const std::vector<Pose2D>& waypoints, const PointCloud& cloud_robot_frame,
             const RobotParams& params);
double j_geo(const std::vector<Pose2D>& waypoints, const GeoPoints& points, double r_s);
double j_geo_frozen(const std::vector<Pose2D>& waypoints, const GeoPoints& points,
                    const GeoMask& mask, double r_s);

/// Squared distance from the final waypoint position to the goal position.
double j_pose(const std::vector<Pose2D>& waypoints, const Pose2D& goal);

/// Sum of squared consecutive command differences over both channels.
/// Returns 0 for fewer than two commands.
double j_diff(const std::vector<VelocityCommand>& commands);

/// Sum of squared traversability prediction errors.
double j_trav(const std::vector<double>& predicted, const std::vector<double>& ground_truth);

/// Geometric traversability: 0 when any height-band point lies strictly
/// within r_s_prime of the waypoint, else 1.
std::vector<double> traversability_gt(const std::vector<Pose2D>& waypoints,
                                      const PointCloud& cloud_robot_frame,
                                      const RobotParams& params);
std::vector<double> traversability_gt(const std::vector<Pose2D>& waypoints, const GeoPoints& points,
                                      double r_s_prime);

struct ObjectiveBreakdown {
    double pose = 0.0;
    double geo = 0.0;
    double diff = 0.0;
    double trav = 0.0;
    double total = 0.0;
};

/// Weighted sum j_pose + w_g j_geo + w_d j_diff + w_t j_trav with the
/// per-term breakdown. Pass matching predicted/ground-truth traversability
/// vectors (possibly empty) for the trav term.
ObjectiveBreakdown total_objective(const std::vector<VelocityCommand>& commands, const Pose2D& goal,
                                   const PointCloud& cloud_robot_frame, const RobotParams& params,
                                   const ObjectiveWeights& weights,
                                   const std::vector<double>& gt_trav,
                                   const std::vector<double>& predicted_trav,
                                   double dt = kDefaultDt);

std::string breakdown_to_json(const ObjectiveBreakdown& breakdown);

/// Trajectory CSV rows: step, v, omega, x, y, theta, t.
std::string trajectory_to_csv(const Trajectory& trajectory);

} // namespace exaug
