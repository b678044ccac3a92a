#include "exaug/objective.hpp"

#include "exaug/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace exaug {

std::vector<Pose2D> rollout(const std::vector<VelocityCommand>& commands, double dt) {
    if (!(dt > 0.0)) throw InvalidInput("rollout: dt must be positive");
    std::vector<Pose2D> waypoints;
    waypoints.reserve(commands.size());
    double x = 0.0, y = 0.0, theta = 0.0;
    for (const VelocityCommand& c : commands) {
        if (!std::isfinite(c.v) || !std::isfinite(c.omega)) {
            throw InvalidInput("rollout: non-finite command");
        }
        x += c.v * std::cos(theta) * dt;
        y += c.v * std::sin(theta) * dt;
        theta = normalize_angle(theta + c.omega * dt);
        waypoints.push_back(Pose2D{x, y, theta});
    }
    return waypoints;
}

GeoPoints collect_geo_points(const PointCloud& cloud_robot_frame, const RobotParams& params) {
    if (!params.is_valid()) throw InvalidInput("collect_geo_points: invalid robot parameters");
    const std::vector<std::uint8_t> band = height_mask(cloud_robot_frame, params.h_min, params.h_max);
    const std::vector<double> weights = sparsity_weights(cloud_robot_frame);
    GeoPoints out;
    for (std::size_t i = 0; i < band.size(); ++i) {
        if (!band[i]) continue;
        const Eigen::Vector3d& p = cloud_robot_frame.points[i];
        out.xy.emplace_back(p.x(), p.y());
        out.z.push_back(p.z());
        out.weight.push_back(weights[i]);
    }
    return out;
}

GeoMask geo_mask(const std::vector<Pose2D>& waypoints, const GeoPoints& points, double r_s) {
    GeoMask mask;
    for (std::uint32_t k = 0; k < waypoints.size(); ++k) {
        for (std::uint32_t i = 0; i < points.size(); ++i) {
            const double d = std::hypot(points.xy[i].x() - waypoints[k].x,
                                        points.xy[i].y() - waypoints[k].y);
            if (d < r_s) mask.active.emplace_back(k, i);
        }
    }
    return mask;
}

double j_geo(const std::vector<Pose2D>& waypoints, const GeoPoints& points, double r_s) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Pose2D& wp : waypoints) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double d = std::hypot(points.xy[i].x() - wp.x, points.xy[i].y() - wp.y);
            if (d < r_s) {
                sum += points.weight[i] * (r_s - d) * (r_s - d);
                ++count;
            }
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double j_geo(const std::vector<Pose2D>& waypoints, const PointCloud& cloud_robot_frame,
             const RobotParams& params) {
    return j_geo(waypoints, collect_geo_points(cloud_robot_frame, params), params.r_s);
}

double j_geo_frozen(const std::vector<Pose2D>& waypoints, const GeoPoints& points,
                    const GeoMask& mask, double r_s) {
    if (mask.count() == 0) return 0.0;
    double sum = 0.0;
    for (const auto& [k, i] : mask.active) {
        const double d = std::hypot(points.xy[i].x() - waypoints[k].x,
                                    points.xy[i].y() - waypoints[k].y);
        sum += points.weight[i] * (r_s - d) * (r_s - d);
    }
    return sum / static_cast<double>(mask.count());
}

double j_pose(const std::vector<Pose2D>& waypoints, const Pose2D& goal) {
    if (waypoints.empty()) throw InvalidInput("j_pose: no waypoints");
    const Pose2D& last = waypoints.back();
    const double dx = goal.x - last.x;
    const double dy = goal.y - last.y;
    return dx * dx + dy * dy;
}

double j_diff(const std::vector<VelocityCommand>& commands) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < commands.size(); ++i) {
        const double dv = commands[i + 1].v - commands[i].v;
        const double dw = commands[i + 1].omega - commands[i].omega;
        sum += dv * dv + dw * dw;
    }
    return sum;
}

double j_trav(const std::vector<double>& predicted, const std::vector<double>& ground_truth) {
    if (predicted.size() != ground_truth.size()) {
        throw ShapeError("j_trav: prediction and ground truth lengths differ");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = ground_truth[i] - predicted[i];
        sum += d * d;
    }
    return sum;
}

std::vector<double> traversability_gt(const std::vector<Pose2D>& waypoints, const GeoPoints& points,
                                      double r_s_prime) {
    std::vector<double> t(waypoints.size(), 1.0);
    for (std::size_t k = 0; k < waypoints.size(); ++k) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double d = std::hypot(points.xy[i].x() - waypoints[k].x,
                                        points.xy[i].y() - waypoints[k].y);
            if (d < r_s_prime) {
                t[k] = 0.0;
                break;
            }
        }
    }
    return t;
}

std::vector<double> traversability_gt(const std::vector<Pose2D>& waypoints,
                                      const PointCloud& cloud_robot_frame,
                                      const RobotParams& params) {
    return traversability_gt(waypoints, collect_geo_points(cloud_robot_frame, params),
                             params.r_s_prime);
}

ObjectiveBreakdown total_objective(const std::vector<VelocityCommand>& commands, const Pose2D& goal,
                                   const PointCloud& cloud_robot_frame, const RobotParams& params,
                                   const ObjectiveWeights& weights,
                                   const std::vector<double>& gt_trav,
                                   const std::vector<double>& predicted_trav, double dt) {
    const std::vector<Pose2D> waypoints = rollout(commands, dt);
    ObjectiveBreakdown out;
    out.pose = waypoints.empty() ? 0.0 : j_pose(waypoints, goal);
    out.geo = j_geo(waypoints, cloud_robot_frame, params);
    out.diff = j_diff(commands);
    out.trav = j_trav(predicted_trav, gt_trav);
    out.total = out.pose + weights.w_g * out.geo + weights.w_d * out.diff + weights.w_t * out.trav;
    return out;
}

std::string breakdown_to_json(const ObjectiveBreakdown& breakdown) {
    nlohmann::ordered_json j;
    j["j_pose"] = breakdown.pose;
    j["j_geo"] = breakdown.geo;
    j["j_diff"] = breakdown.diff;
    j["j_trav"] = breakdown.trav;
    j["total"] = breakdown.total;
    return j.dump(2);
}

std::string trajectory_to_csv(const Trajectory& trajectory) {
    std::string out = "step,v,omega,x,y,theta,t\n";
    char line[256];
    for (std::size_t i = 0; i < trajectory.commands.size(); ++i) {
        const Pose2D wp = i < trajectory.waypoints.size() ? trajectory.waypoints[i] : Pose2D{};
        const double t = i < trajectory.traversability.size() ? trajectory.traversability[i] : 1.0;
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i + 1,
                      trajectory.commands[i].v, trajectory.commands[i].omega, wp.x, wp.y, wp.theta, t);
        out += line;
    }
    return out;
}

} // namespace exaug
