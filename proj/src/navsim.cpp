#include "exaug/navsim.hpp"

#include "exaug/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace exaug {

using json = nlohmann::json;

NavConfig NavConfig::defaults() {
    NavConfig config;
    config.camera =
        CameraModel::equirectangular(144, 48, -M_PI, M_PI - 2.0 * M_PI / 144, -0.7, 0.7);
    config.camera.mount = forward_mount(Eigen::Vector3d(0.2, 0.0, 0.3));
    // Receding-horizon loop re-optimizes every step, so fewer iterations with
    // a larger step suffice per solve.
    config.optimizer.learning_rate = 0.05;
    config.optimizer.max_iters = 150;
    config.optimizer.restarts = 2;
    return config;
}

TopologicalGraph build_graph(const SceneDescription& scene, const std::vector<Pose2D>& teleop_path,
                             const CameraModel& camera, int sample_period, double max_range) {
    if (teleop_path.size() < 2) throw InvalidInput("build_graph: teleop path needs at least 2 poses");
    if (sample_period < 1) throw InvalidInput("build_graph: sample period must be at least 1");
    TopologicalGraph graph;
    const Transform3D cam_in_robot = inverse(camera.mount);
    const auto render_at = [&](const Pose2D& pose) {
        return raycast(scene, camera, compose(pose_to_transform(pose), cam_in_robot), max_range);
    };
    for (std::size_t i = 0; i < teleop_path.size(); i += static_cast<std::size_t>(sample_period)) {
        graph.nodes.push_back(GraphNode{teleop_path[i], render_at(teleop_path[i])});
    }
    const std::size_t last = teleop_path.size() - 1;
    if ((last % static_cast<std::size_t>(sample_period)) != 0) {
        graph.nodes.push_back(GraphNode{teleop_path[last], render_at(teleop_path[last])});
    }
    return graph;
}

int localize(const Pose2D& robot, const TopologicalGraph& graph, int current,
             const NavConfig& config, const RelativePoseFn& rel_pose_fn) {
    int best = current;
    for (int n_l = 1; n_l <= config.lookahead; ++n_l) {
        const int candidate = current + n_l;
        if (candidate > graph.goal_index()) break;
        const Pose2D rel = rel_pose_fn(robot, graph.nodes[candidate].pose);
        if (std::hypot(rel.x, rel.y) < config.d_l && std::abs(rel.theta) < config.theta_l) {
            best = candidate;
        }
    }
    return best;
}

namespace {

Pose2D ground_truth_relative(const Pose2D& robot, const Pose2D& node) {
    return relative_pose(robot, node);
}

Pose2D integrate_unicycle(const Pose2D& pose, double v, double omega, double dt) {
    Pose2D out;
    out.x = pose.x + v * std::cos(pose.theta) * dt;
    out.y = pose.y + v * std::sin(pose.theta) * dt;
    out.theta = normalize_angle(pose.theta + omega * dt);
    return out;
}

} // namespace

StepRecord step(NavState& state, const TopologicalGraph& graph, const SceneDescription& scene,
                const RobotParams& params, const NavConfig& config) {
    if (state.arrived) throw InvalidInput("step: episode already arrived");

    state.node_index = localize(state.pose, graph, state.node_index, config, ground_truth_relative);
    StepRecord record;
    record.step = state.steps + 1;
    record.node_index = state.node_index;
    if (state.node_index >= graph.goal_index()) {
        state.arrived = true;
        record.pose = state.pose;
        return record;
    }

    OptimizeInstance instance;
    instance.goal = relative_pose(state.pose, graph.nodes[state.node_index + 1].pose);
    instance.cloud = scene_cloud(scene, state.pose, config.camera, config.max_range);
    instance.params = params;
    instance.weights = config.weights;
    const OptimizationResult result = optimize(instance, config.optimizer);

    record.t1 = result.trajectory.traversability.front();
    record.pivot = !(record.t1 > 0.5);
    record.v = record.pivot ? 0.0 : result.trajectory.commands.front().v;
    record.omega = result.trajectory.commands.front().omega;

    // Stall recovery. The pose objective is position-only, so a robot parked
    // on the pending subgoal with a heading outside the localization gate
    // would otherwise idle forever. Turn in place toward the subgoal (its
    // bearing when still distant, its heading once on top of it), the same
    // way the safety module pivots out of blocked states.
    if (!record.pivot && std::abs(record.v) * config.dt < 5e-3 &&
        std::abs(record.omega) * config.dt < 1e-2) {
        const Pose2D& rel = instance.goal;
        const double desired =
            std::hypot(rel.x, rel.y) > config.d_l ? std::atan2(rel.y, rel.x) : rel.theta;
        record.pivot = true;
        record.v = 0.0;
        record.omega = std::clamp(desired / config.dt, -0.9 * params.omega_max,
                                  0.9 * params.omega_max);
    }

    // Substep integration so fast motion cannot tunnel past a thin obstacle
    // between collision checks.
    const int substeps = std::max(1, config.collision_substeps);
    for (int s = 0; s < substeps; ++s) {
        state.pose = integrate_unicycle(state.pose, record.v, record.omega, config.dt / substeps);
        const double clearance = obstacle_clearance(scene, state.pose.x, state.pose.y, 0.0, params.h_max);
        state.min_clearance = std::min(state.min_clearance, clearance);
        if (clearance < config.r_phys) {
            state.collided = true;
            break;
        }
    }
    state.path_length += std::abs(record.v) * config.dt;
    state.steps += 1;
    record.pose = state.pose;
    return record;
}

NavMetrics run_episode(const SceneDescription& scene, const TopologicalGraph& graph,
                       const RobotParams& params, const NavConfig& config,
                       std::vector<StepRecord>* trace) {
    if (graph.nodes.size() < 2) throw InvalidInput("run_episode: graph needs at least 2 nodes");
    NavState state;
    state.pose = scene.start;
    while (!state.arrived && !state.collided && state.steps < config.max_steps) {
        try {
            const StepRecord record = step(state, graph, scene, params, config);
            if (trace) trace->push_back(record);
        } catch (const OptimizationFailure&) {
            // The episode ends where it stands and reports failure metrics.
            break;
        }
    }
    NavMetrics metrics;
    metrics.task_completion =
        static_cast<double>(state.node_index) / static_cast<double>(graph.goal_index());
    metrics.goal_arrival = state.arrived;
    metrics.collision_free = !state.collided;
    metrics.path_length = state.path_length;
    metrics.steps = state.steps;
    metrics.min_clearance = state.min_clearance;
    return metrics;
}

std::string metrics_to_json(const NavMetrics& metrics) {
    nlohmann::ordered_json j;
    j["task_completion"] = metrics.task_completion;
    j["goal_arrival"] = metrics.goal_arrival;
    j["collision_free"] = metrics.collision_free;
    j["path_length"] = metrics.path_length;
    j["steps"] = metrics.steps;
    j["min_clearance"] =
        std::isfinite(metrics.min_clearance) ? json(metrics.min_clearance) : json();
    return j.dump(2);
}

std::string trace_to_csv(const std::vector<StepRecord>& trace) {
    std::string out = "step,x,y,theta,v,omega,n_c,t1,pivot_flag\n";
    char line[256];
    for (const StepRecord& r : trace) {
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%d\n", r.step,
                      r.pose.x, r.pose.y, r.pose.theta, r.v, r.omega, r.node_index, r.t1,
                      r.pivot ? 1 : 0);
        out += line;
    }
    return out;
}

std::string graph_to_json(const TopologicalGraph& graph) {
    json j;
    j["nodes"] = json::array();
    for (const GraphNode& node : graph.nodes) {
        j["nodes"].push_back(json{{"x", node.pose.x}, {"y", node.pose.y}, {"theta", node.pose.theta}});
    }
    return j.dump(2);
}

std::vector<Pose2D> graph_poses_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        std::vector<Pose2D> poses;
        for (const auto& node : j.at("nodes")) {
            poses.push_back(Pose2D::make(node.at("x").get<double>(), node.at("y").get<double>(),
                                         node.at("theta").get<double>()));
        }
        if (poses.size() < 2) throw IoError("graph json: need at least 2 nodes");
        return poses;
    } catch (const json::exception& e) {
        throw IoError(std::string("graph json: ") + e.what());
    }
}

TopologicalGraph load_graph(const std::string& path, const SceneDescription& scene,
                            const CameraModel& camera, double max_range) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::vector<Pose2D> poses = graph_poses_from_json(text);
    return build_graph(scene, poses, camera, 1, max_range);
}

void save_graph(const TopologicalGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write graph file: " + path);
    out << graph_to_json(graph) << "\n";
}

} // namespace exaug
