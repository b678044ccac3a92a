#pragma once

#include "exaug/optimizer.hpp"
#include "exaug/scene.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace exaug {

struct GraphNode {
    Pose2D pose;
    RenderOutput observation;
};

/// Ordered subgoal chain from start (node 0) to goal (last node), with the
/// rendered observation stored per node.
struct TopologicalGraph {
    std::vector<GraphNode> nodes;

    int goal_index() const { return static_cast<int>(nodes.size()) - 1; }
};

/// Samples every `sample_period`-th teleop pose as a node (the final pose is
/// always a node) and renders the observation at each.
TopologicalGraph build_graph(const SceneDescription& scene, const std::vector<Pose2D>& teleop_path,
                             const CameraModel& camera, int sample_period, double max_range = 40.0);

/// Pose of `node` in the robot frame. The default oracle computes it from
/// simulator ground truth.
using RelativePoseFn = std::function<Pose2D(const Pose2D& robot, const Pose2D& node)>;

struct NavConfig {
    int lookahead = 5;      // N_t candidate subgoals
    double d_l = 0.4;       // localization distance threshold (m)
    double theta_l = 0.5;   // localization heading threshold (rad)
    double r_phys = 0.15;   // true body radius judging collisions (m)
    double dt = kDefaultDt;
    int max_steps = 500;
    double max_range = 30.0;
    int collision_substeps = 4;
    CameraModel camera;     // perception camera (mount included)
    OptimizerConfig optimizer;
    ObjectiveWeights weights;

    static NavConfig defaults();
};

struct NavState {
    Pose2D pose;
    int node_index = 0; // n_c
    int steps = 0;
    bool collided = false;
    bool arrived = false;
    double path_length = 0.0;
    double min_clearance = std::numeric_limits<double>::infinity();
};

struct NavMetrics {
    double task_completion = 0.0;
    bool goal_arrival = false;
    bool collision_free = true;
    double path_length = 0.0;
    int steps = 0;
    double min_clearance = std::numeric_limits<double>::infinity();
};

struct StepRecord {
    int step = 0;
    Pose2D pose;      // pose after executing the command
    double v = 0.0;   // executed linear velocity
    double omega = 0.0;
    int node_index = 0;
    double t1 = 1.0;  // traversability of the first waypoint
    bool pivot = false;
};

/// Scans candidates n_c + 1 .. n_c + lookahead and returns the largest index
/// whose relative pose satisfies both localization thresholds (n_c when none
/// does).
int localize(const Pose2D& robot, const TopologicalGraph& graph, int current,
             const NavConfig& config, const RelativePoseFn& rel_pose_fn);

/// One closed-loop iteration: localize, re-optimize toward the next subgoal,
/// gate the linear velocity on first-waypoint traversability, execute one dt,
/// and judge collisions against the true primitives.
StepRecord step(NavState& state, const TopologicalGraph& graph, const SceneDescription& scene,
                const RobotParams& params, const NavConfig& config);

/// Runs step until arrival, collision, or the step budget; fills the trace
/// when given.
NavMetrics run_episode(const SceneDescription& scene, const TopologicalGraph& graph,
                       const RobotParams& params, const NavConfig& config,
                       std::vector<StepRecord>* trace = nullptr);

std::string metrics_to_json(const NavMetrics& metrics);

/// Trace CSV rows: step, x, y, theta, v, omega, n_c, t1, pivot_flag.
std::string trace_to_csv(const std::vector<StepRecord>& trace);

/// Node poses only; observations re-render deterministically from the scene.
std::string graph_to_json(const TopologicalGraph& graph);
std::vector<Pose2D> graph_poses_from_json(const std::string& text);
TopologicalGraph load_graph(const std::string& path, const SceneDescription& scene,
                            const CameraModel& camera, double max_range = 40.0);
void save_graph(const TopologicalGraph& graph, const std::string& path);

} // namespace exaug
