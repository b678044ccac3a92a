// exaug: geometric view synthesis, robot-conditioned trajectory
// optimization, and topological navigation on synthetic raycast scenes.

#include "exaug/errors.hpp"
#include "exaug/navsim.hpp"
#include "exaug/optimizer.hpp"
#include "exaug/scene.hpp"
#include "exaug/util.hpp"
#include "exaug/viewsynth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace {

using namespace exaug;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1; // navigation/optimization failure
constexpr int kExitUsage = 2;   // usage or input error

constexpr std::uint64_t kDefaultSeed = 7;

Transform3D parse_pose_arg(const std::string& arg) {
    if (arg == "identity") return Transform3D::identity();
    std::ifstream in(arg);
    if (!in) throw IoError("cannot open pose file: " + arg);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return transform_from_json(text);
}

Pose2D parse_pose2d(const std::string& arg) {
    Pose2D pose;
    char comma;
    std::istringstream in(arg);
    if (!(in >> pose.x >> comma >> pose.y) || comma != ',') {
        throw InvalidInput("expected pose as x,y[,theta]: " + arg);
    }
    if (in >> comma >> pose.theta && comma != ',') {
        throw InvalidInput("expected pose as x,y[,theta]: " + arg);
    }
    return Pose2D::make(pose.x, pose.y, pose.theta);
}

CameraModel default_perception_camera() { return NavConfig::defaults().camera; }

std::string ppm_bytes(const ColorImage& image) {
    std::ostringstream buffer;
    buffer << "P6\n" << image.width << " " << image.height << "\n255\n";
    buffer.write(reinterpret_cast<const char*>(image.rgb.data()),
                 static_cast<std::streamsize>(image.rgb.size()));
    return buffer.str();
}

struct OptimizerFlags {
    double learning_rate = 0.05;
    int max_iters = 500;
    int restarts = 4;
    int patience = 60;
    int horizon = kDefaultHorizon;
    double dt = kDefaultDt;
    bool forward_only = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--lr", learning_rate, "Adam learning rate");
        cmd->add_option("--iters", max_iters, "maximum Adam iterations per restart");
        cmd->add_option("--restarts", restarts, "number of optimizer restarts");
        cmd->add_option("--patience", patience, "iterations without improvement before stopping");
        cmd->add_option("--horizon", horizon, "number of command steps");
        cmd->add_option("--dt", dt, "integration step in seconds");
        cmd->add_flag("--forward-only", forward_only, "restrict linear velocity to [0, v_max]");
    }

    OptimizerConfig config(std::uint64_t seed) const {
        OptimizerConfig out;
        out.learning_rate = learning_rate;
        out.max_iters = max_iters;
        out.restarts = restarts;
        out.patience = patience;
        out.seed = seed;
        out.forward_only = forward_only;
        return out;
    }
};

int cmd_warp(const std::string& src_image, const std::string& src_depth, const std::string& src_cam,
             const std::string& dst_cam, const std::string& pose, const std::string& out) {
    const ColorImage image = read_ppm(src_image);
    const DepthMap depth = read_depth(src_depth);
    const CameraModel source = load_camera(src_cam);
    const CameraModel target = load_camera(dst_cam);
    const SynthesisResult result = synthesize_view(image, depth, source, target, parse_pose_arg(pose));
    atomic_write_file(out, ppm_bytes(result.image));
    return kExitOk;
}

int cmd_optimize(const std::string& scene_path, const std::string& goal_arg,
                 const std::string& cam_path, const RobotParams& params,
                 const OptimizerFlags& flags, std::uint64_t seed, const std::string& out_traj,
                 const std::string& out_report) {
    const SceneDescription scene = load_scene(scene_path);
    const CameraModel camera = cam_path.empty() ? default_perception_camera() : load_camera(cam_path);

    OptimizeInstance instance;
    instance.goal = goal_arg.empty() ? relative_pose(scene.start, scene.goal) : parse_pose2d(goal_arg);
    instance.cloud = scene_cloud(scene, scene.start, camera, 30.0);
    instance.params = params;
    instance.horizon = flags.horizon;
    instance.dt = flags.dt;

    const OptimizationResult result = optimize(instance, flags.config(seed));
    if (!out_traj.empty()) atomic_write_file(out_traj, trajectory_to_csv(result.trajectory));
    if (!out_report.empty()) {
        json report;
        report["goal"] = {{"x", instance.goal.x}, {"y", instance.goal.y}, {"theta", instance.goal.theta}};
        report["params"] = {{"r_s", params.r_s},       {"r_s_prime", params.r_s_prime},
                            {"h_min", params.h_min},   {"h_max", params.h_max},
                            {"v_max", params.v_max},   {"omega_max", params.omega_max}};
        report["objective"] = json::parse(breakdown_to_json(result.breakdown));
        report["iterations"] = result.iterations;
        report["converged"] = result.converged;
        report["restart_index"] = result.restart_index;
        atomic_write_file(out_report, report.dump(2) + "\n");
    }
    std::printf("objective %.9g after %d iterations (restart %d)\n", result.final_objective,
                result.iterations, result.restart_index);
    return kExitOk;
}

int cmd_scene_generate(std::uint64_t seed, int count, const std::string& out_dir,
                       const SuiteParams& params) {
    const auto suite = generate_suite(seed, count, params);
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < suite.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "scene_%03zu.json", i);
        atomic_write_file((fs::path(out_dir) / name).string(), scene_to_json(suite[i]) + "\n");
        std::snprintf(name, sizeof(name), "graph_%03zu.json", i);
        json graph;
        graph["nodes"] = json::array();
        for (const Pose2D& pose : suite[i].subgoals) {
            graph["nodes"].push_back({{"x", pose.x}, {"y", pose.y}, {"theta", pose.theta}});
        }
        atomic_write_file((fs::path(out_dir) / name).string(), graph.dump(2) + "\n");
    }
    std::printf("wrote %d scenes to %s\n", count, out_dir.c_str());
    return kExitOk;
}

int cmd_scene_render(const std::string& scene_path, const std::string& cam_path,
                     const std::string& pose_arg, double max_range, const std::string& out_color,
                     const std::string& out_depth) {
    const SceneDescription scene = load_scene(scene_path);
    const CameraModel camera = cam_path.empty() ? default_perception_camera() : load_camera(cam_path);
    const Pose2D robot = pose_arg.empty() ? scene.start : parse_pose2d(pose_arg);
    const Transform3D cam_pose = compose(pose_to_transform(robot), inverse(camera.mount));
    const RenderOutput render = raycast(scene, camera, cam_pose, max_range);
    if (!out_color.empty()) atomic_write_file(out_color, ppm_bytes(render.color));
    if (!out_depth.empty()) {
        const std::string tmp = out_depth + ".tmp";
        write_depth(render.depth, tmp);
        fs::rename(tmp, out_depth);
    }
    return kExitOk;
}

NavConfig nav_config_from_flags(const CameraModel& camera, const OptimizerFlags& flags,
                                std::uint64_t seed, int max_steps, double d_l, double theta_l,
                                int lookahead, double r_phys) {
    NavConfig config = NavConfig::defaults();
    config.camera = camera;
    config.optimizer = flags.config(seed);
    config.dt = flags.dt;
    config.max_steps = max_steps;
    config.d_l = d_l;
    config.theta_l = theta_l;
    config.lookahead = lookahead;
    config.r_phys = r_phys;
    return config;
}

int cmd_nav(const std::string& scene_path, const std::string& graph_path, const RobotParams& params,
            const NavConfig& config, const std::string& out_metrics, const std::string& out_trace) {
    const SceneDescription scene = load_scene(scene_path);
    const TopologicalGraph graph =
        graph_path.empty()
            ? build_graph(scene, scene.subgoals, config.camera, 1, config.max_range)
            : load_graph(graph_path, scene, config.camera, config.max_range);

    std::vector<StepRecord> trace;
    const NavMetrics metrics = run_episode(scene, graph, params, config, &trace);
    if (!out_metrics.empty()) atomic_write_file(out_metrics, metrics_to_json(metrics) + "\n");
    if (!out_trace.empty()) atomic_write_file(out_trace, trace_to_csv(trace));
    std::printf("TC %.3f GA %d CF %d steps %d\n", metrics.task_completion, metrics.goal_arrival,
                metrics.collision_free, metrics.steps);
    return metrics.goal_arrival && metrics.collision_free ? kExitOk : kExitFailure;
}

int cmd_eval_suite(const std::string& suite_dir, const std::vector<double>& rs_grid,
                   const std::vector<double>& omega_grid, const RobotParams& base_params,
                   const NavConfig& base_config, unsigned threads, std::uint64_t seed,
                   const std::string& out_report) {
    std::vector<std::string> scene_files;
    for (const auto& entry : fs::directory_iterator(suite_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("scene_", 0) == 0 && entry.path().extension() == ".json") {
            scene_files.push_back(entry.path().string());
        }
    }
    std::sort(scene_files.begin(), scene_files.end());

    struct Row {
        std::string scene;
        double r_s = 0.0;
        double omega_max = 0.0;
        bool aborted = false;
        std::string error;
        NavMetrics metrics;
    };

    std::vector<std::tuple<std::string, double, double>> jobs;
    for (const std::string& file : scene_files) {
        for (const double rs : rs_grid) {
            for (const double omega : omega_grid) jobs.emplace_back(file, rs, omega);
        }
    }
    std::vector<Row> rows(jobs.size());

    parallel_for_index(jobs.size(), resolve_threads(threads), [&](std::size_t i) {
        const auto& [file, rs, omega] = jobs[i];
        Row& row = rows[i];
        row.scene = fs::path(file).filename().string();
        row.r_s = rs;
        row.omega_max = omega;
        try {
            const SceneDescription scene = load_scene(file);
            const std::string graph_file =
                (fs::path(file).parent_path() /
                 ("graph_" + fs::path(file).filename().string().substr(6)))
                    .string();
            const TopologicalGraph graph =
                fs::exists(graph_file)
                    ? load_graph(graph_file, scene, base_config.camera, base_config.max_range)
                    : build_graph(scene, scene.subgoals, base_config.camera, 1,
                                  base_config.max_range);
            RobotParams params = base_params;
            params.r_s = rs;
            params.omega_max = omega;
            row.metrics = run_episode(scene, graph, params, base_config);
        } catch (const std::exception& e) {
            row.aborted = true;
            row.error = e.what();
        }
    });

    json report;
    report["seed"] = seed;
    report["suite"] = suite_dir;
    report["episodes"] = json::array();
    int arrived = 0, clean = 0, completed = 0;
    double tc_sum = 0.0;
    for (const Row& row : rows) {
        json r;
        r["scene"] = row.scene;
        r["r_s"] = row.r_s;
        r["omega_max"] = row.omega_max;
        if (row.aborted) {
            r["aborted"] = true;
            r["error"] = row.error;
        } else {
            r["metrics"] = json::parse(metrics_to_json(row.metrics));
            arrived += row.metrics.goal_arrival ? 1 : 0;
            clean += row.metrics.collision_free ? 1 : 0;
            tc_sum += row.metrics.task_completion;
            ++completed;
        }
        report["episodes"].push_back(r);
    }
    json aggregate;
    aggregate["episodes"] = rows.size();
    aggregate["completed"] = completed;
    aggregate["goal_arrival_rate"] = completed > 0 ? static_cast<double>(arrived) / completed : 0.0;
    aggregate["collision_free_rate"] = completed > 0 ? static_cast<double>(clean) / completed : 0.0;
    aggregate["mean_task_completion"] = completed > 0 ? tc_sum / completed : 0.0;
    json per_radius = json::array();
    for (const double rs : rs_grid) {
        double min_clear = std::numeric_limits<double>::infinity();
        int n = 0;
        for (const Row& row : rows) {
            if (row.aborted || row.r_s != rs) continue;
            min_clear = std::min(min_clear, row.metrics.min_clearance);
            ++n;
        }
        per_radius.push_back({{"r_s", rs},
                              {"episodes", n},
                              {"min_clearance", std::isfinite(min_clear) ? json(min_clear) : json()}});
    }
    aggregate["per_radius"] = per_radius;
    report["aggregate"] = aggregate;
    const std::string text = report.dump(2) + "\n";
    if (!out_report.empty()) {
        atomic_write_file(out_report, text);
    } else {
        std::cout << text;
    }
    return kExitOk;
}

int cmd_selftest(std::uint64_t seed) {
    int failures = 0;
    const auto report = [&](const char* name, bool ok, const std::string& detail) {
        std::printf("[%s] %s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
        if (!ok) ++failures;
    };

    // Camera round trips.
    {
        const CameraModel cams[] = {
            CameraModel::pinhole(128, 96, 64, 64, 63.5, 47.5),
            CameraModel::fisheye(128, 128, 40, 40, 63.5, 63.5),
            CameraModel::equirectangular_full_sphere(256, 96),
        };
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (const CameraModel& cam : cams) {
            std::uniform_int_distribution<int> du(0, cam.width - 1);
            std::uniform_int_distribution<int> dv(0, cam.height - 1);
            std::uniform_real_distribution<double> dd(0.1, 40.0);
            for (int i = 0; i < 1000; ++i) {
                const PixelIndex pixel{du(rng), dv(rng)};
                const auto px = project(cam, back_project(cam, pixel, dd(rng)));
                if (!px) {
                    worst = 1.0;
                    continue;
                }
                worst = std::max({worst, std::abs(px->u - pixel.u), std::abs(px->v - pixel.v)});
            }
        }
        char detail[64];
        std::snprintf(detail, sizeof(detail), "max reprojection error %.3g px", worst);
        report("camera-round-trip", worst < 1e-6, detail);
    }

    // Gradient vs central differences on a few random instances.
    {
        std::mt19937_64 rng(seed ^ 0x5eedf00dull);
        std::uniform_real_distribution<double> coord(-2.5, 2.5);
        std::uniform_real_distribution<double> zdist(0.0, 1.0);
        std::uniform_real_distribution<double> draw(-1.2, 1.2);
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            OptimizeInstance instance;
            instance.goal = Pose2D::make(coord(rng), coord(rng), 0.0);
            PointCloud cloud = PointCloud::invalid(30, 20, "robot");
            for (std::size_t i = 0; i < cloud.points.size(); ++i) {
                cloud.points[i] = Eigen::Vector3d(coord(rng), coord(rng), zdist(rng));
                cloud.validity[i] = 1;
            }
            instance.cloud = cloud;
            const TrajectoryObjective objective(instance);
            std::vector<double> raw(objective.parameter_count());
            for (double& r : raw) r = draw(rng);
            const GeoMask mask = objective.mask_at(raw);
            const auto analytic = objective.gradient(raw, mask);
            for (std::size_t i = 0; i < raw.size(); ++i) {
                const double h = 1e-5;
                std::vector<double> x = raw;
                x[i] = raw[i] + h;
                const double fp = objective.value_frozen(x, mask);
                x[i] = raw[i] - h;
                const double fm = objective.value_frozen(x, mask);
                const double fd = (fp - fm) / (2.0 * h);
                const double denom = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
                worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
            }
        }
        char detail[64];
        std::snprintf(detail, sizeof(detail), "max relative error %.3g", worst);
        report("gradient-check", worst < 1e-4, detail);
    }

    return failures == 0 ? kExitOk : kExitFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"geometric experience augmentation and navigation toolkit"};
    app.require_subcommand(1);

    std::uint64_t seed = kDefaultSeed;
    unsigned threads = 0;
    app.add_option("--seed", seed, "deterministic seed (default 7)");
    app.add_option("--threads", threads,
                   "worker threads for suite evaluation (0: EXAUG_THREADS or hardware)");

    auto* warp = app.add_subcommand("warp", "synthesize a target-camera view from image + depth");
    std::string src_image, src_depth, src_cam, dst_cam, pose = "identity", warp_out = "out.ppm";
    warp->add_option("--src-image", src_image, "source PPM")->required();
    warp->add_option("--src-depth", src_depth, "source EXDM depth")->required();
    warp->add_option("--src-cam", src_cam, "source camera JSON")->required();
    warp->add_option("--dst-cam", dst_cam, "target camera JSON")->required();
    warp->add_option("--pose", pose, "source-to-target transform JSON, or 'identity'");
    warp->add_option("--out", warp_out, "output PPM path");

    auto* opt = app.add_subcommand("optimize", "optimize a trajectory against a scene cloud");
    std::string opt_scene, opt_goal, opt_cam, opt_traj = "traj.csv", opt_report = "report.json";
    RobotParams opt_params;
    OptimizerFlags opt_flags;
    opt->add_option("--scene", opt_scene, "scene JSON")->required();
    opt->add_option("--goal", opt_goal, "goal pose x,y[,theta] in the start frame (default: scene goal)");
    opt->add_option("--cam", opt_cam, "perception camera JSON (default: built-in panoramic)");
    opt->add_option("--rs", opt_params.r_s, "conditioning radius r_s");
    opt->add_option("--rs-prime", opt_params.r_s_prime, "safety radius r_s'");
    opt->add_option("--v-max", opt_params.v_max, "linear velocity bound");
    opt->add_option("--omega-max", opt_params.omega_max, "angular velocity bound");
    opt->add_option("--out", opt_traj, "trajectory CSV path");
    opt->add_option("--report", opt_report, "objective report JSON path");
    opt_flags.attach(opt);

    auto* scene_cmd = app.add_subcommand("scene", "scene tools");
    scene_cmd->require_subcommand(1);
    auto* generate = scene_cmd->add_subcommand("generate", "generate a certified scene suite");
    int gen_count = 10;
    std::string gen_out = "suite";
    SuiteParams gen_params;
    generate->add_option("--count", gen_count, "number of scenes");
    generate->add_option("--out", gen_out, "output directory");
    generate->add_option("--obstacles", gen_params.obstacle_count, "obstacles per scene");
    generate->add_option("--clearance", gen_params.clearance, "certified corridor clearance (m)");
    generate->add_option("--length", gen_params.corridor_length, "corridor length (m)");
    generate->add_option("--halfwidth", gen_params.corridor_halfwidth, "corridor half width (m)");

    auto* render = scene_cmd->add_subcommand("render", "raycast a scene to PPM + EXDM");
    std::string render_scene, render_cam, render_pose, render_color = "out.ppm",
                                                       render_depth = "out.exdm";
    double render_range = 40.0;
    render->add_option("--scene", render_scene, "scene JSON")->required();
    render->add_option("--cam", render_cam, "camera JSON (default: built-in panoramic)");
    render->add_option("--pose", render_pose, "robot pose x,y,theta (default: scene start)");
    render->add_option("--max-range", render_range, "maximum ray range (m)");
    render->add_option("--out-color", render_color, "output PPM path");
    render->add_option("--out-depth", render_depth, "output EXDM path");

    auto* nav = app.add_subcommand("nav", "run a closed-loop navigation episode");
    std::string nav_scene, nav_graph, nav_cam, nav_metrics = "metrics.json", nav_trace;
    RobotParams nav_params;
    nav_params.r_s = 0.3;
    nav_params.r_s_prime = 0.2;
    OptimizerFlags nav_flags;
    nav_flags.max_iters = 150;
    nav_flags.restarts = 3;
    nav_flags.patience = 40;
    int nav_max_steps = 500;
    double nav_dl = 0.4, nav_theta_l = 0.5, nav_r_phys = 0.15;
    int nav_lookahead = 5;
    nav->add_option("--scene", nav_scene, "scene JSON")->required();
    nav->add_option("--graph", nav_graph, "topological graph JSON (default: scene subgoals)");
    nav->add_option("--cam", nav_cam, "perception camera JSON");
    nav->add_option("--rs", nav_params.r_s, "conditioning radius r_s");
    nav->add_option("--rs-prime", nav_params.r_s_prime, "safety radius r_s'");
    nav->add_option("--v-max", nav_params.v_max, "linear velocity bound");
    nav->add_option("--omega-max", nav_params.omega_max, "angular velocity bound");
    nav->add_option("--max-steps", nav_max_steps, "step budget");
    nav->add_option("--dl", nav_dl, "localization distance threshold d_l");
    nav->add_option("--theta-l", nav_theta_l, "localization heading threshold theta_l");
    nav->add_option("--lookahead", nav_lookahead, "localization lookahead N_t");
    nav->add_option("--r-phys", nav_r_phys, "true body radius for collision ground truth");
    nav->add_option("--out", nav_metrics, "metrics JSON path");
    nav->add_option("--trace", nav_trace, "trace CSV path");
    nav_flags.attach(nav);

    auto* eval = app.add_subcommand("eval-suite", "run nav episodes over a scene suite");
    std::string eval_dir, eval_report = "suite_report.json";
    std::vector<double> eval_rs = {0.3};
    std::vector<double> eval_omega = {1.0};
    RobotParams eval_params;
    eval_params.r_s = 0.3;
    eval_params.r_s_prime = 0.2;
    OptimizerFlags eval_flags;
    eval_flags.max_iters = 150;
    eval_flags.restarts = 3;
    eval_flags.patience = 40;
    int eval_max_steps = 500;
    eval->add_option("--suite", eval_dir, "suite directory with scene_*.json")->required();
    eval->add_option("--rs", eval_rs, "conditioning radius grid")->delimiter(',');
    eval->add_option("--omega-max", eval_omega, "angular velocity bound grid")->delimiter(',');
    eval->add_option("--rs-prime", eval_params.r_s_prime, "safety radius r_s'");
    eval->add_option("--max-steps", eval_max_steps, "step budget per episode");
    eval->add_option("--out", eval_report, "report JSON path");
    eval_flags.attach(eval);

    auto* selftest = app.add_subcommand("selftest", "run the built-in consistency checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*warp) return cmd_warp(src_image, src_depth, src_cam, dst_cam, pose, warp_out);
        if (*opt) {
            return cmd_optimize(opt_scene, opt_goal, opt_cam, opt_params, opt_flags, seed, opt_traj,
                                opt_report);
        }
        if (*generate) return cmd_scene_generate(seed, gen_count, gen_out, gen_params);
        if (*render) {
            return cmd_scene_render(render_scene, render_cam, render_pose, render_range,
                                    render_color, render_depth);
        }
        if (*nav) {
            const CameraModel camera =
                nav_cam.empty() ? default_perception_camera() : load_camera(nav_cam);
            const NavConfig config = nav_config_from_flags(
                camera, nav_flags, seed, nav_max_steps, nav_dl, nav_theta_l, nav_lookahead,
                nav_r_phys);
            return cmd_nav(nav_scene, nav_graph, nav_params, config, nav_metrics, nav_trace);
        }
        if (*eval) {
            const NavConfig config = nav_config_from_flags(default_perception_camera(), eval_flags,
                                                           seed, eval_max_steps, 0.4, 0.5, 5, 0.15);
            return cmd_eval_suite(eval_dir, eval_rs, eval_omega, eval_params, config, threads, seed,
                                  eval_report);
        }
        if (*selftest) return cmd_selftest(seed);
    } catch (const OptimizationFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
