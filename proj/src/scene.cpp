#include "exaug/scene.hpp"

#include "exaug/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <random>

namespace exaug {

using json = nlohmann::json;

namespace {

constexpr double kRayEps = 1e-9;
const Eigen::Vector3d kLightDir = Eigen::Vector3d(0.3, 0.25, 0.9).normalized();
constexpr std::array<std::uint8_t, 3> kBackground = {180, 200, 230};

std::optional<RayHit> intersect_ground(const GroundPrimitive& ground, const Eigen::Vector3d& o,
                                       const Eigen::Vector3d& d) {
    if (std::abs(d.z()) < 1e-12) return std::nullopt;
    const double t = -o.z() / d.z();
    if (t <= kRayEps) return std::nullopt;
    RayHit hit;
    hit.t = t;
    hit.point = o + t * d;
    hit.normal = Eigen::Vector3d::UnitZ();
    hit.albedo = ground.albedo;
    return hit;
}

std::optional<RayHit> intersect_box(const BoxPrimitive& box, const Eigen::Vector3d& o,
                                    const Eigen::Vector3d& d) {
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    int near_axis = -1;
    double near_sign = 0.0;
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-12) {
            if (o[a] < box.min[a] || o[a] > box.max[a]) return std::nullopt;
            continue;
        }
        double t0 = (box.min[a] - o[a]) / d[a];
        double t1 = (box.max[a] - o[a]) / d[a];
        double sign = -1.0;
        if (t0 > t1) {
            std::swap(t0, t1);
            sign = 1.0;
        }
        if (t0 > t_near) {
            t_near = t0;
            near_axis = a;
            near_sign = sign;
        }
        t_far = std::min(t_far, t1);
        if (t_near > t_far) return std::nullopt;
    }
    if (near_axis < 0 || t_near <= kRayEps) return std::nullopt;
    RayHit hit;
    hit.t = t_near;
    hit.point = o + t_near * d;
    hit.normal = Eigen::Vector3d::Zero();
    hit.normal[near_axis] = near_sign;
    hit.albedo = box.albedo;
    return hit;
}

std::optional<RayHit> intersect_cylinder(const CylinderPrimitive& cyl, const Eigen::Vector3d& o,
                                         const Eigen::Vector3d& d) {
    std::optional<RayHit> best;
    const double ox = o.x() - cyl.cx;
    const double oy = o.y() - cyl.cy;
    const double a = d.x() * d.x() + d.y() * d.y();
    if (a > 1e-12) {
        const double b = 2.0 * (ox * d.x() + oy * d.y());
        const double c = ox * ox + oy * oy - cyl.radius * cyl.radius;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (const double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                if (t <= kRayEps) continue;
                const Eigen::Vector3d p = o + t * d;
                if (p.z() < cyl.z_min || p.z() > cyl.z_max) continue;
                if (!best || t < best->t) {
                    RayHit hit;
                    hit.t = t;
                    hit.point = p;
                    hit.normal = Eigen::Vector3d(p.x() - cyl.cx, p.y() - cyl.cy, 0.0).normalized();
                    hit.albedo = cyl.albedo;
                    best = hit;
                }
            }
        }
    }
    // End caps.
    if (std::abs(d.z()) > 1e-12) {
        for (const double zc : {cyl.z_min, cyl.z_max}) {
            const double t = (zc - o.z()) / d.z();
            if (t <= kRayEps) continue;
            const Eigen::Vector3d p = o + t * d;
            const double r2 = (p.x() - cyl.cx) * (p.x() - cyl.cx) + (p.y() - cyl.cy) * (p.y() - cyl.cy);
            if (r2 > cyl.radius * cyl.radius) continue;
            if (!best || t < best->t) {
                RayHit hit;
                hit.t = t;
                hit.point = p;
                hit.normal = Eigen::Vector3d(0.0, 0.0, zc == cyl.z_min ? -1.0 : 1.0);
                hit.albedo = cyl.albedo;
                best = hit;
            }
        }
    }
    return best;
}

} // namespace

std::optional<RayHit> intersect_scene(const SceneDescription& scene, const Eigen::Vector3d& origin,
                                      const Eigen::Vector3d& dir, double max_range) {
    std::optional<RayHit> best;
    for (const auto& prim : scene.primitives) {
        const auto hit = std::visit(
            [&](const auto& p) -> std::optional<RayHit> {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, GroundPrimitive>) return intersect_ground(p, origin, dir);
                else if constexpr (std::is_same_v<T, BoxPrimitive>) return intersect_box(p, origin, dir);
                else return intersect_cylinder(p, origin, dir);
            },
            prim);
        if (!hit || hit->t > max_range) continue;
        if (!best || hit->t < best->t) best = hit;
    }
    return best;
}

std::array<std::uint8_t, 3> shade(const Eigen::Vector3d& albedo, const Eigen::Vector3d& normal) {
    const double lambert = std::max(0.0, normal.dot(kLightDir));
    std::array<std::uint8_t, 3> out;
    for (int c = 0; c < 3; ++c) {
        const double value = albedo[c] * (0.35 + 0.65 * lambert) * 255.0;
        out[c] = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
    }
    return out;
}

RenderOutput raycast(const SceneDescription& scene, const CameraModel& camera,
                     const Transform3D& camera_pose, double max_range) {
    if (!(max_range > 0.0)) throw InvalidInput("raycast: max_range must be positive");
    RenderOutput out;
    out.color = ColorImage::filled(camera.width, camera.height, kBackground);
    out.depth = DepthMap::invalid(camera.width, camera.height);
    const Eigen::Vector3d origin = camera_pose.translation;
    for (int v = 0; v < camera.height; ++v) {
        for (int u = 0; u < camera.width; ++u) {
            const Eigen::Vector3d ray_cam = pixel_ray(camera, PixelIndex{u, v});
            const Eigen::Vector3d dir = camera_pose.rotation * ray_cam;
            const auto hit = intersect_scene(scene, origin, dir, max_range);
            if (!hit) continue;
            const double depth = camera.depth_is_range() ? hit->t : hit->t * ray_cam.z();
            if (!(depth > 0.0)) continue;
            out.depth.set(u, v, static_cast<float>(depth));
            out.color.set(u, v, shade(hit->albedo, hit->normal));
        }
    }
    return out;
}

PointCloud scene_cloud(const SceneDescription& scene, const Pose2D& robot_pose,
                       const CameraModel& camera, double max_range) {
    const Transform3D cam_in_robot = inverse(camera.mount);
    const Transform3D cam_pose = compose(pose_to_transform(robot_pose), cam_in_robot);
    const RenderOutput render = raycast(scene, camera, cam_pose, max_range);
    const PointCloud cam_cloud = depth_to_cloud(camera, render.depth, "camera");
    return transform_cloud(cam_cloud, cam_in_robot, "robot");
}

namespace {

double footprint_distance(const Primitive& prim, double x, double y, double z_low, double z_high) {
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GroundPrimitive>) {
                return std::numeric_limits<double>::infinity();
            } else if constexpr (std::is_same_v<T, BoxPrimitive>) {
                if (p.max.z() < z_low || p.min.z() > z_high) {
                    return std::numeric_limits<double>::infinity();
                }
                const double dx = std::max({p.min.x() - x, 0.0, x - p.max.x()});
                const double dy = std::max({p.min.y() - y, 0.0, y - p.max.y()});
                const bool inside = dx == 0.0 && dy == 0.0;
                if (inside) {
                    const double depth = std::min(std::min(x - p.min.x(), p.max.x() - x),
                                                  std::min(y - p.min.y(), p.max.y() - y));
                    return -depth;
                }
                return std::hypot(dx, dy);
            } else {
                if (p.z_max < z_low || p.z_min > z_high) {
                    return std::numeric_limits<double>::infinity();
                }
                return std::hypot(x - p.cx, y - p.cy) - p.radius;
            }
        },
        prim);
}

} // namespace

double obstacle_clearance(const SceneDescription& scene, double x, double y, double z_low,
                          double z_high) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& prim : scene.primitives) {
        best = std::min(best, footprint_distance(prim, x, y, z_low, z_high));
    }
    return best;
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

const Eigen::Vector3d kPalette[] = {
    {0.85, 0.35, 0.30}, {0.30, 0.45, 0.80}, {0.90, 0.75, 0.25},
    {0.40, 0.70, 0.40}, {0.70, 0.45, 0.75}, {0.80, 0.55, 0.35},
};

struct Grid {
    double x0, y0, cell;
    int nx, ny;
    std::vector<std::uint8_t> free;
    int idx(int ix, int iy) const { return iy * nx + ix; }
};

// Breadth-first search for a free path; returns cell-center waypoints.
std::optional<std::vector<Eigen::Vector2d>> grid_path(const Grid& g, int sx, int sy, int gx, int gy) {
    if (!g.free[g.idx(sx, sy)] || !g.free[g.idx(gx, gy)]) return std::nullopt;
    std::vector<int> parent(g.free.size(), -1);
    std::deque<std::pair<int, int>> queue;
    queue.emplace_back(sx, sy);
    parent[g.idx(sx, sy)] = g.idx(sx, sy);
    const int dxs[] = {1, -1, 0, 0, 1, 1, -1, -1};
    const int dys[] = {0, 0, 1, -1, 1, -1, 1, -1};
    while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        if (cx == gx && cy == gy) break;
        for (int k = 0; k < 8; ++k) {
            const int nx = cx + dxs[k];
            const int ny = cy + dys[k];
            if (nx < 0 || ny < 0 || nx >= g.nx || ny >= g.ny) continue;
            if (!g.free[g.idx(nx, ny)] || parent[g.idx(nx, ny)] >= 0) continue;
            // Diagonal moves also need both adjacent cardinal cells free.
            if (k >= 4 && (!g.free[g.idx(cx + dxs[k], cy)] || !g.free[g.idx(cx, cy + dys[k])])) continue;
            parent[g.idx(nx, ny)] = g.idx(cx, cy);
            queue.emplace_back(nx, ny);
        }
    }
    if (parent[g.idx(gx, gy)] < 0) return std::nullopt;
    std::vector<Eigen::Vector2d> path;
    int cur = g.idx(gx, gy);
    while (true) {
        const int ix = cur % g.nx;
        const int iy = cur / g.nx;
        path.emplace_back(g.x0 + (ix + 0.5) * g.cell, g.y0 + (iy + 0.5) * g.cell);
        if (parent[cur] == cur) break;
        cur = parent[cur];
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<Pose2D> poses_from_path(const std::vector<Eigen::Vector2d>& path, const Pose2D& start,
                                    const Pose2D& goal, double spacing) {
    std::vector<Eigen::Vector2d> pts;
    pts.emplace_back(start.x, start.y);
    double acc = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        acc += (path[i] - path[i - 1]).norm();
        if (acc >= spacing) {
            pts.push_back(path[i]);
            acc = 0.0;
        }
    }
    pts.emplace_back(goal.x, goal.y);
    std::vector<Pose2D> poses;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double theta;
        if (i + 1 < pts.size()) {
            // Heading over a two-sample baseline where possible, so grid
            // kinks do not produce abrupt subgoal headings.
            const Eigen::Vector2d d = pts[std::min(i + 2, pts.size() - 1)] - pts[i];
            theta = d.norm() > 1e-9 ? std::atan2(d.y(), d.x()) : (poses.empty() ? start.theta : poses.back().theta);
        } else {
            theta = poses.empty() ? goal.theta : poses.back().theta;
        }
        poses.push_back(Pose2D::make(pts[i].x(), pts[i].y(), theta));
    }
    return poses;
}

} // namespace

std::vector<SceneDescription> generate_suite(std::uint64_t seed, int count, const SuiteParams& params) {
    if (count <= 0) throw InvalidInput("generate_suite: count must be positive");
    if (params.obstacle_count < 0 || params.clearance <= 0.0) {
        throw InvalidInput("generate_suite: bad difficulty parameters");
    }
    std::vector<SceneDescription> scenes;
    scenes.reserve(static_cast<std::size_t>(count));
    for (int index = 0; index < count; ++index) {
        std::mt19937_64 rng(mix64(seed ^ mix64(static_cast<std::uint64_t>(index) + 1)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        const double length = params.corridor_length;
        const double hw = params.corridor_halfwidth;
        bool built = false;
        for (int attempt = 0; attempt < params.max_attempts && !built; ++attempt) {
            SceneDescription scene;
            scene.primitives.emplace_back(GroundPrimitive{});
            scene.start = Pose2D::make(0.0, 0.0, 0.0);
            scene.goal = Pose2D::make(length, 0.0, 0.0);

            for (int k = 0; k < params.obstacle_count; ++k) {
                const double x = 1.2 + unit(rng) * (length - 2.4);
                const double y = -hw + 0.5 + unit(rng) * (2.0 * hw - 1.0);
                const double r = params.min_obstacle_radius +
                                 unit(rng) * (params.max_obstacle_radius - params.min_obstacle_radius);
                if (std::hypot(x - scene.start.x, y - scene.start.y) < 1.0 + r) continue;
                if (std::hypot(x - scene.goal.x, y - scene.goal.y) < 0.8 + r) continue;
                const Eigen::Vector3d albedo = kPalette[rng() % std::size(kPalette)];
                const double height = 0.8 + 0.4 * unit(rng);
                if (rng() % 2 == 0) {
                    CylinderPrimitive cyl;
                    cyl.cx = x;
                    cyl.cy = y;
                    cyl.radius = r;
                    cyl.z_min = 0.0;
                    cyl.z_max = height;
                    cyl.albedo = albedo;
                    scene.primitives.emplace_back(cyl);
                } else {
                    BoxPrimitive box;
                    box.min = Eigen::Vector3d(x - r, y - r, 0.0);
                    box.max = Eigen::Vector3d(x + r, y + r, height);
                    box.albedo = albedo;
                    scene.primitives.emplace_back(box);
                }
            }

            Grid grid;
            grid.cell = 0.1;
            grid.x0 = -0.5;
            grid.y0 = -hw;
            grid.nx = static_cast<int>(std::lround((length + 1.0) / grid.cell));
            grid.ny = static_cast<int>(std::lround(2.0 * hw / grid.cell));
            grid.free.assign(static_cast<std::size_t>(grid.nx) * grid.ny, 0);
            for (int iy = 0; iy < grid.ny; ++iy) {
                for (int ix = 0; ix < grid.nx; ++ix) {
                    const double x = grid.x0 + (ix + 0.5) * grid.cell;
                    const double y = grid.y0 + (iy + 0.5) * grid.cell;
                    grid.free[grid.idx(ix, iy)] =
                        obstacle_clearance(scene, x, y) >= params.clearance ? 1 : 0;
                }
            }
            const int sx = static_cast<int>((scene.start.x - grid.x0) / grid.cell);
            const int sy = static_cast<int>((scene.start.y - grid.y0) / grid.cell);
            const int gx = static_cast<int>((scene.goal.x - grid.x0) / grid.cell);
            const int gy = static_cast<int>((scene.goal.y - grid.y0) / grid.cell);
            const auto path = grid_path(grid, sx, sy, gx, gy);
            if (!path) continue;
            scene.subgoals = poses_from_path(*path, scene.start, scene.goal, params.subgoal_spacing);
            scenes.push_back(std::move(scene));
            built = true;
        }
        if (!built) {
            throw GenerationError("generate_suite: no feasible corridor after " +
                                  std::to_string(params.max_attempts) + " attempts (scene " +
                                  std::to_string(index) + ")");
        }
    }
    return scenes;
}

namespace {

json pose_to_json_obj(const Pose2D& p) { return json{{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

Pose2D pose_from_json_obj(const json& j) {
    return Pose2D::make(j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>());
}

std::vector<double> vec3_to_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d vec3_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 3) throw IoError("scene json: expected 3-vector");
    return Eigen::Vector3d(v[0], v[1], v[2]);
}

} // namespace

std::string scene_to_json(const SceneDescription& scene) {
    json j;
    j["primitives"] = json::array();
    for (const auto& prim : scene.primitives) {
        json p;
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, GroundPrimitive>) {
                    p["type"] = "ground";
                } else if constexpr (std::is_same_v<T, BoxPrimitive>) {
                    p["type"] = "box";
                    p["min"] = vec3_to_json(v.min);
                    p["max"] = vec3_to_json(v.max);
                } else {
                    p["type"] = "cylinder";
                    p["center"] = std::vector<double>{v.cx, v.cy};
                    p["radius"] = v.radius;
                    p["z_min"] = v.z_min;
                    p["z_max"] = v.z_max;
                }
                p["albedo"] = vec3_to_json(v.albedo);
            },
            prim);
        j["primitives"].push_back(p);
    }
    j["start"] = pose_to_json_obj(scene.start);
    j["goal"] = pose_to_json_obj(scene.goal);
    j["subgoals"] = json::array();
    for (const auto& p : scene.subgoals) j["subgoals"].push_back(pose_to_json_obj(p));
    return j.dump(2);
}

SceneDescription scene_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        SceneDescription scene;
        for (const auto& p : j.at("primitives")) {
            const std::string type = p.at("type").get<std::string>();
            const Eigen::Vector3d albedo = vec3_from_json(p.at("albedo"));
            if (type == "ground") {
                scene.primitives.emplace_back(GroundPrimitive{albedo});
            } else if (type == "box") {
                BoxPrimitive box;
                box.min = vec3_from_json(p.at("min"));
                box.max = vec3_from_json(p.at("max"));
                box.albedo = albedo;
                if ((box.max - box.min).minCoeff() <= 0.0) throw IoError("scene json: box has non-positive extent");
                scene.primitives.emplace_back(box);
            } else if (type == "cylinder") {
                CylinderPrimitive cyl;
                const auto c = p.at("center").get<std::vector<double>>();
                if (c.size() != 2) throw IoError("scene json: cylinder center must be [x, y]");
                cyl.cx = c[0];
                cyl.cy = c[1];
                cyl.radius = p.at("radius").get<double>();
                cyl.z_min = p.at("z_min").get<double>();
                cyl.z_max = p.at("z_max").get<double>();
                cyl.albedo = albedo;
                if (cyl.radius <= 0.0 || cyl.z_max <= cyl.z_min) throw IoError("scene json: bad cylinder");
                scene.primitives.emplace_back(cyl);
            } else {
                throw IoError("scene json: unknown primitive type " + type);
            }
        }
        scene.start = pose_from_json_obj(j.at("start"));
        scene.goal = pose_from_json_obj(j.at("goal"));
        if (j.contains("subgoals")) {
            for (const auto& p : j.at("subgoals")) scene.subgoals.push_back(pose_from_json_obj(p));
        }
        return scene;
    } catch (const json::exception& e) {
        throw IoError(std::string("scene json: ") + e.what());
    }
}

SceneDescription load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scene file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return scene_from_json(text);
}

void save_scene(const SceneDescription& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scene file: " + path);
    out << scene_to_json(scene) << "\n";
}

} // namespace exaug
