#include "exaug/geometry.hpp"
#include <algorithm>

#include "exaug/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace exaug {

using json = nlohmann::json;

double normalize_angle(double theta) {
    double a = std::fmod(theta, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    if (a > M_PI) a -= 2.0 * M_PI;
    return a;
}

bool Transform3D::is_valid(double tol) const {
    const Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    if (err.cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(rotation.determinant() - 1.0) > tol) return false;
    return translation.allFinite();
}

Eigen::Vector3d apply(const Transform3D& t, const Eigen::Vector3d& p) {
    return t.rotation * p + t.translation;
}

Transform3D compose(const Transform3D& a, const Transform3D& b) {
    Transform3D out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    return out;
}

Transform3D inverse(const Transform3D& t) {
    Transform3D out;
    out.rotation = t.rotation.transpose();
    out.translation = -(out.rotation * t.translation);
    return out;
}

Transform3D pose_to_transform(const Pose2D& pose) {
    Transform3D out;
    out.rotation = Eigen::AngleAxisd(pose.theta, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    out.translation = Eigen::Vector3d(pose.x, pose.y, 0.0);
    return out;
}

Pose2D relative_pose(const Pose2D& reference, const Pose2D& target) {
    const double c = std::cos(reference.theta);
    const double s = std::sin(reference.theta);
    const double dx = target.x - reference.x;
    const double dy = target.y - reference.y;
    return Pose2D{c * dx + s * dy, -s * dx + c * dy, normalize_angle(target.theta - reference.theta)};
}

std::string to_string(CameraKind kind) {
    switch (kind) {
    case CameraKind::Pinhole: return "pinhole";
    case CameraKind::FisheyeEquidistant: return "fisheye-equidistant";
    case CameraKind::Equirectangular: return "equirectangular";
    }
    return "unknown";
}

CameraKind camera_kind_from_string(const std::string& name) {
    if (name == "pinhole") return CameraKind::Pinhole;
    if (name == "fisheye-equidistant") return CameraKind::FisheyeEquidistant;
    if (name == "equirectangular") return CameraKind::Equirectangular;
    throw InvalidInput("unknown camera kind: " + name);
}

namespace {

void check_raster(int width, int height) {
    if (width < 2 || height < 2) {
        throw InvalidInput("camera raster must be at least 2x2");
    }
}

} // namespace

CameraModel CameraModel::pinhole(int width, int height, double fx, double fy, double cx, double cy) {
    check_raster(width, height);
    if (fx <= 0.0 || fy <= 0.0) throw InvalidInput("focal lengths must be positive");
    return CameraModel{CameraKind::Pinhole, width, height, fx, fy, cx, cy, Transform3D::identity()};
}

CameraModel CameraModel::fisheye(int width, int height, double fx, double fy, double cx, double cy) {
    check_raster(width, height);
    if (fx <= 0.0 || fy <= 0.0) throw InvalidInput("focal lengths must be positive");
    return CameraModel{CameraKind::FisheyeEquidistant, width, height, fx, fy, cx, cy,
                       Transform3D::identity()};
}

CameraModel CameraModel::equirectangular(int width, int height, double az_min, double az_max,
                                         double el_min, double el_max) {
    check_raster(width, height);
    if (!(az_min < az_max) || !(el_min < el_max)) {
        throw InvalidInput("equirectangular fov bounds must be ordered");
    }
    CameraModel cam;
    cam.kind = CameraKind::Equirectangular;
    cam.width = width;
    cam.height = height;
    cam.fx = (width - 1.0) / (az_max - az_min);
    cam.cx = -az_min * cam.fx;
    cam.fy = (height - 1.0) / (el_max - el_min);
    cam.cy = el_max * cam.fy;
    return cam;
}

CameraModel CameraModel::equirectangular_full_sphere(int width, int height) {
    // The last column stops one azimuth step short of +pi so the seam ray is
    // represented once (projection wraps +pi onto column 0).
    return equirectangular(width, height, -M_PI, M_PI - 2.0 * M_PI / width, -M_PI / 2.0, M_PI / 2.0);
}

CameraModel CameraModel::scaled_to(int new_width, int new_height) const {
    check_raster(new_width, new_height);
    const double su = (new_width - 1.0) / (width - 1.0);
    const double sv = (new_height - 1.0) / (height - 1.0);
    CameraModel out = *this;
    out.width = new_width;
    out.height = new_height;
    out.fx = fx * su;
    out.cx = cx * su;
    out.fy = fy * sv;
    out.cy = cy * sv;
    return out;
}

namespace {

// Tolerance at the raster border so integer edge pixels survive the
// round trip despite last-ulp noise.
constexpr double kBorderTol = 1e-9;

bool inside_raster(const CameraModel& cam, double u, double v) {
    return u >= -kBorderTol && u <= cam.width - 1.0 + kBorderTol && v >= -kBorderTol &&
           v <= cam.height - 1.0 + kBorderTol;
}

} // namespace

std::optional<Pixel> project(const CameraModel& camera, const Eigen::Vector3d& point) {
    if (!point.allFinite()) throw InvalidInput("project: non-finite point");

    double u = 0.0;
    double v = 0.0;
    switch (camera.kind) {
    case CameraKind::Pinhole: {
        if (point.z() <= 0.0) return std::nullopt;
        u = camera.fx * point.x() / point.z() + camera.cx;
        v = camera.fy * point.y() / point.z() + camera.cy;
        break;
    }
    case CameraKind::FisheyeEquidistant: {
        const double rho = std::hypot(point.x(), point.y());
        if (rho == 0.0) {
            if (point.z() < 0.0) return std::nullopt; // backward axis: direction undefined
            u = camera.cx;
            v = camera.cy;
            break;
        }
        const double theta = std::atan2(rho, point.z());
        u = camera.cx + camera.fx * theta * (point.x() / rho);
        v = camera.cy + camera.fy * theta * (point.y() / rho);
        break;
    }
    case CameraKind::Equirectangular: {
        double az = std::atan2(point.x(), point.z());
        const double el = std::atan2(-point.y(), std::hypot(point.x(), point.z()));
        u = camera.cx + camera.fx * az;
        // atan2 cuts at +-pi; wrap by a full turn when the camera's azimuth
        // window lives across the cut.
        if (u < -kBorderTol) {
            u = camera.cx + camera.fx * (az + 2.0 * M_PI);
        } else if (u > camera.width - 1.0 + kBorderTol) {
            u = camera.cx + camera.fx * (az - 2.0 * M_PI);
        }
        v = camera.cy - camera.fy * el;
        break;
    }
    }
    if (!inside_raster(camera, u, v)) return std::nullopt;
    return Pixel{std::clamp(u, 0.0, camera.width - 1.0), std::clamp(v, 0.0, camera.height - 1.0)};
}

Eigen::Vector3d back_project(const CameraModel& camera, const PixelIndex& pixel, double depth) {
    if (pixel.u < 0 || pixel.u >= camera.width || pixel.v < 0 || pixel.v >= camera.height) {
        throw InvalidInput("back_project: pixel outside raster");
    }
    if (!(depth > 0.0) || !std::isfinite(depth)) {
        throw InvalidInput("back_project: depth must be positive and finite");
    }
    if (camera.kind == CameraKind::Pinhole) {
        const double x = (pixel.u - camera.cx) / camera.fx * depth;
        const double y = (pixel.v - camera.cy) / camera.fy * depth;
        return Eigen::Vector3d(x, y, depth);
    }
    return pixel_ray(camera, pixel) * depth;
}

Eigen::Vector3d pixel_ray(const CameraModel& camera, const PixelIndex& pixel) {
    switch (camera.kind) {
    case CameraKind::Pinhole: {
        const double x = (pixel.u - camera.cx) / camera.fx;
        const double y = (pixel.v - camera.cy) / camera.fy;
        return Eigen::Vector3d(x, y, 1.0).normalized();
    }
    case CameraKind::FisheyeEquidistant: {
        const double du = (pixel.u - camera.cx) / camera.fx;
        const double dv = (pixel.v - camera.cy) / camera.fy;
        const double theta = std::hypot(du, dv);
        if (theta == 0.0) return Eigen::Vector3d(0.0, 0.0, 1.0);
        const double phi = std::atan2(dv, du);
        const double st = std::sin(theta);
        return Eigen::Vector3d(st * std::cos(phi), st * std::sin(phi), std::cos(theta));
    }
    case CameraKind::Equirectangular: {
        const double az = (pixel.u - camera.cx) / camera.fx;
        const double el = (camera.cy - pixel.v) / camera.fy;
        const double ce = std::cos(el);
        return Eigen::Vector3d(std::sin(az) * ce, -std::sin(el), std::cos(az) * ce);
    }
    }
    return Eigen::Vector3d::UnitZ();
}

Transform3D forward_mount(const Eigen::Vector3d& position) {
    // Camera axes in robot coordinates: x -> -y, y -> -z, z -> +x.
    Eigen::Matrix3d robot_from_cam;
    robot_from_cam << 0, 0, 1,
                      -1, 0, 0,
                      0, -1, 0;
    Transform3D cam_in_robot;
    cam_in_robot.rotation = robot_from_cam;
    cam_in_robot.translation = position;
    return inverse(cam_in_robot);
}

namespace {

json transform_to_json_obj(const Transform3D& t) {
    json j;
    std::vector<double> rot(9);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot[3 * r + c] = t.rotation(r, c);
    j["rotation"] = rot;
    j["translation"] = std::vector<double>{t.translation.x(), t.translation.y(), t.translation.z()};
    return j;
}

Transform3D transform_from_json_obj(const json& j) {
    Transform3D t;
    const auto rot = j.at("rotation").get<std::vector<double>>();
    const auto trans = j.at("translation").get<std::vector<double>>();
    if (rot.size() != 9 || trans.size() != 3) {
        throw IoError("transform: expected 9 rotation and 3 translation entries");
    }
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot[3 * r + c];
    t.translation = Eigen::Vector3d(trans[0], trans[1], trans[2]);
    if (!t.is_valid(1e-6)) throw IoError("transform: rotation is not orthonormal");
    return t;
}

} // namespace

std::string camera_to_json(const CameraModel& camera) {
    json j;
    j["kind"] = to_string(camera.kind);
    j["width"] = camera.width;
    j["height"] = camera.height;
    j["fx"] = camera.fx;
    j["fy"] = camera.fy;
    j["cx"] = camera.cx;
    j["cy"] = camera.cy;
    j["mount"] = transform_to_json_obj(camera.mount);
    return j.dump(2);
}

CameraModel camera_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("camera json: ") + e.what());
    }
    try {
        CameraModel cam;
        cam.kind = camera_kind_from_string(j.at("kind").get<std::string>());
        cam.width = j.at("width").get<int>();
        cam.height = j.at("height").get<int>();
        cam.fx = j.at("fx").get<double>();
        cam.fy = j.at("fy").get<double>();
        cam.cx = j.at("cx").get<double>();
        cam.cy = j.at("cy").get<double>();
        if (j.contains("mount")) cam.mount = transform_from_json_obj(j.at("mount"));
        if (cam.width < 2 || cam.height < 2 || cam.fx <= 0.0 || cam.fy <= 0.0) {
            throw IoError("camera json: invalid raster or focal length");
        }
        return cam;
    } catch (const json::exception& e) {
        throw IoError(std::string("camera json: ") + e.what());
    }
}

CameraModel load_camera(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open camera file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return camera_from_json(text);
}

void save_camera(const CameraModel& camera, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write camera file: " + path);
    out << camera_to_json(camera) << "\n";
}

std::string transform_to_json(const Transform3D& t) { return transform_to_json_obj(t).dump(2); }

Transform3D transform_from_json(const std::string& text) {
    try {
        return transform_from_json_obj(json::parse(text));
    } catch (const json::exception& e) {
        throw IoError(std::string("transform json: ") + e.what());
    }
}

} // namespace exaug
