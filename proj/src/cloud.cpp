#include "exaug/cloud.hpp"

#include "exaug/errors.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace exaug {

DepthMap DepthMap::invalid(int width, int height) {
    DepthMap d;
    d.width = width;
    d.height = height;
    d.values.assign(static_cast<std::size_t>(width) * height, 0.0f);
    d.validity.assign(static_cast<std::size_t>(width) * height, 0);
    return d;
}

DepthMap DepthMap::constant(int width, int height, float depth) {
    DepthMap d = invalid(width, height);
    if (!(depth > 0.0f) || !std::isfinite(depth)) {
        throw InvalidInput("DepthMap::constant: depth must be positive and finite");
    }
    d.values.assign(d.values.size(), depth);
    d.validity.assign(d.validity.size(), 1);
    return d;
}

void DepthMap::set(int u, int v, float depth) {
    if (!(depth > 0.0f) || !std::isfinite(depth)) {
        throw InvalidInput("DepthMap::set: depth must be positive and finite");
    }
    values[index(u, v)] = depth;
    validity[index(u, v)] = 1;
}

void DepthMap::set_invalid(int u, int v) {
    values[index(u, v)] = 0.0f;
    validity[index(u, v)] = 0;
}

PointCloud PointCloud::invalid(int width, int height, std::string frame) {
    PointCloud c;
    c.width = width;
    c.height = height;
    c.frame = std::move(frame);
    c.points.assign(static_cast<std::size_t>(width) * height, Eigen::Vector3d::Zero());
    c.validity.assign(static_cast<std::size_t>(width) * height, 0);
    return c;
}

PointCloud depth_to_cloud(const CameraModel& camera, const DepthMap& depth,
                          const std::string& frame) {
    if (depth.width != camera.width || depth.height != camera.height) {
        throw ShapeError("depth_to_cloud: depth raster does not match camera raster");
    }
    PointCloud cloud = PointCloud::invalid(depth.width, depth.height, frame);
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            if (!depth.valid_at(u, v)) continue;
            const std::size_t i = cloud.index(u, v);
            cloud.points[i] = back_project(camera, PixelIndex{u, v}, depth.at(u, v));
            cloud.validity[i] = 1;
        }
    }
    return cloud;
}

PointCloud transform_cloud(const PointCloud& cloud, const Transform3D& t,
                           const std::string& new_frame) {
    PointCloud out = cloud;
    if (!new_frame.empty()) out.frame = new_frame;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        if (out.validity[i]) out.points[i] = apply(t, cloud.points[i]);
    }
    return out;
}

std::vector<std::uint8_t> height_mask(const PointCloud& cloud, double h_min, double h_max) {
    if (h_min >= h_max) throw InvalidInput("height_mask: h_min must be below h_max");
    std::vector<std::uint8_t> mask(cloud.points.size(), 0);
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        if (!cloud.validity[i]) continue;
        const double z = cloud.points[i].z();
        mask[i] = (z >= h_min && z <= h_max) ? 1 : 0;
    }
    return mask;
}

std::vector<double> sparsity_weights(const PointCloud& cloud) {
    std::vector<double> weights(cloud.points.size(), 0.0);
    for (int v = 1; v + 1 < cloud.height; ++v) {
        for (int u = 1; u + 1 < cloud.width; ++u) {
            if (!cloud.valid_at(u, v) || !cloud.valid_at(u, v - 1) || !cloud.valid_at(u, v + 1) ||
                !cloud.valid_at(u - 1, v) || !cloud.valid_at(u + 1, v)) {
                continue;
            }
            const double dv = (cloud.at(u, v - 1) - cloud.at(u, v + 1)).norm();
            const double du = (cloud.at(u - 1, v) - cloud.at(u + 1, v)).norm();
            weights[cloud.index(u, v)] = dv * du;
        }
    }
    return weights;
}

namespace {

float f32_from_le(const unsigned char* bytes) {
    std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                         static_cast<std::uint32_t>(bytes[1]) << 8 |
                         static_cast<std::uint32_t>(bytes[2]) << 16 |
                         static_cast<std::uint32_t>(bytes[3]) << 24;
    return std::bit_cast<float>(bits);
}

void f32_to_le(float value, unsigned char* bytes) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
    bytes[0] = static_cast<unsigned char>(bits & 0xff);
    bytes[1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    bytes[2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    bytes[3] = static_cast<unsigned char>((bits >> 24) & 0xff);
}

std::uint32_t u32_from_le(const unsigned char* bytes) {
    return static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
           static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
}

void u32_to_le(std::uint32_t value, unsigned char* bytes) {
    bytes[0] = static_cast<unsigned char>(value & 0xff);
    bytes[1] = static_cast<unsigned char>((value >> 8) & 0xff);
    bytes[2] = static_cast<unsigned char>((value >> 16) & 0xff);
    bytes[3] = static_cast<unsigned char>((value >> 24) & 0xff);
}

} // namespace

DepthMap read_depth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open depth file: " + path);
    char magic[4];
    unsigned char header[8];
    if (!in.read(magic, 4) || std::memcmp(magic, "EXDM", 4) != 0) {
        throw IoError("bad depth magic in " + path);
    }
    if (!in.read(reinterpret_cast<char*>(header), 8)) throw IoError("truncated depth header in " + path);
    const std::uint32_t width = u32_from_le(header);
    const std::uint32_t height = u32_from_le(header + 4);
    if (width == 0 || height == 0 || width > 1u << 16 || height > 1u << 16) {
        throw IoError("unreasonable depth dimensions in " + path);
    }
    DepthMap depth = DepthMap::invalid(static_cast<int>(width), static_cast<int>(height));
    std::vector<unsigned char> payload(static_cast<std::size_t>(width) * height * 4);
    if (!in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()))) {
        throw IoError("truncated depth payload in " + path);
    }
    for (std::size_t i = 0; i < depth.values.size(); ++i) {
        const float value = f32_from_le(payload.data() + 4 * i);
        if (std::isfinite(value) && value > 0.0f) {
            depth.values[i] = value;
            depth.validity[i] = 1;
        }
    }
    return depth;
}

void write_depth(const DepthMap& depth, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write depth file: " + path);
    out.write("EXDM", 4);
    unsigned char header[8];
    u32_to_le(static_cast<std::uint32_t>(depth.width), header);
    u32_to_le(static_cast<std::uint32_t>(depth.height), header + 4);
    out.write(reinterpret_cast<const char*>(header), 8);
    std::vector<unsigned char> payload(depth.values.size() * 4);
    for (std::size_t i = 0; i < depth.values.size(); ++i) {
        const float value = depth.validity[i] ? depth.values[i] : -1.0f;
        f32_to_le(value, payload.data() + 4 * i);
    }
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("failed writing depth file: " + path);
}

} // namespace exaug
