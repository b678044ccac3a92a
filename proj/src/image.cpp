#include "exaug/image.hpp"

#include "exaug/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace exaug {

ColorImage ColorImage::filled(int width, int height, std::array<std::uint8_t, 3> color) {
    if (width <= 0 || height <= 0) throw InvalidInput("ColorImage: dimensions must be positive");
    ColorImage img;
    img.width = width;
    img.height = height;
    img.rgb.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
        img.rgb[i] = color[0];
        img.rgb[i + 1] = color[1];
        img.rgb[i + 2] = color[2];
    }
    return img;
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string token;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    return token;
}

} // namespace

ColorImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image file: " + path);
    if (next_token(in) != "P6") throw IoError("not a binary PPM (P6): " + path);
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(next_token(in));
        height = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw IoError("malformed PPM header in " + path);
    }
    if (width <= 0 || height <= 0 || maxval != 255) {
        throw IoError("unsupported PPM header in " + path);
    }
    ColorImage img = ColorImage::filled(width, height, {0, 0, 0});
    if (!in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()))) {
        throw IoError("truncated PPM payload in " + path);
    }
    return img;
}

void write_ppm(const ColorImage& image, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image file: " + path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.rgb.data()),
              static_cast<std::streamsize>(image.rgb.size()));
    if (!out) throw IoError("failed writing image file: " + path);
}

ResampleResult resample_bilinear(const ColorImage& image, const std::vector<std::uint8_t>& mask,
                                 int new_width, int new_height) {
    if (new_width <= 0 || new_height <= 0) {
        throw InvalidInput("resample_bilinear: dimensions must be positive");
    }
    const bool has_mask = !mask.empty();
    if (has_mask && mask.size() != static_cast<std::size_t>(image.width) * image.height) {
        throw ShapeError("resample_bilinear: mask does not match image");
    }
    ResampleResult out;
    out.image = ColorImage::filled(new_width, new_height, {0, 0, 0});
    out.mask.assign(static_cast<std::size_t>(new_width) * new_height, 1);

    const double su = new_width > 1 ? (image.width - 1.0) / (new_width - 1.0) : 0.0;
    const double sv = new_height > 1 ? (image.height - 1.0) / (new_height - 1.0) : 0.0;
    for (int v = 0; v < new_height; ++v) {
        for (int u = 0; u < new_width; ++u) {
            const double us = u * su;
            const double vs = v * sv;
            const int u0 = std::min(static_cast<int>(us), image.width - 1);
            const int v0 = std::min(static_cast<int>(vs), image.height - 1);
            const int u1 = std::min(u0 + 1, image.width - 1);
            const int v1 = std::min(v0 + 1, image.height - 1);
            const double fu = us - u0;
            const double fv = vs - v0;
            const double w00 = (1.0 - fu) * (1.0 - fv);
            const double w10 = fu * (1.0 - fv);
            const double w01 = (1.0 - fu) * fv;
            const double w11 = fu * fv;

            for (int c = 0; c < 3; ++c) {
                const double value = w00 * image.at(u0, v0)[c] + w10 * image.at(u1, v0)[c] +
                                     w01 * image.at(u0, v1)[c] + w11 * image.at(u1, v1)[c];
                out.image.rgb[out.image.index(u, v) + c] =
                    static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
            }
            if (has_mask) {
                const auto src_set = [&](int su_, int sv_) {
                    return mask[static_cast<std::size_t>(sv_) * image.width + su_] != 0;
                };
                const bool ok = (w00 == 0.0 || src_set(u0, v0)) && (w10 == 0.0 || src_set(u1, v0)) &&
                                (w01 == 0.0 || src_set(u0, v1)) && (w11 == 0.0 || src_set(u1, v1));
                out.mask[static_cast<std::size_t>(v) * new_width + u] = ok ? 1 : 0;
            }
        }
    }
    if (!has_mask) out.mask.clear();
    return out;
}

double mean_absolute_error(const ColorImage& a, const ColorImage& b,
                           const std::vector<std::uint8_t>& mask) {
    if (a.width != b.width || a.height != b.height) {
        throw ShapeError("mean_absolute_error: image sizes differ");
    }
    const std::size_t n = static_cast<std::size_t>(a.width) * a.height;
    if (!mask.empty() && mask.size() != n) {
        throw ShapeError("mean_absolute_error: mask does not match images");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask.empty() && !mask[i]) continue;
        for (int c = 0; c < 3; ++c) {
            sum += std::abs(static_cast<double>(a.rgb[3 * i + c]) - static_cast<double>(b.rgb[3 * i + c]));
        }
        ++count;
    }
    if (count == 0) return 0.0;
    return sum / (3.0 * static_cast<double>(count));
}

} // namespace exaug
