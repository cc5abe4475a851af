#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "core/errors.hpp"

namespace mvg4d {

/// Row-major H x W x 3 RGB image, double precision. Values are nominally in
/// [0,1]; intermediates may drift outside and are clamped only when
/// quantizing to 8 bits.
class Image {
public:
    Image() = default;

    Image(int width, int height, double fill = 0.0)
        : width_(width),
          height_(height),
          data_(static_cast<std::size_t>(width) * height * 3, fill) {}

    Image(int width, int height, const Eigen::Vector3d& fill)
        : Image(width, height) {
        for (int y = 0; y < height_; ++y) {
            for (int x = 0; x < width_; ++x) {
                set_pixel(x, y, fill);
            }
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::size_t value_count() const { return data_.size(); }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    double* pixel(int x, int y) {
        return data_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x);
    }
    const double* pixel(int x, int y) const {
        return data_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x);
    }

    Eigen::Vector3d get_pixel(int x, int y) const {
        const double* p = pixel(x, y);
        return {p[0], p[1], p[2]};
    }

    void set_pixel(int x, int y, const Eigen::Vector3d& rgb) {
        double* p = pixel(x, y);
        p[0] = rgb[0];
        p[1] = rgb[1];
        p[2] = rgb[2];
    }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw InvalidArgumentError(std::string(what) + ": image dimensions differ (" +
                                   std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                   " vs " + std::to_string(b.width()) + "x" +
                                   std::to_string(b.height()) + ")");
    }
}

} // namespace mvg4d
