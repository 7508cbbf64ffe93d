#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evtrack/error.hpp"

namespace evtrack {

/// Dense (channels, height, width) grid stored as row-major channel planes.
template <typename T>
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int channels, int height, int width, T fill = T{})
        : channels_(channels), height_(height), width_(width) {
        if (channels < 0 || height < 0 || width < 0) throw ShapeError("negative tensor dimension");
        data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
    }

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Tensor3& other) const {
        return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
    }

    T& operator()(int c, int y, int x) { return data_[index(c, y, x)]; }
    const T& operator()(int c, int y, int x) const { return data_[index(c, y, x)]; }

    T* plane(int c) { return data_.data() + static_cast<std::size_t>(c) * plane_size(); }
    const T* plane(int c) const { return data_.data() + static_cast<std::size_t>(c) * plane_size(); }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    template <typename U>
    Tensor3<U> cast() const {
        Tensor3<U> out(channels_, height_, width_);
        for (std::size_t i = 0; i < data_.size(); ++i) out.storage()[i] = static_cast<U>(data_[i]);
        return out;
    }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

/// Single-plane grid (score maps, label maps, intensity frames).
template <typename T>
class Grid2 {
public:
    Grid2() = default;
    Grid2(int height, int width, T fill = T{}) : height_(height), width_(width) {
        if (height < 0 || width < 0) throw ShapeError("negative grid dimension");
        data_.assign(static_cast<std::size_t>(height) * width, fill);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Grid2& other) const { return height_ == other.height_ && width_ == other.width_; }

    T& operator()(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    const T& operator()(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    friend bool operator==(const Grid2&, const Grid2&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

}  // namespace evtrack
