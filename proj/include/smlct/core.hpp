#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace smlct {

inline constexpr double pi = std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / pi; }

/// Raised for contract violations (bad geometry, mismatched sizes, malformed files).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, std::string_view message)
{
    if (!condition)
        throw Error(std::string(message));
}

// Warning sink. Defaults to stderr; tests and the CLI may redirect it.
using WarningHandler = std::function<void(std::string_view)>;

inline WarningHandler& warning_handler()
{
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

inline void warn(std::string_view message)
{
    if (warning_handler())
        warning_handler()(message);
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr bool operator==(const Vec2&) const = default;
};

inline constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Counter-clockwise rotation by `angle` radians.
inline Vec2 rotate(Vec2 p, double angle)
{
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// Dense row-major 2D array.
template <class T>
class Array2D {
public:
    Array2D() = default;
    Array2D(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(const Array2D& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool operator==(const Array2D&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Matrix = Array2D<double>;

inline double max_abs(const Matrix& m)
{
    double out = 0.0;
    for (double v : m.data())
        out = std::max(out, std::abs(v));
    return out;
}

} // namespace smlct
