#pragma once

#include "smlct/core.hpp"

#include <cmath>

namespace smlct {

/// Square reconstruction window [-half_extent, half_extent]^2 sampled on a
/// rows x cols pixel grid.  Row 0 is the top; physical x grows with the
/// column index and physical y shrinks with the row index; the iso-center sits
/// at ((rows-1)/2, (cols-1)/2).
struct ImageGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double half_extent = 0.0;

    double dx() const { return 2.0 * half_extent / static_cast<double>(cols); }
    double dy() const { return 2.0 * half_extent / static_cast<double>(rows); }

    double x(double col) const { return (col - 0.5 * (static_cast<double>(cols) - 1.0)) * dx(); }
    double y(double row) const { return (0.5 * (static_cast<double>(rows) - 1.0) - row) * dy(); }
    double col(double x) const { return x / dx() + 0.5 * (static_cast<double>(cols) - 1.0); }
    double row(double y) const { return 0.5 * (static_cast<double>(rows) - 1.0) - y / dy(); }

    Vec2 center_of(std::size_t r, std::size_t c) const
    {
        return {x(static_cast<double>(c)), y(static_cast<double>(r))};
    }

    void validate() const
    {
        require(rows > 0 && cols > 0, "ImageGrid: empty grid");
        require(half_extent > 0.0 && std::isfinite(half_extent), "ImageGrid: extent must be positive");
    }

    bool operator==(const ImageGrid&) const = default;
};

inline ImageGrid make_grid(double half_extent, std::size_t rows, std::size_t cols)
{
    ImageGrid g{rows, cols, half_extent};
    g.validate();
    return g;
}

inline ImageGrid make_grid(double half_extent, std::size_t size) { return make_grid(half_extent, size, size); }

/// A reconstructed (or rasterized) picture on an ImageGrid.  `segment` is 0
/// for images not tied to a single trajectory.
struct SegmentImage {
    ImageGrid grid;
    Matrix values;
    int segment = 0;
    double theta = 0.0;

    static SegmentImage zeros(const ImageGrid& grid, int segment = 0, double theta = 0.0)
    {
        return {grid, Matrix(grid.rows, grid.cols), segment, theta};
    }
};

/// Bilinear interpolation at fractional pixel coordinates; zero outside.
inline double bilinear(const Matrix& m, double row, double col)
{
    const double r0f = std::floor(row);
    const double c0f = std::floor(col);
    const double fr = row - r0f;
    const double fc = col - c0f;
    const auto r0 = static_cast<long>(r0f);
    const auto c0 = static_cast<long>(c0f);
    const auto rows = static_cast<long>(m.rows());
    const auto cols = static_cast<long>(m.cols());
    auto at = [&](long r, long c) {
        return (r >= 0 && r < rows && c >= 0 && c < cols) ? m(static_cast<std::size_t>(r), static_cast<std::size_t>(c))
                                                          : 0.0;
    };
    return (1 - fr) * ((1 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)) +
           fr * ((1 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1));
}

/// Rotates image content counter-clockwise by `angle` (physical frame) about
/// the grid center.  Bilinear interpolation, zero fill.
inline SegmentImage rotate_image(const SegmentImage& img, double angle)
{
    SegmentImage out = img;
    if (angle == 0.0)
        return out;
    const ImageGrid& g = img.grid;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (std::size_t r = 0; r < g.rows; ++r) {
        for (std::size_t k = 0; k < g.cols; ++k) {
            const Vec2 p = g.center_of(r, k);
            // Source location: rotate the destination back by -angle.
            const double xs = c * p.x + s * p.y;
            const double ys = -s * p.x + c * p.y;
            out.values(r, k) = bilinear(img.values, g.row(ys), g.col(xs));
        }
    }
    return out;
}

} // namespace smlct
