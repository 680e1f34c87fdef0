#pragma once

// Image comparison: RMSE, windowed SSIM and line profiles.

#include "smlct/core.hpp"
#include "smlct/image.hpp"

#include <vector>

namespace smlct {

inline double rmse(const Matrix& a, const Matrix& b)
{
    require(!a.empty() && a.same_shape(b), "rmse: image dimensions differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(a.size()));
}

inline double rmse(const SegmentImage& a, const SegmentImage& b) { return rmse(a.values, b.values); }

struct SsimParams {
    std::size_t window = 8;
    double dynamic_range = 1.0;
    double k1 = 0.01;
    double k2 = 0.03;
};

namespace detail {

// Summed-area table with a zero first row and column.
inline std::vector<double> integral_image(const Matrix& m, auto&& value)
{
    const std::size_t w = m.cols() + 1;
    std::vector<double> s((m.rows() + 1) * w, 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            s[(r + 1) * w + c + 1] = value(r, c) + s[r * w + c + 1] + s[(r + 1) * w + c] - s[r * w + c];
    return s;
}

inline double box_sum(const std::vector<double>& s, std::size_t w, std::size_t r, std::size_t c, std::size_t k)
{
    return s[(r + k) * w + c + k] - s[r * w + c + k] - s[(r + k) * w + c] + s[r * w + c];
}

} // namespace detail

/// Mean SSIM over every fully contained window x window block (stride 1,
/// uniform weights, population statistics).
inline double ssim(const Matrix& a, const Matrix& b, const SsimParams& p = {})
{
    require(!a.empty() && a.same_shape(b), "ssim: image dimensions differ");
    require(p.dynamic_range > 0.0, "ssim: dynamic range must be positive");
    require(p.window >= 1 && p.window <= a.rows() && p.window <= a.cols(), "ssim: window does not fit the image");
    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    const auto sa = detail::integral_image(a, [&](std::size_t r, std::size_t c) { return a(r, c); });
    const auto sb = detail::integral_image(b, [&](std::size_t r, std::size_t c) { return b(r, c); });
    const auto saa = detail::integral_image(a, [&](std::size_t r, std::size_t c) { return a(r, c) * a(r, c); });
    const auto sbb = detail::integral_image(b, [&](std::size_t r, std::size_t c) { return b(r, c) * b(r, c); });
    const auto sab = detail::integral_image(a, [&](std::size_t r, std::size_t c) { return a(r, c) * b(r, c); });
    const std::size_t w = a.cols() + 1;
    const std::size_t k = p.window;
    const double n = static_cast<double>(k * k);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r + k <= a.rows(); ++r)
        for (std::size_t c = 0; c + k <= a.cols(); ++c) {
            const double ma = detail::box_sum(sa, w, r, c, k) / n;
            const double mb = detail::box_sum(sb, w, r, c, k) / n;
            const double va = std::max(0.0, detail::box_sum(saa, w, r, c, k) / n - ma * ma);
            const double vb = std::max(0.0, detail::box_sum(sbb, w, r, c, k) / n - mb * mb);
            const double cov = detail::box_sum(sab, w, r, c, k) / n - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return total / static_cast<double>(count);
}

inline double ssim(const SegmentImage& a, const SegmentImage& b, const SsimParams& p = {})
{
    return ssim(a.values, b.values, p);
}

/// Bilinear samples at `samples` evenly spaced points from p0 to p1
/// (physical coordinates, endpoints included).
inline std::vector<double> profile(const SegmentImage& img, Vec2 p0, Vec2 p1, std::size_t samples)
{
    require(samples >= 1, "profile: need at least one sample");
    const ImageGrid& g = img.grid;
    auto inside = [&](Vec2 p) {
        const double r = g.row(p.y);
        const double c = g.col(p.x);
        return r >= 0.0 && r <= static_cast<double>(g.rows - 1) && c >= 0.0 && c <= static_cast<double>(g.cols - 1);
    };
    require(inside(p0) && inside(p1), "profile: endpoint outside the grid");
    std::vector<double> out(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = samples == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(samples - 1);
        const Vec2 p = p0 + (p1 - p0) * t;
        out[i] = bilinear(img.values, g.row(p.y), g.col(p.x));
    }
    return out;
}

struct MetricReport {
    double rmse = 0.0;
    double ssim = 0.0;
};

inline MetricReport compare(const SegmentImage& img, const SegmentImage& reference, double dynamic_range)
{
    return {rmse(img, reference), ssim(img, reference, {.dynamic_range = dynamic_range})};
}

} // namespace smlct
