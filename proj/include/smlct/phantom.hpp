#pragma once

// Analytic ellipse phantoms with exact line integrals.

#include "smlct/core.hpp"
#include "smlct/geometry.hpp"
#include "smlct/image.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace smlct {

struct Ellipse {
    Vec2 center;
    Vec2 semi_axes{1.0, 1.0};
    double tilt = 0.0;    // radians, counter-clockwise
    double density = 0.0; // 1/mm, additive in overlaps
};

struct EllipsePhantom {
    std::vector<Ellipse> ellipses;

    /// Radius of a disk about the origin containing every ellipse.
    double support_radius() const
    {
        double r = 0.0;
        for (const auto& e : ellipses)
            r = std::max(r, norm(e.center) + std::max(e.semi_axes.x, e.semi_axes.y));
        return r;
    }

    void validate() const
    {
        for (const auto& e : ellipses) {
            require(e.semi_axes.x > 0.0 && e.semi_axes.y > 0.0, "EllipsePhantom: semi-axes must be positive");
            require(std::isfinite(e.density) && std::isfinite(e.tilt), "EllipsePhantom: non-finite parameter");
        }
    }

    /// Warns when the phantom pokes out of a FOV circle of radius r1.
    void check_fits(double r1) const
    {
        if (support_radius() > r1)
            warn("phantom support exceeds the FOV radius; projections will be truncated");
    }
};

/// Chord length of a ray through one ellipse.
inline double chord_length(const Ellipse& e, const Pose& ray)
{
    const Vec2 p = rotate(ray.point - e.center, -e.tilt);
    const Vec2 d = rotate(ray.direction, -e.tilt);
    const Vec2 ps{p.x / e.semi_axes.x, p.y / e.semi_axes.y};
    const Vec2 ds{d.x / e.semi_axes.x, d.y / e.semi_axes.y};
    const double a = dot(ds, ds);
    const double b = dot(ps, ds);
    const double c = dot(ps, ps) - 1.0;
    const double disc = b * b - a * c;
    if (disc <= 0.0)
        return 0.0;
    return 2.0 * std::sqrt(disc) / a * norm(ray.direction);
}

inline double line_integral(const EllipsePhantom& ph, const Pose& ray)
{
    double sum = 0.0;
    for (const auto& e : ph.ellipses)
        sum += e.density * chord_length(e, ray);
    return sum;
}

inline bool contains(const Ellipse& e, Vec2 p)
{
    const Vec2 q = rotate(p - e.center, -e.tilt);
    const double u = q.x / e.semi_axes.x;
    const double v = q.y / e.semi_axes.y;
    return u * u + v * v <= 1.0;
}

inline double density_at(const EllipsePhantom& ph, Vec2 p)
{
    double sum = 0.0;
    for (const auto& e : ph.ellipses)
        if (contains(e, p))
            sum += e.density;
    return sum;
}

/// Samples the phantom at every pixel center.
inline SegmentImage rasterize(const EllipsePhantom& ph, const ImageGrid& grid)
{
    grid.validate();
    auto img = SegmentImage::zeros(grid);
    for (std::size_t r = 0; r < grid.rows; ++r)
        for (std::size_t c = 0; c < grid.cols; ++c)
            img.values(r, c) = density_at(ph, grid.center_of(r, c));
    return img;
}

inline EllipsePhantom rotated(const EllipsePhantom& ph, double angle)
{
    EllipsePhantom out = ph;
    for (auto& e : out.ellipses) {
        e.center = rotate(e.center, angle);
        e.tilt += angle;
    }
    return out;
}

inline EllipsePhantom translated(const EllipsePhantom& ph, Vec2 offset)
{
    EllipsePhantom out = ph;
    for (auto& e : out.ellipses)
        e.center = e.center + offset;
    return out;
}

namespace detail {

// {cx, cy, a, b, tilt_deg, density} on the unit square [-1, 1]^2.
using EllipseRow = std::array<double, 6>;

inline EllipsePhantom scale_table(std::span<const EllipseRow> rows, double radius, double density_scale)
{
    EllipsePhantom ph;
    for (const auto& r : rows)
        ph.ellipses.push_back({{r[0] * radius, r[1] * radius},
                               {r[2] * radius, r[3] * radius},
                               deg2rad(r[4]),
                               r[5] * density_scale});
    return ph;
}

inline constexpr std::array<EllipseRow, 10> shepp_logan_rows{{
    {0.0, 0.0, 0.69, 0.92, 0.0, 2.0},
    {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98},
    {0.22, 0.0, 0.11, 0.31, -18.0, -0.02},
    {-0.22, 0.0, 0.16, 0.41, 18.0, -0.02},
    {0.0, 0.35, 0.21, 0.25, 0.0, 0.01},
    {0.0, 0.1, 0.046, 0.046, 0.0, 0.01},
    {0.0, -0.1, 0.046, 0.046, 0.0, 0.01},
    {-0.08, -0.605, 0.046, 0.023, 0.0, 0.01},
    {0.0, -0.606, 0.023, 0.023, 0.0, 0.01},
    {0.06, -0.605, 0.023, 0.046, 0.0, 0.01},
}};

// Toft's higher-contrast variant.
inline constexpr std::array<double, 10> modified_densities{1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};

// Head-like slice in the spirit of the Forbild phantom: skull, brain,
// ventricles, orbits, petrous bones and two small lesions.
inline constexpr std::array<EllipseRow, 10> forbild_like_rows{{
    {0.0, 0.0, 0.80, 0.96, 0.0, 1.80},
    {0.0, -0.01, 0.74, 0.90, 0.0, -0.75},
    {-0.12, 0.12, 0.07, 0.24, 15.0, -0.06},
    {0.12, 0.12, 0.07, 0.24, -15.0, -0.06},
    {-0.30, 0.58, 0.11, 0.11, 0.0, 0.06},
    {0.30, 0.58, 0.11, 0.11, 0.0, 0.06},
    {-0.58, -0.22, 0.07, 0.16, 20.0, 0.55},
    {0.58, -0.22, 0.07, 0.16, -20.0, 0.55},
    {0.0, -0.50, 0.06, 0.035, 30.0, 0.12},
    {0.28, -0.18, 0.045, 0.045, 0.0, 0.10},
}};

} // namespace detail

/// Original Shepp-Logan table scaled to fit a disk of `radius` mm.
inline EllipsePhantom shepp_logan(double radius, double density_scale = 0.02)
{
    return detail::scale_table(detail::shepp_logan_rows, radius, density_scale);
}

inline EllipsePhantom modified_shepp_logan(double radius, double density_scale = 0.02)
{
    auto ph = shepp_logan(radius, density_scale);
    for (std::size_t i = 0; i < ph.ellipses.size(); ++i)
        ph.ellipses[i].density = detail::modified_densities[i] * density_scale;
    return ph;
}

inline EllipsePhantom forbild_like_head(double radius, double density_scale = 0.02)
{
    return detail::scale_table(detail::forbild_like_rows, radius, density_scale);
}

inline EllipsePhantom phantom_preset(const std::string& name, double radius, double density_scale)
{
    if (name == "shepp-logan")
        return shepp_logan(radius, density_scale);
    if (name == "modified-shepp-logan")
        return modified_shepp_logan(radius, density_scale);
    if (name == "forbild")
        return forbild_like_head(radius, density_scale);
    throw Error("unknown phantom preset '" + name + "'");
}

/// Phantom text format: one ellipse per line, `cx cy a b tilt_deg density`
/// in mm and 1/mm; '#' starts a comment.
inline EllipsePhantom parse_phantom(std::istream& in)
{
    EllipsePhantom ph;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        double v[6];
        int n = 0;
        while (n < 6 && ls >> v[n])
            ++n;
        if (n == 0 && ls.eof())
            continue;
        std::string rest;
        require(n == 6 && !(ls >> rest), "phantom file line " + std::to_string(lineno) + ": expected 6 numbers");
        ph.ellipses.push_back({{v[0], v[1]}, {v[2], v[3]}, deg2rad(v[4]), v[5]});
    }
    ph.validate();
    return ph;
}

inline EllipsePhantom load_phantom(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open phantom file " + path);
    return parse_phantom(in);
}

inline void write_phantom(std::ostream& out, const EllipsePhantom& ph)
{
    out << "# cx_mm cy_mm a_mm b_mm tilt_deg density_per_mm\n";
    out.precision(17);
    for (const auto& e : ph.ellipses)
        out << e.center.x << ' ' << e.center.y << ' ' << e.semi_axes.x << ' ' << e.semi_axes.y << ' '
            << rad2deg(e.tilt) << ' ' << e.density << '\n';
}

} // namespace smlct
