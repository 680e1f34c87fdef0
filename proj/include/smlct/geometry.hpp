#pragma once

// Acquisition geometry of symmetric multi-linear-trajectory CT.
//
// Segment-local frame: the source translates along the x-axis at y = -l, the
// flat detector lies on y = +h, and the central ray points along +y.  Segment
// i (1-based) is the local frame rotated counter-clockwise by
// theta_i = (i - 1) * r_dir * 2*pi/T about the iso-center.

#include "smlct/core.hpp"

#include <cmath>
#include <string>

namespace smlct {

/// In-plane and out-of-plane misalignment terms of one linear trajectory.
/// Lengths in mm, angles in radians.  dv, theta_in and theta_out act out of
/// the reconstructed plane and are ignored by the 2D forward model.
struct ErrorSet {
    double dl = 0.0;           // source-to-iso distance bias
    double dh = 0.0;           // iso-to-detector distance bias
    double ds = 0.0;           // trajectory shift along the motion direction
    double du_off = 0.0;       // detector offset along its axis
    double dv = 0.0;           // detector offset along the rotation axis (ignored)
    double theta_lambda = 0.0; // in-plane tilt of the trajectory
    double theta_d = 0.0;      // in-plane tilt of the detector
    double theta_in = 0.0;     // ignored
    double theta_out = 0.0;    // ignored

    bool has_out_of_plane() const { return dv != 0.0 || theta_in != 0.0 || theta_out != 0.0; }

    bool is_zero() const
    {
        return dl == 0.0 && dh == 0.0 && ds == 0.0 && du_off == 0.0 && theta_lambda == 0.0 &&
               theta_d == 0.0 && !has_out_of_plane();
    }

    void validate() const
    {
        for (double v : {dl, dh, ds, du_off, dv, theta_lambda, theta_d, theta_in, theta_out})
            require(std::isfinite(v), "ErrorSet: non-finite term");
        for (double a : {theta_lambda, theta_d, theta_in, theta_out})
            require(std::abs(a) < pi / 2, "ErrorSet: |angle| must be below pi/2");
    }
};

struct SegmentLayout {
    double delta_theta = 0.0; // angular span of the detector seen from the iso-center
    int t_segments = 0;
};

/// ceil(2 pi / dtheta) with dtheta = 2 atan(d/h); may be odd.
inline int base_segment_count(double h, double d)
{
    require(h > 0.0 && d > 0.0, "segment_layout: h and d must be positive");
    // Absorb round-off so that an exact division (h == d) is not bumped up.
    return static_cast<int>(std::ceil(pi / std::atan(d / h) - 1e-9));
}

/// Number of segments and detector span: dtheta = 2 atan(d/h), T = ceil(2 pi/dtheta) + t_extra.
inline SegmentLayout segment_layout(double h, double d, int t_extra)
{
    require(t_extra >= 0, "segment_layout: t_extra must be non-negative");
    SegmentLayout out;
    out.t_segments = base_segment_count(h, d) + t_extra;
    out.delta_theta = 2.0 * std::atan(d / h);
    require(out.t_segments % 2 == 0,
            "segment_layout: t_extra yields an odd segment count " + std::to_string(out.t_segments));
    return out;
}

struct ScanGeometry {
    double l = 0.0;  // iso-center to source trajectory
    double h = 0.0;  // iso-center to detector
    double s = 0.0;  // half trajectory length
    int n_det = 0;   // detector bins
    double du = 0.0; // bin width
    int n_views = 0; // source positions per segment
    int t_segments = 0;
    int t_extra = 0;
    double delta_theta = 0.0;
    int r_dir = 1;
    // Shift of the whole trajectory along its motion direction.  Zero for the
    // nominal geometry; set by calibration to absorb an estimated trajectory shift.
    double lambda_offset = 0.0;

    double d() const { return 0.5 * n_det * du; }
    double source_to_detector() const { return l + h; }
    double segment_step() const { return 2.0 * pi / t_segments; }

    /// Rotation of segment i (1-based).
    double theta(int i) const { return (i - 1) * r_dir * segment_step(); }

    double lambda_step() const { return 2.0 * s / (n_views - 1); }
    double lambda(int k) const { return -s + k * lambda_step() + lambda_offset; }

    /// Detector bin center, bins centered on the detector midpoint.
    double u(int j) const { return (j - 0.5 * (n_det - 1)) * du; }

    void validate() const
    {
        require(l > 0.0 && h > 0.0 && s > 0.0, "ScanGeometry: l, h and s must be positive");
        require(n_det > 0 && du > 0.0, "ScanGeometry: detector must have positive size");
        require(n_views >= 2, "ScanGeometry: need at least two views");
        require(r_dir == 1 || r_dir == -1, "ScanGeometry: r_dir must be +1 or -1");
        require(std::isfinite(lambda_offset), "ScanGeometry: lambda_offset must be finite");
        require(s * h - d() * l > 0.0, "ScanGeometry: s*h - d*l must be positive (no FOV)");
        const auto layout = segment_layout(h, d(), t_extra);
        require(layout.t_segments == t_segments,
                "ScanGeometry: t_segments inconsistent with ceil(2pi/dtheta) + t_extra");
        require(std::abs(layout.delta_theta - delta_theta) < 1e-12,
                "ScanGeometry: delta_theta inconsistent with 2 atan(d/h)");
    }
};

inline ScanGeometry make_scan_geometry(double l, double h, double s, int n_det, double du, int n_views,
                                       int t_extra, int r_dir = 1)
{
    ScanGeometry g;
    g.l = l;
    g.h = h;
    g.s = s;
    g.n_det = n_det;
    g.du = du;
    g.n_views = n_views;
    g.t_extra = t_extra;
    g.r_dir = r_dir;
    require(n_det > 0 && du > 0.0, "ScanGeometry: detector must have positive size");
    const auto layout = segment_layout(h, g.d(), t_extra);
    g.t_segments = layout.t_segments;
    g.delta_theta = layout.delta_theta;
    g.validate();
    return g;
}

/// Radius of the region with complete data.
inline double fov_radius(double l, double h, double s, double d)
{
    require(l > 0.0 && h > 0.0 && s > 0.0 && d >= 0.0, "fov_radius: invalid geometry");
    const double num = s * h - d * l;
    require(num > 0.0, "fov_radius: s*h <= d*l, geometry has no field of view");
    return num / std::hypot(l + h, s + d);
}

inline double fov_radius(const ScanGeometry& g) { return fov_radius(g.l, g.h, g.s, g.d()); }

/// Angles of the visible boundaries relative to the central ray.  alpha_vis
/// bounds the ray directions every point of the FOV circle receives from one
/// segment; vartheta is the steepest ray of the segment.
struct VisibleAngles {
    double alpha_vis = 0.0;
    double vartheta = 0.0;
};

inline VisibleAngles visible_angles(double l, double h, double s, double d, double r1)
{
    require(r1 >= 0.0 && r1 < d && r1 < h, "visible_angles: need 0 <= r1 < d and r1 < h");
    VisibleAngles out;
    out.alpha_vis = std::atan((d * d - r1 * r1) / (d * h + r1 * std::sqrt(d * d + h * h - r1 * r1)));
    out.vartheta = pi / 2 - std::atan((l + h) / (s + d));
    return out;
}

inline VisibleAngles visible_angles(const ScanGeometry& g, double r1)
{
    return visible_angles(g.l, g.h, g.s, g.d(), r1);
}

/// A point with a unit direction: a source/detector placement or a ray.
struct Pose {
    Vec2 point;
    Vec2 direction{0.0, 1.0};
};

inline Pose make_ray(Vec2 from, Vec2 to)
{
    const Vec2 dir = to - from;
    const double len = norm(dir);
    require(len > 0.0, "make_ray: coincident endpoints");
    return {from, dir * (1.0 / len)};
}

namespace detail {

inline void check_segment(const ScanGeometry& g, int segment)
{
    require(segment >= 1 && segment <= g.t_segments, "segment index out of range");
}

inline Vec2 local_source(const ScanGeometry& g, double lambda, const ErrorSet& e)
{
    return {lambda * std::cos(e.theta_lambda) + e.ds, lambda * std::sin(e.theta_lambda) - (g.l + e.dl)};
}

inline Vec2 local_detector_axis(const ErrorSet& e) { return {std::cos(e.theta_d), std::sin(e.theta_d)}; }

inline Vec2 local_detector_center(const ScanGeometry& g, const ErrorSet& e)
{
    return Vec2{0.0, g.h + e.dh} + local_detector_axis(e) * e.du_off;
}

} // namespace detail

/// Source position on segment `segment` at trajectory coordinate `lambda`;
/// direction is the segment's central-ray direction.
inline Pose source_pose(const ScanGeometry& g, int segment, double lambda, const ErrorSet& errors = {})
{
    detail::check_segment(g, segment);
    constexpr double slack = 1e-9;
    require(lambda >= -g.s + g.lambda_offset - slack && lambda <= g.s + g.lambda_offset + slack,
            "source_pose: lambda outside the trajectory");
    const double th = g.theta(segment);
    return {rotate(detail::local_source(g, lambda, errors), th), rotate(Vec2{0.0, 1.0}, th)};
}

/// Center of detector bin `bin`; direction is the detector axis.
inline Pose detector_bin_pose(const ScanGeometry& g, int segment, int bin, const ErrorSet& errors = {})
{
    detail::check_segment(g, segment);
    require(bin >= 0 && bin < g.n_det, "detector_bin_pose: bin out of range");
    const double th = g.theta(segment);
    const Vec2 axis = detail::local_detector_axis(errors);
    const Vec2 p = detail::local_detector_center(g, errors) + axis * g.u(bin);
    return {rotate(p, th), rotate(axis, th)};
}

/// Ray from the (possibly misaligned) source at view `view` to the center of bin `bin` (Mode 1:
/// the source translates).
inline Pose segment_ray(const ScanGeometry& g, int segment, int view, int bin, const ErrorSet& errors = {})
{
    require(view >= 0 && view < g.n_views, "segment_ray: view out of range");
    const Pose src = source_pose(g, segment, g.lambda(view), errors);
    const Pose det = detector_bin_pose(g, segment, bin, errors);
    return make_ray(src.point, det.point);
}

/// Same ray built from the equivalent Mode 2 acquisition: source fixed, object
/// and detector translating by -lambda.  Returned in the object frame.
inline Pose segment_ray_mode2(const ScanGeometry& g, int segment, int view, int bin, const ErrorSet& errors = {})
{
    detail::check_segment(g, segment);
    require(view >= 0 && view < g.n_views, "segment_ray_mode2: view out of range");
    require(bin >= 0 && bin < g.n_det, "segment_ray_mode2: bin out of range");
    const double th = g.theta(segment);
    const double lambda = g.lambda(view);
    const Vec2 motion{std::cos(errors.theta_lambda), std::sin(errors.theta_lambda)};
    // Lab frame.
    const Vec2 source = rotate(Vec2{errors.ds, -(g.l + errors.dl)}, th);
    const Vec2 object_origin = rotate(-motion * lambda, th);
    const Vec2 detector_local =
        detail::local_detector_center(g, errors) + detail::local_detector_axis(errors) * g.u(bin) - motion * lambda;
    const Vec2 bin_point = rotate(detector_local, th);
    // Object frame.
    return make_ray(source - object_origin, bin_point - object_origin);
}

} // namespace smlct
