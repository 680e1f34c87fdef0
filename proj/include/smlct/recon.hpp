#pragma once

// Filtered backprojection for linear-trajectory segments and circular arcs.
//
// Lines of one segment sharing the direction t = u - lambda form a parallel
// projection sampled along the trajectory.  Segment data is rebinned into
// these parallel projections, ramp filtered along the trajectory (derivative
// followed by a Hilbert transform, or a Ram-Lak kernel) and backprojected.
// Filtering along the detector for a fixed source instead would resolve far
// finer detail than the source step can carry, since one source step moves
// the ray through a pixel by about l + h over l detector bins.  A per-ray
// redundancy weight, normalized over every segment that measures the same
// line, makes the plain sum of all segment images the full-scan image.

#include "smlct/core.hpp"
#include "smlct/fft.hpp"
#include "smlct/geometry.hpp"
#include "smlct/image.hpp"
#include "smlct/projector.hpp"

#include <set>
#include <vector>

namespace smlct {

struct FilterSpec {
    enum class Kernel { hilbert, ramp };
    enum class Derivative { central_difference, forward };
    enum class Redundancy { smooth_trapezoid, uniform };

    Kernel kernel = Kernel::hilbert;
    Derivative derivative = Derivative::central_difference;
    Redundancy redundancy = Redundancy::smooth_trapezoid;
    // Width of the raised-cosine flanks as a fraction of the trajectory and
    // detector lengths.
    double taper_fraction = 0.1;
};

namespace detail {

inline double edge_taper(double x, double lo, double hi, double width)
{
    constexpr double slack = 1e-9;
    if (x < lo - slack || x > hi + slack)
        return 0.0;
    if (width <= 0.0)
        return 1.0;
    const double t = std::min(x - lo, hi - x) / width;
    if (t >= 1.0)
        return 1.0;
    // Floor keeps lines seen only at a data edge from becoming 0/0.
    return std::max(1e-3, 0.5 - 0.5 * std::cos(pi * std::max(t, 0.0)));
}

struct LineCoverage {
    double lambda = 0.0;
    double u = 0.0;
    bool measured = false;
};

// Where (if anywhere) a segment measures the undirected line through a and b.
inline LineCoverage coverage_in_segment(const ScanGeometry& g, int segment, Vec2 a, Vec2 b)
{
    const double th = g.theta(segment);
    const Vec2 la = rotate(a, -th);
    const Vec2 lb = rotate(b, -th);
    const double dy = lb.y - la.y;
    LineCoverage out;
    if (std::abs(dy) < 1e-12)
        return out;
    const double slope = (lb.x - la.x) / dy;
    out.lambda = la.x + (-g.l - la.y) * slope;
    out.u = la.x + (g.h - la.y) * slope;
    constexpr double slack = 1e-9;
    out.measured = out.lambda >= g.lambda(0) - slack && out.lambda <= g.lambda(g.n_views - 1) + slack &&
                   out.u >= g.u(0) - slack && out.u <= g.u(g.n_det - 1) + slack;
    return out;
}

inline double coverage_weight(const ScanGeometry& g, const LineCoverage& c, const FilterSpec& spec)
{
    if (!c.measured)
        return 0.0;
    if (spec.redundancy == FilterSpec::Redundancy::uniform)
        return 1.0;
    const double wl = spec.taper_fraction * 2.0 * g.s;
    const double wu = spec.taper_fraction * 2.0 * g.d();
    return edge_taper(c.lambda, g.lambda(0), g.lambda(g.n_views - 1), wl) *
           edge_taper(c.u, g.u(0), g.u(g.n_det - 1), wu);
}

inline std::vector<double> hilbert_kernel(std::size_t n)
{
    // Band-limited discrete Hilbert kernel, lags -n..n: 2/(pi m) for odd m.
    std::vector<double> k(2 * n + 1, 0.0);
    for (std::size_t i = 0; i < k.size(); ++i) {
        const long m = static_cast<long>(i) - static_cast<long>(n);
        if (m % 2 != 0)
            k[i] = 2.0 / (pi * static_cast<double>(m));
    }
    return k;
}

inline std::vector<double> ramlak_kernel(std::size_t n, double du)
{
    std::vector<double> k(2 * n + 1, 0.0);
    for (std::size_t i = 0; i < k.size(); ++i) {
        const long m = static_cast<long>(i) - static_cast<long>(n);
        if (m == 0)
            k[i] = 1.0 / (4.0 * du * du);
        else if (m % 2 != 0)
            k[i] = -1.0 / (pi * pi * static_cast<double>(m * m) * du * du);
    }
    // Convolution sum approximates an integral over u.
    for (double& v : k)
        v *= du;
    return k;
}

// Ramp-filters every row of already weighted projections.  Returns the
// filtered rows and the sub-bin position (in bins) of output sample 0.
inline std::pair<Matrix, double> ramp_filter_rows(const Matrix& weighted, double du, const FilterSpec& spec)
{
    const std::size_t n = weighted.cols();
    if (spec.kernel == FilterSpec::Kernel::ramp)
        return {convolve_rows(weighted, ramlak_kernel(n, du)), 0.0};

    require(n >= 2, "ramp_filter_rows: need at least two detector bins");
    Matrix deriv(weighted.rows(), n);
    double shift = 0.0;
    for (std::size_t r = 0; r < weighted.rows(); ++r) {
        const auto q = weighted.row(r);
        auto out = deriv.row(r);
        if (spec.derivative == FilterSpec::Derivative::central_difference) {
            out[0] = (q[1] - q[0]) / du;
            out[n - 1] = (q[n - 1] - q[n - 2]) / du;
            for (std::size_t j = 1; j + 1 < n; ++j)
                out[j] = (q[j + 1] - q[j - 1]) / (2.0 * du);
        } else {
            for (std::size_t j = 0; j + 1 < n; ++j)
                out[j] = (q[j + 1] - q[j]) / du;
            out[n - 1] = 0.0;
            shift = 0.5;
        }
    }
    Matrix filtered = convolve_rows(deriv, hilbert_kernel(n));
    for (double& v : filtered.data())
        v /= 2.0 * pi;
    return {std::move(filtered), shift};
}

// Linear interpolation along a row at fractional bin position; zero outside.
inline double row_sample(std::span<const double> row, double pos)
{
    if (!(pos >= 0.0) || pos > static_cast<double>(row.size() - 1))
        return 0.0;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= row.size())
        return row[row.size() - 1];
    const double f = pos - static_cast<double>(i);
    return row[i] + f * (row[i + 1] - row[i]);
}

} // namespace detail

/// Per-ray redundancy weights [views x bins] of one segment.  Summed over all
/// segments measuring the same line they equal one.
inline Matrix redundancy_weights(const ScanGeometry& g, int segment, const FilterSpec& spec = {})
{
    g.validate();
    require(segment >= 1 && segment <= g.t_segments, "redundancy_weights: invalid segment");
    Matrix w(static_cast<std::size_t>(g.n_views), static_cast<std::size_t>(g.n_det));
    const double th = g.theta(segment);
    for (int k = 0; k < g.n_views; ++k) {
        const Vec2 a = rotate(Vec2{g.lambda(k), -g.l}, th);
        const detail::LineCoverage own{g.lambda(k), 0.0, true};
        for (int j = 0; j < g.n_det; ++j) {
            const Vec2 b = rotate(Vec2{g.u(j), g.h}, th);
            detail::LineCoverage self = own;
            self.u = g.u(j);
            const double mine = detail::coverage_weight(g, self, spec);
            double total = 0.0;
            for (int m = 1; m <= g.t_segments; ++m)
                total += m == segment ? mine
                                      : detail::coverage_weight(g, detail::coverage_in_segment(g, m, a, b), spec);
            w(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) = total > 0.0 ? mine / total : 0.0;
        }
    }
    return w;
}

/// Limited-angle reconstruction of one segment on `grid`, always using the
/// geometry stored in the sinogram.
inline SegmentImage reconstruct_segment(const Sinogram& sino, const ImageGrid& grid, const FilterSpec& spec = {})
{
    sino.validate();
    grid.validate();
    const ScanGeometry& g = sino.geom;
    g.validate();
    require(sino.segment >= 1 && sino.segment <= g.t_segments, "reconstruct_segment: invalid segment");

    const double D = g.source_to_detector();
    const double dlambda = g.lambda_step();
    const double lambda0 = g.lambda(0);
    const std::size_t nv = static_cast<std::size_t>(g.n_views);

    Matrix q = redundancy_weights(g, sino.segment, spec);
    for (std::size_t i = 0; i < q.size(); ++i)
        q.data()[i] *= sino.values.data()[i];

    // Ray directions t = u - lambda.  Directions are thinned as long as the
    // angular step stays below one pixel at the grid edge.
    const double t_lo = g.u(0) - g.lambda(g.n_views - 1);
    const double t_hi = g.u(g.n_det - 1) - lambda0;
    const double dt = g.du * std::max(1.0, std::floor(std::min(grid.dx(), grid.dy()) * D / (grid.half_extent * g.du * std::sqrt(2.0))));
    const auto n_dir = static_cast<std::size_t>(std::floor((t_hi - t_lo) / dt)) + 1;

    // par(m, k): line of direction t_m through source position k.
    Matrix par(n_dir, nv);
    for (std::size_t m = 0; m < n_dir; ++m) {
        const double t = t_lo + static_cast<double>(m) * dt;
        for (std::size_t k = 0; k < nv; ++k) {
            const double u = g.lambda(static_cast<int>(k)) + t;
            par(m, k) = detail::row_sample(q.row(k), (u - g.u(0)) / g.du);
        }
    }

    // Filter each direction along the trajectory; line spacing there is
    // dlambda cos(phi).
    Matrix filtered(n_dir, nv);
    double shift = 0.0;
    for (std::size_t m = 0; m < n_dir; ++m) {
        const double t = t_lo + static_cast<double>(m) * dt;
        const double dr = dlambda * D / std::hypot(D, t);
        Matrix one(1, nv);
        std::copy(par.row(m).begin(), par.row(m).end(), one.row(0).begin());
        auto [row, sh] = detail::ramp_filter_rows(one, dr, spec);
        shift = sh;
        const double dphi = std::atan((t + 0.5 * dt) / D) - std::atan((t - 0.5 * dt) / D);
        for (std::size_t k = 0; k < nv; ++k)
            filtered(m, k) = row(0, k) * dphi;
    }

    auto img = SegmentImage::zeros(grid, sino.segment, sino.theta);
    const double th = g.theta(sino.segment);
    const double c = std::cos(th);
    const double s = std::sin(th);
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t col = 0; col < grid.cols; ++col) {
            const Vec2 p = grid.center_of(r, col);
            const double xl = c * p.x + s * p.y;
            const double L = -s * p.x + c * p.y + g.l;
            // Source position of the direction-t line through the pixel:
            // lambda = xl - t L / D, linear in the direction index.
            const double pos0 = (xl - t_lo * L / D - lambda0) / dlambda - shift;
            const double step = -dt * L / (D * dlambda);
            double acc = 0.0;
            for (std::size_t m = 0; m < n_dir; ++m)
                acc += detail::row_sample(filtered.row(m), pos0 + static_cast<double>(m) * step);
            img.values(r, col) = acc;
        }
    }
    return img;
}

/// Weighted sum of segment images on a common grid.  Empty `weights` means
/// a plain sum, which is the full-scan image when the segments were
/// reconstructed with redundancy weights.
inline SegmentImage assemble_smlct(std::span<const SegmentImage> images, std::span<const double> weights = {})
{
    require(!images.empty(), "assemble_smlct: no images");
    require(weights.empty() || weights.size() == images.size(), "assemble_smlct: weight count mismatch");
    auto out = SegmentImage::zeros(images.front().grid);
    for (std::size_t i = 0; i < images.size(); ++i) {
        require(images[i].grid == out.grid && images[i].values.same_shape(out.values),
                "assemble_smlct: images are on different grids");
        const double w = weights.empty() ? 1.0 : weights[i];
        for (std::size_t p = 0; p < out.values.size(); ++p)
            out.values.data()[p] += w * images[i].values.data()[p];
    }
    return out;
}

/// Full-scan assembly that insists on exactly one image per segment 1..T.
inline SegmentImage assemble_smlct(std::span<const SegmentImage> images, const ScanGeometry& geom)
{
    std::set<int> seen;
    for (const auto& img : images) {
        require(img.segment >= 1 && img.segment <= geom.t_segments, "assemble_smlct: unknown segment index");
        require(seen.insert(img.segment).second, "assemble_smlct: duplicate segment");
    }
    require(static_cast<int>(seen.size()) == geom.t_segments, "assemble_smlct: missing segments");
    return assemble_smlct(images);
}

// ---------------------------------------------------------------------------
// Rotated CT.

enum class RctMode { full, half };

namespace detail {

inline double arc_span(const ArcSinogram& arc)
{
    if (arc.betas.size() < 2)
        return 0.0;
    return arc.betas.back() - arc.betas.front();
}

inline double wrap_angle(double a)
{
    a = std::fmod(a + pi, 2.0 * pi);
    if (a < 0)
        a += 2.0 * pi;
    return a - pi;
}

inline SegmentImage backproject_arc(const ArcSinogram& arc, const ImageGrid& grid, const FilterSpec& spec,
                                    bool periodic)
{
    const RctGeometry& g = arc.geom;
    const double D = g.l + g.h;
    Matrix weighted = arc.values;
    for (std::size_t k = 0; k < weighted.rows(); ++k)
        for (int j = 0; j < g.n_det; ++j) {
            const double u = g.u(j);
            weighted(k, static_cast<std::size_t>(j)) *= D / std::sqrt(D * D + u * u);
        }
    const auto [filtered, shift] = ramp_filter_rows(weighted, g.du, spec);

    // Quadrature weights over gantry angle.
    const std::size_t n = arc.betas.size();
    std::vector<double> dbeta(n);
    if (periodic) {
        std::fill(dbeta.begin(), dbeta.end(), 2.0 * pi / static_cast<double>(n));
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            const double lo = k == 0 ? arc.betas[0] : 0.5 * (arc.betas[k - 1] + arc.betas[k]);
            const double hi = k + 1 == n ? arc.betas[n - 1] : 0.5 * (arc.betas[k] + arc.betas[k + 1]);
            dbeta[k] = hi - lo;
        }
    }

    auto img = SegmentImage::zeros(grid, 0, arc.betas.front() + 0.5 * arc_span(arc));
    const double u0 = g.u(0);
    for (std::size_t k = 0; k < n; ++k) {
        const double c = std::cos(arc.betas[k]);
        const double s = std::sin(arc.betas[k]);
        const auto row = filtered.row(k);
        for (std::size_t r = 0; r < grid.rows; ++r) {
            for (std::size_t col = 0; col < grid.cols; ++col) {
                const Vec2 p = grid.center_of(r, col);
                const double xl = c * p.x + s * p.y;
                const double U = -s * p.x + c * p.y + g.l;
                if (U <= 0.0)
                    continue;
                const double ustar = D * xl / U;
                img.values(r, col) +=
                    0.5 * dbeta[k] * g.l * D / (U * U) * row_sample(row, (ustar - u0) / g.du - shift);
            }
        }
    }
    return img;
}

} // namespace detail

/// Fan-beam FBP of rotated-CT data.  `full` takes one orbit covering 2 pi and
/// returns one image; `half` takes the two symmetric arcs [-g, g] and
/// [pi - g, pi + g] (g = half fan angle) and returns one image per arc.
inline std::vector<SegmentImage> reconstruct_rct(std::span<const ArcSinogram> arcs, const ImageGrid& grid,
                                                 RctMode mode, const FilterSpec& spec = {})
{
    grid.validate();
    std::vector<SegmentImage> out;
    if (mode == RctMode::full) {
        require(arcs.size() == 1, "reconstruct_rct: full mode takes a single orbit");
        const auto& arc = arcs[0];
        arc.geom.validate();
        const std::size_t n = arc.betas.size();
        require(n >= 2, "reconstruct_rct: insufficient angular range");
        const double step = 2.0 * pi / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k)
            require(std::abs(arc.betas[k] - arc.betas[0] - step * static_cast<double>(k)) < 1e-9,
                    "reconstruct_rct: insufficient angular range for a full scan");
        out.push_back(detail::backproject_arc(arc, grid, spec, true));
        out.back().segment = 1;
        return out;
    }
    require(arcs.size() == 2, "reconstruct_rct: half mode takes two symmetric arcs");
    const double centers[2] = {0.0, pi};
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& arc = arcs[i];
        arc.geom.validate();
        const double gm = arc.geom.gamma_max();
        require(detail::arc_span(arc) >= 2.0 * gm * (1.0 - 1e-9), "reconstruct_rct: insufficient angular range");
        const double mid = arc.betas.front() + 0.5 * detail::arc_span(arc);
        require(std::abs(detail::wrap_angle(mid - centers[i])) < 1e-6,
                "reconstruct_rct: arcs must be centered on 0 and pi");
        out.push_back(detail::backproject_arc(arc, grid, spec, false));
        out.back().segment = static_cast<int>(i) + 1;
    }
    return out;
}

} // namespace smlct
