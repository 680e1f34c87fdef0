#pragma once

// Fan-beam forward projection along linear trajectory segments (and circular
// arcs for conventional rotated CT), with geometric-error injection and
// Poisson noise.

#include "smlct/core.hpp"
#include "smlct/geometry.hpp"
#include "smlct/phantom.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace smlct {

/// Projections of one segment, rows = views (lambda), cols = detector bins.
/// `geom` is the geometry the reconstruction should assume; the errors used
/// to synthesize the data are kept separately for bookkeeping only.
struct Sinogram {
    int segment = 1;
    double theta = 0.0;
    Matrix values;
    std::vector<double> lambda_samples;
    ScanGeometry geom;
    ErrorSet simulated_errors;

    void validate() const
    {
        require(values.rows() == static_cast<std::size_t>(geom.n_views) &&
                    values.cols() == static_cast<std::size_t>(geom.n_det),
                "Sinogram: dimensions do not match geometry");
        require(lambda_samples.size() == static_cast<std::size_t>(geom.n_views),
                "Sinogram: lambda grid does not match geometry");
        for (double v : values.data())
            require(std::isfinite(v), "Sinogram: non-finite value");
    }
};

struct NoiseModel {
    double photons = 5e3; // unattenuated counts per bin
    std::uint64_t seed = 0;
};

namespace detail {

inline void warn_out_of_plane(const ErrorSet& e)
{
    if (e.has_out_of_plane())
        warn("dv, theta_in and theta_out act out of plane and are ignored by the 2D model");
}

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
    return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

} // namespace detail

inline Sinogram forward_project_segment(const EllipsePhantom& phantom, const ScanGeometry& geom,
                                        const ErrorSet& errors, int segment)
{
    geom.validate();
    errors.validate();
    require(segment >= 1 && segment <= geom.t_segments, "forward_project_segment: invalid segment index");
    detail::warn_out_of_plane(errors);

    Sinogram sino;
    sino.segment = segment;
    sino.theta = geom.theta(segment);
    sino.geom = geom;
    sino.simulated_errors = errors;
    sino.values = Matrix(static_cast<std::size_t>(geom.n_views), static_cast<std::size_t>(geom.n_det));
    sino.lambda_samples.resize(static_cast<std::size_t>(geom.n_views));
    std::vector<Vec2> bins(static_cast<std::size_t>(geom.n_det));
    for (int j = 0; j < geom.n_det; ++j)
        bins[static_cast<std::size_t>(j)] = detector_bin_pose(geom, segment, j, errors).point;
    for (int k = 0; k < geom.n_views; ++k) {
        sino.lambda_samples[static_cast<std::size_t>(k)] = geom.lambda(k);
        const Vec2 src = source_pose(geom, segment, geom.lambda(k), errors).point;
        for (int j = 0; j < geom.n_det; ++j)
            sino.values(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) =
                line_integral(phantom, make_ray(src, bins[static_cast<std::size_t>(j)]));
    }
    return sino;
}

/// Replaces every bin by -ln(max(N, 1)/I0) with N ~ Poisson(I0 exp(-p)).  One
/// RNG stream per (seed, segment, view) so results do not depend on the order
/// rows are processed in.
inline Matrix poisson_noise(const Matrix& line_integrals, const NoiseModel& model, std::uint64_t stream)
{
    require(model.photons > 0.0, "NoiseModel: photons must be positive");
    Matrix out = line_integrals;
    for (std::size_t k = 0; k < out.rows(); ++k) {
        std::mt19937_64 rng(detail::stream_key(model.seed, stream, k));
        for (double& v : out.row(k)) {
            std::poisson_distribution<long long> draw(model.photons * std::exp(-v));
            const long long n = std::max<long long>(draw(rng), 1);
            v = -std::log(static_cast<double>(n) / model.photons);
        }
    }
    return out;
}

inline Sinogram apply_poisson_noise(const Sinogram& sino, const NoiseModel& model)
{
    Sinogram out = sino;
    out.values = poisson_noise(sino.values, model, static_cast<std::uint64_t>(sino.segment));
    return out;
}

// ---------------------------------------------------------------------------
// Conventional rotated CT (circular source orbit, flat detector).

struct RctGeometry {
    double l = 0.0; // iso-center to source
    double h = 0.0; // iso-center to detector
    int n_det = 0;
    double du = 0.0;

    double d() const { return 0.5 * n_det * du; }
    double u(int j) const { return (j - 0.5 * (n_det - 1)) * du; }
    /// Half fan angle.
    double gamma_max() const { return std::atan(d() / (l + h)); }
    /// Radius of the circle every view covers.
    double fov_radius() const { return l * d() / std::hypot(l + h, d()); }

    void validate() const
    {
        require(l > 0.0 && h > 0.0 && n_det > 0 && du > 0.0, "RctGeometry: invalid parameters");
    }
};

/// Projections over a set of gantry angles.  Source at R(beta)(0, -l), bin j
/// at R(beta)(u_j, h).
struct ArcSinogram {
    RctGeometry geom;
    std::vector<double> betas;
    Matrix values;
    double simulated_du_offset = 0.0;
};

/// Evenly spaced gantry angles over [start, end], endpoints included.
inline std::vector<double> arc_angles(double start, double end, int n)
{
    require(n >= 2 && end > start, "arc_angles: need n >= 2 and end > start");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        out[static_cast<std::size_t>(k)] = start + (end - start) * k / (n - 1);
    return out;
}

/// Full orbit, n views over [0, 2 pi).
inline std::vector<double> full_orbit_angles(int n)
{
    require(n >= 2, "full_orbit_angles: need n >= 2");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        out[static_cast<std::size_t>(k)] = 2.0 * pi * k / n;
    return out;
}

inline ArcSinogram forward_project_arc(const EllipsePhantom& phantom, const RctGeometry& geom,
                                       std::vector<double> betas, double du_offset = 0.0)
{
    geom.validate();
    require(!betas.empty(), "forward_project_arc: no views");
    ArcSinogram out;
    out.geom = geom;
    out.betas = std::move(betas);
    out.simulated_du_offset = du_offset;
    out.values = Matrix(out.betas.size(), static_cast<std::size_t>(geom.n_det));
    for (std::size_t k = 0; k < out.betas.size(); ++k) {
        const double beta = out.betas[k];
        const Vec2 src = rotate(Vec2{0.0, -geom.l}, beta);
        for (int j = 0; j < geom.n_det; ++j) {
            const Vec2 bin = rotate(Vec2{geom.u(j) + du_offset, geom.h}, beta);
            out.values(k, static_cast<std::size_t>(j)) = line_integral(phantom, make_ray(src, bin));
        }
    }
    return out;
}

inline ArcSinogram apply_poisson_noise(const ArcSinogram& sino, const NoiseModel& model, std::uint64_t stream = 0)
{
    ArcSinogram out = sino;
    out.values = poisson_noise(sino.values, model, stream);
    return out;
}

} // namespace smlct
