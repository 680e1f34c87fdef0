#pragma once

// Rigid-translation registration of image pairs: phase correlation restricted
// to the valid (bow-tie) frequency region, plus whitened full-band, plain
// cross-correlation and normalized cross-correlation baselines.
//
// Correlation surfaces use the centered layout: element (M/2 + dr, N/2 + dc)
// scores the hypothesis that g equals f displaced by dr rows and dc columns
// (circularly).  Peaks are reported as (np_x, np_y) = (dc, -dr): x follows the
// column axis, y points up.

#include "smlct/core.hpp"
#include "smlct/fft.hpp"
#include "smlct/image.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>

namespace smlct {

/// Binary pass mask over a centered spectrum.  Frequencies are in index units;
/// both image axes span the same physical length, so index units are
/// proportional to physical frequency on either axis.
struct BowTieMask {
    std::size_t m = 0; // rows
    std::size_t n = 0; // cols
    double alpha_band = 0.0;
    std::size_t u0 = 0;
    Array2D<unsigned char> values;

    double passband_fraction() const
    {
        std::size_t on = 0;
        for (unsigned char v : values.data())
            on += v;
        return static_cast<double>(on) / static_cast<double>(values.size());
    }
};

namespace detail {

inline long centered_index(std::size_t i, std::size_t len)
{
    return static_cast<long>(i) - static_cast<long>(len / 2);
}

// Moves the zero-frequency (or zero-lag) element to (m/2, n/2).
template <class T>
Array2D<T> fftshift(const Array2D<T>& a)
{
    Array2D<T> out(a.rows(), a.cols());
    const std::size_t hr = a.rows() / 2;
    const std::size_t hc = a.cols() / 2;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            out((r + hr) % a.rows(), (c + hc) % a.cols()) = a(r, c);
    return out;
}

template <class T>
Array2D<T> ifftshift(const Array2D<T>& a)
{
    Array2D<T> out(a.rows(), a.cols());
    const std::size_t hr = a.rows() / 2;
    const std::size_t hc = a.cols() / 2;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            out(r, c) = a((r + hr) % a.rows(), (c + hc) % a.cols());
    return out;
}

} // namespace detail

/// Double wedge |v| <= |u| tan(alpha_band) around the horizontal-frequency
/// axis (boundary and DC included), with the outermost u0 frequency columns on
/// each side cleared.  The column band is |u| > n/2 - u0 so that the mask
/// stays point symmetric.
inline BowTieMask bow_tie_mask(std::size_t m, std::size_t n, double alpha_band, std::size_t u0)
{
    require(m >= 2 && n >= 2, "bow_tie_mask: invalid dimensions");
    require(alpha_band > 0.0 && alpha_band < pi / 2, "bow_tie_mask: alpha_band must lie in (0, pi/2)");
    require(u0 < n / 2, "bow_tie_mask: u0 must be below n/2");
    BowTieMask mask{m, n, alpha_band, u0, Array2D<unsigned char>(m, n)};
    const double slope = std::tan(alpha_band);
    const long cut = static_cast<long>(n / 2) - static_cast<long>(u0);
    for (std::size_t r = 0; r < m; ++r) {
        const long v = std::labs(detail::centered_index(r, m));
        for (std::size_t c = 0; c < n; ++c) {
            const long u = std::labs(detail::centered_index(c, n));
            const bool wedge = static_cast<double>(v) <= static_cast<double>(u) * slope * (1.0 + 1e-12);
            const bool kept = u0 == 0 || u <= cut;
            mask.values(r, c) = wedge && kept ? 1 : 0;
        }
    }
    return mask;
}

/// Raised-cosine radial window: 1 inside `inner` times the grid half extent,
/// falling to 0 at the half extent.  Reconstructions are only meaningful in
/// the FOV disk, and the hard image border would otherwise correlate with
/// itself at zero lag.  `inner` >= 1 leaves the image untouched.
inline Matrix apodize_fov(const Matrix& img, const ImageGrid& grid, double inner = 0.9)
{
    require(img.rows() == grid.rows && img.cols() == grid.cols, "apodize_fov: image does not match grid");
    require(inner > 0.0, "apodize_fov: inner fraction must be positive");
    if (inner >= 1.0)
        return img;
    Matrix out = img;
    const double r0 = inner * grid.half_extent;
    const double r1 = grid.half_extent;
    for (std::size_t r = 0; r < grid.rows; ++r)
        for (std::size_t c = 0; c < grid.cols; ++c) {
            const double rad = norm(grid.center_of(r, c));
            if (rad >= r1)
                out(r, c) = 0.0;
            else if (rad > r0)
                out(r, c) *= 0.5 + 0.5 * std::cos(pi * (rad - r0) / (r1 - r0));
        }
    return out;
}

enum class CcsMethod { gcc_phat_vw, gcc_phat_gw, cc, ncc };

inline std::string to_string(CcsMethod m)
{
    switch (m) {
    case CcsMethod::gcc_phat_vw: return "gcc-phat-vw";
    case CcsMethod::gcc_phat_gw: return "gcc-phat-gw";
    case CcsMethod::cc: return "cc";
    case CcsMethod::ncc: return "ncc";
    }
    return "?";
}

struct CCSMap {
    Matrix values; // centered layout
    CcsMethod method = CcsMethod::cc;
    double imag_residue = 0.0; // largest |imag| left by the inverse transform
};

namespace detail {

inline void check_pair(const Matrix& f, const Matrix& g)
{
    require(!f.empty() && f.same_shape(g), "registration: image dimensions differ");
}

// Inverse transform of a cross spectrum into a centered real surface.
inline CCSMap finish_surface(ComplexMatrix spectrum, CcsMethod method)
{
    fft2(spectrum, FftDirection::inverse);
    CCSMap out;
    out.method = method;
    Matrix re(spectrum.rows(), spectrum.cols());
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        re.data()[i] = spectrum.data()[i].real();
        out.imag_residue = std::max(out.imag_residue, std::abs(spectrum.data()[i].imag()));
    }
    out.values = fftshift(re);
    return out;
}

inline ComplexMatrix cross_spectrum(const Matrix& f, const Matrix& g)
{
    const ComplexMatrix F = fft2(f);
    ComplexMatrix G = fft2(g);
    for (std::size_t i = 0; i < G.size(); ++i)
        G.data()[i] *= std::conj(F.data()[i]);
    return G;
}

inline CCSMap phase_correlation(const Matrix& f, const Matrix& g, const BowTieMask* mask, CcsMethod method)
{
    check_pair(f, g);
    ComplexMatrix G = cross_spectrum(f, g);
    double peak = 0.0;
    for (const auto& v : G.data())
        peak = std::max(peak, std::abs(v));
    const double floor = 1e-12 * peak;
    // Mask is stored centered; spectrum is in natural order.
    const Array2D<unsigned char> pass = mask ? ifftshift(mask->values) : Array2D<unsigned char>();
    for (std::size_t i = 0; i < G.size(); ++i) {
        auto& v = G.data()[i];
        const double mag = std::abs(v);
        if (mag <= floor || (mask && pass.data()[i] == 0))
            v = 0.0;
        else
            v /= mag;
    }
    return finish_surface(std::move(G), method);
}

} // namespace detail

/// Phase correlation weighted by the bow-tie mask.
inline CCSMap gcc_phat_vw(const Matrix& f, const Matrix& g, const BowTieMask& mask)
{
    require(mask.values.rows() == f.rows() && mask.values.cols() == f.cols(), "gcc_phat_vw: mask dimensions differ");
    return detail::phase_correlation(f, g, &mask, CcsMethod::gcc_phat_vw);
}

/// Phase correlation over the full band.
inline CCSMap gcc_phat_gw(const Matrix& f, const Matrix& g)
{
    return detail::phase_correlation(f, g, nullptr, CcsMethod::gcc_phat_gw);
}

/// Plain circular cross-correlation: sum_x f(x) g(x + s).
inline CCSMap cc_surface(const Matrix& f, const Matrix& g)
{
    detail::check_pair(f, g);
    return detail::finish_surface(detail::cross_spectrum(f, g), CcsMethod::cc);
}

/// Zero-mean circular cross-correlation normalized by both image energies;
/// values lie in [-1, 1].
inline CCSMap ncc_surface(const Matrix& f, const Matrix& g)
{
    detail::check_pair(f, g);
    auto centered = [](const Matrix& a) {
        double mean = 0.0;
        for (double v : a.data())
            mean += v;
        mean /= static_cast<double>(a.size());
        Matrix out = a;
        double energy = 0.0;
        for (double& v : out.data()) {
            v -= mean;
            energy += v * v;
        }
        return std::pair{out, std::sqrt(energy)};
    };
    auto [fc, ef] = centered(f);
    auto [gc, eg] = centered(g);
    require(ef > 0.0 && eg > 0.0, "ncc_surface: zero-variance image");
    CCSMap out = detail::finish_surface(detail::cross_spectrum(fc, gc), CcsMethod::ncc);
    for (double& v : out.values.data())
        v = std::clamp(v / (ef * eg), -1.0, 1.0);
    return out;
}

inline CCSMap ccs_surface(CcsMethod method, const Matrix& f, const Matrix& g, const BowTieMask* mask = nullptr)
{
    switch (method) {
    case CcsMethod::gcc_phat_vw:
        require(mask != nullptr, "ccs_surface: gcc-phat-vw needs a mask");
        return gcc_phat_vw(f, g, *mask);
    case CcsMethod::gcc_phat_gw: return gcc_phat_gw(f, g);
    case CcsMethod::cc: return cc_surface(f, g);
    case CcsMethod::ncc: return ncc_surface(f, g);
    }
    throw Error("ccs_surface: unknown method");
}

struct OffsetEstimate {
    int np_x = 0;
    int np_y = 0;
    double peak_value = 0.0;
    std::pair<int, int> pair{0, 0};
    bool unique = true; // false when the maximum is attained more than once
};

/// Integer location of the surface maximum.  Equal maxima resolve to the
/// smallest |offset|, then the smallest np_y, then the smallest np_x; such
/// estimates are flagged as not unique.
inline OffsetEstimate peak_offset(const CCSMap& ccs)
{
    const Matrix& v = ccs.values;
    require(!v.empty(), "peak_offset: empty surface");
    double hi = -std::numeric_limits<double>::infinity();
    double scale = 0.0;
    for (double x : v.data()) {
        require(std::isfinite(x), "peak_offset: non-finite surface");
        hi = std::max(hi, x);
        scale = std::max(scale, std::abs(x));
    }
    const double tol = 1e-12 * std::max(scale, 1e-300);
    OffsetEstimate best;
    best.peak_value = hi;
    int count = 0;
    for (std::size_t r = 0; r < v.rows(); ++r) {
        for (std::size_t c = 0; c < v.cols(); ++c) {
            if (v(r, c) < hi - tol)
                continue;
            const int x = static_cast<int>(detail::centered_index(c, v.cols()));
            const int y = -static_cast<int>(detail::centered_index(r, v.rows()));
            const auto key = [](int px, int py) { return std::tuple{px * px + py * py, py, px}; };
            if (count == 0 || key(x, y) < key(best.np_x, best.np_y)) {
                best.np_x = x;
                best.np_y = y;
            }
            ++count;
        }
    }
    best.unique = count == 1;
    return best;
}

/// Ratio of the highest peak to the highest value outside its
/// (2 radius + 1)^2 neighborhood.
inline double peak_sharpness(const CCSMap& ccs, int radius = 1)
{
    const OffsetEstimate p = peak_offset(ccs);
    const Matrix& v = ccs.values;
    const long pr = static_cast<long>(v.rows() / 2) - p.np_y;
    const long pc = static_cast<long>(v.cols() / 2) + p.np_x;
    double second = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < v.rows(); ++r)
        for (std::size_t c = 0; c < v.cols(); ++c)
            if (std::labs(static_cast<long>(r) - pr) > radius || std::labs(static_cast<long>(c) - pc) > radius)
                second = std::max(second, v(r, c));
    return second > 0.0 ? p.peak_value / second : std::numeric_limits<double>::infinity();
}

} // namespace smlct
