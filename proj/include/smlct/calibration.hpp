#pragma once

// Estimation of the source-distance bias and trajectory shift from the
// relative displacement of symmetric segment images, and the rotated-CT
// center-of-rotation counterpart.

#include "smlct/core.hpp"
#include "smlct/geometry.hpp"
#include "smlct/image.hpp"
#include "smlct/projector.hpp"
#include "smlct/registration.hpp"

#include <future>
#include <map>
#include <optional>
#include <vector>

namespace smlct {

struct ImagePair {
    SegmentImage first;  // segment j, rotated into segment 1's frame
    SegmentImage second; // segment j + T/2, same rotation
    int j = 1;
    double theta = 0.0;
};

struct PairSet {
    std::vector<ImagePair> pairs;
    int t = 0;
};

/// Pairs segment j with j + T/2 and rotates both by -theta_j about the grid
/// center.  Pair 1 is passed through untouched.
inline PairSet pair_and_rotate(std::span<const SegmentImage> images, const ScanGeometry& geom)
{
    const int t = geom.t_segments;
    require(t >= 2 && t % 2 == 0, "pair_and_rotate: segment count must be even");
    require(static_cast<int>(images.size()) == t, "pair_and_rotate: need exactly one image per segment");
    std::vector<const SegmentImage*> by_segment(static_cast<std::size_t>(t) + 1, nullptr);
    for (const auto& img : images) {
        require(img.segment >= 1 && img.segment <= t, "pair_and_rotate: segment index out of range");
        require(by_segment[static_cast<std::size_t>(img.segment)] == nullptr, "pair_and_rotate: duplicate segment");
        by_segment[static_cast<std::size_t>(img.segment)] = &img;
    }
    PairSet out;
    out.t = t;
    for (int j = 1; j <= t / 2; ++j) {
        const double th = geom.theta(j);
        const auto& a = *by_segment[static_cast<std::size_t>(j)];
        const auto& b = *by_segment[static_cast<std::size_t>(j + t / 2)];
        require(a.grid == b.grid, "pair_and_rotate: paired images are on different grids");
        if (j == 1)
            out.pairs.push_back({a, b, j, th});
        else
            out.pairs.push_back({rotate_image(a, -th), rotate_image(b, -th), j, th});
    }
    return out;
}

inline int min_survivors(int t) { return std::max(1, (t + 3) / 4); }

namespace detail {

inline double median(std::vector<double> v)
{
    require(!v.empty(), "median: empty input");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

struct OutlierSplit {
    std::vector<OffsetEstimate> kept;
    std::vector<OffsetEstimate> removed;
};

/// Drops estimates more than `tolerance` pixels from the per-component median,
/// keeping at least ceil(t/4) of them (the ones closest to the median).
inline OutlierSplit remove_outliers(std::span<const OffsetEstimate> estimates, int t, double tolerance = 3.0)
{
    require(!estimates.empty(), "remove_outliers: no estimates");
    std::vector<double> xs, ys;
    for (const auto& e : estimates) {
        xs.push_back(e.np_x);
        ys.push_back(e.np_y);
    }
    const double mx = detail::median(xs);
    const double my = detail::median(ys);
    auto deviation = [&](const OffsetEstimate& e) { return std::max(std::abs(e.np_x - mx), std::abs(e.np_y - my)); };

    std::vector<std::size_t> order(estimates.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return deviation(estimates[a]) < deviation(estimates[b]); });

    const std::size_t floor = std::min<std::size_t>(estimates.size(), static_cast<std::size_t>(min_survivors(t)));
    std::vector<bool> keep(estimates.size(), false);
    std::size_t kept = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const std::size_t i = order[rank];
        if (deviation(estimates[i]) <= tolerance || kept < floor) {
            keep[i] = true;
            ++kept;
        }
    }
    OutlierSplit out;
    for (std::size_t i = 0; i < estimates.size(); ++i)
        (keep[i] ? out.kept : out.removed).push_back(estimates[i]);
    return out;
}

/// Per component: the most frequent value if it occurs at least ceil(t/4)
/// times, otherwise the mean.  Equally frequent values resolve to the one
/// nearest the mean (then the smaller).
inline double select_component(std::span<const double> values, int t)
{
    require(!values.empty(), "select_offsets: no values");
    double mean = 0.0;
    for (double v : values)
        mean += v;
    mean /= static_cast<double>(values.size());
    std::map<double, int> counts;
    for (double v : values)
        ++counts[v];
    double mode = 0.0;
    int best = 0;
    for (const auto& [v, c] : counts)
        if (c > best || (c == best && std::abs(v - mean) < std::abs(mode - mean))) {
            mode = v;
            best = c;
        }
    return best >= min_survivors(t) ? mode : mean;
}

inline std::pair<double, double> select_offsets(std::span<const OffsetEstimate> estimates, int t)
{
    std::vector<double> xs, ys;
    for (const auto& e : estimates) {
        xs.push_back(e.np_x);
        ys.push_back(e.np_y);
    }
    return {select_component(xs, t), select_component(ys, t)};
}

struct ErrorEstimate {
    double dl_hat = 0.0; // mm
    double ds_hat = 0.0; // mm
};

/// Converts a pair offset into the source-distance bias and trajectory shift.
/// Half the pair offset is the displacement of either image; the factor
/// (l + h)/h carries it from the iso-center plane to the source line.
inline ErrorEstimate invert_errors(std::pair<double, double> np, const ScanGeometry& geom, const ImageGrid& grid)
{
    geom.validate();
    grid.validate();
    const double mag = (geom.l + geom.h) / geom.h;
    return {-mag * np.second * grid.dy() / 2.0, mag * np.first * grid.dx() / 2.0};
}

/// Detector offset (mm) from the column offset between the two half-scan arc
/// images; the factor (l + h)/l carries it to the detector plane.
inline double invert_cor(double np_x, const RctGeometry& geom, const ImageGrid& grid)
{
    geom.validate();
    grid.validate();
    return (geom.l + geom.h) / geom.l * np_x * grid.dx() / 2.0;
}

struct CalibrationResult {
    std::pair<double, double> np_final{0.0, 0.0};
    double dl_hat = 0.0;
    double ds_hat = 0.0;
    std::vector<OffsetEstimate> per_pair;
    std::vector<OffsetEstimate> outliers_removed;
    std::vector<CCSMap> surfaces; // one per pair, as registered
    bool all_unique = true;
};

/// Nominal geometry with the estimated bias folded in: l + dl_hat, and the
/// trajectory moved by ds_hat.
inline ScanGeometry apply_correction(const ScanGeometry& geom, const CalibrationResult& result)
{
    require(std::isfinite(result.dl_hat) && std::isfinite(result.ds_hat), "apply_correction: non-finite estimate");
    ScanGeometry out = geom;
    out.l += result.dl_hat;
    out.lambda_offset += result.ds_hat;
    out.validate();
    return out;
}

/// Registration settings; unset mask fields take the geometry defaults
/// (half-angle alpha_vis of the FOV, u0 = image width / 8).
struct MaskParams {
    std::optional<double> alpha_band;
    std::optional<std::size_t> u0;
    double apodize_from = 0.9; // see apodize_fov
};

inline BowTieMask default_mask(const ScanGeometry& geom, const ImageGrid& grid, const MaskParams& params)
{
    const double alpha = params.alpha_band ? *params.alpha_band : visible_angles(geom, fov_radius(geom)).alpha_vis;
    const std::size_t u0 = params.u0 ? *params.u0 : grid.cols / 8;
    return bow_tie_mask(grid.rows, grid.cols, alpha, u0);
}

struct PairRegistration {
    OffsetEstimate offset;
    CCSMap surface;
};

inline std::vector<PairRegistration> register_pairs(const PairSet& set, const BowTieMask& mask,
                                                    double apodize_from = 0.9)
{
    std::vector<std::future<PairRegistration>> jobs;
    for (const auto& p : set.pairs)
        jobs.push_back(std::async(std::launch::async, [&p, &mask, apodize_from, t = set.t] {
            const auto& grid = p.first.grid;
            PairRegistration out;
            out.surface = gcc_phat_vw(apodize_fov(p.first.values, grid, apodize_from),
                                      apodize_fov(p.second.values, grid, apodize_from), mask);
            out.offset = peak_offset(out.surface);
            out.offset.pair = {p.j, p.j + t / 2};
            return out;
        }));
    std::vector<PairRegistration> out;
    for (auto& j : jobs)
        out.push_back(j.get());
    return out;
}

/// Pairing, rotation, registration, outlier removal, offset selection and
/// inversion, in that order.
inline CalibrationResult run_algorithm_1(std::span<const SegmentImage> images, const ScanGeometry& geom,
                                         const ImageGrid& grid, const MaskParams& params = {})
{
    const PairSet set = pair_and_rotate(images, geom);
    require(set.pairs.front().first.grid == grid, "run_algorithm_1: images are not on the given grid");
    const BowTieMask mask = default_mask(geom, grid, params);

    CalibrationResult res;
    for (auto& r : register_pairs(set, mask, params.apodize_from)) {
        res.per_pair.push_back(r.offset);
        res.surfaces.push_back(std::move(r.surface));
    }
    for (const auto& e : res.per_pair)
        if (!e.unique) {
            res.all_unique = false;
            warn("registration of pair " + std::to_string(e.pair.first) + "-" + std::to_string(e.pair.second) +
                 " has no unique peak");
        }
    auto split = remove_outliers(res.per_pair, set.t);
    res.outliers_removed = split.removed;
    res.np_final = select_offsets(split.kept, set.t);
    const auto est = invert_errors(res.np_final, geom, grid);
    res.dl_hat = est.dl_hat;
    res.ds_hat = est.ds_hat;
    return res;
}

struct CorResult {
    OffsetEstimate offset;
    double du_hat = 0.0; // mm
};

/// Registers the two half-scan arc images (arc around 0 first) and converts
/// the column offset into a detector offset.
/// The default mask half-angle is the half fan angle.
inline CorResult estimate_cor(const SegmentImage& arc0, const SegmentImage& arc_pi, const RctGeometry& geom,
                              const MaskParams& params = {})
{
    require(arc0.grid == arc_pi.grid, "estimate_cor: images are on different grids");
    const auto& grid = arc0.grid;
    const BowTieMask mask = bow_tie_mask(grid.rows, grid.cols, params.alpha_band.value_or(geom.gamma_max()),
                                         params.u0.value_or(grid.cols / 8));
    CorResult out;
    out.offset = peak_offset(gcc_phat_vw(apodize_fov(arc0.values, grid, params.apodize_from),
                                         apodize_fov(arc_pi.values, grid, params.apodize_from), mask));
    out.offset.pair = {1, 2};
    out.du_hat = invert_cor(out.offset.np_x, geom, grid);
    return out;
}

} // namespace smlct
