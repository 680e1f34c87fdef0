#pragma once

// End-to-end experiments: simulate, reconstruct, calibrate, correct, report.

#include "smlct/calibration.hpp"
#include "smlct/config.hpp"
#include "smlct/metrics.hpp"
#include "smlct/phantom.hpp"
#include "smlct/projector.hpp"
#include "smlct/recon.hpp"

#include <future>
#include <string>
#include <vector>

namespace smlct {

inline EllipsePhantom make_phantom(const PhantomConfig& cfg, double fov)
{
    EllipsePhantom ph = cfg.file.empty() ? phantom_preset(cfg.preset, cfg.radius_fraction * fov, cfg.density_scale)
                                         : load_phantom(cfg.file);
    ph.validate();
    ph.check_fits(fov);
    return ph;
}

/// Segment sinograms of `phantom`.  Each carries the nominal geometry.
inline std::vector<Sinogram> simulate_scan(const EllipsePhantom& phantom, const ScanGeometry& geom,
                                           const ErrorSet& errors, const std::optional<NoiseModel>& noise = {})
{
    std::vector<Sinogram> out;
    for (int i = 1; i <= geom.t_segments; ++i) {
        Sinogram s = forward_project_segment(phantom, geom, errors, i);
        out.push_back(noise ? apply_poisson_noise(s, *noise) : std::move(s));
    }
    return out;
}

/// Reconstructs every segment, optionally assuming `assumed` instead of the
/// geometry stored with the data.
inline std::vector<SegmentImage> reconstruct_all(const std::vector<Sinogram>& sinos, const ImageGrid& grid,
                                                 const FilterSpec& spec = {},
                                                 const std::optional<ScanGeometry>& assumed = {})
{
    std::vector<std::future<SegmentImage>> jobs;
    for (const auto& s : sinos)
        jobs.push_back(std::async(std::launch::async, [&s, &grid, &spec, &assumed] {
            if (!assumed)
                return reconstruct_segment(s, grid, spec);
            Sinogram copy = s;
            copy.geom = *assumed;
            for (int k = 0; k < assumed->n_views; ++k)
                copy.lambda_samples[static_cast<std::size_t>(k)] = assumed->lambda(k);
            return reconstruct_segment(copy, grid, spec);
        }));
    std::vector<SegmentImage> out;
    for (auto& j : jobs)
        out.push_back(j.get());
    return out;
}

/// Dynamic range used for SSIM: that of the reference image.
inline double dynamic_range(const SegmentImage& reference)
{
    double lo = reference.values.data().front();
    double hi = lo;
    for (double v : reference.values.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi > lo ? hi - lo : 1.0;
}

struct CalibrationReport {
    ScanGeometry nominal;
    ScanGeometry corrected;
    ErrorSet injected;
    ImageGrid grid;
    CalibrationResult result;
    SegmentImage truth;
    SegmentImage before;
    SegmentImage after;
    MetricReport metrics_before;
    MetricReport metrics_after;
};

/// Calibrates from already simulated sinograms and compares both
/// reconstructions against `truth`.
inline CalibrationReport calibrate_sinograms(const std::vector<Sinogram>& sinos, const SegmentImage& truth,
                                             const FilterSpec& spec, const MaskParams& mask)
{
    require(!sinos.empty(), "calibrate_sinograms: no sinograms");
    CalibrationReport rep;
    rep.nominal = sinos.front().geom;
    rep.injected = sinos.front().simulated_errors;
    rep.grid = truth.grid;
    rep.truth = truth;
    const auto images = reconstruct_all(sinos, rep.grid, spec);
    rep.before = assemble_smlct(images, rep.nominal);
    rep.result = run_algorithm_1(images, rep.nominal, rep.grid, mask);
    rep.corrected = apply_correction(rep.nominal, rep.result);
    const auto fixed = reconstruct_all(sinos, rep.grid, spec, rep.corrected);
    rep.after = assemble_smlct(fixed, rep.corrected);
    const double range = dynamic_range(truth);
    rep.metrics_before = compare(rep.before, truth, range);
    rep.metrics_after = compare(rep.after, truth, range);
    return rep;
}

inline CalibrationReport calibration_experiment(const RunConfig& cfg)
{
    const ScanGeometry geom = cfg.scan_geometry();
    const double fov = fov_radius(geom);
    const EllipsePhantom ph = make_phantom(cfg.phantom, fov);
    const ImageGrid grid = make_grid(fov, cfg.geometry.grid);
    std::optional<NoiseModel> noise;
    if (cfg.noise.enabled)
        noise = cfg.noise_model();
    const auto sinos = simulate_scan(ph, geom, cfg.error_set(), noise);
    return calibrate_sinograms(sinos, rasterize(ph, grid), cfg.recon, cfg.mask_params());
}

// ---------------------------------------------------------------------------
// Sensitivity sweep.

struct SweepRow {
    std::string term;
    double value = 0.0;
    std::string unit;
    double rmse = 0.0; // against the error-free reconstruction
    double ssim = 0.0;
    double rmse_truth = 0.0; // against the rasterized phantom
};

inline const std::vector<std::string>& sweep_terms()
{
    static const std::vector<std::string> terms{"dl", "dh", "ds", "du", "dv",
                                                "theta_lambda", "theta_d", "theta_in", "theta_out"};
    return terms;
}

inline ErrorSet single_error(const std::string& term, double value)
{
    ErrorSet e;
    if (term == "dl") e.dl = value;
    else if (term == "dh") e.dh = value;
    else if (term == "ds") e.ds = value;
    else if (term == "du") e.du_off = value;
    else if (term == "dv") e.dv = value;
    else if (term == "theta_lambda") e.theta_lambda = deg2rad(value);
    else if (term == "theta_d") e.theta_d = deg2rad(value);
    else if (term == "theta_in") e.theta_in = deg2rad(value);
    else if (term == "theta_out") e.theta_out = deg2rad(value);
    else throw Error("unknown error term '" + term + "'");
    return e;
}

inline bool is_angle_term(const std::string& term) { return term.rfind("theta", 0) == 0; }

/// One simulated full scan per (term, value); lengths in mm, angles in degrees.
inline std::vector<SweepRow> sensitivity_sweep(const RunConfig& cfg)
{
    RunConfig c = cfg;
    if (c.sweep.n_views)
        c.geometry.n_views = *c.sweep.n_views;
    const ScanGeometry geom = c.scan_geometry();
    const double fov = fov_radius(geom);
    const EllipsePhantom ph = make_phantom(c.phantom, fov);
    const ImageGrid grid = make_grid(fov, c.sweep.grid.value_or(c.geometry.grid));
    const SegmentImage truth = rasterize(ph, grid);
    auto full_image = [&](const ErrorSet& e) {
        return assemble_smlct(reconstruct_all(simulate_scan(ph, geom, e), grid, c.recon), geom);
    };
    const SegmentImage reference = full_image({});
    const double range = dynamic_range(truth);

    std::vector<SweepRow> rows;
    rows.push_back({"none", 0.0, "", 0.0, 1.0, rmse(reference, truth)});
    for (const auto& term : sweep_terms()) {
        const bool angle = is_angle_term(term);
        for (double v : angle ? c.sweep.angle_values_deg : c.sweep.length_values) {
            const SegmentImage img = full_image(single_error(term, v));
            rows.push_back({term, v, angle ? "deg" : "mm", rmse(img, reference),
                            ssim(img, reference, {.dynamic_range = range}), rmse(img, truth)});
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Rotated CT center of rotation.

struct RctReport {
    RctGeometry geom;
    ImageGrid grid;
    double injected_bins = 0.0;
    CorResult cor;
    double du_hat_bins = 0.0;
    std::vector<SegmentImage> arc_images;
};

inline RctReport rct_cor_experiment(const RunConfig& cfg)
{
    RctReport rep;
    rep.geom = cfg.rct_geometry();
    const double fov = rep.geom.fov_radius();
    rep.grid = make_grid(fov, cfg.rct.grid);
    rep.injected_bins = cfg.rct.du_bins;
    const EllipsePhantom ph = make_phantom(cfg.phantom, fov);
    const double gm = rep.geom.gamma_max();
    const double offset = cfg.rct.du_bins * rep.geom.du;
    std::vector<ArcSinogram> arcs{forward_project_arc(ph, rep.geom, arc_angles(-gm, gm, cfg.rct.n_views), offset),
                                  forward_project_arc(ph, rep.geom, arc_angles(pi - gm, pi + gm, cfg.rct.n_views),
                                                      offset)};
    if (cfg.noise.enabled)
        for (std::size_t i = 0; i < arcs.size(); ++i)
            arcs[i] = apply_poisson_noise(arcs[i], cfg.noise_model(), i + 1);
    rep.arc_images = reconstruct_rct(arcs, rep.grid, RctMode::half, cfg.recon);
    rep.cor = estimate_cor(rep.arc_images[0], rep.arc_images[1], rep.geom, cfg.mask_params());
    rep.du_hat_bins = rep.cor.du_hat / rep.geom.du;
    return rep;
}

} // namespace smlct
