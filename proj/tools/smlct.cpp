// Command-line front end: simulate, calibrate, sweep, rct-cor.

#include "smlct/png.hpp"
#include "smlct/smlct.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace smlct;

namespace {

struct CommonOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> segments;
    bool no_noise = false;
    std::optional<double> mask_alpha_deg;
    std::optional<std::size_t> mask_u0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool mask_flags)
{
    cmd->add_option("--config", o.config, "run configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory (overrides output.dir)");
    cmd->add_option("--seed", o.seed, "noise seed (overrides noise.seed)");
    cmd->add_option("--segments", o.segments, "segment count T (sets geometry.t_extra)");
    cmd->add_flag("--no-noise", o.no_noise, "disable Poisson noise");
    if (mask_flags) {
        cmd->add_option("--mask-alpha-deg", o.mask_alpha_deg, "bow-tie half-angle in degrees");
        cmd->add_option("--mask-u0", o.mask_u0, "frequency columns cleared at each side of the mask");
    }
}

RunConfig resolve(const CommonOptions& o)
{
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    if (!o.out.empty())
        cfg.output_dir = o.out;
    if (o.seed)
        cfg.noise.seed = *o.seed;
    if (o.segments)
        cfg.request_segments(*o.segments);
    if (o.no_noise)
        cfg.noise.enabled = false;
    if (o.mask_alpha_deg)
        cfg.registration.alpha_deg = *o.mask_alpha_deg;
    if (o.mask_u0)
        cfg.registration.u0 = *o.mask_u0;
    cfg.validate();
    return cfg;
}

fs::path prepare_output(const RunConfig& cfg)
{
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    std::ofstream(dir / "config.cfg") << to_text(cfg);
    return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::string>& outputs)
{
    const std::string text = to_text(cfg);
    // The hash identifies the experiment, so the output location is left out.
    RunConfig hashed = cfg;
    hashed.output_dir.clear();
    write_json(dir / "manifest.json", Json{{"command", command},
                                       {"version", version_string},
                                       {"config_hash_fnv1a64", hex64(fnv1a64(to_text(hashed)))},
                                       {"seed", cfg.noise.seed},
                                       {"noise_enabled", cfg.noise.enabled},
                                       {"compiler", __VERSION__},
                                       {"fftw", std::string(fftw_version)},
                                       {"config", text},
                                       {"outputs", outputs}});
}

/// Raw float image, sidecar and PNG preview with the window in the sidecar.
void export_image(const fs::path& stem, const SegmentImage& img, std::vector<std::string>& outputs,
                  std::optional<DisplayWindow> window = {})
{
    const DisplayWindow w = window.value_or(min_max_window(img.values));
    save_image(stem, img, {{"png_window", {w.lo, w.hi}}});
    write_png16(stem.string() + ".png", img.values, w);
    for (const char* ext : {".f32", ".json", ".png"})
        outputs.push_back(fs::path(stem.string() + ext).filename().string());
}

std::string pad2(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

int cmd_simulate(const CommonOptions& o)
{
    const RunConfig cfg = resolve(o);
    const fs::path dir = prepare_output(cfg);
    const ScanGeometry geom = cfg.scan_geometry();
    const EllipsePhantom ph = make_phantom(cfg.phantom, fov_radius(geom));
    std::optional<NoiseModel> noise;
    if (cfg.noise.enabled)
        noise = cfg.noise_model();
    const auto sinos = simulate_scan(ph, geom, cfg.error_set(), noise);
    std::vector<std::string> outputs{"config.cfg", "phantom.txt"};
    {
        std::ofstream out(dir / "phantom.txt");
        write_phantom(out, ph);
    }
    for (const auto& s : sinos) {
        const std::string stem = "sinogram_" + pad2(s.segment);
        save_sinogram(dir / stem, s);
        write_png16(dir / (stem + ".png"), s.values, min_max_window(s.values));
        for (const char* ext : {".f32", ".json", ".png"})
            outputs.push_back(stem + ext);
    }
    write_manifest(dir, "simulate", cfg, outputs);
    std::cout << "wrote " << sinos.size() << " sinograms (T = " << geom.t_segments << ", R1 = " << fov_radius(geom)
              << " mm) to " << dir.string() << "\n";
    return 0;
}

std::vector<Sinogram> load_sinogram_dir(const fs::path& dir)
{
    std::vector<fs::path> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("sinogram_", 0) == 0 && entry.path().extension() == ".json")
            stems.push_back(entry.path().parent_path() / entry.path().stem());
    }
    require(!stems.empty(), "no sinogram_*.json files in " + dir.string());
    std::sort(stems.begin(), stems.end());
    std::vector<Sinogram> out;
    for (const auto& s : stems)
        out.push_back(load_sinogram(s));
    return out;
}

Json offset_json(const OffsetEstimate& e)
{
    return {{"pair", {e.pair.first, e.pair.second}}, {"np_x", e.np_x}, {"np_y", e.np_y},
            {"peak_value", e.peak_value}, {"unique", e.unique}};
}

int cmd_calibrate(const CommonOptions& o, const std::string& sino_dir)
{
    const RunConfig cfg = resolve(o);
    const fs::path dir = prepare_output(cfg);
    std::vector<Sinogram> sinos;
    EllipsePhantom ph;
    if (sino_dir.empty()) {
        const ScanGeometry geom = cfg.scan_geometry();
        ph = make_phantom(cfg.phantom, fov_radius(geom));
        std::optional<NoiseModel> noise;
        if (cfg.noise.enabled)
            noise = cfg.noise_model();
        sinos = simulate_scan(ph, geom, cfg.error_set(), noise);
    } else {
        sinos = load_sinogram_dir(sino_dir);
        const fs::path table = fs::path(sino_dir) / "phantom.txt";
        ph = fs::exists(table) ? load_phantom(table.string()) : make_phantom(cfg.phantom, fov_radius(sinos[0].geom));
    }
    const ScanGeometry& geom = sinos.front().geom;
    const ImageGrid grid = make_grid(fov_radius(geom), cfg.geometry.grid);
    const CalibrationReport rep = calibrate_sinograms(sinos, rasterize(ph, grid), cfg.recon, cfg.mask_params());

    std::vector<std::string> outputs{"config.cfg"};
    const DisplayWindow window = min_max_window(rep.truth.values);
    export_image(dir / "truth", rep.truth, outputs, window);
    export_image(dir / "uncorrected", rep.before, outputs, window);
    export_image(dir / "corrected", rep.after, outputs, window);

    // Correlation surfaces of every pair, as registered.
    for (std::size_t i = 0; i < rep.result.surfaces.size(); ++i) {
        const auto& e = rep.result.per_pair[i];
        const std::string stem = "ccs_pair_" + pad2(e.pair.first) + "_" + pad2(e.pair.second);
        export_image(dir / stem, {grid, rep.result.surfaces[i].values, e.pair.first, geom.theta(e.pair.first)},
                     outputs);
    }

    // Horizontal and vertical profiles through the center.
    const double r = 0.95 * grid.half_extent;
    const std::size_t n = grid.cols;
    std::vector<std::vector<std::string>> rows;
    const auto hb = profile(rep.before, {-r, 0}, {r, 0}, n), ha = profile(rep.after, {-r, 0}, {r, 0}, n),
               ht = profile(rep.truth, {-r, 0}, {r, 0}, n), vb = profile(rep.before, {0, -r}, {0, r}, n),
               va = profile(rep.after, {0, -r}, {0, r}, n), vt = profile(rep.truth, {0, -r}, {0, r}, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = -r + 2.0 * r * static_cast<double>(i) / static_cast<double>(n - 1);
        rows.push_back({format_number(t), format_number(ht[i]), format_number(hb[i]), format_number(ha[i]),
                        format_number(vt[i]), format_number(vb[i]), format_number(va[i])});
    }
    write_csv(dir / "profiles.csv", {"position_mm", "x_truth", "x_uncorrected", "x_corrected", "y_truth",
                                     "y_uncorrected", "y_corrected"},
              rows);
    outputs.push_back("profiles.csv");

    Json per_pair = Json::array(), removed = Json::array();
    for (const auto& e : rep.result.per_pair)
        per_pair.push_back(offset_json(e));
    for (const auto& e : rep.result.outliers_removed)
        removed.push_back(offset_json(e));
    const Json report = {
        {"per_pair", per_pair},
        {"outliers_removed", removed},
        {"np_final", {rep.result.np_final.first, rep.result.np_final.second}},
        {"dl_hat_mm", rep.result.dl_hat},
        {"ds_hat_mm", rep.result.ds_hat},
        {"all_peaks_unique", rep.result.all_unique},
        {"injected_errors", to_json(rep.injected)},
        {"nominal_geometry", to_json(rep.nominal)},
        {"corrected_geometry", to_json(rep.corrected)},
        {"grid", to_json(rep.grid)},
        {"before", {{"rmse", rep.metrics_before.rmse}, {"ssim", rep.metrics_before.ssim}}},
        {"after", {{"rmse", rep.metrics_after.rmse}, {"ssim", rep.metrics_after.ssim}}},
    };
    write_json(dir / "report.json", report);
    outputs.push_back("report.json");
    write_manifest(dir, "calibrate", cfg, outputs);

    std::cout << "pair offsets (np_x, np_y):\n";
    for (const auto& e : rep.result.per_pair)
        std::cout << "  " << e.pair.first << "-" << e.pair.second << ": (" << e.np_x << ", " << e.np_y << ")"
                  << (e.unique ? "" : "  [peak not unique]") << "\n";
    std::cout << "outliers removed: " << rep.result.outliers_removed.size() << "\n"
              << "final offsets: (" << rep.result.np_final.first << ", " << rep.result.np_final.second << ")\n"
              << "dl_hat = " << rep.result.dl_hat << " mm, ds_hat = " << rep.result.ds_hat << " mm\n"
              << "RMSE  " << rep.metrics_before.rmse << " -> " << rep.metrics_after.rmse << "\n"
              << "SSIM  " << rep.metrics_before.ssim << " -> " << rep.metrics_after.ssim << "\n";
    return 0;
}

int cmd_sweep(const CommonOptions& o)
{
    const RunConfig cfg = resolve(o);
    const fs::path dir = prepare_output(cfg);
    const auto rows = sensitivity_sweep(cfg);
    std::vector<std::vector<std::string>> table;
    for (const auto& r : rows)
        table.push_back({r.term, format_number(r.value), r.unit, format_number(r.rmse), format_number(r.ssim),
                         format_number(r.rmse_truth)});
    write_csv(dir / "sweep.csv", {"term", "value", "unit", "rmse", "ssim", "rmse_vs_phantom"}, table);
    write_manifest(dir, "sweep", cfg, {"config.cfg", "sweep.csv"});
    std::cout << "term           value  unit      rmse      ssim\n";
    for (const auto& r : rows) {
        std::printf("%-13s %6.2f  %-4s  %.6f  %.4f\n", r.term.c_str(), r.value, r.unit.c_str(), r.rmse, r.ssim);
    }
    return 0;
}

int cmd_rct_cor(const CommonOptions& o)
{
    const RunConfig cfg = resolve(o);
    const fs::path dir = prepare_output(cfg);
    const RctReport rep = rct_cor_experiment(cfg);
    std::vector<std::string> outputs{"config.cfg"};
    const DisplayWindow window = min_max_window(rep.arc_images[0].values);
    export_image(dir / "arc_0", rep.arc_images[0], outputs, window);
    export_image(dir / "arc_pi", rep.arc_images[1], outputs, window);
    write_json(dir / "cor.json", {{"injected_bins", rep.injected_bins},
                                  {"offset", offset_json(rep.cor.offset)},
                                  {"du_hat_mm", rep.cor.du_hat},
                                  {"du_hat_bins", rep.du_hat_bins},
                                  {"fov_radius_mm", rep.geom.fov_radius()},
                                  {"grid", to_json(rep.grid)}});
    outputs.push_back("cor.json");
    write_manifest(dir, "rct-cor", cfg, outputs);
    std::cout << "np_x = " << rep.cor.offset.np_x << ", du_hat = " << rep.cor.du_hat << " mm = " << rep.du_hat_bins
              << " bins (injected " << rep.injected_bins << " bins)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Symmetric multi-linear-trajectory CT simulation and geometric calibration"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string);

    CommonOptions sim_opts, cal_opts, sweep_opts, rct_opts;
    std::string sino_dir;
    auto* sim = app.add_subcommand("simulate", "simulate segment sinograms");
    add_common(sim, sim_opts, false);
    auto* cal = app.add_subcommand("calibrate", "estimate dl/ds, correct and report");
    add_common(cal, cal_opts, true);
    cal->add_option("--sinograms", sino_dir, "directory written by `simulate` (default: simulate in memory)")
        ->check(CLI::ExistingDirectory);
    auto* sweep = app.add_subcommand("sweep", "per-error-term sensitivity table");
    add_common(sweep, sweep_opts, false);
    auto* rct = app.add_subcommand("rct-cor", "rotated-CT center-of-rotation estimate");
    add_common(rct, rct_opts, true);

    CLI11_PARSE(app, argc, argv);
    try {
        if (sim->parsed())
            return cmd_simulate(sim_opts);
        if (cal->parsed())
            return cmd_calibrate(cal_opts, sino_dir);
        if (sweep->parsed())
            return cmd_sweep(sweep_opts);
        if (rct->parsed())
            return cmd_rct_cor(rct_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
