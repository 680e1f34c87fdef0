#pragma once

// Run configuration.  Text format (see README for the full schema):
//
//   [geometry]
//   l = 15
//   ...
//
// Every key is optional and unknown keys are rejected.

#include "smlct/calibration.hpp"
#include "smlct/core.hpp"
#include "smlct/geometry.hpp"
#include "smlct/io.hpp"
#include "smlct/phantom.hpp"
#include "smlct/projector.hpp"
#include "smlct/recon.hpp"

#include <charconv>
#include <concepts>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace smlct {

struct GeometryConfig {
    double l = 15.0;
    double h = 170.0;
    double s = 20.0;
    int n_det = 768;
    double du = 0.17;
    int n_views = 251;
    int t_extra = 1;
    int r_dir = 1;
    std::size_t grid = 512;
};

struct PhantomConfig {
    std::string preset = "forbild";
    double radius_fraction = 0.8; // of the FOV radius
    double density_scale = 0.02;
    std::string file; // ellipse table; overrides the preset when set
};

struct ErrorConfig {
    double dl = 0.0, dh = 0.0, ds = 0.0;
    double du_bins = 0.0;
    double dv = 0.0;
    double theta_lambda_deg = 0.0, theta_d_deg = 0.0, theta_in_deg = 0.0, theta_out_deg = 0.0;
};

struct NoiseConfig {
    bool enabled = false;
    double photons = 5e3;
    std::uint64_t seed = 0;
};

struct RegistrationConfig {
    std::optional<double> alpha_deg;
    std::optional<std::size_t> u0;
    double apodize_from = 0.9;
};

struct RctConfig {
    double l = 13.75;
    double h = 106.5;
    int n_det = 1024;
    double du = 0.127;
    int n_views = 241; // per arc
    double du_bins = 0.0;
    std::size_t grid = 512;
};

struct SweepConfig {
    std::vector<double> length_values{-1.0, 2.0}; // mm
    std::vector<double> angle_values_deg{-1.0, 2.0};
    std::optional<std::size_t> grid;
    std::optional<int> n_views;
};

struct RunConfig {
    GeometryConfig geometry;
    PhantomConfig phantom;
    ErrorConfig errors;
    NoiseConfig noise;
    FilterSpec recon;
    RegistrationConfig registration;
    RctConfig rct;
    SweepConfig sweep;
    std::string output_dir = "out";

    ScanGeometry scan_geometry() const
    {
        return make_scan_geometry(geometry.l, geometry.h, geometry.s, geometry.n_det, geometry.du, geometry.n_views,
                                  geometry.t_extra, geometry.r_dir);
    }

    ErrorSet error_set() const
    {
        ErrorSet e;
        e.dl = errors.dl;
        e.dh = errors.dh;
        e.ds = errors.ds;
        e.du_off = errors.du_bins * geometry.du;
        e.dv = errors.dv;
        e.theta_lambda = deg2rad(errors.theta_lambda_deg);
        e.theta_d = deg2rad(errors.theta_d_deg);
        e.theta_in = deg2rad(errors.theta_in_deg);
        e.theta_out = deg2rad(errors.theta_out_deg);
        e.validate();
        return e;
    }

    RctGeometry rct_geometry() const
    {
        RctGeometry g{rct.l, rct.h, rct.n_det, rct.du};
        g.validate();
        return g;
    }

    MaskParams mask_params() const
    {
        MaskParams p;
        if (registration.alpha_deg)
            p.alpha_band = deg2rad(*registration.alpha_deg);
        p.u0 = registration.u0;
        p.apodize_from = registration.apodize_from;
        return p;
    }

    NoiseModel noise_model() const { return {noise.photons, noise.seed}; }

    /// Sets t_extra so the geometry has exactly `t` segments.
    void request_segments(int t)
    {
        const int base = base_segment_count(geometry.h, 0.5 * geometry.n_det * geometry.du);
        require(t >= base, "requested segment count is below ceil(2 pi / dtheta) = " + std::to_string(base));
        require(t % 2 == 0, "requested segment count must be even");
        geometry.t_extra = t - base;
    }

    void validate() const
    {
        scan_geometry();
        error_set();
        rct_geometry();
        require(geometry.grid >= 8 && rct.grid >= 8, "grid size must be at least 8");
        require(phantom.radius_fraction > 0.0, "phantom.radius_fraction must be positive");
        require(noise.photons > 0.0, "noise.photons must be positive");
        require(rct.n_views >= 2, "rct.n_views must be at least 2");
        require(registration.apodize_from > 0.0, "registration.apodize_from must be positive");
        require(!sweep.length_values.empty() && !sweep.angle_values_deg.empty(), "sweep values must not be empty");
        require(!output_dir.empty(), "output.dir must not be empty");
    }
};

namespace detail {

class KeyReader {
public:
    explicit KeyReader(const KeyValues& kv) : kv_(kv) {}

    void get(const std::string& key, double& out) { with(key, [&](const std::string& v) { out = to_double(key, v); }); }

    void get(const std::string& key, int& out)
    {
        with(key, [&](const std::string& v) { out = static_cast<int>(to_integer(key, v)); });
    }

    template <std::unsigned_integral T>
    void get(const std::string& key, T& out)
    {
        with(key, [&](const std::string& v) {
            T x = 0;
            const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
            require(ec == std::errc() && p == v.data() + v.size(), key + ": expected a non-negative integer");
            out = x;
        });
    }

    void get(const std::string& key, bool& out)
    {
        with(key, [&](const std::string& v) {
            if (v == "true" || v == "1" || v == "yes")
                out = true;
            else if (v == "false" || v == "0" || v == "no")
                out = false;
            else
                throw Error(key + ": expected true or false");
        });
    }

    void get(const std::string& key, std::string& out)
    {
        with(key, [&](const std::string& v) { out = v; });
    }

    template <class T>
    void get(const std::string& key, std::optional<T>& out)
    {
        with(key, [&](const std::string&) {
            T v{};
            get_unchecked(key, v);
            out = v;
        });
    }

    void get(const std::string& key, std::vector<double>& out)
    {
        with(key, [&](const std::string& v) {
            out.clear();
            std::string item;
            std::istringstream s(v);
            while (std::getline(s, item, ','))
                out.push_back(to_double(key, trim(item)));
        });
    }

    template <class E>
    void get_enum(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> names)
    {
        with(key, [&](const std::string& v) {
            for (const auto& [n, e] : names)
                if (v == n) {
                    out = e;
                    return;
                }
            throw Error(key + ": unknown value '" + v + "'");
        });
    }

    void reject_unknown() const
    {
        for (const auto& [k, v] : kv_)
            require(used_.count(k) == 1, "unknown config key '" + k + "'");
    }

private:
    template <class F>
    void with(const std::string& key, F&& f)
    {
        used_.insert(key);
        if (auto it = kv_.find(key); it != kv_.end())
            f(it->second);
    }

    template <class T>
    void get_unchecked(const std::string& key, T& v)
    {
        get(key, v);
    }

    static double to_double(const std::string& key, const std::string& v)
    {
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            require(pos == v.size() && std::isfinite(x), key + ": expected a number");
            return x;
        } catch (const std::logic_error&) {
            throw Error(key + ": expected a number");
        }
    }

    static long long to_integer(const std::string& key, const std::string& v)
    {
        long long x = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        require(ec == std::errc() && p == v.data() + v.size(), key + ": expected an integer");
        return x;
    }

    const KeyValues& kv_;
    std::set<std::string> used_;
};

} // namespace detail

inline RunConfig parse_run_config(const KeyValues& kv)
{
    RunConfig c;
    detail::KeyReader r(kv);
    auto& g = c.geometry;
    r.get("geometry.l", g.l);
    r.get("geometry.h", g.h);
    r.get("geometry.s", g.s);
    r.get("geometry.n_det", g.n_det);
    r.get("geometry.du", g.du);
    r.get("geometry.n_views", g.n_views);
    r.get("geometry.t_extra", g.t_extra);
    r.get("geometry.r_dir", g.r_dir);
    r.get("geometry.grid", g.grid);

    r.get("phantom.preset", c.phantom.preset);
    r.get("phantom.radius_fraction", c.phantom.radius_fraction);
    r.get("phantom.density_scale", c.phantom.density_scale);
    r.get("phantom.file", c.phantom.file);

    auto& e = c.errors;
    r.get("errors.dl", e.dl);
    r.get("errors.dh", e.dh);
    r.get("errors.ds", e.ds);
    r.get("errors.du_bins", e.du_bins);
    r.get("errors.dv", e.dv);
    r.get("errors.theta_lambda_deg", e.theta_lambda_deg);
    r.get("errors.theta_d_deg", e.theta_d_deg);
    r.get("errors.theta_in_deg", e.theta_in_deg);
    r.get("errors.theta_out_deg", e.theta_out_deg);

    r.get("noise.enabled", c.noise.enabled);
    r.get("noise.photons", c.noise.photons);
    r.get("noise.seed", c.noise.seed);

    r.get_enum("recon.kernel", c.recon.kernel,
               {{"hilbert", FilterSpec::Kernel::hilbert}, {"ramp", FilterSpec::Kernel::ramp}});
    r.get_enum("recon.derivative", c.recon.derivative,
               {{"central", FilterSpec::Derivative::central_difference}, {"forward", FilterSpec::Derivative::forward}});
    r.get_enum("recon.redundancy", c.recon.redundancy,
               {{"smooth", FilterSpec::Redundancy::smooth_trapezoid}, {"uniform", FilterSpec::Redundancy::uniform}});
    r.get("recon.taper_fraction", c.recon.taper_fraction);

    r.get("registration.alpha_deg", c.registration.alpha_deg);
    r.get("registration.u0", c.registration.u0);
    r.get("registration.apodize_from", c.registration.apodize_from);

    r.get("rct.l", c.rct.l);
    r.get("rct.h", c.rct.h);
    r.get("rct.n_det", c.rct.n_det);
    r.get("rct.du", c.rct.du);
    r.get("rct.n_views", c.rct.n_views);
    r.get("rct.du_bins", c.rct.du_bins);
    r.get("rct.grid", c.rct.grid);

    r.get("sweep.length_values", c.sweep.length_values);
    r.get("sweep.angle_values_deg", c.sweep.angle_values_deg);
    r.get("sweep.grid", c.sweep.grid);
    r.get("sweep.n_views", c.sweep.n_views);

    r.get("output.dir", c.output_dir);
    r.reject_unknown();
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(load_key_values(path)); }

/// Canonical text form; hashing it identifies a run.
inline std::string to_text(const RunConfig& c)
{
    std::ostringstream o;
    o.precision(17);
    auto list = [](const std::vector<double>& v) {
        std::ostringstream s;
        s.precision(17);
        for (std::size_t i = 0; i < v.size(); ++i)
            s << (i ? ", " : "") << v[i];
        return s.str();
    };
    const auto& g = c.geometry;
    o << "[geometry]\nl = " << g.l << "\nh = " << g.h << "\ns = " << g.s << "\nn_det = " << g.n_det
      << "\ndu = " << g.du << "\nn_views = " << g.n_views << "\nt_extra = " << g.t_extra << "\nr_dir = " << g.r_dir
      << "\ngrid = " << g.grid << "\n\n";
    o << "[phantom]\npreset = " << c.phantom.preset << "\nradius_fraction = " << c.phantom.radius_fraction
      << "\ndensity_scale = " << c.phantom.density_scale << "\n";
    if (!c.phantom.file.empty())
        o << "file = " << c.phantom.file << "\n";
    const auto& e = c.errors;
    o << "\n[errors]\ndl = " << e.dl << "\ndh = " << e.dh << "\nds = " << e.ds << "\ndu_bins = " << e.du_bins
      << "\ndv = " << e.dv << "\ntheta_lambda_deg = " << e.theta_lambda_deg << "\ntheta_d_deg = " << e.theta_d_deg
      << "\ntheta_in_deg = " << e.theta_in_deg << "\ntheta_out_deg = " << e.theta_out_deg << "\n\n";
    o << "[noise]\nenabled = " << (c.noise.enabled ? "true" : "false") << "\nphotons = " << c.noise.photons
      << "\nseed = " << c.noise.seed << "\n\n";
    o << "[recon]\nkernel = " << (c.recon.kernel == FilterSpec::Kernel::ramp ? "ramp" : "hilbert")
      << "\nderivative = " << (c.recon.derivative == FilterSpec::Derivative::forward ? "forward" : "central")
      << "\nredundancy = " << (c.recon.redundancy == FilterSpec::Redundancy::uniform ? "uniform" : "smooth")
      << "\ntaper_fraction = " << c.recon.taper_fraction << "\n\n";
    o << "[registration]\n";
    if (c.registration.alpha_deg)
        o << "alpha_deg = " << *c.registration.alpha_deg << "\n";
    if (c.registration.u0)
        o << "u0 = " << *c.registration.u0 << "\n";
    o << "apodize_from = " << c.registration.apodize_from << "\n\n";
    o << "[rct]\nl = " << c.rct.l << "\nh = " << c.rct.h << "\nn_det = " << c.rct.n_det << "\ndu = " << c.rct.du
      << "\nn_views = " << c.rct.n_views << "\ndu_bins = " << c.rct.du_bins << "\ngrid = " << c.rct.grid << "\n\n";
    o << "[sweep]\nlength_values = " << list(c.sweep.length_values)
      << "\nangle_values_deg = " << list(c.sweep.angle_values_deg) << "\n";
    if (c.sweep.grid)
        o << "grid = " << *c.sweep.grid << "\n";
    if (c.sweep.n_views)
        o << "n_views = " << *c.sweep.n_views << "\n";
    o << "\n[output]\ndir = " << c.output_dir << "\n";
    return o.str();
}

} // namespace smlct
