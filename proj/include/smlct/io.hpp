#pragma once

// File formats: key-value config text, raw float32 arrays with JSON sidecars,
// CSV tables and run manifests.

#include "smlct/core.hpp"
#include "smlct/geometry.hpp"
#include "smlct/image.hpp"
#include "smlct/projector.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace smlct {

using Json = nlohmann::json;

inline constexpr const char* version_string = "1.0.0";

// ---------------------------------------------------------------------------
// Config text: `key = value` lines, `[section]` headers prefix keys with
// "section.", '#' starts a comment.

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace detail

inline KeyValues parse_key_values(std::istream& in)
{
    KeyValues out;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty())
            continue;
        const std::string where = "config line " + std::to_string(lineno);
        if (t.front() == '[') {
            require(t.back() == ']' && t.size() > 2, where + ": malformed section header");
            section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        require(eq != std::string::npos, where + ": expected key = value");
        const std::string key = detail::trim(std::string_view(t).substr(0, eq));
        require(!key.empty(), where + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        require(out.emplace(full, detail::trim(std::string_view(t).substr(eq + 1))).second,
                where + ": duplicate key " + full);
    }
    return out;
}

inline KeyValues load_key_values(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open config " + path.string());
    return parse_key_values(in);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    std::ostringstream s;
    s << std::hex;
    s.width(16);
    s.fill('0');
    s << v;
    return s.str();
}

// ---------------------------------------------------------------------------
// Raw arrays.

/// Row-major little-endian float32.
inline void write_raw_f32(const std::filesystem::path& path, const Matrix& m)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot write " + path.string());
    for (double v : m.data()) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        if constexpr (std::endian::native == std::endian::big)
            bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) | (bits >> 24);
        char bytes[4];
        std::memcpy(bytes, &bits, 4);
        out.write(bytes, 4);
    }
    require(static_cast<bool>(out), "short write to " + path.string());
}

inline Matrix read_raw_f32(const std::filesystem::path& path, std::size_t rows, std::size_t cols)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path.string());
    Matrix m(rows, cols);
    for (double& v : m.data()) {
        char bytes[4];
        in.read(bytes, 4);
        require(static_cast<bool>(in), "truncated raw file " + path.string());
        std::uint32_t bits;
        std::memcpy(&bits, bytes, 4);
        if constexpr (std::endian::native == std::endian::big)
            bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) | (bits >> 24);
        v = std::bit_cast<float>(bits);
    }
    require(in.peek() == std::char_traits<char>::eof(), "raw file larger than expected: " + path.string());
    return m;
}

inline void write_json(const std::filesystem::path& path, const Json& j)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline Json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open " + path.string());
    return Json::parse(in);
}

// ---------------------------------------------------------------------------
// Domain objects <-> JSON.

inline Json to_json(const ScanGeometry& g)
{
    return {{"l", g.l},           {"h", g.h},           {"s", g.s},
            {"n_det", g.n_det},   {"du", g.du},         {"n_views", g.n_views},
            {"t_extra", g.t_extra}, {"t_segments", g.t_segments}, {"delta_theta", g.delta_theta},
            {"r_dir", g.r_dir},   {"lambda_offset", g.lambda_offset}};
}

inline ScanGeometry scan_geometry_from_json(const Json& j)
{
    ScanGeometry g = make_scan_geometry(j.at("l"), j.at("h"), j.at("s"), j.at("n_det"), j.at("du"), j.at("n_views"),
                                        j.at("t_extra"), j.at("r_dir"));
    g.lambda_offset = j.value("lambda_offset", 0.0);
    g.validate();
    return g;
}

inline Json to_json(const ErrorSet& e)
{
    return {{"dl", e.dl}, {"dh", e.dh}, {"ds", e.ds}, {"du_off", e.du_off}, {"dv", e.dv},
            {"theta_lambda", e.theta_lambda}, {"theta_d", e.theta_d}, {"theta_in", e.theta_in},
            {"theta_out", e.theta_out}};
}

inline ErrorSet error_set_from_json(const Json& j)
{
    ErrorSet e;
    e.dl = j.value("dl", 0.0);
    e.dh = j.value("dh", 0.0);
    e.ds = j.value("ds", 0.0);
    e.du_off = j.value("du_off", 0.0);
    e.dv = j.value("dv", 0.0);
    e.theta_lambda = j.value("theta_lambda", 0.0);
    e.theta_d = j.value("theta_d", 0.0);
    e.theta_in = j.value("theta_in", 0.0);
    e.theta_out = j.value("theta_out", 0.0);
    e.validate();
    return e;
}

inline Json to_json(const ImageGrid& g) { return {{"rows", g.rows}, {"cols", g.cols}, {"half_extent", g.half_extent}}; }

inline ImageGrid image_grid_from_json(const Json& j)
{
    return make_grid(j.at("half_extent").get<double>(), j.at("rows").get<std::size_t>(),
                     j.at("cols").get<std::size_t>());
}

/// `<stem>.f32` plus `<stem>.json`.
inline void save_sinogram(const std::filesystem::path& stem, const Sinogram& s)
{
    write_raw_f32(stem.string() + ".f32", s.values);
    write_json(stem.string() + ".json", {{"kind", "sinogram"},
                                         {"rows", s.values.rows()},
                                         {"cols", s.values.cols()},
                                         {"segment", s.segment},
                                         {"theta", s.theta},
                                         {"lambda", s.lambda_samples},
                                         {"geometry", to_json(s.geom)},
                                         {"simulated_errors", to_json(s.simulated_errors)}});
}

inline Sinogram load_sinogram(const std::filesystem::path& stem)
{
    const Json meta = read_json(stem.string() + ".json");
    require(meta.value("kind", "") == "sinogram", "not a sinogram sidecar: " + stem.string());
    Sinogram s;
    s.segment = meta.at("segment");
    s.theta = meta.at("theta");
    s.geom = scan_geometry_from_json(meta.at("geometry"));
    s.simulated_errors = error_set_from_json(meta.at("simulated_errors"));
    s.lambda_samples = meta.at("lambda").get<std::vector<double>>();
    s.values = read_raw_f32(stem.string() + ".f32", meta.at("rows"), meta.at("cols"));
    s.validate();
    return s;
}

inline void save_image(const std::filesystem::path& stem, const SegmentImage& img, const Json& extra = Json::object())
{
    write_raw_f32(stem.string() + ".f32", img.values);
    Json meta = {{"kind", "image"},     {"rows", img.grid.rows}, {"cols", img.grid.cols},
                 {"grid", to_json(img.grid)}, {"segment", img.segment}, {"theta", img.theta}};
    meta.update(extra);
    write_json(stem.string() + ".json", meta);
}

inline SegmentImage load_image(const std::filesystem::path& stem)
{
    const Json meta = read_json(stem.string() + ".json");
    require(meta.value("kind", "") == "image", "not an image sidecar: " + stem.string());
    SegmentImage img;
    img.grid = image_grid_from_json(meta.at("grid"));
    img.segment = meta.at("segment");
    img.theta = meta.at("theta");
    img.values = read_raw_f32(stem.string() + ".f32", img.grid.rows, img.grid.cols);
    return img;
}

// ---------------------------------------------------------------------------
// CSV.

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + '"';
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path.string());
    auto emit = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i)
            out << (i ? "," : "") << csv_field(r[i]);
        out << '\n';
    };
    emit(header);
    for (const auto& r : rows) {
        require(r.size() == header.size(), "write_csv: row width differs from header");
        emit(r);
    }
}

inline std::string format_number(double v)
{
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

} // namespace smlct
