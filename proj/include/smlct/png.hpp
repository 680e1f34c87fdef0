#pragma once

// 16-bit grayscale PNG previews.  Requires libpng.

#include "smlct/core.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include <png.h>

namespace smlct {

struct DisplayWindow {
    double lo = 0.0;
    double hi = 1.0;
};

inline DisplayWindow min_max_window(const Matrix& m)
{
    require(!m.empty(), "min_max_window: empty image");
    DisplayWindow w{m.data().front(), m.data().front()};
    for (double v : m.data()) {
        w.lo = std::min(w.lo, v);
        w.hi = std::max(w.hi, v);
    }
    if (w.hi <= w.lo)
        w.hi = w.lo + 1.0;
    return w;
}

/// Maps [lo, hi] linearly to [0, 65535], clamping outside.
inline void write_png16(const std::filesystem::path& path, const Matrix& m, DisplayWindow w)
{
    require(!m.empty(), "write_png16: empty image");
    require(w.hi > w.lo, "write_png16: empty display window");
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    require(fp != nullptr, "cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("png_create_info_struct failed");
    }
    std::vector<std::uint8_t> row(m.cols() * 2);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng error while writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(m.cols()), static_cast<png_uint_32>(m.rows()), 16,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const double scale = 65535.0 / (w.hi - w.lo);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double v = std::clamp((m(r, c) - w.lo) * scale, 0.0, 65535.0);
            const auto q = static_cast<std::uint16_t>(std::lround(v));
            row[2 * c] = static_cast<std::uint8_t>(q >> 8); // PNG is big-endian
            row[2 * c + 1] = static_cast<std::uint8_t>(q & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace smlct
