#pragma once

// Thin RAII layer over FFTW for the transforms the library needs.

#include "smlct/core.hpp"

#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace smlct {

using Complex = std::complex<double>;
using ComplexMatrix = Array2D<Complex>;

namespace detail {

// FFTW's planner is not re-entrant.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

class FftwPlan {
public:
    explicit FftwPlan(fftw_plan p) : plan_(p) { require(p != nullptr, "FFTW planning failed"); }
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;
    ~FftwPlan()
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    void execute() const { fftw_execute(plan_); }

private:
    fftw_plan plan_;
};

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

} // namespace detail

enum class FftDirection { forward, inverse };

/// In-place 2D DFT.  The inverse includes the 1/(rows*cols) factor.
inline void fft2(ComplexMatrix& m, FftDirection dir)
{
    require(!m.empty(), "fft2: empty input");
    auto* data = detail::as_fftw(m.data().data());
    fftw_plan raw;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        raw = fftw_plan_dft_2d(static_cast<int>(m.rows()), static_cast<int>(m.cols()), data, data,
                               dir == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    detail::FftwPlan plan(raw);
    plan.execute();
    if (dir == FftDirection::inverse) {
        const double scale = 1.0 / static_cast<double>(m.size());
        for (auto& v : m.data())
            v *= scale;
    }
}

inline ComplexMatrix fft2(const Matrix& m)
{
    ComplexMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i)
        out.data()[i] = m.data()[i];
    fft2(out, FftDirection::forward);
    return out;
}

/// In-place batched 1D DFT along each row.  The inverse includes 1/cols.
inline void fft_rows(ComplexMatrix& m, FftDirection dir)
{
    require(!m.empty(), "fft_rows: empty input");
    int n = static_cast<int>(m.cols());
    auto* data = detail::as_fftw(m.data().data());
    fftw_plan raw;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        raw = fftw_plan_many_dft(1, &n, static_cast<int>(m.rows()), data, nullptr, 1, n, data, nullptr, 1, n,
                                 dir == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    detail::FftwPlan plan(raw);
    plan.execute();
    if (dir == FftDirection::inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : m.data())
            v *= scale;
    }
}

inline std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

/// Linear convolution of every row with an odd-length kernel centered on its
/// middle tap: out[k] = sum_j in[j] * kernel[center + k - j].  Output keeps
/// the input width.
inline Matrix convolve_rows(const Matrix& in, std::span<const double> kernel)
{
    require(kernel.size() % 2 == 1, "convolve_rows: kernel length must be odd");
    const std::size_t n = in.cols();
    const std::size_t half = kernel.size() / 2;
    const std::size_t len = next_pow2(n + kernel.size());

    ComplexMatrix k(1, len);
    // Place tap for lag m at index m mod len.
    for (std::size_t i = 0; i < kernel.size(); ++i) {
        const long lag = static_cast<long>(i) - static_cast<long>(half);
        k(0, static_cast<std::size_t>((lag + static_cast<long>(len)) % static_cast<long>(len))) = kernel[i];
    }
    fft_rows(k, FftDirection::forward);

    ComplexMatrix work(in.rows(), len);
    for (std::size_t r = 0; r < in.rows(); ++r)
        for (std::size_t c = 0; c < n; ++c)
            work(r, c) = in(r, c);
    fft_rows(work, FftDirection::forward);
    for (std::size_t r = 0; r < in.rows(); ++r)
        for (std::size_t c = 0; c < len; ++c)
            work(r, c) *= k(0, c);
    fft_rows(work, FftDirection::inverse);

    Matrix out(in.rows(), n);
    for (std::size_t r = 0; r < in.rows(); ++r)
        for (std::size_t c = 0; c < n; ++c)
            out(r, c) = work(r, c).real();
    return out;
}

} // namespace smlct
