#pragma once

// Brute-force reference computations shared by the tests. None of these call
// into the FFT or the kernels under test.

#include <phasessl/fft.hpp>
#include <phasessl/image.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using phasessl::Complex;

inline phasessl::GrayImage random_image(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    phasessl::GrayImage img(w, h);
    for (auto& v : img.values())
        v = u(rng);
    return img;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v)
        x = u(rng);
    return v;
}

/// Direct O(N^2) 2-D DFT. sign = -1 forward, +1 inverse (unnormalized).
inline std::vector<Complex> dft2(const std::vector<Complex>& in, int w, int h, int sign)
{
    std::vector<Complex> out(in.size());
    for (int ky = 0; ky < h; ++ky)
        for (int kx = 0; kx < w; ++kx) {
            Complex acc = 0.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double a = sign * 2.0 * std::numbers::pi *
                                     (static_cast<double>(kx) * x / w + static_cast<double>(ky) * y / h);
                    acc += in[static_cast<std::size_t>(y) * w + x] * Complex(std::cos(a), std::sin(a));
                }
            out[static_cast<std::size_t>(ky) * w + kx] = acc;
        }
    return out;
}

/// Spatial kernel of a frequency response: normalized inverse DFT, real part.
inline std::vector<double> spatial_kernel(const phasessl::FrequencyResponse& f)
{
    const auto k = dft2(f.values, f.width, f.height, +1);
    std::vector<double> out(k.size());
    const double scale = 1.0 / static_cast<double>(k.size());
    for (std::size_t i = 0; i < k.size(); ++i)
        out[i] = k[i].real() * scale;
    return out;
}

/// out(x,y) = sum_{i,j} kernel(i,j) * in((x-i) mod w, (y-j) mod h)
inline std::vector<double> circular_convolve(int w, int h, const std::vector<double>& in,
                                             const std::vector<double>& kernel)
{
    std::vector<double> out(in.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = 0; j < h; ++j)
                for (int i = 0; i < w; ++i)
                    acc += kernel[static_cast<std::size_t>(j) * w + i] *
                           in[static_cast<std::size_t>((y - j + h) % h) * w + (x - i + w) % w];
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

inline double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

/// max |a-b| / max(max|b|, tiny)
template <class A, class B>
double rel_error(const A& a, const B& b)
{
    double diff = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        ref = std::max(ref, std::abs(b[i]));
    }
    return diff / std::max(ref, 1e-300);
}

}  // namespace oracle
