#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace phasessl {

using Complex = std::complex<double>;

/// Normalized frequency (cycles per pixel, in [-0.5, 0.5)) of DFT bin `k` for length `n`.
double bin_frequency(int k, int n);

/// Signed bin index: k for k < ceil(n/2), k - n otherwise.
int signed_bin(int k, int n);

/// Complex spectrum stored in DFT order (DC at index 0). Lookups by signed,
/// centered bin coordinates are provided through at().
struct FrequencyResponse {
    int width = 0;
    int height = 0;
    std::vector<Complex> values;

    FrequencyResponse() = default;
    FrequencyResponse(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h) {}

    Complex& operator()(int kx, int ky) { return values[static_cast<std::size_t>(ky) * width + kx]; }
    Complex operator()(int kx, int ky) const { return values[static_cast<std::size_t>(ky) * width + kx]; }

    // Signed frequency coordinates, e.g. at(0, 0) is DC, at(-1, 0) the last column.
    Complex at(int ku, int kv) const;
};

/// Two-dimensional complex DFT of fixed size backed by FFTW. Plans are built
/// once per instance (FFTW_ESTIMATE, so execution is deterministic) and the
/// instance owns its aligned work buffer. Not shareable between threads; make
/// one per thread.
class Fft2D {
public:
    Fft2D(int width, int height);
    ~Fft2D();
    Fft2D(const Fft2D&) = delete;
    Fft2D& operator=(const Fft2D&) = delete;

    int width() const { return width_; }
    int height() const { return height_; }

    std::vector<Complex> forward(std::span<const double> real) const;
    std::vector<Complex> forward(std::span<const Complex> values) const;
    /// Inverse transform including the 1/(w*h) normalization.
    std::vector<Complex> inverse(std::span<const Complex> spectrum) const;
    /// Real part of the normalized inverse transform.
    std::vector<double> inverse_real(std::span<const Complex> spectrum) const;

private:
    void run(bool forward_direction, std::span<const Complex> in, std::vector<Complex>& out) const;

    int width_;
    int height_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace phasessl
