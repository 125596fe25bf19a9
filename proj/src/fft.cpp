#include <phasessl/fft.hpp>

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace phasessl {

namespace {
// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}
}  // namespace

double bin_frequency(int k, int n)
{
    return static_cast<double>(signed_bin(k, n)) / static_cast<double>(n);
}

int signed_bin(int k, int n)
{
    return k < (n + 1) / 2 ? k : k - n;
}

Complex FrequencyResponse::at(int ku, int kv) const
{
    const int kx = ((ku % width) + width) % width;
    const int ky = ((kv % height) + height) % height;
    return (*this)(kx, ky);
}

struct Fft2D::Impl {
    fftw_complex* buffer = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

Fft2D::Fft2D(int width, int height)
    : width_(width), height_(height), impl_(std::make_unique<Impl>())
{
    if (width < 1 || height < 1)
        throw std::invalid_argument("FFT dimensions must be positive");
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::lock_guard lock(planner_mutex());
    impl_->buffer = fftw_alloc_complex(n);
    if (!impl_->buffer)
        throw std::bad_alloc();
    impl_->fwd = fftw_plan_dft_2d(height, width, impl_->buffer, impl_->buffer, FFTW_FORWARD, FFTW_ESTIMATE);
    impl_->inv = fftw_plan_dft_2d(height, width, impl_->buffer, impl_->buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft2D::~Fft2D()
{
    std::lock_guard lock(planner_mutex());
    if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
    if (impl_->inv) fftw_destroy_plan(impl_->inv);
    if (impl_->buffer) fftw_free(impl_->buffer);
}

void Fft2D::run(bool forward_direction, std::span<const Complex> in, std::vector<Complex>& out) const
{
    const auto n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    if (in.size() != n)
        throw std::invalid_argument("FFT input size does not match plan dimensions");
    // std::complex<double> is layout-compatible with fftw_complex.
    std::memcpy(impl_->buffer, in.data(), n * sizeof(Complex));
    fftw_execute(forward_direction ? impl_->fwd : impl_->inv);
    out.resize(n);
    std::memcpy(static_cast<void*>(out.data()), impl_->buffer, n * sizeof(Complex));
}

std::vector<Complex> Fft2D::forward(std::span<const double> real) const
{
    std::vector<Complex> tmp(real.begin(), real.end());
    std::vector<Complex> out;
    run(true, tmp, out);
    return out;
}

std::vector<Complex> Fft2D::forward(std::span<const Complex> values) const
{
    std::vector<Complex> out;
    run(true, values, out);
    return out;
}

std::vector<Complex> Fft2D::inverse(std::span<const Complex> spectrum) const
{
    std::vector<Complex> out;
    run(false, spectrum, out);
    const double scale = 1.0 / static_cast<double>(out.size());
    for (auto& v : out)
        v *= scale;
    return out;
}

std::vector<double> Fft2D::inverse_real(std::span<const Complex> spectrum) const
{
    std::vector<Complex> out;
    run(false, spectrum, out);
    const double scale = 1.0 / static_cast<double>(out.size());
    std::vector<double> re(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        re[i] = out[i].real() * scale;
    return re;
}

}  // namespace phasessl
