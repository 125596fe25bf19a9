#include <phasessl/kernels.hpp>

#include <algorithm>
#include <vector>

namespace phasessl::kernels::omp {

namespace {
inline std::size_t plane(int c, int h, int w)
{
    return static_cast<std::size_t>(c) * h * w;
}
}  // namespace

void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output)
{
    const int r = s.ksize / 2;
    const int h = s.height;
    const int w = s.width;
#pragma omp parallel for schedule(static)
    for (int o = 0; o < s.out_channels; ++o) {
        double* out = output.data() + plane(o, h, w);
        std::fill(out, out + static_cast<std::size_t>(h) * w, bias[o]);
        for (int i = 0; i < s.in_channels; ++i) {
            const double* in = input.data() + plane(i, h, w);
            const double* wk = weights.data() + (static_cast<std::size_t>(o) * s.in_channels + i) * s.ksize * s.ksize;
            for (int ky = 0; ky < s.ksize; ++ky) {
                const int dy = ky - r;
                const int y0 = std::max(0, -dy);
                const int y1 = std::min(h, h - dy);
                for (int kx = 0; kx < s.ksize; ++kx) {
                    const int dx = kx - r;
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(w, w - dx);
                    const double wv = wk[ky * s.ksize + kx];
                    for (int y = y0; y < y1; ++y) {
                        double* orow = out + static_cast<std::size_t>(y) * w;
                        const double* irow = in + static_cast<std::size_t>(y + dy) * w + dx;
                        for (int x = x0; x < x1; ++x)
                            orow[x] += wv * irow[x];
                    }
                }
            }
        }
    }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> weights,
                           std::span<const double> grad_output, std::span<double> grad_input)
{
    const int r = s.ksize / 2;
    const int h = s.height;
    const int w = s.width;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < s.in_channels; ++i) {
        double* gin = grad_input.data() + plane(i, h, w);
        std::fill(gin, gin + static_cast<std::size_t>(h) * w, 0.0);
        for (int o = 0; o < s.out_channels; ++o) {
            const double* gout = grad_output.data() + plane(o, h, w);
            const double* wk = weights.data() + (static_cast<std::size_t>(o) * s.in_channels + i) * s.ksize * s.ksize;
            for (int ky = 0; ky < s.ksize; ++ky) {
                const int dy = r - ky;
                const int y0 = std::max(0, -dy);
                const int y1 = std::min(h, h - dy);
                for (int kx = 0; kx < s.ksize; ++kx) {
                    const int dx = r - kx;
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(w, w - dx);
                    const double wv = wk[ky * s.ksize + kx];
                    for (int y = y0; y < y1; ++y) {
                        double* grow = gin + static_cast<std::size_t>(y) * w;
                        const double* orow = gout + static_cast<std::size_t>(y + dy) * w + dx;
                        for (int x = x0; x < x1; ++x)
                            grow[x] += wv * orow[x];
                    }
                }
            }
        }
    }
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weights,
                            std::span<double> grad_bias)
{
    const int r = s.ksize / 2;
    const int h = s.height;
    const int w = s.width;
#pragma omp parallel for schedule(static)
    for (int o = 0; o < s.out_channels; ++o) {
        const double* gout = grad_output.data() + plane(o, h, w);
        double gb = 0.0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(h) * w; ++k)
            gb += gout[k];
        grad_bias[o] = gb;
        for (int i = 0; i < s.in_channels; ++i) {
            const double* in = input.data() + plane(i, h, w);
            double* gw = grad_weights.data() + (static_cast<std::size_t>(o) * s.in_channels + i) * s.ksize * s.ksize;
            for (int ky = 0; ky < s.ksize; ++ky) {
                const int dy = ky - r;
                const int y0 = std::max(0, -dy);
                const int y1 = std::min(h, h - dy);
                for (int kx = 0; kx < s.ksize; ++kx) {
                    const int dx = kx - r;
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(w, w - dx);
                    double acc = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* grow = gout + static_cast<std::size_t>(y) * w;
                        const double* irow = in + static_cast<std::size_t>(y + dy) * w + dx;
                        for (int x = x0; x < x1; ++x)
                            acc += grow[x] * irow[x];
                    }
                    gw[ky * s.ksize + kx] = acc;
                }
            }
        }
    }
}

void min_filter(int width, int height, int radius, std::span<const double> input, std::span<double> output)
{
    // Separable: a clipped rectangular window's minimum is the minimum of its row minima.
    std::vector<double> rows(input.size());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        const double* in = input.data() + static_cast<std::size_t>(y) * width;
        double* out = rows.data() + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            const int lo = std::max(0, x - radius);
            const int hi = std::min(width - 1, x + radius);
            out[x] = *std::min_element(in + lo, in + hi + 1);
        }
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        const int lo = std::max(0, y - radius);
        const int hi = std::min(height - 1, y + radius);
        double* out = output.data() + static_cast<std::size_t>(y) * width;
        std::copy_n(rows.data() + static_cast<std::size_t>(lo) * width, width, out);
        for (int yy = lo + 1; yy <= hi; ++yy) {
            const double* row = rows.data() + static_cast<std::size_t>(yy) * width;
            for (int x = 0; x < width; ++x)
                out[x] = std::min(out[x], row[x]);
        }
    }
}

void circular_convolve(int width, int height, std::span<const double> input, std::span<const double> kernel,
                       std::span<double> output)
{
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        double* out = output.data() + static_cast<std::size_t>(y) * width;
        std::fill(out, out + width, 0.0);
        for (int j = 0; j < height; ++j) {
            const int sy = ((y - j) % height + height) % height;
            const double* in = input.data() + static_cast<std::size_t>(sy) * width;
            for (int i = 0; i < width; ++i) {
                const double k = kernel[static_cast<std::size_t>(j) * width + i];
                // x - i wraps once: x in [0, i) reads from the tail of the row.
                for (int x = 0; x < i; ++x)
                    out[x] += k * in[x - i + width];
                for (int x = i; x < width; ++x)
                    out[x] += k * in[x - i];
            }
        }
    }
}

}  // namespace phasessl::kernels::omp
