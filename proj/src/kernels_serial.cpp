#include <phasessl/kernels.hpp>

#include <algorithm>
#include <limits>

namespace phasessl::kernels::serial {

namespace {
inline std::size_t at(int c, int y, int x, int h, int w)
{
    return (static_cast<std::size_t>(c) * h + y) * w + x;
}
}  // namespace

void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output)
{
    const int r = s.ksize / 2;
    for (int o = 0; o < s.out_channels; ++o)
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x) {
                double acc = bias[o];
                for (int i = 0; i < s.in_channels; ++i)
                    for (int ky = 0; ky < s.ksize; ++ky)
                        for (int kx = 0; kx < s.ksize; ++kx) {
                            const int yy = y + ky - r;
                            const int xx = x + kx - r;
                            if (yy < 0 || yy >= s.height || xx < 0 || xx >= s.width)
                                continue;
                            acc += weights[at(o * s.in_channels + i, ky, kx, s.ksize, s.ksize)] *
                                   input[at(i, yy, xx, s.height, s.width)];
                        }
                output[at(o, y, x, s.height, s.width)] = acc;
            }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> weights,
                           std::span<const double> grad_output, std::span<double> grad_input)
{
    const int r = s.ksize / 2;
    for (int i = 0; i < s.in_channels; ++i)
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x) {
                double acc = 0.0;
                for (int o = 0; o < s.out_channels; ++o)
                    for (int ky = 0; ky < s.ksize; ++ky)
                        for (int kx = 0; kx < s.ksize; ++kx) {
                            const int yy = y - ky + r;
                            const int xx = x - kx + r;
                            if (yy < 0 || yy >= s.height || xx < 0 || xx >= s.width)
                                continue;
                            acc += weights[at(o * s.in_channels + i, ky, kx, s.ksize, s.ksize)] *
                                   grad_output[at(o, yy, xx, s.height, s.width)];
                        }
                grad_input[at(i, y, x, s.height, s.width)] = acc;
            }
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weights,
                            std::span<double> grad_bias)
{
    const int r = s.ksize / 2;
    for (int o = 0; o < s.out_channels; ++o) {
        double gb = 0.0;
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x)
                gb += grad_output[at(o, y, x, s.height, s.width)];
        grad_bias[o] = gb;
        for (int i = 0; i < s.in_channels; ++i)
            for (int ky = 0; ky < s.ksize; ++ky)
                for (int kx = 0; kx < s.ksize; ++kx) {
                    double acc = 0.0;
                    for (int y = 0; y < s.height; ++y)
                        for (int x = 0; x < s.width; ++x) {
                            const int yy = y + ky - r;
                            const int xx = x + kx - r;
                            if (yy < 0 || yy >= s.height || xx < 0 || xx >= s.width)
                                continue;
                            acc += grad_output[at(o, y, x, s.height, s.width)] *
                                   input[at(i, yy, xx, s.height, s.width)];
                        }
                    grad_weights[at(o * s.in_channels + i, ky, kx, s.ksize, s.ksize)] = acc;
                }
    }
}

void min_filter(int width, int height, int radius, std::span<const double> input, std::span<double> output)
{
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double m = std::numeric_limits<double>::infinity();
            for (int yy = std::max(0, y - radius); yy <= std::min(height - 1, y + radius); ++yy)
                for (int xx = std::max(0, x - radius); xx <= std::min(width - 1, x + radius); ++xx)
                    m = std::min(m, input[static_cast<std::size_t>(yy) * width + xx]);
            output[static_cast<std::size_t>(y) * width + x] = m;
        }
}

void circular_convolve(int width, int height, std::span<const double> input, std::span<const double> kernel,
                       std::span<double> output)
{
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int j = 0; j < height; ++j)
                for (int i = 0; i < width; ++i) {
                    const int sx = ((x - i) % width + width) % width;
                    const int sy = ((y - j) % height + height) % height;
                    acc += kernel[static_cast<std::size_t>(j) * width + i] *
                           input[static_cast<std::size_t>(sy) * width + sx];
                }
            output[static_cast<std::size_t>(y) * width + x] = acc;
        }
}

}  // namespace phasessl::kernels::serial
