#pragma once

#include <span>

// Inner-loop kernels used by the enhancement and network code. Each kernel
// has a straightforward serial reference in `serial` and an OpenMP version
// in `omp` that is used in production. The OpenMP versions split work only
// across independent outputs, so their results do not depend on the thread
// count.
//
// Tensor layout throughout is [channel][row][column], contiguous.

namespace phasessl::kernels {

struct ConvShape {
    int in_channels;
    int out_channels;
    int height;
    int width;
    int ksize;  // odd; zero "same" padding
};

namespace serial {

void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output);
void conv2d_backward_input(const ConvShape& s, std::span<const double> weights,
                           std::span<const double> grad_output, std::span<double> grad_input);
void conv2d_backward_params(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weights,
                            std::span<double> grad_bias);

/// Minimum over a (2r+1)x(2r+1) window clipped to the image.
void min_filter(int width, int height, int radius, std::span<const double> input, std::span<double> output);

/// out(x,y) = sum_{i,j} kernel(i,j) * in((x-i) mod w, (y-j) mod h)
void circular_convolve(int width, int height, std::span<const double> input, std::span<const double> kernel,
                       std::span<double> output);

}  // namespace serial

namespace omp {

void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output);
void conv2d_backward_input(const ConvShape& s, std::span<const double> weights,
                           std::span<const double> grad_output, std::span<double> grad_input);
void conv2d_backward_params(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weights,
                            std::span<double> grad_bias);
void min_filter(int width, int height, int radius, std::span<const double> input, std::span<double> output);
void circular_convolve(int width, int height, std::span<const double> input, std::span<const double> kernel,
                       std::span<double> output);

}  // namespace omp

}  // namespace phasessl::kernels
