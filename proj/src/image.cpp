#include <phasessl/image.hpp>

#include <algorithm>
#include <cmath>

namespace phasessl {

MultiFeatureImage::MultiFeatureImage(int width, int height)
    : width_(width), height_(height)
{
    if (width < 0 || height < 0)
        throw std::invalid_argument("multi-feature dimensions must be non-negative");
    for (auto& p : planes_)
        p.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0);
}

MultiFeatureImage::MultiFeatureImage(int width, int height,
                                     std::array<std::vector<double>, kChannels> planes)
    : width_(width), height_(height), planes_(std::move(planes))
{
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    for (const auto& p : planes_)
        if (p.size() != n)
            throw std::invalid_argument("multi-feature plane size must equal width x height");
}

GrayImage MultiFeatureImage::channel(int c) const
{
    if (c < 0 || c >= kChannels)
        throw std::out_of_range("multi-feature channel index out of range");
    return GrayImage(width_, height_, planes_[static_cast<std::size_t>(c)]);
}

bool all_finite(std::span<const double> values)
{
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(std::span<const double> values, const std::string& what)
{
    if (!all_finite(values))
        throw std::invalid_argument(what + " contains non-finite values");
}

bool within_range(std::span<const double> values, double lo, double hi)
{
    return std::all_of(values.begin(), values.end(), [&](double v) { return v >= lo && v <= hi; });
}

}  // namespace phasessl
