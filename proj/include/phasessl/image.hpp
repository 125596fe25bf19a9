#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace phasessl {

/// Row-major real raster. The tag distinguishes images whose values carry
/// different range contracts (raw intensity, phase, energy, attenuation).
template <typename Tag>
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, double fill = 0.0)
        : width_(width), height_(height)
    {
        if (width < 0 || height < 0)
            throw std::invalid_argument("raster dimensions must be non-negative");
        values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }
    Raster(int width, int height, std::vector<double> values)
        : width_(width), height_(height), values_(std::move(values))
    {
        if (width < 0 || height < 0 ||
            values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw std::invalid_argument("raster pixel count must equal width x height");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& operator()(int x, int y) { return values_[index(x, y)]; }
    double operator()(int x, int y) const { return values_[index(x, y)]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    const std::vector<double>& storage() const { return values_; }

    bool same_dims(int w, int h) const { return width_ == w && height_ == h; }
    template <typename Other>
    bool same_dims(const Raster<Other>& o) const { return same_dims(o.width(), o.height()); }

    bool operator==(const Raster&) const = default;

private:
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

struct GrayTag {};
struct PhaseTag {};
struct EnergyTag {};
struct AttenuationTag {};

using GrayImage = Raster<GrayTag>;
using PhaseImage = Raster<PhaseTag>;              // values in [0,1]
using EnergyImage = Raster<EnergyTag>;            // values >= 0
using AttenuationImage = Raster<AttenuationTag>;  // values in [0,1]

template <typename To, typename From>
Raster<To> raster_cast(const Raster<From>& src)
{
    return Raster<To>(src.width(), src.height(),
                      std::vector<double>(src.values().begin(), src.values().end()));
}

/// Three-plane feature image: LwPA, rescaled LPE, ELEA.
class MultiFeatureImage {
public:
    static constexpr int kChannels = 3;

    MultiFeatureImage() = default;
    MultiFeatureImage(int width, int height);
    MultiFeatureImage(int width, int height, std::array<std::vector<double>, kChannels> planes);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return kChannels; }

    GrayImage channel(int c) const;
    std::span<const double> plane(int c) const { return planes_.at(static_cast<std::size_t>(c)); }
    std::span<double> plane(int c) { return planes_.at(static_cast<std::size_t>(c)); }

    bool operator==(const MultiFeatureImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::array<std::vector<double>, kChannels> planes_;
};

bool all_finite(std::span<const double> values);
void require_finite(std::span<const double> values, const std::string& what);
bool within_range(std::span<const double> values, double lo, double hi);

}  // namespace phasessl
