#pragma once

#include <phasessl/fft.hpp>
#include <phasessl/image.hpp>

#include <utility>
#include <vector>

namespace phasessl {

enum class ProfileKind { log_gabor, assd };

/// One isotropic bandpass filter family, sampled at num_scales wavelengths
/// base_wavelength * scale_multiplier^s.
struct FilterBankConfig {
    ProfileKind profile_kind = ProfileKind::log_gabor;
    int num_scales = 3;
    double base_wavelength = 16.0;  // pixels
    double scale_multiplier = 2.0;
    double sigma_ratio = 0.55;      // log-Gabor bandwidth
    double assd_alpha = 2.0;
    int assd_order = 2;

    double wavelength(int scale) const;
    void validate() const;
    /// Also checks that the coarsest centre frequency is resolvable on a w x h grid.
    void validate_for(int width, int height) const;

    bool operator==(const FilterBankConfig&) const = default;
};

/// The phase bank drives LwPA; the energy bank drives LPE and ELEA.
struct FilterBanks {
    FilterBankConfig phase{};
    FilterBankConfig energy{ProfileKind::assd};

    bool operator==(const FilterBanks&) const = default;
};

struct RegularizerConfig {
    double lambda = 2.0;
    double beta0 = 1.0;
    double beta_max = 256.0;
    double kappa = 2.0 * 1.4142135623730951;
    double edge_sigma = 0.5;
    int num_directions = 8;
    double t_floor = 0.1;
    double airlight_fraction = 0.001;

    void validate() const;

    bool operator==(const RegularizerConfig&) const = default;
};

struct ScaleResponse {
    GrayImage even;
    GrayImage odd1;
    GrayImage odd2;
};

struct ScaleResponses {
    int width = 0;
    int height = 0;
    std::vector<ScaleResponse> scales;
    // Magnitude below which an accumulated response is treated as exactly zero
    // (FFT round-off on the input's scale).
    double noise_floor = 0.0;
};

/// Radial gain at normalized radial frequency rho (cycles/pixel). Peak value 1.
double radial_gain(const FilterBankConfig& config, int scale_index, double rho);
FrequencyResponse make_radial_profile(const FilterBankConfig& config, int scale_index, int width, int height);

/// Riesz multipliers i*u/|w| and i*v/|w|, zero at DC.
std::pair<Complex, Complex> riesz_at(double u, double v);
std::pair<FrequencyResponse, FrequencyResponse> riesz_kernels(int width, int height);

ScaleResponses monogenic_transform(const GrayImage& img, const FilterBankConfig& config);

PhaseImage lwpa(const ScaleResponses& resp);
EnergyImage lpe(const ScaleResponses& resp, const PhaseImage& phase);

double estimate_airlight(const EnergyImage& lpe_img, const RegularizerConfig& cfg);

inline constexpr double kTransmissionOmega = 0.95;
inline constexpr int kTransmissionPatch = 7;

AttenuationImage initial_transmission(const EnergyImage& lpe_img, double airlight, const RegularizerConfig& cfg);

inline double soft_threshold(double v, double t)
{
    const double m = (v < 0 ? -v : v) - t;
    if (m <= 0.0)
        return 0.0;
    return v < 0 ? -m : m;
}

/// Offsets (dx, dy) of the first-difference stencils D_j T = T(x+dx, y+dy) - T(x, y).
std::vector<std::pair<int, int>> difference_offsets(int num_directions);

struct SolverTraceEntry {
    int iteration;  // 0 = initial estimate
    double beta;
    double objective;
};

struct TransmissionResult {
    AttenuationImage transmission;
    std::vector<SolverTraceEntry> trace;
};

/// lambda/2 ||T - T_hat||^2 + sum_j ||W_j o (D_j T)||_1 with circular differences.
double transmission_objective(std::span<const double> t, const AttenuationImage& t_hat, const EnergyImage& guide,
                              const RegularizerConfig& cfg);

TransmissionResult solve_transmission(const AttenuationImage& t_hat, const EnergyImage& guide,
                                      const RegularizerConfig& cfg);

AttenuationImage elea(const EnergyImage& lpe_img, const AttenuationImage& transmission, double airlight,
                      const RegularizerConfig& cfg);

MultiFeatureImage compose_mf(const PhaseImage& phase, const EnergyImage& energy, const AttenuationImage& atten);

/// LPE divided by its maximum; all-zero stays all-zero.
EnergyImage rescale_by_max(const EnergyImage& energy);

MultiFeatureImage enhance_image(const GrayImage& img, const FilterBanks& banks, const RegularizerConfig& rc);

}  // namespace phasessl
