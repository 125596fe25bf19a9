#include <phasessl/enhance.hpp>
#include <phasessl/kernels.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace phasessl {

namespace {

constexpr double kNoiseFloorRelative = 1e-10;

void check_range(std::span<const double> values, double lo, double hi, const char* what)
{
    if (!within_range(values, lo, hi))
        throw std::logic_error(std::string(what) + " left its value range");
}

void require_same_dims(int w0, int h0, int w1, int h1, const char* what)
{
    if (w0 != w1 || h0 != h1)
        throw std::invalid_argument(std::string(what) + ": image dimensions do not match");
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

double FilterBankConfig::wavelength(int scale) const
{
    return base_wavelength * std::pow(scale_multiplier, scale);
}

void FilterBankConfig::validate() const
{
    if (num_scales < 1)
        throw std::invalid_argument("filterbank: num_scales must be >= 1");
    if (!(base_wavelength >= 2.0))
        throw std::invalid_argument("filterbank: base_wavelength must be >= 2 pixels");
    if (!(scale_multiplier > 1.0))
        throw std::invalid_argument("filterbank: scale_multiplier must be > 1");
    if (!(sigma_ratio > 0.0 && sigma_ratio < 1.0))
        throw std::invalid_argument("filterbank: sigma_ratio must lie in (0,1)");
    if (!(assd_alpha > 0.0))
        throw std::invalid_argument("filterbank: assd_alpha must be > 0");
    if (assd_order < 1)
        throw std::invalid_argument("filterbank: assd_order must be >= 1");
}

void FilterBankConfig::validate_for(int width, int height) const
{
    validate();
    if (width < 4 || height < 4)
        throw std::invalid_argument("filterbank: image must be at least 4x4");
    const double coarsest = wavelength(num_scales - 1);
    if (coarsest > static_cast<double>(std::max(width, height)))
        throw std::invalid_argument("filterbank: coarsest wavelength " + std::to_string(coarsest) +
                                    " px exceeds the image extent; reduce num_scales or base_wavelength");
}

void RegularizerConfig::validate() const
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("regularizer: lambda must be > 0");
    if (!(beta0 > 0.0))
        throw std::invalid_argument("regularizer: beta0 must be > 0");
    if (!(beta0 < beta_max))
        throw std::invalid_argument("regularizer: beta0 must be < beta_max");
    if (!(kappa > 1.0))
        throw std::invalid_argument("regularizer: kappa must be > 1");
    if (!(edge_sigma > 0.0))
        throw std::invalid_argument("regularizer: edge_sigma must be > 0");
    if (num_directions != 4 && num_directions != 8)
        throw std::invalid_argument("regularizer: num_directions must be 4 or 8");
    if (!(t_floor > 0.0 && t_floor < 1.0))
        throw std::invalid_argument("regularizer: t_floor must lie in (0,1)");
    if (!(airlight_fraction > 0.0 && airlight_fraction < 1.0))
        throw std::invalid_argument("regularizer: airlight_fraction must lie in (0,1)");
}

// ---------------------------------------------------------------------------
// Filters

double radial_gain(const FilterBankConfig& config, int scale_index, double rho)
{
    if (scale_index < 0 || scale_index >= config.num_scales)
        throw std::out_of_range("radial_gain: scale index out of range");
    if (rho <= 0.0)
        return 0.0;
    const double centre = 1.0 / config.wavelength(scale_index);
    const double r = rho / centre;
    switch (config.profile_kind) {
    case ProfileKind::log_gabor: {
        const double lr = std::log(r);
        const double ls = std::log(config.sigma_ratio);
        return std::exp(-(lr * lr) / (2.0 * ls * ls));
    }
    case ProfileKind::assd: {
        const double n = config.assd_order;
        const double a = config.assd_alpha;
        return std::pow(r, n) * std::exp(n / a * (1.0 - std::pow(r, a)));
    }
    }
    return 0.0;
}

FrequencyResponse make_radial_profile(const FilterBankConfig& config, int scale_index, int width, int height)
{
    config.validate_for(width, height);
    if (scale_index < 0 || scale_index >= config.num_scales)
        throw std::out_of_range("make_radial_profile: scale index out of range");
    FrequencyResponse g(width, height);
    for (int ky = 0; ky < height; ++ky) {
        const double v = bin_frequency(ky, height);
        for (int kx = 0; kx < width; ++kx) {
            const double u = bin_frequency(kx, width);
            g(kx, ky) = radial_gain(config, scale_index, std::sqrt(u * u + v * v));
        }
    }
    g(0, 0) = 0.0;
    return g;
}

std::pair<Complex, Complex> riesz_at(double u, double v)
{
    const double r = std::sqrt(u * u + v * v);
    if (r == 0.0)
        return {Complex(0.0, 0.0), Complex(0.0, 0.0)};
    return {Complex(0.0, u / r), Complex(0.0, v / r)};
}

std::pair<FrequencyResponse, FrequencyResponse> riesz_kernels(int width, int height)
{
    if (width < 2 || height < 2)
        throw std::invalid_argument("riesz_kernels: dimensions must be at least 2x2");
    FrequencyResponse h1(width, height);
    FrequencyResponse h2(width, height);
    for (int ky = 0; ky < height; ++ky) {
        const double v = bin_frequency(ky, height);
        for (int kx = 0; kx < width; ++kx) {
            auto [a, b] = riesz_at(bin_frequency(kx, width), v);
            h1(kx, ky) = a;
            h2(kx, ky) = b;
        }
    }
    return {std::move(h1), std::move(h2)};
}

ScaleResponses monogenic_transform(const GrayImage& img, const FilterBankConfig& config)
{
    const int w = img.width();
    const int h = img.height();
    config.validate_for(w, h);
    require_finite(img.values(), "monogenic_transform input");

    Fft2D fft(w, h);
    const auto spectrum = fft.forward(img.values());
    const auto [h1, h2] = riesz_kernels(w, h);

    ScaleResponses out;
    out.width = w;
    out.height = h;
    double peak = 0.0;
    for (double v : img.values())
        peak = std::max(peak, std::abs(v));
    out.noise_floor = kNoiseFloorRelative * peak;

    std::vector<Complex> filtered(spectrum.size());
    for (int s = 0; s < config.num_scales; ++s) {
        const auto g = make_radial_profile(config, s, w, h);
        ScaleResponse r;
        // Even dimensions leave an unpaired Nyquist row/column whose Riesz
        // response is not Hermitian; only the real part is kept.
        for (std::size_t i = 0; i < spectrum.size(); ++i)
            filtered[i] = spectrum[i] * g.values[i];
        r.even = GrayImage(w, h, fft.inverse_real(filtered));
        for (std::size_t i = 0; i < spectrum.size(); ++i)
            filtered[i] = spectrum[i] * g.values[i] * h1.values[i];
        r.odd1 = GrayImage(w, h, fft.inverse_real(filtered));
        for (std::size_t i = 0; i < spectrum.size(); ++i)
            filtered[i] = spectrum[i] * g.values[i] * h2.values[i];
        r.odd2 = GrayImage(w, h, fft.inverse_real(filtered));
        out.scales.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Local phase features

PhaseImage lwpa(const ScaleResponses& resp)
{
    if (resp.scales.empty())
        throw std::invalid_argument("lwpa: no filter scales present");
    const int w = resp.width;
    const int h = resp.height;
    PhaseImage out(w, h);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double even = 0.0;
        double o1 = 0.0;
        double o2 = 0.0;
        for (const auto& s : resp.scales) {
            even += s.even[i];
            o1 += s.odd1[i];
            o2 += s.odd2[i];
        }
        const double odd = std::sqrt(o1 * o1 + o2 * o2);
        if (std::abs(even) <= resp.noise_floor && odd <= resp.noise_floor) {
            out[i] = 0.5;
            continue;
        }
        const double phi = std::atan2(even, odd);  // odd >= 0, so phi in [-pi/2, pi/2]
        out[i] = std::clamp((phi + std::numbers::pi / 2.0) / std::numbers::pi, 0.0, 1.0);
    }
    check_range(out.values(), 0.0, 1.0, "LwPA");
    return out;
}

EnergyImage lpe(const ScaleResponses& resp, const PhaseImage& phase)
{
    require_same_dims(resp.width, resp.height, phase.width(), phase.height(), "lpe");
    EnergyImage out(resp.width, resp.height);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double sym = 0.0;
        for (const auto& s : resp.scales) {
            const double odd = std::sqrt(s.odd1[i] * s.odd1[i] + s.odd2[i] * s.odd2[i]);
            sym += std::max(std::abs(s.even[i]) - odd, 0.0);
        }
        out[i] = phase[i] * sym;
    }
    check_range(out.values(), 0.0, std::numeric_limits<double>::infinity(), "LPE");
    return out;
}

// ---------------------------------------------------------------------------
// Attenuation model

double estimate_airlight(const EnergyImage& lpe_img, const RegularizerConfig& cfg)
{
    if (lpe_img.empty())
        throw std::invalid_argument("estimate_airlight: empty image");
    const std::size_t n = lpe_img.size();
    const auto wanted = static_cast<std::size_t>(std::ceil(cfg.airlight_fraction * static_cast<double>(n) - 1e-9));
    const std::size_t count = std::clamp<std::size_t>(wanted, 1, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (lpe_img[a] != lpe_img[b])
                              return lpe_img[a] > lpe_img[b];
                          return a < b;
                      });
    double sum = 0.0;
    for (std::size_t k = 0; k < count; ++k)
        sum += lpe_img[order[k]];
    return std::max(0.0, sum / static_cast<double>(count));
}

AttenuationImage initial_transmission(const EnergyImage& lpe_img, double airlight, const RegularizerConfig& cfg)
{
    const int w = lpe_img.width();
    const int h = lpe_img.height();
    const bool all_zero = std::all_of(lpe_img.values().begin(), lpe_img.values().end(),
                                      [](double v) { return v == 0.0; });
    if (all_zero)
        return AttenuationImage(w, h, 1.0);
    if (!(airlight > 0.0))
        throw std::invalid_argument("initial_transmission: airlight must be > 0 for a non-zero image");

    std::vector<double> ratio(lpe_img.size());
    for (std::size_t i = 0; i < ratio.size(); ++i)
        ratio[i] = lpe_img[i] / airlight;
    std::vector<double> dark(ratio.size());
    kernels::omp::min_filter(w, h, kTransmissionPatch / 2, ratio, dark);

    AttenuationImage out(w, h);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::clamp(1.0 - kTransmissionOmega * dark[i], cfg.t_floor, 1.0);
    check_range(out.values(), 0.0, 1.0, "initial transmission");
    return out;
}

std::vector<std::pair<int, int>> difference_offsets(int num_directions)
{
    static const std::vector<std::pair<int, int>> compass = {
        {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
    if (num_directions != 4 && num_directions != 8)
        throw std::invalid_argument("difference_offsets: num_directions must be 4 or 8");
    return {compass.begin(), compass.begin() + num_directions};
}

namespace {

// D T(x,y) = T(x+dx, y+dy) - T(x,y), circular.
void circular_difference(int w, int h, int dx, int dy, std::span<const double> in, std::span<double> out)
{
    for (int y = 0; y < h; ++y) {
        const int yy = ((y + dy) % h + h) % h;
        for (int x = 0; x < w; ++x) {
            const int xx = ((x + dx) % w + w) % w;
            out[static_cast<std::size_t>(y) * w + x] =
                in[static_cast<std::size_t>(yy) * w + xx] - in[static_cast<std::size_t>(y) * w + x];
        }
    }
}

std::vector<std::vector<double>> edge_weights(const EnergyImage& guide, const RegularizerConfig& cfg)
{
    const int w = guide.width();
    const int h = guide.height();
    const auto offsets = difference_offsets(cfg.num_directions);
    std::vector<std::vector<double>> weights;
    std::vector<double> d(guide.size());
    const double denom = 2.0 * cfg.edge_sigma * cfg.edge_sigma;
    for (auto [dx, dy] : offsets) {
        circular_difference(w, h, dx, dy, guide.values(), d);
        std::vector<double> wj(d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            wj[i] = std::exp(-(d[i] * d[i]) / denom);
        weights.push_back(std::move(wj));
    }
    return weights;
}

double objective_with_weights(std::span<const double> t, const AttenuationImage& t_hat,
                              const std::vector<std::vector<double>>& weights, const RegularizerConfig& cfg)
{
    const int w = t_hat.width();
    const int h = t_hat.height();
    double data = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double r = t[i] - t_hat[i];
        data += r * r;
    }
    double reg = 0.0;
    std::vector<double> d(t.size());
    const auto offsets = difference_offsets(cfg.num_directions);
    for (std::size_t j = 0; j < offsets.size(); ++j) {
        circular_difference(w, h, offsets[j].first, offsets[j].second, t, d);
        for (std::size_t i = 0; i < d.size(); ++i)
            reg += weights[j][i] * std::abs(d[i]);
    }
    return 0.5 * cfg.lambda * data + reg;
}

}  // namespace

double transmission_objective(std::span<const double> t, const AttenuationImage& t_hat, const EnergyImage& guide,
                              const RegularizerConfig& cfg)
{
    if (t.size() != t_hat.size() || !t_hat.same_dims(guide))
        throw std::invalid_argument("transmission_objective: dimension mismatch");
    return objective_with_weights(t, t_hat, edge_weights(guide, cfg), cfg);
}

TransmissionResult solve_transmission(const AttenuationImage& t_hat, const EnergyImage& guide,
                                      const RegularizerConfig& cfg)
{
    cfg.validate();
    require_same_dims(t_hat.width(), t_hat.height(), guide.width(), guide.height(), "solve_transmission");
    const int w = t_hat.width();
    const int h = t_hat.height();
    const std::size_t n = t_hat.size();
    const auto offsets = difference_offsets(cfg.num_directions);
    const auto weights = edge_weights(guide, cfg);

    // Transfer functions of the difference stencils: exp(2 pi i (u dx + v dy)) - 1.
    std::vector<std::vector<Complex>> otf;
    std::vector<double> otf_energy(n, 0.0);
    for (auto [dx, dy] : offsets) {
        std::vector<Complex> f(n);
        for (int ky = 0; ky < h; ++ky)
            for (int kx = 0; kx < w; ++kx) {
                const double phase = 2.0 * std::numbers::pi *
                                     (static_cast<double>(kx) * dx / w + static_cast<double>(ky) * dy / h);
                const std::size_t i = static_cast<std::size_t>(ky) * w + kx;
                f[i] = Complex(std::cos(phase) - 1.0, std::sin(phase));
                otf_energy[i] += std::norm(f[i]);
            }
        otf.push_back(std::move(f));
    }

    Fft2D fft(w, h);
    const auto t_hat_spec = fft.forward(t_hat.values());
    std::vector<double> t(t_hat.values().begin(), t_hat.values().end());
    std::vector<double> diff(n);
    std::vector<double> z(n);
    std::vector<Complex> numer(n);

    TransmissionResult result;
    result.trace.push_back({0, 0.0, objective_with_weights(t, t_hat, weights, cfg)});

    int iteration = 0;
    for (double beta = cfg.beta0; beta < cfg.beta_max; beta *= cfg.kappa) {
        ++iteration;
        for (std::size_t i = 0; i < n; ++i)
            numer[i] = cfg.lambda * t_hat_spec[i];
        for (std::size_t j = 0; j < offsets.size(); ++j) {
            circular_difference(w, h, offsets[j].first, offsets[j].second, t, diff);
            for (std::size_t i = 0; i < n; ++i)
                z[i] = soft_threshold(diff[i], weights[j][i] / beta);
            const auto z_spec = fft.forward(z);
            for (std::size_t i = 0; i < n; ++i)
                numer[i] += beta * std::conj(otf[j][i]) * z_spec[i];
        }
        for (std::size_t i = 0; i < n; ++i)
            numer[i] /= (cfg.lambda + beta * otf_energy[i]);
        t = fft.inverse_real(numer);
        result.trace.push_back({iteration, beta, objective_with_weights(t, t_hat, weights, cfg)});
    }

    // Projection onto [t_floor, 1] cannot increase the objective when T_hat lies in the box.
    for (auto& v : t)
        v = std::clamp(v, cfg.t_floor, 1.0);
    result.trace.push_back({iteration + 1, cfg.beta_max, objective_with_weights(t, t_hat, weights, cfg)});
    result.transmission = AttenuationImage(w, h, std::move(t));
    check_range(result.transmission.values(), 0.0, 1.0, "transmission");
    return result;
}

AttenuationImage elea(const EnergyImage& lpe_img, const AttenuationImage& transmission, double airlight,
                      const RegularizerConfig& cfg)
{
    require_same_dims(lpe_img.width(), lpe_img.height(), transmission.width(), transmission.height(), "elea");
    AttenuationImage out(lpe_img.width(), lpe_img.height());
    const double peak = *std::max_element(lpe_img.values().begin(), lpe_img.values().end());
    if (!(peak > 0.0))
        return out;
    const double a_norm = airlight / peak;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = transmission[i];
        const double v = (lpe_img[i] / peak - (1.0 - t) * a_norm) / std::max(t, cfg.t_floor);
        out[i] = std::clamp(v, 0.0, 1.0);
    }
    check_range(out.values(), 0.0, 1.0, "ELEA");
    return out;
}

EnergyImage rescale_by_max(const EnergyImage& energy)
{
    EnergyImage out(energy.width(), energy.height());
    if (energy.empty())
        return out;
    const double peak = *std::max_element(energy.values().begin(), energy.values().end());
    if (!(peak > 0.0))
        return out;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = energy[i] / peak;
    return out;
}

MultiFeatureImage compose_mf(const PhaseImage& phase, const EnergyImage& energy, const AttenuationImage& atten)
{
    require_same_dims(phase.width(), phase.height(), energy.width(), energy.height(), "compose_mf");
    require_same_dims(phase.width(), phase.height(), atten.width(), atten.height(), "compose_mf");
    const auto scaled = rescale_by_max(energy);
    MultiFeatureImage mf(phase.width(), phase.height(),
                         {phase.storage(), scaled.storage(), atten.storage()});
    for (int c = 0; c < mf.channels(); ++c)
        check_range(mf.plane(c), 0.0, 1.0, "multi-feature channel");
    return mf;
}

MultiFeatureImage enhance_image(const GrayImage& img, const FilterBanks& banks, const RegularizerConfig& rc)
{
    rc.validate();
    const auto phase_resp = monogenic_transform(img, banks.phase);
    const auto phase = lwpa(phase_resp);
    const auto energy = banks.energy == banks.phase ? lpe(phase_resp, phase)
                                                    : lpe(monogenic_transform(img, banks.energy), phase);
    const double airlight = estimate_airlight(energy, rc);
    const auto t_hat = initial_transmission(energy, airlight, rc);
    const auto transmission = solve_transmission(t_hat, rescale_by_max(energy), rc).transmission;
    const auto atten = elea(energy, transmission, airlight, rc);
    return compose_mf(phase, energy, atten);
}

}  // namespace phasessl
