#include <phasessl/dataset.hpp>
#include <phasessl/image_io.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <iomanip>

namespace phasessl {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Smooth blob with a soft edge: 1 inside the ellipse, Gaussian fall-off outside.
void add_ellipse(GrayImage& img, double cx, double cy, double ax, double ay, double angle, double amplitude)
{
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double u = (c * dx + s * dy) / ax;
            const double v = (-s * dx + c * dy) / ay;
            const double r = std::sqrt(u * u + v * v);
            const double edge = r <= 1.0 ? 1.0 : std::exp(-(r - 1.0) * (r - 1.0) / 0.08);
            img(x, y) += amplitude * edge;
        }
}

}  // namespace

GrayImage synthetic_image(const SyntheticSpec& spec, int label, int index)
{
    const int w = spec.width;
    const int h = spec.height;
    std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(label) * 1000003ULL +
                                                         static_cast<std::uint64_t>(index))));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

    // Shared anatomy: bright mediastinum, two darker lung fields, slow shading.
    GrayImage img(w, h, 0.0);
    const double base = range(0.40, 0.50);
    const double tilt = range(-0.08, 0.08);
    const double fx = range(0.5, 1.5);
    const double fy = range(0.5, 1.5);
    const double ph = range(0.0, 2.0 * std::numbers::pi);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double xn = static_cast<double>(x) / w;
            const double yn = static_cast<double>(y) / h;
            img(x, y) = base + tilt * (yn - 0.5) +
                        0.04 * std::cos(2.0 * std::numbers::pi * (fx * xn + fy * yn) + ph);
        }
    const double lung_dy = range(-0.03, 0.03) * h;
    add_ellipse(img, 0.30 * w, 0.52 * h + lung_dy, 0.17 * w, 0.33 * h, 0.0, -0.18);
    add_ellipse(img, 0.70 * w, 0.52 * h + lung_dy, 0.17 * w, 0.33 * h, 0.0, -0.18);

    // Left and right lung fields in normalized coordinates.
    auto lung_point = [&](bool left, bool peripheral) {
        const double side = left ? 0.30 : 0.70;
        const double outward = left ? -1.0 : 1.0;
        const double x = peripheral ? side + outward * range(0.07, 0.14) : side + range(-0.08, 0.08);
        return std::pair{x * w, range(0.28, 0.78) * h};
    };

    if (label == 0) {
        // Occasional faint benign spot.
        const int spots = static_cast<int>(range(0.0, 2.0));
        for (int k = 0; k < spots; ++k) {
            auto [x, y] = lung_point(uni(rng) < 0.5, false);
            add_ellipse(img, x, y, range(1.5, 2.5), range(1.5, 2.5), 0.0, range(0.04, 0.08));
        }
    } else if (label == 1) {
        const int n = 1 + static_cast<int>(range(0.0, 2.0));
        for (int k = 0; k < n; ++k) {
            auto [x, y] = lung_point(uni(rng) < 0.5, false);
            add_ellipse(img, x, y, range(0.08, 0.14) * w, range(0.08, 0.16) * h, range(0.0, std::numbers::pi),
                        range(0.22, 0.38));
        }
    } else {
        const int per_side = 3 + static_cast<int>(range(0.0, 4.0));
        for (bool left : {true, false})
            for (int k = 0; k < per_side; ++k) {
                auto [x, y] = lung_point(left, true);
                add_ellipse(img, x, y, range(0.025, 0.05) * w, range(0.025, 0.05) * h, 0.0, range(0.08, 0.16));
            }
    }

    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (auto& v : img.values())
        v = std::clamp(v + noise(rng), 0.0, 1.0);
    return img;
}

std::vector<SyntheticSample> generate_synthetic_samples(const SyntheticSpec& spec)
{
    if (spec.per_class < 1)
        throw std::invalid_argument("synthetic: per_class must be >= 1");
    if (spec.width < 8 || spec.height < 8)
        throw std::invalid_argument("synthetic: images must be at least 8x8");
    std::vector<SyntheticSample> out;
    for (int label = 0; label < 3; ++label)
        for (int i = 0; i < spec.per_class; ++i) {
            std::ostringstream id;
            id << "c" << label << "_" << std::setw(4) << std::setfill('0') << i;
            SyntheticSample s;
            s.record.sample_id = id.str();
            s.record.image_path = std::filesystem::path("images") / (id.str() + ".png");
            s.record.label = label;
            s.record.subject_id = "subj_" + id.str();
            s.image = synthetic_image(spec, label, i);
            out.push_back(std::move(s));
        }
    return out;
}

DatasetManifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir)
{
    DatasetManifest m;
    m.base_dir = out_dir;
    for (auto& s : generate_synthetic_samples(spec)) {
        io::write_gray_png16(out_dir / s.record.image_path, s.image);
        m.records.push_back(std::move(s.record));
    }
    io::write_text_file(out_dir / "manifest.csv", format_manifest(m));
    return m;
}

}  // namespace phasessl
