#include "oracles.hpp"

#include <phasessl/dataset.hpp>
#include <phasessl/image_io.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

using namespace phasessl;

namespace {

// n labeled samples per class, one subject per sample.
DatasetManifest balanced_manifest(int per_class, int subjects_per_sample = 1)
{
    DatasetManifest m;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < per_class; ++i) {
            SampleRecord r;
            char id[32];
            std::snprintf(id, sizeof id, "c%d_%04d", c, i);
            r.sample_id = id;
            r.image_path = std::string(id) + ".png";
            r.label = c;
            r.subject_id = "s" + std::to_string(c) + "_" + std::to_string(i / subjects_per_sample);
            m.records.push_back(r);
        }
    return m;
}

int label_of(const DatasetManifest& m, const std::string& id)
{
    return *m.find(id)->label;
}

std::vector<double> box_mean(const GrayImage& img, int r)
{
    const int w = img.width();
    const int h = img.height();
    std::vector<double> out(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            int n = 0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx, ++n)
                    s += img(xx, yy);
            out[static_cast<std::size_t>(y) * w + x] = s / n;
        }
    return out;
}

// Connected components (4-connectivity, >= 6 px) of pixels whose 3x3 mean
// exceeds the 11x11 local background by 0.05.
int count_bright_components(const GrayImage& img)
{
    const int w = img.width();
    const int h = img.height();
    const auto fine = box_mean(img, 1);
    const auto coarse = box_mean(img, 5);
    std::vector<char> on(img.size()), seen(img.size(), 0);
    for (std::size_t i = 0; i < on.size(); ++i)
        on[i] = fine[i] - coarse[i] > 0.05;
    int count = 0;
    for (int start = 0; start < w * h; ++start) {
        if (seen[static_cast<std::size_t>(start)] || !on[static_cast<std::size_t>(start)])
            continue;
        std::vector<int> stack{start};
        seen[static_cast<std::size_t>(start)] = 1;
        int size = 0;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            ++size;
            const int x = p % w, y = p / w;
            const int nb[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
            for (auto [nx, ny] : nb) {
                if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                    continue;
                const auto q = static_cast<std::size_t>(ny * w + nx);
                if (!seen[q] && on[q]) {
                    seen[q] = 1;
                    stack.push_back(ny * w + nx);
                }
            }
        }
        if (size >= 6)
            ++count;
    }
    return count;
}

// Spread of smoothed intensity inside the lung bands: 90th minus 50th percentile.
double lung_contrast(const GrayImage& img)
{
    const int w = img.width();
    const int h = img.height();
    const auto smooth = box_mean(img, 2);
    std::vector<double> v;
    for (int y = static_cast<int>(0.3 * h); y < static_cast<int>(0.75 * h); ++y)
        for (int x = 0; x < w; ++x) {
            const double xn = static_cast<double>(x) / w;
            if ((xn > 0.2 && xn < 0.4) || (xn > 0.6 && xn < 0.8))
                v.push_back(smooth[static_cast<std::size_t>(y) * w + x]);
        }
    std::sort(v.begin(), v.end());
    return v[v.size() * 9 / 10] - v[v.size() / 2];
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifests

TEST_CASE("manifest parsing")
{
    const std::string csv =
        "sample_id,image_path,label,subject_id\n"
        "a,img/a.png,0,p1\n"
        "b,img/b.png,covid19,p2\n"
        "c,/abs/c.png,,\n";
    const auto m = parse_manifest(csv, "/data");
    REQUIRE(m.records.size() == 3);
    CHECK(m.records[0].label == 0);
    CHECK(m.records[1].label == 2);
    CHECK_FALSE(m.records[2].label.has_value());
    CHECK(m.records[2].subject_id == "c");
    CHECK(m.resolve(m.records[0]) == std::filesystem::path("/data/img/a.png"));
    CHECK(m.resolve(m.records[2]) == std::filesystem::path("/abs/c.png"));
    CHECK(m.find("b") == &m.records[1]);
    CHECK(m.find("zz") == nullptr);

    const auto again = parse_manifest(format_manifest(m), "/data");
    CHECK(again.records == m.records);
}

TEST_CASE("manifest errors carry line numbers and names")
{
    auto message = [](const std::string& csv) {
        try {
            parse_manifest(csv);
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    const std::string header = "sample_id,image_path,label,subject_id\n";
    CHECK(message(header + "a,a.png,0,s\na,b.png,1,t\n").find("duplicate sample_id 'a'") != std::string::npos);
    CHECK(message(header + "a,a.png,0,s\na,b.png,1,t\n").find("line 3") != std::string::npos);
    CHECK(message(header + "a,a.png,flu,s\n").find("unknown class 'flu'") != std::string::npos);
    CHECK(message(header + "a,a.png,7,s\n").find("line 2") != std::string::npos);
    CHECK(message(header + "a,a.png,0\n").find("expected 4 fields") != std::string::npos);
    CHECK(message("id,path\n").find("header") != std::string::npos);
    CHECK(message("").find("empty") != std::string::npos);
    CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.csv"), DataError);
}

// ---------------------------------------------------------------------------
// Splits

TEST_CASE("splits are deterministic and repeats differ")
{
    const auto m = balanced_manifest(60);
    SplitConfig cfg;
    cfg.seed = 11;
    const auto a = make_splits(m, cfg);
    const auto b = make_splits(m, cfg);
    REQUIRE(a.size() == 5);
    CHECK(a == b);
    CHECK(a[0].seed == 11);
    CHECK(a[3].seed == 14);
    CHECK(a[0].roles != a[1].roles);
}

TEST_CASE("split roles are disjoint, cover the manifest and keep subjects together")
{
    const auto m = balanced_manifest(80, 3);
    SplitConfig cfg;
    cfg.labeled_fraction = 0.2;
    for (const auto& sa : make_splits(m, cfg)) {
        std::multiset<std::string> all;
        for (const auto& [role, ids] : sa.roles) {
            CHECK(std::is_sorted(ids.begin(), ids.end()));
            all.insert(ids.begin(), ids.end());
        }
        CHECK(all.size() == m.records.size());
        CHECK(std::set<std::string>(all.begin(), all.end()).size() == m.records.size());

        std::set<std::string> test_subjects, train_subjects;
        for (const auto& [role, ids] : sa.roles)
            for (const auto& id : ids)
                (is_test_role(role) ? test_subjects : train_subjects).insert(m.find(id)->subject_id);
        for (const auto& s : test_subjects)
            CHECK(train_subjects.count(s) == 0);
        CHECK(sa.role_of(sa.ids(kRoleVal).front()) == std::string(kRoleVal));
    }
}

TEST_CASE("labeled, val and stop roles are stratified")
{
    // Unequal classes.
    DatasetManifest m;
    const int sizes[3] = {97, 143, 61};
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < sizes[c]; ++i)
            m.records.push_back({"x" + std::to_string(c) + "_" + std::to_string(i), "p.png", c,
                                 "s" + std::to_string(c) + "_" + std::to_string(i)});
    SplitConfig cfg;
    cfg.labeled_fraction = 0.3;
    for (const auto& sa : make_splits(m, cfg)) {
        for (int c = 0; c < 3; ++c) {
            auto count = [&](const char* role) {
                const auto& ids = sa.ids(role);
                return std::count_if(ids.begin(), ids.end(), [&](const auto& id) { return label_of(m, id) == c; });
            };
            CHECK(std::abs(count(kRoleVal) - cfg.val_fraction * sizes[c]) <= 1.0);
            CHECK(std::abs(count(kRoleStop) - cfg.stop_fraction * sizes[c]) <= 1.0);
            const double pool = static_cast<double>(count(kRoleLabeled) + count(kRoleUnlabeled));
            CHECK(std::abs(count(kRoleLabeled) - cfg.labeled_fraction * pool) <= 1.0);
        }
    }
}

TEST_CASE("labeled count by enumeration: 30 per class from a 300-sample pool")
{
    // 500 per class: 100 test, 50 val, 50 stop leaves a pool of 300.
    const auto m = balanced_manifest(500);
    SplitConfig cfg;
    cfg.test_fraction = 0.2;
    cfg.labeled_fraction = 0.1;
    cfg.num_repeats = 2;
    for (const auto& sa : make_splits(m, cfg)) {
        int per_class[3] = {0, 0, 0};
        int pool[3] = {0, 0, 0};
        for (const auto& id : sa.ids(kRoleLabeled))
            ++per_class[label_of(m, id)], ++pool[label_of(m, id)];
        for (const auto& id : sa.ids(kRoleUnlabeled))
            ++pool[label_of(m, id)];
        for (int c = 0; c < 3; ++c) {
            CHECK(pool[c] == 300);
            CHECK(per_class[c] == 30);
        }
    }
}

TEST_CASE("labeled_fraction 1 leaves no unlabeled samples")
{
    SplitConfig cfg;
    cfg.labeled_fraction = 1.0;
    for (const auto& sa : make_splits(balanced_manifest(40), cfg))
        CHECK(sa.ids(kRoleUnlabeled).empty());
}

TEST_CASE("unlabeled manifest records join the unlabeled role")
{
    auto m = balanced_manifest(40);
    m.records.push_back({"u1", "u1.png", std::nullopt, "u1"});
    SplitConfig cfg;
    cfg.num_repeats = 1;
    const auto sa = make_splits(m, cfg).front();
    CHECK(sa.role_of("u1") == std::string(kRoleUnlabeled));
}

TEST_CASE("infeasible splits name the class")
{
    DatasetManifest m = balanced_manifest(40);
    m.records.erase(std::remove_if(m.records.begin(), m.records.end(),
                                   [](const SampleRecord& r) { return r.label == 1 && r.sample_id > "c1_0002"; }),
                    m.records.end());
    try {
        make_splits(m, SplitConfig{});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("pneumonia") != std::string::npos);
    }

    DatasetManifest missing = balanced_manifest(20);
    std::erase_if(missing.records, [](const SampleRecord& r) { return r.label == 2; });
    CHECK_THROWS_WITH_AS(make_splits(missing, SplitConfig{}), doctest::Contains("covid19"), DataError);
}

TEST_CASE("split config validation")
{
    SplitConfig c;
    c.labeled_fraction = 0.0;
    CHECK_THROWS(c.validate());
    c = {};
    c.labeled_fraction = 1.5;
    CHECK_THROWS(c.validate());
    c = {};
    c.num_repeats = 0;
    CHECK_THROWS(c.validate());
    c = {};
    c.val_fraction = 0.5;
    c.stop_fraction = 0.3;
    c.test_fraction = 0.3;
    CHECK_THROWS(c.validate());
}

TEST_CASE("split JSON round trip")
{
    SplitConfig cfg;
    cfg.num_repeats = 1;
    const auto sa = make_splits(balanced_manifest(30), cfg).front();
    CHECK(split_from_json(split_to_json(sa)) == sa);
    CHECK(sa.ids("nope").empty());
}

// ---------------------------------------------------------------------------
// Normalization and resizing

TEST_CASE("normalize_image worked example")
{
    const GrayImage img(2, 2, std::vector<double>{1, 2, 3, 4});
    const auto n = normalize_image(img);
    const double s = std::sqrt(1.25);
    CHECK(n[0] == doctest::Approx(-1.5 / s).epsilon(1e-12));
    CHECK(n[1] == doctest::Approx(-0.5 / s).epsilon(1e-12));
    CHECK(n[2] == doctest::Approx(0.5 / s).epsilon(1e-12));
    CHECK(n[3] == doctest::Approx(1.5 / s).epsilon(1e-12));
    CHECK(n[0] == doctest::Approx(-1.3416).epsilon(1e-4));
    CHECK(n[1] == doctest::Approx(-0.4472).epsilon(1e-4));
}

TEST_CASE("normalize_image statistics, constant guard and idempotence")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto img = oracle::random_image(13, 7, seed, -3.0, 50.0);
        const auto n = normalize_image(img);
        double mean = 0.0, var = 0.0;
        for (double v : n.values())
            mean += v;
        mean /= static_cast<double>(n.size());
        for (double v : n.values())
            var += (v - mean) * (v - mean);
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(std::sqrt(var / static_cast<double>(n.size())) - 1.0) < 1e-9);
        const auto nn = normalize_image(n);
        for (std::size_t i = 0; i < n.size(); ++i)
            CHECK(std::abs(nn[i] - n[i]) < 1e-9);
    }
    const auto z = normalize_image(GrayImage(5, 5, 3.25));
    CHECK(oracle::max_abs(z.storage()) == 0.0);
}

TEST_CASE("resizing")
{
    const auto img = oracle::random_image(17, 9, 4);
    CHECK(resize_image(img, 17, 9) == img);

    const GrayImage corners(2, 2, std::vector<double>{0, 0, 0, 4});
    const auto one = bilinear_resample(corners, 1, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == doctest::Approx(1.0).epsilon(1e-15));

    const auto flat = resize_image(GrayImage(10, 12, 0.7), 31, 8);
    CHECK(flat.width() == 31);
    CHECK(flat.height() == 8);
    for (double v : flat.values())
        CHECK(v == doctest::Approx(0.7).epsilon(1e-15));

    CHECK_THROWS_AS(resize_image(img, 7, 16), std::invalid_argument);
    CHECK_THROWS_AS(bilinear_resample(img, 0, 1), std::invalid_argument);
}

TEST_CASE("bilinear upsampling of a linear ramp stays linear in the interior")
{
    GrayImage ramp(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            ramp(x, y) = 2.0 * x + y;
    const auto up = resize_image(ramp, 16, 16);
    // Target pixel centre (i+0.5)/2 - 0.5 in source coordinates.
    for (int y = 2; y < 14; ++y)
        for (int x = 2; x < 14; ++x) {
            const double sx = (x + 0.5) / 2.0 - 0.5;
            const double sy = (y + 0.5) / 2.0 - 0.5;
            CHECK(up(x, y) == doctest::Approx(2.0 * sx + sy).epsilon(1e-12));
        }
}

// ---------------------------------------------------------------------------
// Synthetic corpus

TEST_CASE("synthetic samples: counts, determinism, range")
{
    SyntheticSpec spec;
    spec.per_class = 10;
    spec.width = 48;
    spec.height = 40;
    spec.seed = 3;
    const auto a = generate_synthetic_samples(spec);
    const auto b = generate_synthetic_samples(spec);
    REQUIRE(a.size() == 30);
    int per_class[3] = {0, 0, 0};
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++per_class[*a[i].record.label];
        CHECK(a[i].image == b[i].image);
        CHECK(a[i].image.width() == 48);
        CHECK(a[i].image.height() == 40);
        CHECK(within_range(a[i].image.values(), 0.0, 1.0));
    }
    CHECK(per_class[0] == 10);
    CHECK(per_class[1] == 10);
    CHECK(per_class[2] == 10);
    CHECK(synthetic_image(spec, 1, 4) == synthetic_image(spec, 1, 4));
    spec.seed = 4;
    CHECK_FALSE(synthetic_image(spec, 1, 4) == a[14].image);
}

TEST_CASE("class 2 has more bright components than class 0")
{
    SyntheticSpec spec;
    spec.per_class = 40;
    spec.seed = 9;
    double comps[3] = {0, 0, 0};
    for (const auto& s : generate_synthetic_samples(spec))
        comps[*s.record.label] += count_bright_components(s.image);
    MESSAGE("mean components per class: " << comps[0] / 40 << " " << comps[1] / 40 << " " << comps[2] / 40);
    CHECK(comps[2] > comps[0]);
}

TEST_CASE("a two-threshold rule separates the synthetic classes")
{
    SyntheticSpec spec;
    spec.per_class = 60;
    spec.seed = 21;
    const auto samples = generate_synthetic_samples(spec);
    std::vector<double> feat;
    std::vector<int> label;
    for (const auto& s : samples) {
        feat.push_back(lung_contrast(s.image));
        label.push_back(*s.record.label);
    }
    // contrast > hi -> 1, contrast > lo -> 2, else 0. Fit on even indices, score on odd.
    auto classify = [](double f, double lo, double hi) { return f > hi ? 1 : (f > lo ? 2 : 0); };
    auto accuracy = [&](double lo, double hi, int parity) {
        int ok = 0, n = 0;
        for (std::size_t i = static_cast<std::size_t>(parity); i < feat.size(); i += 2, ++n)
            ok += classify(feat[i], lo, hi) == label[i];
        return static_cast<double>(ok) / n;
    };
    double best = -1.0, best_lo = 0.0, best_hi = 0.0;
    for (double lo : feat)
        for (double hi : feat)
            if (hi > lo && accuracy(lo, hi, 0) > best) {
                best = accuracy(lo, hi, 0);
                best_lo = lo;
                best_hi = hi;
            }
    const double held_out = accuracy(best_lo, best_hi, 1);
    MESSAGE("threshold rule: train " << best << ", held out " << held_out);
    CHECK(held_out > 0.8);
}

TEST_CASE("generate_synthetic writes a loadable corpus")
{
    const auto dir = std::filesystem::temp_directory_path() / "phasessl_test_synth";
    std::filesystem::remove_all(dir);
    SyntheticSpec spec;
    spec.per_class = 2;
    spec.width = 16;
    spec.height = 16;
    const auto m = generate_synthetic(spec, dir);
    const auto loaded = load_manifest(dir / "manifest.csv");
    CHECK(loaded.records == m.records);
    const auto samples = generate_synthetic_samples(spec);
    const auto img = io::read_gray(loaded.resolve(loaded.records[3]));
    CHECK(img.width() == 16);
    double err = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i)
        err = std::max(err, std::abs(img[i] / 65535.0 - samples[3].image[i]));
    CHECK(err <= 0.5 / 65535.0 + 1e-12);
    std::filesystem::remove_all(dir);
}
