#include "oracles.hpp"

#include <phasessl/fft.hpp>
#include <phasessl/image.hpp>

#include <doctest.h>

#include <limits>

using namespace phasessl;

TEST_CASE("raster rejects inconsistent pixel counts")
{
    CHECK_THROWS_AS(GrayImage(3, 2, std::vector<double>(5)), std::invalid_argument);
    CHECK_THROWS_AS(GrayImage(-1, 2), std::invalid_argument);
    GrayImage img(3, 2, std::vector<double>{0, 1, 2, 3, 4, 5});
    CHECK(img(2, 1) == 5.0);
    CHECK(img(0, 1) == 3.0);
    CHECK(img.size() == 6);
}

TEST_CASE("multi-feature channels round trip exactly")
{
    const auto a = oracle::random_image(5, 4, 1);
    const auto b = oracle::random_image(5, 4, 2);
    const auto c = oracle::random_image(5, 4, 3);
    MultiFeatureImage mf(5, 4, {a.storage(), b.storage(), c.storage()});
    CHECK(mf.channels() == 3);
    CHECK(mf.channel(0) == a);
    CHECK(mf.channel(1) == b);
    CHECK(mf.channel(2) == c);
    CHECK_THROWS(MultiFeatureImage(5, 4, {a.storage(), b.storage(), std::vector<double>(3)}));
}

TEST_CASE("finiteness and range helpers")
{
    std::vector<double> v = {0.0, 0.5, 1.0};
    CHECK(all_finite(v));
    CHECK(within_range(v, 0.0, 1.0));
    CHECK_FALSE(within_range(v, 0.0, 0.9));
    v.push_back(std::numeric_limits<double>::quiet_NaN());
    CHECK_FALSE(all_finite(v));
    CHECK_THROWS(require_finite(v, "x"));
}

TEST_CASE("bin frequencies follow DFT ordering")
{
    CHECK(bin_frequency(0, 8) == 0.0);
    CHECK(bin_frequency(1, 8) == doctest::Approx(0.125));
    CHECK(bin_frequency(4, 8) == doctest::Approx(-0.5));
    CHECK(bin_frequency(7, 8) == doctest::Approx(-0.125));
    CHECK(bin_frequency(2, 5) == doctest::Approx(0.4));
    CHECK(bin_frequency(3, 5) == doctest::Approx(-0.4));
    CHECK(signed_bin(3, 5) == -2);
    CHECK(signed_bin(2, 5) == 2);
    CHECK(signed_bin(4, 8) == -4);

    FrequencyResponse f(4, 3);
    f(3, 2) = Complex(7.0, 1.0);
    CHECK(f.at(-1, -1) == Complex(7.0, 1.0));
}

TEST_CASE("forward transform matches the direct DFT")
{
    for (auto [w, h] : {std::pair{8, 8}, std::pair{6, 5}, std::pair{7, 4}, std::pair{1, 3}}) {
        CAPTURE(w);
        CAPTURE(h);
        const auto img = oracle::random_image(w, h, 11);
        std::vector<Complex> in(img.values().begin(), img.values().end());
        const auto expect = oracle::dft2(in, w, h, -1);
        Fft2D fft(w, h);
        const auto got = fft.forward(img.values());
        double err = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i)
            err = std::max(err, std::abs(got[i] - expect[i]));
        CHECK(err < 1e-12);
    }
}

TEST_CASE("inverse undoes forward")
{
    Fft2D fft(12, 10);
    const auto img = oracle::random_image(12, 10, 5, -3.0, 3.0);
    const auto back = fft.inverse_real(fft.forward(img.values()));
    CHECK(oracle::rel_error(back, img.values()) < 1e-14);

    std::vector<Complex> z(120);
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = Complex(std::sin(0.3 * static_cast<double>(i)), std::cos(0.7 * static_cast<double>(i)));
    const auto zz = fft.inverse(fft.forward(z));
    double err = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        err = std::max(err, std::abs(zz[i] - z[i]));
    CHECK(err < 1e-13);
}

TEST_CASE("transform size is checked")
{
    Fft2D fft(4, 4);
    std::vector<double> wrong(15);
    CHECK_THROWS_AS(fft.forward(wrong), std::invalid_argument);
    CHECK_THROWS(Fft2D(0, 4));
}
