#include <phasessl/image_io.hpp>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace phasessl::io {

namespace {

void write_mat(const std::filesystem::path& path, const cv::Mat& m)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 6};
    if (!cv::imwrite(path.string(), m, params))
        throw std::runtime_error("cannot write image " + path.string());
}

std::uint8_t to_u8(double v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

GrayImage read_gray(const std::filesystem::path& path)
{
    if (!std::filesystem::is_regular_file(path))
        throw std::runtime_error("image not found: " + path.string());
    cv::Mat m;
    try {
        m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE | cv::IMREAD_ANYDEPTH);
    } catch (const cv::Exception& e) {
        throw std::runtime_error("cannot decode image " + path.string() + ": " + e.what());
    }
    if (m.empty())
        throw std::runtime_error("cannot decode image " + path.string());
    GrayImage img(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            switch (m.depth()) {
            case CV_8U: img(x, y) = m.at<std::uint8_t>(y, x); break;
            case CV_16U: img(x, y) = m.at<std::uint16_t>(y, x); break;
            case CV_32F: img(x, y) = m.at<float>(y, x); break;
            default: throw std::runtime_error("unsupported pixel depth in " + path.string());
            }
        }
    require_finite(img.values(), path.string());
    return img;
}

void write_gray_png16(const std::filesystem::path& path, const GrayImage& img)
{
    cv::Mat m(img.height(), img.width(), CV_16UC1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            m.at<std::uint16_t>(y, x) =
                static_cast<std::uint16_t>(std::lround(std::clamp(img(x, y), 0.0, 1.0) * 65535.0));
    write_mat(path, m);
}

void write_mf_rgb_png(const std::filesystem::path& path, const MultiFeatureImage& mf)
{
    cv::Mat m(mf.height(), mf.width(), CV_8UC3);
    for (int y = 0; y < mf.height(); ++y)
        for (int x = 0; x < mf.width(); ++x) {
            const auto i = static_cast<std::size_t>(y) * mf.width() + x;
            // OpenCV stores BGR.
            m.at<cv::Vec3b>(y, x) = cv::Vec3b(to_u8(mf.plane(2)[i]), to_u8(mf.plane(1)[i]), to_u8(mf.plane(0)[i]));
        }
    write_mat(path, m);
}

void write_mf_preview_png(const std::filesystem::path& path, const MultiFeatureImage& mf)
{
    const int w = mf.width();
    const int h = mf.height();
    cv::Mat m(h, 3 * w, CV_8UC1);
    for (int c = 0; c < 3; ++c) {
        const auto p = mf.plane(c);
        const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
        const double range = *hi - *lo;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = p[static_cast<std::size_t>(y) * w + x];
                m.at<std::uint8_t>(y, c * w + x) = to_u8(range > 0 ? (v - *lo) / range : 0.0);
            }
    }
    write_mat(path, m);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int b = 0; b < 4; ++b)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v)
{
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b)
        out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& pos)
{
    if (pos + 4 > in.size())
        throw std::runtime_error("truncated binary data");
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
        v |= static_cast<std::uint32_t>(in[pos + b]) << (8 * b);
    pos += 4;
    return v;
}

double get_f64(const std::vector<std::uint8_t>& in, std::size_t& pos)
{
    if (pos + 8 > in.size())
        throw std::runtime_error("truncated binary data");
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b)
        v |= static_cast<std::uint64_t>(in[pos + b]) << (8 * b);
    pos += 8;
    return std::bit_cast<double>(v);
}

std::vector<std::uint8_t> encode_mfi(const MultiFeatureImage& mf)
{
    std::vector<std::uint8_t> out = {'M', 'F', 'I', '1'};
    const auto n = static_cast<std::size_t>(mf.width()) * mf.height();
    out.reserve(12 + 3 * n * 8);
    put_u32(out, static_cast<std::uint32_t>(mf.width()));
    put_u32(out, static_cast<std::uint32_t>(mf.height()));
    for (int c = 0; c < 3; ++c)
        for (double v : mf.plane(c))
            put_f64(out, v);
    return out;
}

MultiFeatureImage decode_mfi(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "MFI1", 4) != 0)
        throw std::runtime_error("not an MFI1 sidecar");
    std::size_t pos = 4;
    const auto w = get_u32(bytes, pos);
    const auto h = get_u32(bytes, pos);
    const auto n = static_cast<std::size_t>(w) * h;
    if (bytes.size() != 12 + 3 * n * 8)
        throw std::runtime_error("MFI1 sidecar size does not match its header");
    std::array<std::vector<double>, 3> planes;
    for (auto& p : planes) {
        p.resize(n);
        for (auto& v : p)
            v = get_f64(bytes, pos);
    }
    return MultiFeatureImage(static_cast<int>(w), static_cast<int>(h), std::move(planes));
}

void write_mfi(const std::filesystem::path& path, const MultiFeatureImage& mf)
{
    write_file_bytes(path, encode_mfi(mf));
}

MultiFeatureImage read_mfi(const std::filesystem::path& path)
{
    try {
        return decode_mfi(read_file_bytes(path));
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text_file(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace phasessl::io
