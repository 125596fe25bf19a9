#pragma once

#include <phasessl/image.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace phasessl::io {

/// Reads an 8/16-bit grayscale PNG or a plain/raw PGM. Pixel values are
/// returned at their stored integer scale. Colour PNGs are converted to gray.
/// Throws std::runtime_error on unreadable or corrupt files.
GrayImage read_gray(const std::filesystem::path& path);

/// Writes values in [0,1] (clamped) as a 16-bit grayscale PNG.
void write_gray_png16(const std::filesystem::path& path, const GrayImage& img);

/// Channels of `mf` mapped to R, G, B (8 bit).
void write_mf_rgb_png(const std::filesystem::path& path, const MultiFeatureImage& mf);

/// Horizontal LwPA | LPE | ELEA strip, each panel min-max scaled for display.
void write_mf_preview_png(const std::filesystem::path& path, const MultiFeatureImage& mf);

// MFI1 sidecar: "MFI1", u32 width, u32 height, then 3 planes of f64, all little-endian.
std::vector<std::uint8_t> encode_mfi(const MultiFeatureImage& mf);
MultiFeatureImage decode_mfi(const std::vector<std::uint8_t>& bytes);
void write_mfi(const std::filesystem::path& path, const MultiFeatureImage& mf);
MultiFeatureImage read_mfi(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Little-endian scalar codecs shared by the binary formats.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_f64(std::vector<std::uint8_t>& out, double v);
std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& pos);
double get_f64(const std::vector<std::uint8_t>& in, std::size_t& pos);

}  // namespace phasessl::io
