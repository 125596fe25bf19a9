#pragma once

#include <phasessl/image.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace phasessl {

inline const std::vector<std::string> kDefaultClassNames = {"normal", "pneumonia", "covid19"};

/// Malformed manifest, infeasible split, or other input-data problem.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SampleRecord {
    std::string sample_id;
    std::filesystem::path image_path;  // absolute, or relative to the manifest directory
    std::optional<int> label;
    std::string subject_id;

    bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
    std::vector<SampleRecord> records;
    std::vector<std::string> class_names = kDefaultClassNames;
    std::filesystem::path base_dir;

    const SampleRecord* find(std::string_view sample_id) const;
    std::filesystem::path resolve(const SampleRecord& r) const;
    int num_classes() const { return static_cast<int>(class_names.size()); }
};

/// CSV with header `sample_id,image_path,label,subject_id`. The label column
/// holds a class index or class name; empty means unlabeled.
DatasetManifest parse_manifest(std::string_view csv, const std::filesystem::path& base_dir = {},
                               const std::vector<std::string>& class_names = kDefaultClassNames);
DatasetManifest load_manifest(const std::filesystem::path& path,
                              const std::vector<std::string>& class_names = kDefaultClassNames);
std::string format_manifest(const DatasetManifest& m);

// Role names used in split assignments. Additional held-out sets may use any
// name starting with "test" (e.g. "test2").
inline constexpr const char* kRoleLabeled = "labeled";
inline constexpr const char* kRoleUnlabeled = "unlabeled";
inline constexpr const char* kRoleVal = "val";
inline constexpr const char* kRoleStop = "stop";
inline constexpr const char* kRoleTest = "test";

bool is_test_role(std::string_view role);

struct SplitConfig {
    double labeled_fraction = 0.10;  // of the training pool
    double val_fraction = 0.10;      // of each class
    double stop_fraction = 0.10;     // of each class
    double test_fraction = 0.30;     // of each class, whole subjects
    std::uint64_t seed = 0;
    int num_repeats = 5;

    void validate() const;
};

struct SplitAssignment {
    int repeat = 0;
    std::uint64_t seed = 0;
    double labeled_fraction = 0.0;
    std::map<std::string, std::vector<std::string>> roles;  // role -> sample ids, sorted

    const std::vector<std::string>& ids(const std::string& role) const;
    std::optional<std::string> role_of(std::string_view sample_id) const;
    bool operator==(const SplitAssignment&) const = default;
};

std::vector<SplitAssignment> make_splits(const DatasetManifest& m, const SplitConfig& cfg);

nlohmann::json split_to_json(const SplitAssignment& s);
SplitAssignment split_from_json(const nlohmann::json& j);

/// Zero mean, unit population standard deviation; constant images become zeros.
GrayImage normalize_image(const GrayImage& img);

/// Bilinear resampling with pixel-centre alignment; any target of at least 1x1.
GrayImage bilinear_resample(const GrayImage& img, int target_width, int target_height);
/// Network-facing resize: targets below 8x8 are rejected. Same dims returns an exact copy.
GrayImage resize_image(const GrayImage& img, int target_width, int target_height);

struct SyntheticSpec {
    int per_class = 10;
    int width = 64;
    int height = 64;
    std::uint64_t seed = 0;
    double noise_sigma = 0.05;
};

struct SyntheticSample {
    SampleRecord record;
    GrayImage image;  // intensities in [0,1]
};

/// Three procedurally distinct classes: smooth background (0); large
/// high-contrast consolidations (1); many small, faint, bilateral peripheral
/// opacities (2). Each image has its own derived seed.
std::vector<SyntheticSample> generate_synthetic_samples(const SyntheticSpec& spec);
GrayImage synthetic_image(const SyntheticSpec& spec, int label, int index);

/// Writes 16-bit PNGs under out_dir/images and out_dir/manifest.csv.
DatasetManifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace phasessl
