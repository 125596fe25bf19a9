#pragma once

#include <phasessl/dataset.hpp>
#include <phasessl/enhance.hpp>
#include <phasessl/net.hpp>
#include <phasessl/ssl.hpp>

#include <cstdint>
#include <string>

#include <json.hpp>

namespace phasessl {

inline constexpr const char* kArtifactVersion = "phasessl-1.0.0";

/// Everything a CLI run needs, as one JSON document. Every object is optional
/// and overlays the defaults; unknown keys are rejected at every level.
///
///   {
///     "filterbank":  {"phase": {...}, "energy": {...}},
///     "regularizer": {...},
///     "split":       {...},
///     "net":         {...},
///     "train":       {"teacher": {...}, "student": {...}, "finetune": {...}},
///     "selection":   {"K": 0.25, "bypass": false},
///     "variant":     "MF_TS",
///     "synthetic":   {...},
///     "output_dir":  "",
///     "seed":        0
///   }
struct RunConfig {
    FilterBanks filterbank;
    RegularizerConfig regularizer;
    SplitConfig split;
    NetConfig net;
    TrainConfig teacher_train;
    TrainConfig student_train;
    TrainConfig finetune_train;
    SelectionConfig selection;
    bool bypass_selection = false;
    Variant variant = Variant::MF_TS;
    SyntheticSpec synthetic;
    std::string output_dir;
    std::uint64_t seed = 0;
};

/// Thrown for schema violations; the CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

nlohmann::json to_json(const FilterBankConfig& c);
nlohmann::json to_json(const RegularizerConfig& c);
nlohmann::json to_json(const SplitConfig& c);

/// SHA-256 over the canonical serialization (sorted keys, no whitespace) of
/// the fully resolved config. output_dir is excluded so that relocating a
/// run does not change its identity.
std::string config_hash(const RunConfig& c);

/// {config_hash, seed, artifact_version}
nlohmann::json provenance(const RunConfig& c);

/// Pipeline settings for one repeat; per-stage seeds derive from c.seed.
PipelineConfig pipeline_config(const RunConfig& c, int repeat);

/// Pretty-printed with sorted keys and a trailing LF.
std::string dump_json(const nlohmann::json& j);

}  // namespace phasessl
