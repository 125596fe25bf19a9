#pragma once

#include <phasessl/image.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace phasessl {

/// Which streams receive real input. Inactive streams are fed zeros so every
/// variant shares one architecture.
enum class StreamInputs { both, cxr_only, mf_only };

std::string to_string(StreamInputs s);
StreamInputs stream_inputs_from_string(const std::string& s);

struct NetConfig {
    std::vector<int> stream_channels = {8, 16};
    int kernel_size = 3;
    int num_classes = 3;
    int fusion_hidden = 32;
    int input_width = 64;
    int input_height = 64;
    int cxr_in_channels = 1;
    int mf_in_channels = 3;
    std::uint64_t init_seed = 0;
    StreamInputs inputs = StreamInputs::both;

    void validate() const;
    bool operator==(const NetConfig&) const = default;
};

nlohmann::json to_json(const NetConfig& c);
NetConfig net_config_from_json(const nlohmann::json& j);

struct Tensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;

    bool operator==(const Tensor&) const = default;
};

struct ModelParams {
    NetConfig config;
    std::vector<Tensor> tensors;  // declaration order: cxr convs, mf convs, fc1, fc2

    std::size_t count() const;
    bool operator==(const ModelParams&) const = default;
};

struct Gradient {
    std::vector<Tensor> tensors;  // congruent with ModelParams::tensors

    std::size_t count() const;
};

/// Network-ready input: CXR plane [1][H][W] and MF planes [3][H][W], each
/// resized to the configured input dims and normalized per channel.
struct NetInput {
    int width = 0;
    int height = 0;
    std::vector<double> cxr;
    std::vector<double> mf;
};

NetInput prepare_input(const GrayImage& cxr, const MultiFeatureImage& mf, int width, int height);

struct ClassDistribution {
    std::vector<double> probabilities;
};

struct Prediction {
    int label;
    double confidence;
};

struct LabeledExample {
    const NetInput* input;
    int label;
};

struct TrainConfig {
    int epochs = 50;
    double base_lr = 0.001;
    double decay_factor = 0.1;
    int decay_every = 15;
    int batch_size = 32;
    int patience = 5;
    std::uint64_t shuffle_seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
    int epoch;
    double lr;
    double train_loss;
    std::optional<double> stop_loss;
    bool kept;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> history;
    int best_epoch = -1;  // -1: initial parameters were never improved upon
};

ModelParams init_params(const NetConfig& cfg);
ModelParams zero_params(const NetConfig& cfg);

/// Activations retained by forward() for the backward pass.
struct ForwardCache;

struct ForwardResult {
    std::vector<double> logits;
    ClassDistribution distribution;
};

ForwardResult forward(const ModelParams& p, const NetInput& x);

ClassDistribution softmax(std::span<const double> logits);
/// -log(dist[label]).
double loss_xent(const ClassDistribution& dist, int label);
/// logsumexp(z) - z[label], the stabilized equivalent.
double loss_xent_logits(std::span<const double> logits, int label);

struct BackwardResult {
    double loss;  // mean over the batch
    Gradient gradient;
};

/// Exact gradient of mean cross-entropy. Per-sample gradients may be computed
/// in parallel; they are reduced in batch order.
BackwardResult backward(const ModelParams& p, std::span<const LabeledExample> batch);

ModelParams sgd_step(const ModelParams& p, const Gradient& g, double lr);

double lr_at(int epoch, const TrainConfig& cfg);

Prediction predict(const ModelParams& p, const NetInput& x);
Prediction argmax_prediction(const ClassDistribution& dist);

double mean_loss(const ModelParams& p, std::span<const LabeledExample> examples);

TrainResult train(const ModelParams& init, std::span<const LabeledExample> train_set,
                  std::span<const LabeledExample> stop_set, const TrainConfig& cfg);

nlohmann::json history_record_json(const EpochRecord& r);
std::string history_jsonl(const std::vector<EpochRecord>& history);

// MFN1 checkpoint: "MFN1", u32 length + NetConfig JSON, then tensors in
// declaration order as little-endian f64.
std::vector<std::uint8_t> encode_checkpoint(const ModelParams& p);
ModelParams decode_checkpoint(const std::vector<std::uint8_t>& bytes);

}  // namespace phasessl
