#pragma once

#include <phasessl/dataset.hpp>
#include <phasessl/metrics.hpp>
#include <phasessl/net.hpp>

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace phasessl {

/// Which inputs guide the teacher and the student.
///   MF_TS  teacher CXR+MF, student CXR+MF
///   CXR_TS teacher CXR,    student CXR
///   ENH_TS teacher MF,     student MF
///   MF_T   teacher CXR+MF, student CXR
enum class Variant { MF_TS, CXR_TS, ENH_TS, MF_T };

std::string to_string(Variant v);
/// Accepts "MF_TS" and "MF-TS" spellings. Throws std::invalid_argument otherwise.
Variant variant_from_string(const std::string& s);
StreamInputs teacher_inputs(Variant v);
StreamInputs student_inputs(Variant v);

struct PseudoLabel {
    std::string sample_id;
    int predicted_class;
    double confidence;  // softmax probability of predicted_class

    bool operator==(const PseudoLabel&) const = default;
};

struct PseudoLabelSet {
    std::vector<PseudoLabel> labels;  // sorted by sample_id
    std::string provenance;           // teacher checkpoint id

    bool operator==(const PseudoLabelSet&) const = default;
};

struct SelectionConfig {
    double K = 0.25;

    void validate() const;
};

struct PipelineConfig {
    NetConfig teacher_net;
    TrainConfig teacher_train;
    NetConfig student_net;
    TrainConfig student_train;
    TrainConfig finetune_train;
    SelectionConfig selection;
    Variant variant = Variant::MF_TS;
    bool bypass_selection = false;  // feed every pseudo-label to the student
};

/// Derives per-repeat init and shuffle seeds from one base seed. Teacher and
/// student always receive distinct init seeds.
PipelineConfig with_repeat_seeds(PipelineConfig cfg, std::uint64_t base_seed, int repeat);

// Role-typed views. Unlabeled samples carry no label field at all, so the
// student stage cannot read ground truth for the unlabeled pool.
struct LabeledSample {
    std::string sample_id;
    const NetInput* input;
    int label;
};

struct UnlabeledSample {
    std::string sample_id;
    const NetInput* input;
};

/// Prepared network inputs keyed by sample id.
class SampleStore {
public:
    void add(const SampleRecord& record, NetInput input);
    bool contains(const std::string& id) const { return inputs_.count(id) != 0; }
    std::size_t size() const { return inputs_.size(); }

    std::vector<LabeledSample> labeled(const std::vector<std::string>& ids) const;
    std::vector<UnlabeledSample> unlabeled(const std::vector<std::string>& ids) const;

private:
    std::map<std::string, NetInput> inputs_;
    std::map<std::string, int> labels_;
};

std::vector<LabeledExample> as_examples(const std::vector<LabeledSample>& samples);

// Step 1
TrainResult train_teacher(const std::vector<LabeledSample>& labeled, const std::vector<LabeledSample>& stop,
                          const NetConfig& net, const TrainConfig& train_cfg);
// Step 2
PseudoLabelSet pseudo_label(const ModelParams& teacher, const std::vector<UnlabeledSample>& unlabeled,
                            const std::string& provenance);
// Step 3
std::size_t retained_count(double K, std::size_t n);
PseudoLabelSet select_top_k(const PseudoLabelSet& pl, const SelectionConfig& sel);
// Step 4
TrainResult train_student(const PseudoLabelSet& selected, const std::vector<UnlabeledSample>& pool,
                          const std::vector<LabeledSample>& stop, const NetConfig& net, const TrainConfig& train_cfg);
// Step 5
TrainResult finetune_student(const ModelParams& student, const std::vector<LabeledSample>& labeled,
                             const std::vector<LabeledSample>& stop, const TrainConfig& finetune_cfg);

struct Evaluation {
    MetricsReport report;
    ConfusionMatrix confusion;
};

Evaluation evaluate(const ModelParams& p, const std::vector<LabeledSample>& samples, std::uint64_t seed = 0);

std::string checkpoint_id(const ModelParams& p);

struct PipelineResult {
    TrainResult teacher;
    PseudoLabelSet pseudo_labels;
    PseudoLabelSet selected;
    TrainResult student;
    TrainResult final_model;
    // stage ("teacher", "student", "final") -> role -> evaluation
    std::map<std::string, std::map<std::string, Evaluation>> metrics;
};

/// Steps 1-5 once, in order. Metrics are computed on val and every non-empty test role.
PipelineResult run_pipeline(const SampleStore& store, const SplitAssignment& split, const PipelineConfig& cfg,
                            std::uint64_t seed = 0);

struct KSweepRow {
    double K;
    double accuracy;  // top-1 percent on the tuning role
};

struct KSweepResult {
    std::vector<KSweepRow> rows;  // ascending K, duplicates removed
    double selected_K;
};

/// Runs the pipeline per K and evaluates the final model on `tuning_role`.
/// Ties go to the smaller K.
KSweepResult sweep_k(const SampleStore& store, const SplitAssignment& split, const PipelineConfig& cfg,
                     std::vector<double> k_grid, const std::string& tuning_role = kRoleVal);

std::string pseudo_label_csv(const PseudoLabelSet& all, const PseudoLabelSet& retained);
nlohmann::json pseudo_label_provenance(const PseudoLabelSet& all, const PseudoLabelSet& retained, double K,
                                       int num_classes);
nlohmann::json pipeline_report_json(const PipelineResult& r, const PipelineConfig& cfg, const SplitAssignment& split,
                                    std::uint64_t seed);

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

}  // namespace phasessl
