#include <phasessl/hash.hpp>
#include <phasessl/image_io.hpp>
#include <phasessl/run_config.hpp>

#include <functional>
#include <map>

namespace phasessl {

namespace {

using json = nlohmann::json;
using Setters = std::map<std::string, std::function<void(const json&)>>;

void overlay(const json& j, const std::string& where, const Setters& setters)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        const auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError(where + ": unknown key '" + key + "'");
        try {
            it->second(value);
        } catch (const json::exception& e) {
            throw ConfigError(where + "." + key + ": " + e.what());
        }
    }
}

template <class T>
std::function<void(const json&)> set(T& field)
{
    return [&field](const json& v) { field = v.get<T>(); };
}

std::string profile_name(ProfileKind k)
{
    return k == ProfileKind::log_gabor ? "log_gabor" : "assd";
}

ProfileKind profile_from_name(const std::string& s)
{
    if (s == "log_gabor") return ProfileKind::log_gabor;
    if (s == "assd") return ProfileKind::assd;
    throw ConfigError("filterbank: unknown profile_kind '" + s + "' (expected log_gabor or assd)");
}

void read_filterbank(const json& j, const std::string& where, FilterBankConfig& c)
{
    overlay(j, where,
            {{"profile_kind", [&](const json& v) { c.profile_kind = profile_from_name(v.get<std::string>()); }},
             {"num_scales", set(c.num_scales)},
             {"base_wavelength", set(c.base_wavelength)},
             {"scale_multiplier", set(c.scale_multiplier)},
             {"sigma_ratio", set(c.sigma_ratio)},
             {"assd_alpha", set(c.assd_alpha)},
             {"assd_order", set(c.assd_order)}});
}

void read_train(const json& j, const std::string& where, TrainConfig& c)
{
    overlay(j, where,
            {{"epochs", set(c.epochs)},
             {"base_lr", set(c.base_lr)},
             {"decay_factor", set(c.decay_factor)},
             {"decay_every", set(c.decay_every)},
             {"batch_size", set(c.batch_size)},
             {"patience", set(c.patience)},
             {"shuffle_seed", set(c.shuffle_seed)}});
}

template <class F>
void validated(const std::string& where, F&& f)
{
    try {
        f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

nlohmann::json to_json(const FilterBankConfig& c)
{
    return {{"profile_kind", profile_name(c.profile_kind)},
            {"num_scales", c.num_scales},
            {"base_wavelength", c.base_wavelength},
            {"scale_multiplier", c.scale_multiplier},
            {"sigma_ratio", c.sigma_ratio},
            {"assd_alpha", c.assd_alpha},
            {"assd_order", c.assd_order}};
}

nlohmann::json to_json(const RegularizerConfig& c)
{
    return {{"lambda", c.lambda},
            {"beta0", c.beta0},
            {"beta_max", c.beta_max},
            {"kappa", c.kappa},
            {"edge_sigma", c.edge_sigma},
            {"num_directions", c.num_directions},
            {"t_floor", c.t_floor},
            {"airlight_fraction", c.airlight_fraction}};
}

nlohmann::json to_json(const SplitConfig& c)
{
    return {{"labeled_fraction", c.labeled_fraction},
            {"val_fraction", c.val_fraction},
            {"stop_fraction", c.stop_fraction},
            {"test_fraction", c.test_fraction},
            {"seed", c.seed},
            {"num_repeats", c.num_repeats}};
}

RunConfig run_config_from_json(const nlohmann::json& j)
{
    RunConfig c;
    std::string variant = to_string(c.variant);
    overlay(j, "config",
            {{"filterbank",
              [&](const json& v) {
                  overlay(v, "filterbank",
                          {{"phase", [&](const json& w) { read_filterbank(w, "filterbank.phase", c.filterbank.phase); }},
                           {"energy",
                            [&](const json& w) { read_filterbank(w, "filterbank.energy", c.filterbank.energy); }}});
              }},
             {"regularizer",
              [&](const json& v) {
                  auto& r = c.regularizer;
                  overlay(v, "regularizer",
                          {{"lambda", set(r.lambda)},
                           {"beta0", set(r.beta0)},
                           {"beta_max", set(r.beta_max)},
                           {"kappa", set(r.kappa)},
                           {"edge_sigma", set(r.edge_sigma)},
                           {"num_directions", set(r.num_directions)},
                           {"t_floor", set(r.t_floor)},
                           {"airlight_fraction", set(r.airlight_fraction)}});
              }},
             {"split",
              [&](const json& v) {
                  auto& s = c.split;
                  overlay(v, "split",
                          {{"labeled_fraction", set(s.labeled_fraction)},
                           {"val_fraction", set(s.val_fraction)},
                           {"stop_fraction", set(s.stop_fraction)},
                           {"test_fraction", set(s.test_fraction)},
                           {"seed", set(s.seed)},
                           {"num_repeats", set(s.num_repeats)}});
              }},
             {"net",
              [&](const json& v) {
                  auto& n = c.net;
                  overlay(v, "net",
                          {{"stream_channels", set(n.stream_channels)},
                           {"kernel_size", set(n.kernel_size)},
                           {"num_classes", set(n.num_classes)},
                           {"fusion_hidden", set(n.fusion_hidden)},
                           {"input_width", set(n.input_width)},
                           {"input_height", set(n.input_height)}});
              }},
             {"train",
              [&](const json& v) {
                  overlay(v, "train",
                          {{"teacher", [&](const json& w) { read_train(w, "train.teacher", c.teacher_train); }},
                           {"student", [&](const json& w) { read_train(w, "train.student", c.student_train); }},
                           {"finetune", [&](const json& w) { read_train(w, "train.finetune", c.finetune_train); }}});
              }},
             {"selection",
              [&](const json& v) {
                  overlay(v, "selection", {{"K", set(c.selection.K)}, {"bypass", set(c.bypass_selection)}});
              }},
             {"variant", set(variant)},
             {"synthetic",
              [&](const json& v) {
                  auto& s = c.synthetic;
                  overlay(v, "synthetic",
                          {{"per_class", set(s.per_class)},
                           {"width", set(s.width)},
                           {"height", set(s.height)},
                           {"seed", set(s.seed)},
                           {"noise_sigma", set(s.noise_sigma)}});
              }},
             {"output_dir", set(c.output_dir)},
             {"seed", set(c.seed)}});

    validated("variant", [&] { c.variant = variant_from_string(variant); });
    validated("filterbank.phase", [&] { c.filterbank.phase.validate(); });
    validated("filterbank.energy", [&] { c.filterbank.energy.validate(); });
    validated("regularizer", [&] { c.regularizer.validate(); });
    validated("split", [&] { c.split.validate(); });
    validated("net", [&] { c.net.validate(); });
    validated("train.teacher", [&] { c.teacher_train.validate(); });
    validated("train.student", [&] { c.student_train.validate(); });
    validated("train.finetune", [&] { c.finetune_train.validate(); });
    validated("selection", [&] { c.selection.validate(); });
    if (c.synthetic.per_class < 1 || c.synthetic.width < 8 || c.synthetic.height < 8 || c.synthetic.noise_sigma < 0)
        throw ConfigError("synthetic: per_class >= 1, width/height >= 8 and noise_sigma >= 0 required");
    return c;
}

RunConfig load_run_config(const std::string& path)
{
    std::string text;
    try {
        text = io::read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError("cannot read config '" + path + "': " + e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

nlohmann::json to_json(const RunConfig& c)
{
    const auto& n = c.net;
    return {{"filterbank", {{"phase", to_json(c.filterbank.phase)}, {"energy", to_json(c.filterbank.energy)}}},
            {"regularizer", to_json(c.regularizer)},
            {"split", to_json(c.split)},
            {"net",
             {{"stream_channels", n.stream_channels},
              {"kernel_size", n.kernel_size},
              {"num_classes", n.num_classes},
              {"fusion_hidden", n.fusion_hidden},
              {"input_width", n.input_width},
              {"input_height", n.input_height}}},
            {"train",
             {{"teacher", to_json(c.teacher_train)},
              {"student", to_json(c.student_train)},
              {"finetune", to_json(c.finetune_train)}}},
            {"selection", {{"K", c.selection.K}, {"bypass", c.bypass_selection}}},
            {"variant", to_string(c.variant)},
            {"synthetic",
             {{"per_class", c.synthetic.per_class},
              {"width", c.synthetic.width},
              {"height", c.synthetic.height},
              {"seed", c.synthetic.seed},
              {"noise_sigma", c.synthetic.noise_sigma}}},
            {"output_dir", c.output_dir},
            {"seed", c.seed}};
}

std::string config_hash(const RunConfig& c)
{
    auto j = to_json(c);
    j.erase("output_dir");
    return sha256_hex(j.dump());
}

nlohmann::json provenance(const RunConfig& c)
{
    return {{"config_hash", config_hash(c)}, {"seed", c.seed}, {"artifact_version", kArtifactVersion}};
}

PipelineConfig pipeline_config(const RunConfig& c, int repeat)
{
    PipelineConfig p;
    p.teacher_net = c.net;
    p.student_net = c.net;
    p.teacher_train = c.teacher_train;
    p.student_train = c.student_train;
    p.finetune_train = c.finetune_train;
    p.selection = c.selection;
    p.variant = c.variant;
    p.bypass_selection = c.bypass_selection;
    return with_repeat_seeds(p, c.seed, repeat);
}

std::string dump_json(const nlohmann::json& j)
{
    return j.dump(2) + "\n";
}

}  // namespace phasessl
