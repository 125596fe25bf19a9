#include <phasessl/hash.hpp>
#include <phasessl/ssl.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace phasessl {

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::MF_TS: return "MF_TS";
    case Variant::CXR_TS: return "CXR_TS";
    case Variant::ENH_TS: return "ENH_TS";
    case Variant::MF_T: return "MF_T";
    }
    return "MF_TS";
}

Variant variant_from_string(const std::string& s)
{
    std::string k = s;
    std::replace(k.begin(), k.end(), '-', '_');
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (k == "MF_TS") return Variant::MF_TS;
    if (k == "CXR_TS") return Variant::CXR_TS;
    if (k == "ENH_TS") return Variant::ENH_TS;
    if (k == "MF_T") return Variant::MF_T;
    throw std::invalid_argument("unknown variant '" + s + "' (expected MF_TS, CXR_TS, ENH_TS or MF_T)");
}

StreamInputs teacher_inputs(Variant v)
{
    switch (v) {
    case Variant::CXR_TS: return StreamInputs::cxr_only;
    case Variant::ENH_TS: return StreamInputs::mf_only;
    default: return StreamInputs::both;
    }
}

StreamInputs student_inputs(Variant v)
{
    switch (v) {
    case Variant::MF_TS: return StreamInputs::both;
    case Variant::ENH_TS: return StreamInputs::mf_only;
    default: return StreamInputs::cxr_only;
    }
}

void SelectionConfig::validate() const
{
    if (!(K > 0.0 && K <= 1.0))
        throw std::invalid_argument("selection: K must lie in (0,1]");
}

PipelineConfig with_repeat_seeds(PipelineConfig cfg, std::uint64_t base_seed, int repeat)
{
    const std::uint64_t r = base_seed * 1000 + static_cast<std::uint64_t>(repeat) * 10;
    cfg.teacher_net.init_seed = r + 1;
    cfg.student_net.init_seed = r + 2;
    cfg.teacher_train.shuffle_seed = r + 3;
    cfg.student_train.shuffle_seed = r + 4;
    cfg.finetune_train.shuffle_seed = r + 5;
    return cfg;
}

// ---------------------------------------------------------------------------
// Sample views

void SampleStore::add(const SampleRecord& record, NetInput input)
{
    inputs_[record.sample_id] = std::move(input);
    if (record.label)
        labels_[record.sample_id] = *record.label;
    else
        labels_.erase(record.sample_id);
}

std::vector<LabeledSample> SampleStore::labeled(const std::vector<std::string>& ids) const
{
    std::vector<LabeledSample> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto in = inputs_.find(id);
        if (in == inputs_.end())
            throw DataError("sample '" + id + "' has no prepared input");
        const auto lab = labels_.find(id);
        if (lab == labels_.end())
            throw DataError("sample '" + id + "' is used in a labeled role but has no label");
        out.push_back({id, &in->second, lab->second});
    }
    return out;
}

std::vector<UnlabeledSample> SampleStore::unlabeled(const std::vector<std::string>& ids) const
{
    std::vector<UnlabeledSample> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto in = inputs_.find(id);
        if (in == inputs_.end())
            throw DataError("sample '" + id + "' has no prepared input");
        out.push_back({id, &in->second});
    }
    return out;
}

std::vector<LabeledExample> as_examples(const std::vector<LabeledSample>& samples)
{
    std::vector<LabeledExample> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        out.push_back({s.input, s.label});
    return out;
}

// ---------------------------------------------------------------------------
// Steps

TrainResult train_teacher(const std::vector<LabeledSample>& labeled, const std::vector<LabeledSample>& stop,
                          const NetConfig& net, const TrainConfig& train_cfg)
{
    if (labeled.empty())
        throw std::invalid_argument("train_teacher: labeled set is empty");
    const auto train_ex = as_examples(labeled);
    const auto stop_ex = as_examples(stop);
    return train(init_params(net), train_ex, stop_ex, train_cfg);
}

PseudoLabelSet pseudo_label(const ModelParams& teacher, const std::vector<UnlabeledSample>& unlabeled,
                            const std::string& provenance)
{
    PseudoLabelSet out;
    out.provenance = provenance;
    out.labels.resize(unlabeled.size());
    const auto n = static_cast<std::ptrdiff_t>(unlabeled.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& u = unlabeled[static_cast<std::size_t>(i)];
        const auto pred = predict(teacher, *u.input);
        out.labels[static_cast<std::size_t>(i)] = {u.sample_id, pred.label, pred.confidence};
    }
    std::sort(out.labels.begin(), out.labels.end(),
              [](const PseudoLabel& a, const PseudoLabel& b) { return a.sample_id < b.sample_id; });
    return out;
}

std::size_t retained_count(double K, std::size_t n)
{
    if (n == 0)
        return 0;
    const auto k = static_cast<std::size_t>(std::ceil(K * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
}

PseudoLabelSet select_top_k(const PseudoLabelSet& pl, const SelectionConfig& sel)
{
    sel.validate();
    std::map<int, std::vector<const PseudoLabel*>> by_class;
    for (const auto& l : pl.labels)
        by_class[l.predicted_class].push_back(&l);

    PseudoLabelSet out;
    out.provenance = pl.provenance;
    for (auto& [cls, members] : by_class) {
        std::sort(members.begin(), members.end(), [](const PseudoLabel* a, const PseudoLabel* b) {
            if (a->confidence != b->confidence)
                return a->confidence > b->confidence;
            return a->sample_id < b->sample_id;
        });
        const std::size_t keep = retained_count(sel.K, members.size());
        for (std::size_t i = 0; i < keep; ++i)
            out.labels.push_back(*members[i]);
    }
    std::sort(out.labels.begin(), out.labels.end(),
              [](const PseudoLabel& a, const PseudoLabel& b) { return a.sample_id < b.sample_id; });
    return out;
}

TrainResult train_student(const PseudoLabelSet& selected, const std::vector<UnlabeledSample>& pool,
                          const std::vector<LabeledSample>& stop, const NetConfig& net, const TrainConfig& train_cfg)
{
    if (selected.labels.empty())
        throw std::invalid_argument("train_student: no pseudo-labels retained; increase K");
    std::map<std::string, const NetInput*> lookup;
    for (const auto& u : pool)
        lookup[u.sample_id] = u.input;
    std::vector<LabeledExample> train_ex;
    train_ex.reserve(selected.labels.size());
    for (const auto& l : selected.labels) {
        const auto it = lookup.find(l.sample_id);
        if (it == lookup.end())
            throw std::invalid_argument("train_student: pseudo-label '" + l.sample_id +
                                        "' is not in the unlabeled pool");
        train_ex.push_back({it->second, l.predicted_class});
    }
    const auto stop_ex = as_examples(stop);
    return train(init_params(net), train_ex, stop_ex, train_cfg);
}

TrainResult finetune_student(const ModelParams& student, const std::vector<LabeledSample>& labeled,
                             const std::vector<LabeledSample>& stop, const TrainConfig& finetune_cfg)
{
    if (labeled.empty())
        throw std::invalid_argument("finetune_student: labeled set is empty");
    const auto train_ex = as_examples(labeled);
    const auto stop_ex = as_examples(stop);
    return train(student, train_ex, stop_ex, finetune_cfg);
}

Evaluation evaluate(const ModelParams& p, const std::vector<LabeledSample>& samples, std::uint64_t seed)
{
    if (samples.empty())
        throw std::invalid_argument("evaluate: no samples");
    std::vector<int> truth(samples.size());
    std::vector<int> pred(samples.size());
    const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        truth[static_cast<std::size_t>(i)] = s.label;
        pred[static_cast<std::size_t>(i)] = predict(p, *s.input).label;
    }
    auto cm = confusion(truth, pred, p.config.num_classes);
    return {report(cm, seed), std::move(cm)};
}

std::string checkpoint_id(const ModelParams& p)
{
    return sha256_hex(encode_checkpoint(p)).substr(0, 16);
}

// ---------------------------------------------------------------------------
// Pipeline

PipelineResult run_pipeline(const SampleStore& store, const SplitAssignment& split, const PipelineConfig& cfg,
                            std::uint64_t seed)
{
    cfg.selection.validate();
    if (cfg.teacher_net.init_seed == cfg.student_net.init_seed)
        throw std::invalid_argument("pipeline: student must be initialized from its own seed");
    if (cfg.teacher_net.input_width != cfg.student_net.input_width ||
        cfg.teacher_net.input_height != cfg.student_net.input_height)
        throw std::invalid_argument("pipeline: teacher and student input dims differ");

    auto stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const DataError& e) {
            throw DataError(std::string(name) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string(name) + ": " + e.what());
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(std::string(name) + ": " + e.what());
        }
    };

    const auto labeled = store.labeled(split.ids(kRoleLabeled));
    const auto stop = store.labeled(split.ids(kRoleStop));
    const auto pool = store.unlabeled(split.ids(kRoleUnlabeled));
    if (pool.empty())
        throw std::invalid_argument("pipeline: the unlabeled role is empty");

    NetConfig teacher_net = cfg.teacher_net;
    teacher_net.inputs = teacher_inputs(cfg.variant);
    NetConfig student_net = cfg.student_net;
    student_net.inputs = student_inputs(cfg.variant);

    PipelineResult r;
    r.teacher = stage("step 1 (teacher)", [&] { return train_teacher(labeled, stop, teacher_net, cfg.teacher_train); });
    r.pseudo_labels = stage("step 2 (pseudo-label)",
                            [&] { return pseudo_label(r.teacher.params, pool, checkpoint_id(r.teacher.params)); });
    r.selected = stage("step 3 (top-K)", [&] {
        return cfg.bypass_selection ? r.pseudo_labels : select_top_k(r.pseudo_labels, cfg.selection);
    });
    r.student = stage("step 4 (student)",
                      [&] { return train_student(r.selected, pool, stop, student_net, cfg.student_train); });
    r.final_model = stage("step 5 (finetune)",
                          [&] { return finetune_student(r.student.params, labeled, stop, cfg.finetune_train); });

    std::vector<std::string> roles;
    for (const auto& [role, ids] : split.roles)
        if ((role == kRoleVal || is_test_role(role)) && !ids.empty())
            roles.push_back(role);
    const std::pair<const char*, const ModelParams*> stages[] = {
        {"teacher", &r.teacher.params}, {"student", &r.student.params}, {"final", &r.final_model.params}};
    for (const auto& [name, params] : stages)
        for (const auto& role : roles)
            r.metrics[name][role] = evaluate(*params, store.labeled(split.ids(role)), seed);
    return r;
}

KSweepResult sweep_k(const SampleStore& store, const SplitAssignment& split, const PipelineConfig& cfg,
                     std::vector<double> k_grid, const std::string& tuning_role)
{
    if (k_grid.empty())
        throw std::invalid_argument("sweep_k: empty K grid");
    std::sort(k_grid.begin(), k_grid.end());
    k_grid.erase(std::unique(k_grid.begin(), k_grid.end()), k_grid.end());
    const auto tuning = store.labeled(split.ids(tuning_role));
    if (tuning.empty())
        throw std::invalid_argument("sweep_k: tuning role '" + tuning_role + "' is empty");

    KSweepResult out;
    double best = -1.0;
    for (double K : k_grid) {
        PipelineConfig c = cfg;
        c.selection.K = K;
        const auto r = run_pipeline(store, split, c);
        const double acc = evaluate(r.final_model.params, tuning).report.top1;
        out.rows.push_back({K, acc});
        if (acc > best) {
            best = acc;
            out.selected_K = K;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {
std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

std::string pseudo_label_csv(const PseudoLabelSet& all, const PseudoLabelSet& retained)
{
    std::set<std::string> kept;
    for (const auto& l : retained.labels)
        kept.insert(l.sample_id);
    std::string out = "sample_id,predicted_class,confidence,retained\n";
    for (const auto& l : all.labels)
        out += l.sample_id + "," + std::to_string(l.predicted_class) + "," + format_double(l.confidence) + "," +
               (kept.count(l.sample_id) ? "1" : "0") + "\n";
    return out;
}

nlohmann::json pseudo_label_provenance(const PseudoLabelSet& all, const PseudoLabelSet& retained, double K,
                                       int num_classes)
{
    std::vector<long long> predicted(static_cast<std::size_t>(num_classes), 0);
    std::vector<long long> kept(static_cast<std::size_t>(num_classes), 0);
    for (const auto& l : all.labels)
        ++predicted[static_cast<std::size_t>(l.predicted_class)];
    for (const auto& l : retained.labels)
        ++kept[static_cast<std::size_t>(l.predicted_class)];
    const double fraction = all.labels.empty() ? 0.0
                                               : static_cast<double>(retained.labels.size()) /
                                                     static_cast<double>(all.labels.size());
    return {{"teacher_checkpoint", all.provenance},
            {"K", K},
            {"counts_per_class", {{"predicted", predicted}, {"retained", kept}}},
            {"retained_total", retained.labels.size()},
            {"unlabeled_total", all.labels.size()},
            {"retained_fraction", fraction}};
}

nlohmann::json to_json(const TrainConfig& c)
{
    return {{"epochs", c.epochs},           {"base_lr", c.base_lr},       {"decay_factor", c.decay_factor},
            {"decay_every", c.decay_every}, {"batch_size", c.batch_size}, {"patience", c.patience},
            {"shuffle_seed", c.shuffle_seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c)
{
    for (const auto& [key, value] : j.items()) {
        if (key == "epochs") c.epochs = value.get<int>();
        else if (key == "base_lr") c.base_lr = value.get<double>();
        else if (key == "decay_factor") c.decay_factor = value.get<double>();
        else if (key == "decay_every") c.decay_every = value.get<int>();
        else if (key == "batch_size") c.batch_size = value.get<int>();
        else if (key == "patience") c.patience = value.get<int>();
        else if (key == "shuffle_seed") c.shuffle_seed = value.get<std::uint64_t>();
        else throw std::invalid_argument("train config: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

nlohmann::json pipeline_report_json(const PipelineResult& r, const PipelineConfig& cfg, const SplitAssignment& split,
                                    std::uint64_t seed)
{
    nlohmann::json stages = nlohmann::json::object();
    for (const auto& [stage, roles] : r.metrics)
        for (const auto& [role, ev] : roles) {
            auto j = to_json(ev.report);
            j["confusion"] = to_json(ev.confusion);
            stages[stage][role] = j;
        }
    auto history = [](const TrainResult& t) {
        nlohmann::json h = nlohmann::json::array();
        for (const auto& e : t.history)
            h.push_back(history_record_json(e));
        return nlohmann::json{{"best_epoch", t.best_epoch}, {"epochs", h}};
    };
    return {{"variant", to_string(cfg.variant)},
            {"repeat", split.repeat},
            {"split_seed", split.seed},
            {"labeled_fraction", split.labeled_fraction},
            {"seeds",
             {{"run", seed},
              {"teacher_init", cfg.teacher_net.init_seed},
              {"student_init", cfg.student_net.init_seed},
              {"teacher_shuffle", cfg.teacher_train.shuffle_seed},
              {"student_shuffle", cfg.student_train.shuffle_seed},
              {"finetune_shuffle", cfg.finetune_train.shuffle_seed}}},
            {"checkpoints",
             {{"teacher", checkpoint_id(r.teacher.params)},
              {"student", checkpoint_id(r.student.params)},
              {"final", checkpoint_id(r.final_model.params)}}},
            {"pseudo_labels",
             pseudo_label_provenance(r.pseudo_labels, r.selected, cfg.selection.K, cfg.teacher_net.num_classes)},
            {"training", {{"teacher", history(r.teacher)}, {"student", history(r.student)},
                          {"finetune", history(r.final_model)}}},
            {"metrics", stages}};
}

}  // namespace phasessl
