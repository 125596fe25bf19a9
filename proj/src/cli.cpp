#include <phasessl/cli.hpp>
#include <phasessl/dataset.hpp>
#include <phasessl/enhance.hpp>
#include <phasessl/image_io.hpp>
#include <phasessl/metrics.hpp>
#include <phasessl/net.hpp>
#include <phasessl/run_config.hpp>
#include <phasessl/ssl.hpp>

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace phasessl {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
};

struct Context {
    RunConfig cfg;
    std::ostream& out;
    std::ostream& err;
    bool quiet = false;
    int threads = 1;

    void log(const std::string& msg) const
    {
        if (!quiet)
            err << msg << "\n";
    }
    fs::path out_dir() const
    {
        if (cfg.output_dir.empty())
            throw UsageError("no output directory; pass --out or set output_dir in the config");
        return cfg.output_dir;
    }
};

RunConfig resolve_config(const Globals& g)
{
    RunConfig c = g.config_path.empty() ? run_config_from_json(json::object()) : load_run_config(g.config_path);
    if (g.seed) {
        c.seed = *g.seed;
        c.split.seed = *g.seed;
        c.synthetic.seed = *g.seed;
    }
    if (!g.out.empty())
        c.output_dir = g.out;
    return c;
}

int thread_cap()
{
    const char* env = std::getenv("PHASESSL_THREADS");
    if (env == nullptr || *env == '\0')
        return std::max(1, omp_get_max_threads());
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1)
        throw UsageError(std::string("PHASESSL_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<int>(v);
}

json with_provenance(json j, const RunConfig& c)
{
    j["provenance"] = provenance(c);
    return j;
}

void write_json(const fs::path& path, const json& j)
{
    io::write_text_file(path, dump_json(j));
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return s;
}

// ---------------------------------------------------------------------------
// Inputs shared by several commands

struct InputItem {
    std::string id;
    fs::path path;
};

std::vector<InputItem> list_inputs(const fs::path& input)
{
    std::vector<InputItem> items;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input)) {
            const auto ext = lower(e.path().extension().string());
            if (e.is_regular_file() && (ext == ".png" || ext == ".pgm"))
                items.push_back({e.path().stem().string(), e.path()});
        }
        std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    } else if (fs::is_regular_file(input)) {
        const auto m = load_manifest(input);
        for (const auto& r : m.records)
            items.push_back({r.sample_id, m.resolve(r)});
    } else {
        throw UsageError("--input '" + input.string() + "' is neither a directory nor a manifest file");
    }
    std::set<std::string> seen;
    for (const auto& it : items)
        if (!seen.insert(it.id).second)
            throw DataError("two inputs map to the same id '" + it.id + "'");
    return items;
}

std::vector<SplitAssignment> load_splits(const fs::path& path)
{
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& e : fs::directory_iterator(path)) {
            const auto name = e.path().filename().string();
            if (e.is_regular_file() && name.starts_with("split_") && e.path().extension() == ".json")
                files.push_back(e.path());
        }
    } else if (fs::is_regular_file(path)) {
        files.push_back(path);
    }
    if (files.empty())
        throw DataError("no split files found at '" + path.string() + "' (run `phasessl split` first)");
    std::vector<SplitAssignment> splits;
    for (const auto& f : files) {
        try {
            splits.push_back(split_from_json(json::parse(io::read_text_file(f))));
        } catch (const json::exception& e) {
            throw DataError("malformed split file '" + f.string() + "': " + e.what());
        }
    }
    std::sort(splits.begin(), splits.end(), [](const auto& a, const auto& b) { return a.repeat < b.repeat; });
    return splits;
}

struct StoreOptions {
    fs::path sidecars;
    bool on_the_fly = false;
    int width = 0;
    int height = 0;
};

SampleStore build_store(const Context& ctx, const DatasetManifest& m, const std::set<std::string>& ids,
                        const StoreOptions& opt)
{
    std::vector<const SampleRecord*> records;
    for (const auto& id : ids) {
        const auto* r = m.find(id);
        if (r == nullptr)
            throw DataError("split references sample '" + id + "' which is not in the manifest");
        records.push_back(r);
    }
    std::vector<NetInput> inputs(records.size());
    std::vector<std::string> errors(records.size());
    const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic) num_threads(ctx.threads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& r = *records[static_cast<std::size_t>(i)];
        try {
            const auto img = io::read_gray(m.resolve(r));
            MultiFeatureImage mf(1, 1);
            if (opt.on_the_fly) {
                mf = enhance_image(img, ctx.cfg.filterbank, ctx.cfg.regularizer);
            } else {
                const auto side = opt.sidecars / (r.sample_id + ".mfi");
                if (!fs::is_regular_file(side))
                    throw DataError("missing MF sidecar " + side.string() +
                                    "; run `phasessl enhance` on the manifest first or pass --enhance-on-the-fly");
                mf = io::read_mfi(side);
            }
            inputs[static_cast<std::size_t>(i)] = prepare_input(img, mf, opt.width, opt.height);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = r.sample_id + ": " + e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty())
            throw DataError(e);
    SampleStore store;
    for (std::size_t i = 0; i < records.size(); ++i)
        store.add(*records[i], std::move(inputs[i]));
    return store;
}

fs::path default_sidecars(const std::string& manifest)
{
    return fs::path(manifest).parent_path() / "enhanced";
}

// ---------------------------------------------------------------------------
// Commands

struct SynthArgs {
    std::optional<int> per_class;
    std::optional<int> width;
    std::optional<int> height;
};

int cmd_synth(Context& ctx, const SynthArgs& a)
{
    auto spec = ctx.cfg.synthetic;
    if (a.per_class) spec.per_class = *a.per_class;
    if (a.width) spec.width = *a.width;
    if (a.height) spec.height = *a.height;
    if (spec.per_class < 1 || spec.width < 8 || spec.height < 8)
        throw UsageError("synth: --per-class >= 1 and --width/--height >= 8 required");
    ctx.cfg.synthetic = spec;
    const auto dir = ctx.out_dir();
    const auto m = generate_synthetic(spec, dir);
    write_json(dir / "synth.json",
               with_provenance({{"records", m.records.size()}, {"manifest", "manifest.csv"}}, ctx.cfg));
    ctx.log("synth: wrote " + std::to_string(m.records.size()) + " images to " + dir.string());
    return kExitOk;
}

int cmd_enhance(Context& ctx, const std::string& input)
{
    const auto items = list_inputs(input);
    const auto dir = ctx.out_dir();
    fs::create_directories(dir);
    std::vector<std::string> errors(items.size());
    const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(dynamic) num_threads(ctx.threads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& it = items[static_cast<std::size_t>(i)];
        try {
            const auto img = io::read_gray(it.path);
            const auto mf = enhance_image(img, ctx.cfg.filterbank, ctx.cfg.regularizer);
            io::write_mfi(dir / (it.id + ".mfi"), mf);
            io::write_mf_rgb_png(dir / (it.id + "_mf.png"), mf);
            io::write_mf_preview_png(dir / (it.id + "_preview.png"), mf);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }
    json processed = json::array();
    json failed = json::array();
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (errors[i].empty()) {
            processed.push_back(items[i].id);
        } else {
            failed.push_back({{"id", items[i].id}, {"error", errors[i]}});
            ctx.err << "enhance: " << items[i].id << ": " << errors[i] << "\n";
        }
    }
    write_json(dir / "enhance.json", with_provenance({{"processed", processed}, {"failed", failed}}, ctx.cfg));
    ctx.log("enhance: " + std::to_string(processed.size()) + " ok, " + std::to_string(failed.size()) + " failed");
    return failed.empty() ? kExitOk : kExitData;
}

int cmd_split(Context& ctx, const std::string& manifest)
{
    const auto m = load_manifest(manifest);
    const auto splits = make_splits(m, ctx.cfg.split);
    const auto dir = ctx.out_dir();
    for (const auto& s : splits)
        write_json(dir / ("split_" + std::to_string(s.repeat) + ".json"), with_provenance(split_to_json(s), ctx.cfg));
    ctx.log("split: wrote " + std::to_string(splits.size()) + " split files to " + dir.string());
    return kExitOk;
}

struct SslArgs {
    std::string manifest;
    std::string splits;
    std::string variant;
    std::optional<double> labeled_fraction;
    std::string sidecars;
    bool on_the_fly = false;
};

int cmd_ssl(Context& ctx, const SslArgs& a)
{
    if (!a.variant.empty()) {
        try {
            ctx.cfg.variant = variant_from_string(a.variant);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (a.labeled_fraction) {
        if (!(*a.labeled_fraction > 0.0 && *a.labeled_fraction <= 1.0))
            throw UsageError("--labeled-fraction must lie in (0,1]");
        ctx.cfg.split.labeled_fraction = *a.labeled_fraction;
    }
    const auto m = load_manifest(a.manifest);
    std::vector<SplitAssignment> splits;
    if (a.splits.empty()) {
        splits = make_splits(m, ctx.cfg.split);
    } else {
        splits = load_splits(a.splits);
        if (a.labeled_fraction)
            for (const auto& s : splits)
                if (std::abs(s.labeled_fraction - *a.labeled_fraction) > 1e-12)
                    throw UsageError("--labeled-fraction disagrees with split " + std::to_string(s.repeat) +
                                     " (labeled_fraction " + std::to_string(s.labeled_fraction) + ")");
    }
    std::set<std::string> ids;
    for (const auto& s : splits)
        for (const auto& [role, members] : s.roles)
            ids.insert(members.begin(), members.end());

    StoreOptions opt{a.sidecars.empty() ? default_sidecars(a.manifest) : fs::path(a.sidecars), a.on_the_fly,
                     ctx.cfg.net.input_width, ctx.cfg.net.input_height};
    ctx.log("ssl: preparing " + std::to_string(ids.size()) + " samples");
    const auto store = build_store(ctx, m, ids, opt);

    const auto dir = ctx.out_dir();
    const auto prov = provenance(ctx.cfg);
    auto echo = to_json(ctx.cfg);
    echo.erase("output_dir");

    // stage -> role -> per-repeat reports
    std::map<std::string, std::map<std::string, std::vector<MetricsReport>>> collected;
    json repeats = json::array();
    for (const auto& s : splits) {
        ctx.log("ssl: " + to_string(ctx.cfg.variant) + " repeat " + std::to_string(s.repeat));
        const auto pc = pipeline_config(ctx.cfg, s.repeat);
        const auto r = run_pipeline(store, s, pc, ctx.cfg.seed);
        const auto rdir = dir / ("repeat_" + std::to_string(s.repeat));

        auto rep = pipeline_report_json(r, pc, s, ctx.cfg.seed);
        rep["config"] = echo;
        rep["provenance"] = prov;
        write_json(rdir / "report.json", rep);
        io::write_text_file(rdir / "pseudo_labels.csv", pseudo_label_csv(r.pseudo_labels, r.selected));
        auto plj = pseudo_label_provenance(r.pseudo_labels, r.selected, pc.selection.K, pc.teacher_net.num_classes);
        plj["provenance"] = prov;
        write_json(rdir / "pseudo_labels.json", plj);
        io::write_file_bytes(rdir / "teacher.mfn", encode_checkpoint(r.teacher.params));
        io::write_file_bytes(rdir / "student.mfn", encode_checkpoint(r.student.params));
        io::write_file_bytes(rdir / "final.mfn", encode_checkpoint(r.final_model.params));

        for (const auto& [stage, roles] : r.metrics)
            for (const auto& [role, ev] : roles)
                collected[stage][role].push_back(ev.report);
        repeats.push_back(s.repeat);
    }

    json stages = json::object();
    for (const auto& [stage, roles] : collected)
        for (const auto& [role, reports] : roles) {
            std::vector<double> top1;
            for (const auto& rp : reports)
                top1.push_back(rp.top1);
            stages[stage][role] = {{"aggregate", to_json(aggregate(reports))}, {"top1", top1}};
        }
    json comparison = json::object();
    if (splits.size() >= 2 && collected.count("final") && collected.count("teacher"))
        for (const auto& [role, fin] : collected["final"]) {
            const auto& tea = collected["teacher"][role];
            std::vector<double> a;
            std::vector<double> b;
            for (std::size_t i = 0; i < fin.size(); ++i) {
                a.push_back(fin[i].top1);
                b.push_back(tea[i].top1);
            }
            auto t = to_json(paired_t_test(a, b));
            t["mean_difference"] = mean_of(a) - mean_of(b);
            comparison[role]["final_vs_teacher"] = t;
        }
    json agg = {{"method", to_string(ctx.cfg.variant)},
                {"labeled_fraction", splits.front().labeled_fraction},
                {"repeats", repeats},
                {"stages", stages},
                {"comparison", comparison},
                {"config", echo},
                {"provenance", prov}};
    write_json(dir / "aggregate.json", agg);
    ctx.log("ssl: wrote " + (dir / "aggregate.json").string());
    return kExitOk;
}

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string splits;
    std::string role = kRoleTest;
    std::string sidecars;
    bool on_the_fly = false;
};

int cmd_eval(Context& ctx, const EvalArgs& a)
{
    ModelParams p;
    try {
        p = decode_checkpoint(io::read_file_bytes(a.checkpoint));
    } catch (const std::exception& e) {
        throw DataError("cannot load checkpoint '" + a.checkpoint + "': " + e.what());
    }
    const auto m = load_manifest(a.manifest);
    if (fs::is_directory(a.splits))
        throw UsageError("eval: --splits must name one split file");
    const auto split = load_splits(a.splits).front();
    const auto& members = split.ids(a.role);
    if (members.empty())
        throw DataError("role '" + a.role + "' has no samples in " + a.splits);
    const std::set<std::string> ids(members.begin(), members.end());
    StoreOptions opt{a.sidecars.empty() ? default_sidecars(a.manifest) : fs::path(a.sidecars), a.on_the_fly,
                     p.config.input_width, p.config.input_height};
    const auto store = build_store(ctx, m, ids, opt);
    const auto ev = evaluate(p, store.labeled(members), ctx.cfg.seed);
    json j = {{"checkpoint", checkpoint_id(p)},
              {"role", a.role},
              {"split_repeat", split.repeat},
              {"report", to_json(ev.report)},
              {"confusion", to_json(ev.confusion)}};
    j = with_provenance(j, ctx.cfg);
    if (ctx.cfg.output_dir.empty()) {
        ctx.out << dump_json(j);
    } else {
        write_json(fs::path(ctx.cfg.output_dir) / ("eval_" + a.role + ".json"), j);
        ctx.log("eval: top1 " + std::to_string(ev.report.top1) + " on " + std::to_string(members.size()) +
                " samples");
    }
    return kExitOk;
}

struct ReportArgs {
    std::string reports;
    std::string compare;
    bool with_teacher = false;
};

struct ReportRow {
    std::string test_set;
    double labeled_pct;
    std::string method;
    double precision;
    double recall;
    double f1;
    double top1;
    std::vector<double> top1_runs;
    std::string compared_with;
    std::optional<TTestResult> ttest;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int cmd_report(Context& ctx, const ReportArgs& a)
{
    if (!fs::is_directory(a.reports))
        throw UsageError("--reports '" + a.reports + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(a.reports))
        if (e.is_regular_file() && e.path().filename() == "aggregate.json")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw DataError("no aggregate.json found under '" + a.reports + "'");

    std::vector<ReportRow> rows;
    std::set<std::tuple<std::string, double, std::string>> keys;
    for (const auto& f : files) {
        json j;
        try {
            j = json::parse(io::read_text_file(f));
            const std::string method = j.at("method");
            const double pct = 100.0 * j.at("labeled_fraction").get<double>();
            std::vector<std::pair<std::string, std::string>> stages = {{"final", method}};
            if (a.with_teacher)
                stages.push_back({"teacher", method + ":teacher"});
            for (const auto& [stage, name] : stages) {
                if (!j.at("stages").contains(stage))
                    continue;
                for (const auto& [role, entry] : j["stages"][stage].items()) {
                    if (!is_test_role(role))
                        continue;
                    if (!keys.insert({role, pct, name}).second)
                        throw DataError("duplicate report for method '" + name + "' on " + role + " (" + f.string() +
                                        ")");
                    const auto& mean = entry.at("aggregate").at("mean");
                    rows.push_back({role, pct, name, mean.at("precision"), mean.at("recall"), mean.at("f1"),
                                    mean.at("top1"), entry.at("top1").get<std::vector<double>>(), "", std::nullopt});
                }
            }
        } catch (const json::exception& e) {
            throw DataError("malformed report '" + f.string() + "': " + e.what());
        }
    }
    std::sort(rows.begin(), rows.end(), [](const ReportRow& x, const ReportRow& y) {
        return std::tie(x.test_set, x.labeled_pct, x.method) < std::tie(y.test_set, y.labeled_pct, y.method);
    });

    std::optional<std::pair<std::string, std::string>> pair;
    if (!a.compare.empty()) {
        const auto comma = a.compare.find(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 == a.compare.size())
            throw UsageError("--compare expects METHOD_A,METHOD_B");
        pair = {a.compare.substr(0, comma), a.compare.substr(comma + 1)};
    }
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        while (j < rows.size() && rows[j].test_set == rows[i].test_set && rows[j].labeled_pct == rows[i].labeled_pct)
            ++j;
        ReportRow* first = nullptr;
        ReportRow* second = nullptr;
        if (pair) {
            for (std::size_t k = i; k < j; ++k) {
                if (rows[k].method == pair->first) first = &rows[k];
                if (rows[k].method == pair->second) second = &rows[k];
            }
        } else if (j - i == 2) {
            first = &rows[i];
            second = &rows[i + 1];
        }
        if (first && second && first->top1_runs.size() == second->top1_runs.size() && first->top1_runs.size() >= 2) {
            const auto t = paired_t_test(first->top1_runs, second->top1_runs);
            first->compared_with = second->method;
            first->ttest = t;
            second->compared_with = first->method;
            second->ttest = TTestResult{-t.t_statistic, t.degrees_of_freedom, t.p_value, t.infinite_t};
        }
        i = j;
    }

    std::string csv = "test_set,method,labeled_pct,precision,recall,f1,top1,compared_with,t_statistic,p_value\n";
    for (const auto& r : rows) {
        csv += r.test_set + "," + r.method + "," + fmt("%g", r.labeled_pct) + "," + fmt("%.4f", r.precision) + "," +
               fmt("%.4f", r.recall) + "," + fmt("%.4f", r.f1) + "," + fmt("%.2f", r.top1) + "," + r.compared_with +
               ",";
        if (r.ttest) {
            csv += std::isinf(r.ttest->t_statistic) ? (r.ttest->t_statistic > 0 ? "+inf" : "-inf")
                                                    : fmt("%.6g", r.ttest->t_statistic);
            csv += "," + fmt("%.6g", r.ttest->p_value);
        } else {
            csv += ",";
        }
        csv += "\n";
    }
    if (ctx.cfg.output_dir.empty())
        ctx.out << csv;
    else
        io::write_text_file(ctx.cfg.output_dir, csv);
    ctx.log("report: " + std::to_string(rows.size()) + " rows");
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Local-phase chest image enhancement and teacher/student semi-supervised classification"};
    app.name("phasessl");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "Run config JSON")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Global seed; overrides every seed in the config");
    app.add_option("--out", g.out, "Output directory (report: output CSV path)");
    app.add_flag("--quiet", g.quiet, "Suppress progress messages");

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate the synthetic 3-class corpus");
    c_synth->add_option("--per-class", synth.per_class, "Images per class");
    c_synth->add_option("--width", synth.width);
    c_synth->add_option("--height", synth.height);

    std::string enhance_input;
    auto* c_enhance = app.add_subcommand("enhance", "Compute MF images (sidecars and previews)");
    c_enhance->add_option("--input", enhance_input, "Image directory or manifest CSV")->required();

    std::string split_manifest;
    auto* c_split = app.add_subcommand("split", "Write one split file per repeat");
    c_split->add_option("--manifest", split_manifest)->required()->check(CLI::ExistingFile);

    SslArgs ssl;
    auto* c_ssl = app.add_subcommand("ssl", "Run the teacher/student pipeline per repeat and aggregate");
    c_ssl->add_option("--manifest", ssl.manifest)->required()->check(CLI::ExistingFile);
    c_ssl->add_option("--splits", ssl.splits, "Split file or directory of split_*.json (default: make splits)");
    c_ssl->add_option("--variant", ssl.variant, "MF_TS, CXR_TS, ENH_TS or MF_T");
    c_ssl->add_option("--labeled-fraction", ssl.labeled_fraction);
    c_ssl->add_option("--sidecars", ssl.sidecars, "Directory of <id>.mfi files (default: <manifest dir>/enhanced)");
    c_ssl->add_flag("--enhance-on-the-fly", ssl.on_the_fly, "Compute MF images in memory instead of reading sidecars");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split role");
    c_eval->add_option("--checkpoint", ev.checkpoint)->required();
    c_eval->add_option("--manifest", ev.manifest)->required()->check(CLI::ExistingFile);
    c_eval->add_option("--splits", ev.splits, "One split file")->required();
    c_eval->add_option("--role", ev.role);
    c_eval->add_option("--sidecars", ev.sidecars);
    c_eval->add_flag("--enhance-on-the-fly", ev.on_the_fly);

    ReportArgs rep;
    auto* c_report = app.add_subcommand("report", "Render aggregate reports as a comparison CSV");
    c_report->add_option("--reports", rep.reports, "Directory searched for aggregate.json")->required();
    c_report->add_option("--compare", rep.compare, "METHOD_A,METHOD_B for the paired t-test column");
    c_report->add_flag("--with-teacher", rep.with_teacher, "Add the teacher-only rows (METHOD:teacher)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        Context ctx{resolve_config(g), out, err, g.quiet, thread_cap()};
        omp_set_num_threads(ctx.threads);
        if (c_synth->parsed()) return cmd_synth(ctx, synth);
        if (c_enhance->parsed()) return cmd_enhance(ctx, enhance_input);
        if (c_split->parsed()) return cmd_split(ctx, split_manifest);
        if (c_ssl->parsed()) return cmd_ssl(ctx, ssl);
        if (c_eval->parsed()) return cmd_eval(ctx, ev);
        if (c_report->parsed()) return cmd_report(ctx, rep);
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
}

int run_cli(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace phasessl
