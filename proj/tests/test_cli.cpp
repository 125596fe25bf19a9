#include <phasessl/cli.hpp>
#include <phasessl/dataset.hpp>
#include <phasessl/image_io.hpp>
#include <phasessl/net.hpp>
#include <phasessl/ssl.hpp>

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <json.hpp>

using namespace phasessl;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    return io::read_text_file(p);
}

// Small, fast configuration shared by the end-to-end tests.
const char* kSmallConfig = R"({
  "net": {"stream_channels": [4, 8], "fusion_hidden": 8, "input_width": 16, "input_height": 16},
  "train": {
    "teacher":  {"epochs": 3, "base_lr": 0.05, "batch_size": 4, "patience": 3},
    "student":  {"epochs": 3, "base_lr": 0.05, "batch_size": 4, "patience": 3},
    "finetune": {"epochs": 3, "base_lr": 0.05, "batch_size": 4, "patience": 3}
  },
  "split": {"num_repeats": 2},
  "synthetic": {"per_class": 12, "width": 64, "height": 64}
})";

struct Workspace {
    fs::path root;
    fs::path config;
    fs::path data;

    explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / ("phasessl_test_cli_" + name))
    {
        fs::remove_all(root);
        fs::create_directories(root);
        config = root / "config.json";
        io::write_text_file(config, kSmallConfig);
        data = root / "data";
    }
    Workspace(const Workspace&) = delete;
    ~Workspace() { fs::remove_all(root); }

    std::vector<std::string> base(std::vector<std::string> rest) const
    {
        std::vector<std::string> a = {"--quiet", "--config", config.string()};
        a.insert(a.end(), rest.begin(), rest.end());
        return a;
    }
};

// synth + enhance once for the whole file.
const Workspace& prepared()
{
    static Workspace ws("shared");
    static const bool ready = [] {
        REQUIRE(cli(ws.base({"--out", ws.data.string(), "synth"})).code == kExitOk);
        REQUIRE(cli(ws.base({"--out", (ws.data / "enhanced").string(), "enhance", "--input",
                             (ws.data / "manifest.csv").string()}))
                    .code == kExitOk);
        return true;
    }();
    (void)ready;
    return ws;
}

}  // namespace

TEST_CASE("help and usage errors")
{
    CHECK(cli({"--help"}).code == kExitOk);
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"ssl"}).code == kExitUsage);  // --manifest is required
    CHECK(cli({"--config", "/no/such/file.json", "synth"}).code == kExitUsage);
    CHECK(cli({"synth"}).code == kExitUsage);  // no output directory
}

TEST_CASE("the installed binary maps exit codes")
{
    const std::string bin = PHASESSL_CLI_PATH;
    CHECK(std::system((bin + " --help > /dev/null 2>&1").c_str()) == 0);
    const int rc = std::system((bin + " bogus > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == kExitUsage);
}

TEST_CASE("synth and enhance produce the documented artifacts")
{
    const auto& ws = prepared();
    CHECK(fs::exists(ws.data / "manifest.csv"));
    const auto synth = json::parse(slurp(ws.data / "synth.json"));
    CHECK(synth["records"] == 36);
    CHECK(synth["provenance"]["config_hash"].get<std::string>().size() == 64);
    const auto enh = json::parse(slurp(ws.data / "enhanced" / "enhance.json"));
    CHECK(enh["processed"].size() == 36);
    CHECK(enh["failed"].empty());
    const auto first = enh["processed"][0].get<std::string>();
    const auto mf = io::read_mfi(ws.data / "enhanced" / (first + ".mfi"));
    CHECK(mf.width() == 64);
    CHECK(fs::exists(ws.data / "enhanced" / (first + "_mf.png")));
    CHECK(fs::exists(ws.data / "enhanced" / (first + "_preview.png")));
}

TEST_CASE("enhance reports corrupt inputs but still processes the valid ones")
{
    Workspace ws("corrupt");
    const auto in = ws.root / "imgs";
    fs::create_directories(in);
    phasessl::GrayImage img(64, 64, 0.25);
    for (int y = 20; y < 30; ++y)
        for (int x = 0; x < 64; ++x)
            img(x, y) = 0.8;
    io::write_gray_png16(in / "good1.png", img);
    io::write_gray_png16(in / "good2.png", img);
    io::write_text_file(in / "broken.png", "not an image");
    const auto out = ws.root / "enh";
    const auto r = cli(ws.base({"--out", out.string(), "enhance", "--input", in.string()}));
    CHECK(r.code == kExitData);
    CHECK(r.err.find("broken") != std::string::npos);
    CHECK(fs::exists(out / "good1.mfi"));
    CHECK(fs::exists(out / "good2.mfi"));
    const auto j = json::parse(slurp(out / "enhance.json"));
    CHECK(j["processed"].size() == 2);
    REQUIRE(j["failed"].size() == 1);
    CHECK(j["failed"][0]["id"] == "broken");
}

TEST_CASE("enhance reruns are byte-identical")
{
    const auto& ws = prepared();
    const auto again = ws.root / "enhanced_again";
    REQUIRE(cli(ws.base({"--out", again.string(), "enhance", "--input", (ws.data / "manifest.csv").string()})).code ==
            kExitOk);
    for (const char* f : {"c1_0003.mfi", "c1_0003_mf.png", "c1_0003_preview.png", "enhance.json"})
        CHECK(io::read_file_bytes(again / f) == io::read_file_bytes(ws.data / "enhanced" / f));
}

TEST_CASE("infeasible split exits 1 naming the class")
{
    const auto& ws = prepared();
    const auto cfg = ws.root / "tiny_val.json";
    io::write_text_file(cfg, R"({"split": {"val_fraction": 0.01}})");
    const auto r = cli({"--config", cfg.string(), "--out", (ws.root / "nosplit").string(), "split", "--manifest",
                        (ws.data / "manifest.csv").string()});
    CHECK(r.code == kExitData);
    CHECK(r.err.find("normal") != std::string::npos);
}

TEST_CASE("split writes one file per repeat with provenance")
{
    const auto& ws = prepared();
    const auto out = ws.root / "splits5";
    REQUIRE(cli({"--quiet", "--out", out.string(), "split", "--manifest", (ws.data / "manifest.csv").string()}).code ==
            kExitOk);
    for (int r = 0; r < 5; ++r) {
        const auto j = json::parse(slurp(out / ("split_" + std::to_string(r) + ".json")));
        CHECK(j["repeat"] == r);
        CHECK(j.contains("provenance"));
        CHECK(j["roles"].contains("unlabeled"));
    }
    CHECK_FALSE(fs::exists(out / "split_5.json"));
}

TEST_CASE("ssl, eval and report end to end")
{
    const auto& ws = prepared();
    const auto manifest = (ws.data / "manifest.csv").string();
    const auto splits = ws.root / "splits";
    REQUIRE(cli(ws.base({"--out", splits.string(), "split", "--manifest", manifest})).code == kExitOk);

    const auto run_a = ws.root / "run_mf";
    const auto r = cli(ws.base({"--out", run_a.string(), "ssl", "--manifest", manifest, "--splits", splits.string(),
                                "--variant", "MF_TS"}));
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    for (const char* f : {"report.json", "pseudo_labels.csv", "pseudo_labels.json", "teacher.mfn", "student.mfn",
                          "final.mfn"})
        CHECK(fs::exists(run_a / "repeat_1" / f));
    const auto agg = json::parse(slurp(run_a / "aggregate.json"));
    CHECK(agg["method"] == "MF_TS");
    CHECK(agg["repeats"].size() == 2);
    CHECK(agg["stages"]["final"]["test"]["top1"].size() == 2);
    CHECK(agg["comparison"]["test"]["final_vs_teacher"].contains("p_value"));
    CHECK_FALSE(agg["config"].contains("output_dir"));
    const auto csv = slurp(run_a / "repeat_0" / "pseudo_labels.csv");
    CHECK(csv.rfind("sample_id,predicted_class,confidence,retained\n", 0) == 0);

    SUBCASE("byte-identical rerun")
    {
        const auto run_b = ws.root / "run_mf_again";
        REQUIRE(cli(ws.base({"--out", run_b.string(), "ssl", "--manifest", manifest, "--splits", splits.string(),
                             "--variant", "MF_TS"}))
                    .code == kExitOk);
        CHECK(slurp(run_a / "aggregate.json") == slurp(run_b / "aggregate.json"));
        CHECK(slurp(run_a / "repeat_0" / "report.json") == slurp(run_b / "repeat_0" / "report.json"));
        CHECK(io::read_file_bytes(run_a / "repeat_1" / "final.mfn") ==
              io::read_file_bytes(run_b / "repeat_1" / "final.mfn"));
    }

    SUBCASE("eval of a saved checkpoint matches the pipeline report")
    {
        const auto split0 = (splits / "split_0.json").string();
        const auto e = cli({"--quiet", "eval", "--checkpoint", (run_a / "repeat_0" / "final.mfn").string(),
                            "--manifest", manifest, "--splits", split0});
        REQUIRE_MESSAGE(e.code == kExitOk, e.err);
        const auto j = json::parse(e.out);
        const auto rep = json::parse(slurp(run_a / "repeat_0" / "report.json"));
        CHECK(j["report"]["top1"] == rep["metrics"]["final"]["test"]["top1"]);
        CHECK(j["checkpoint"] == rep["checkpoints"]["final"]);

        const auto empty = cli({"--quiet", "eval", "--checkpoint", (run_a / "repeat_0" / "final.mfn").string(),
                                "--manifest", manifest, "--splits", split0, "--role", "test2"});
        CHECK(empty.code == kExitData);
        CHECK(empty.err.find("test2") != std::string::npos);
    }

    SUBCASE("report with one and two methods")
    {
        auto one = cli({"--quiet", "report", "--reports", run_a.string()});
        REQUIRE(one.code == kExitOk);
        CHECK(one.out.rfind("test_set,method,labeled_pct,precision,recall,f1,top1,compared_with,t_statistic,p_value\n",
                            0) == 0);
        CHECK(one.out.find("test,MF_TS,10,") != std::string::npos);

        const auto run_c = ws.root / "run_cxr";
        REQUIRE(cli(ws.base({"--out", run_c.string(), "ssl", "--manifest", manifest, "--splits", splits.string(),
                             "--variant", "CXR_TS"}))
                    .code == kExitOk);
        const auto both_dir = ws.root / "both";
        fs::create_directories(both_dir);
        fs::copy(run_a, both_dir / "a", fs::copy_options::recursive);
        fs::copy(run_c, both_dir / "c", fs::copy_options::recursive);
        const auto csv_path = ws.root / "table.csv";
        REQUIRE(cli({"--quiet", "--out", csv_path.string(), "report", "--reports", both_dir.string(), "--compare",
                     "MF_TS,CXR_TS", "--with-teacher"})
                    .code == kExitOk);
        const auto table = slurp(csv_path);
        CHECK(table.find("test,MF_TS,10,") != std::string::npos);
        CHECK(table.find("test,CXR_TS,10,") != std::string::npos);
        CHECK(table.find("MF_TS:teacher") != std::string::npos);
        CHECK(table.find(",CXR_TS,") != std::string::npos);  // compared_with column filled
        CHECK(cli({"--quiet", "report", "--reports", both_dir.string(), "--compare", "MF_TS"}).code == kExitUsage);
    }
}

TEST_CASE("eval of a memorizing checkpoint on its training role gives 100")
{
    const auto& ws = prepared();
    const auto manifest = load_manifest(ws.data / "manifest.csv");
    const auto splits = ws.root / "mem_splits";
    REQUIRE(cli(ws.base({"--out", splits.string(), "split", "--manifest", (ws.data / "manifest.csv").string()})).code ==
            kExitOk);
    const auto split = split_from_json(json::parse(slurp(splits / "split_0.json")));
    SampleStore store;
    for (const auto& id : split.ids(kRoleLabeled)) {
        const auto* rec = manifest.find(id);
        store.add(*rec, prepare_input(io::read_gray(manifest.resolve(*rec)),
                                      io::read_mfi(ws.data / "enhanced" / (id + ".mfi")), 16, 16));
    }
    NetConfig net;
    net.stream_channels = {8, 16};
    net.fusion_hidden = 16;
    net.input_width = net.input_height = 16;
    TrainConfig t;
    t.epochs = 200;
    t.base_lr = 0.05;
    t.batch_size = 3;
    const auto res = train_teacher(store.labeled(split.ids(kRoleLabeled)), {}, net, t);
    const auto ckpt = ws.root / "memorized.mfn";
    io::write_file_bytes(ckpt, encode_checkpoint(res.params));

    const auto e = cli({"--quiet", "eval", "--checkpoint", ckpt.string(), "--manifest",
                        (ws.data / "manifest.csv").string(), "--splits", (splits / "split_0.json").string(), "--role",
                        "labeled"});
    REQUIRE_MESSAGE(e.code == kExitOk, e.err);
    const auto j = json::parse(e.out);
    CHECK(j["report"]["top1"] == 100.0);
    const auto again = cli({"--quiet", "eval", "--checkpoint", ckpt.string(), "--manifest",
                            (ws.data / "manifest.csv").string(), "--splits", (splits / "split_0.json").string(),
                            "--role", "labeled"});
    CHECK(again.out == e.out);
}

TEST_CASE("ssl input errors")
{
    const auto& ws = prepared();
    const auto manifest = (ws.data / "manifest.csv").string();
    const auto out = (ws.root / "bad").string();
    CHECK(cli(ws.base({"--out", out, "ssl", "--manifest", manifest, "--variant", "MF_XX"})).code == kExitUsage);
    CHECK(cli(ws.base({"--out", out, "ssl", "--manifest", manifest, "--labeled-fraction", "0"})).code == kExitUsage);
    const auto missing = cli(ws.base({"--out", out, "ssl", "--manifest", manifest, "--sidecars",
                                      (ws.root / "nowhere").string()}));
    CHECK(missing.code == kExitData);
    CHECK(missing.err.find("phasessl enhance") != std::string::npos);
}

TEST_CASE("thread count does not change results")
{
    const auto& ws = prepared();
    const auto manifest = (ws.data / "manifest.csv").string();
    const auto a = ws.root / "t1";
    const auto b = ws.root / "t3";
    setenv("PHASESSL_THREADS", "1", 1);
    REQUIRE(cli(ws.base({"--out", a.string(), "ssl", "--manifest", manifest})).code == kExitOk);
    setenv("PHASESSL_THREADS", "3", 1);
    REQUIRE(cli(ws.base({"--out", b.string(), "ssl", "--manifest", manifest})).code == kExitOk);
    setenv("PHASESSL_THREADS", "zero", 1);
    CHECK(cli(ws.base({"--out", b.string(), "ssl", "--manifest", manifest})).code == kExitUsage);
    unsetenv("PHASESSL_THREADS");
    CHECK(slurp(a / "aggregate.json") == slurp(b / "aggregate.json"));
}

TEST_CASE("global seed overrides the split seed")
{
    const auto& ws = prepared();
    const auto out = ws.root / "seeded";
    REQUIRE(cli(ws.base({"--seed", "9", "--out", out.string(), "split", "--manifest",
                         (ws.data / "manifest.csv").string()}))
                .code == kExitOk);
    const auto j = json::parse(slurp(out / "split_0.json"));
    CHECK(j["seed"] == 9);
    CHECK(j["provenance"]["seed"] == 9);
}
