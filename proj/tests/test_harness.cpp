#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fscil/checkpoint.hpp"
#include "fscil/errors.hpp"
#include "fscil/harness.hpp"
#include "helpers.hpp"

using namespace fscil;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() /
                     ("fscil-harness-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter++))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

// A deliberately tiny experiment that still exercises every stage.
ExperimentConfig micro_config(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.seed = 7;
    cfg.out_dir = out_dir;
    cfg.arch = "tiny-mlp";
    cfg.embed_dim = 4;
    cfg.dataset.classes = 6;
    cfg.dataset.per_class = 16;
    cfg.dataset.dim = 4;
    cfg.dataset.separation = 6.0;
    cfg.split.base_classes = 4;
    cfg.split.incremental_sessions = 1;
    cfg.split.way = 2;
    cfg.split.shot = 3;
    cfg.pretrain.epochs = 2;
    cfg.pretrain.batch_size = 8;
    cfg.pretrain.learning_rate = 0.05;
    cfg.transfer.epochs = 1;
    cfg.transfer.tasks_per_epoch = 3;
    cfg.transfer.learning_rate = 0.01;
    cfg.transfer.task.way = 2;
    cfg.transfer.task.shot = 2;
    cfg.transfer.task.query_per_class = 2;
    return config_from_json(config_to_json(cfg));  // resolve sub-seeds
}

}  // namespace

TEST_CASE("omitted sub-seeds derive from the run seed") {
    ExperimentConfig cfg = config_from_json(json{{"seed", 7}});
    CHECK(cfg.seed == 7);
    CHECK(cfg.pretrain.seed == mix_seed(7, "pretrain"));
    CHECK(cfg.transfer.seed == mix_seed(7, "transfer"));
    CHECK(cfg.split.seed == mix_seed(7, "split"));

    // explicit sub-seeds win
    ExperimentConfig pinned =
        config_from_json(json{{"seed", 7}, {"pretrain", {{"seed", 123}}}});
    CHECK(pinned.pretrain.seed == 123);
}

TEST_CASE("config json round-trip is lossless") {
    ExperimentConfig cfg = config_from_json(json{{"seed", 11}, {"arch", "small-cnn"}});
    cfg.transfer.lambda2 = 2.25;
    cfg.dataset.classes = 12;
    const json once = config_to_json(cfg);
    const json twice = config_to_json(config_from_json(once));
    CHECK(once == twice);
    CHECK(config_fingerprint(cfg) == config_fingerprint(config_from_json(once)));
}

TEST_CASE("a residual architecture pins the embedding width") {
    ExperimentConfig cfg =
        config_from_json(json{{"arch", "resnet18-like"}, {"embed_dim", 64}});
    CHECK(cfg.embed_dim == 512);
}

TEST_CASE("fingerprints move with semantic fields and only with them") {
    ExperimentConfig a = config_from_json(json{{"seed", 7}});
    ExperimentConfig b = config_from_json(json{{"seed", 7}});
    CHECK(config_fingerprint(a) == config_fingerprint(b));

    // spelling the derived sub-seeds out changes nothing
    ExperimentConfig spelled = config_from_json(
        json{{"seed", 7}, {"pretrain", {{"seed", mix_seed(7, "pretrain")}}}});
    CHECK(config_fingerprint(spelled) == config_fingerprint(a));

    auto perturbed = [](auto&& mutate) {
        ExperimentConfig cfg = config_from_json(json{{"seed", 7}});
        mutate(cfg);
        return config_fingerprint(cfg);
    };
    const std::string base_fp = config_fingerprint(a);
    CHECK(perturbed([](ExperimentConfig& c) { c.seed = 8; }) != base_fp);
    CHECK(perturbed([](ExperimentConfig& c) { c.transfer.lambda2 = 1.0; }) != base_fp);
    CHECK(perturbed([](ExperimentConfig& c) { c.dataset.classes = 21; }) != base_fp);
    CHECK(perturbed([](ExperimentConfig& c) { c.split.shot = 9; }) != base_fp);
    CHECK(perturbed([](ExperimentConfig& c) { c.arch = "small-cnn"; }) != base_fp);
}

TEST_CASE("bare axis names resolve to unique dotted paths") {
    const json j = config_to_json(config_from_json(json::object()));
    CHECK(resolve_axis(j, "lambda2") == "transfer.lambda2");
    CHECK(resolve_axis(j, "separation") == "dataset.separation");
    CHECK(resolve_axis(j, "transfer.task.way") == "transfer.task.way");
    CHECK_THROWS_AS(resolve_axis(j, "shot"), InvalidAxis);      // split + transfer.task
    CHECK_THROWS_AS(resolve_axis(j, "flux"), InvalidAxis);      // absent
    CHECK_THROWS_AS(resolve_axis(j, "transfer.flux"), InvalidAxis);
}

TEST_CASE("setting config paths parses JSON values and rejects unknown fields") {
    json j = config_to_json(config_from_json(json::object()));
    set_config_path(j, "transfer.lambda2", "3.5");
    CHECK(j["transfer"]["lambda2"] == 3.5);
    set_config_path(j, "arch", "small-cnn");
    CHECK(j["arch"] == "small-cnn");
    set_config_path(j, "eval.run_upper_bound", "false");
    CHECK(j["eval"]["run_upper_bound"] == false);
    CHECK_THROWS_AS(set_config_path(j, "transfer.gamma", "1"), InvalidAxis);
    CHECK_THROWS_AS(set_config_path(j, "nope.lambda2", "1"), InvalidAxis);
    CHECK(config_fingerprint(config_from_json(j)) !=
          config_fingerprint(config_from_json(json::object())));
}

TEST_CASE("labeled csv loading round-trips and validates") {
    TempDir dir;
    const fs::path csv = dir.path / "data.csv";
    std::ofstream(csv) << "3,0.5,1.5\n"
                       << "1,-2.0,0.25\n"
                       << "3,4.0,8.0\n";
    LabeledSet set = load_labeled_csv(csv.string(), {1, 1, 2});
    CHECK(set.size() == 3);
    CHECK(set.labels == std::vector<int>{3, 1, 3});
    CHECK(set.class_ids == std::vector<int>{3, 1});  // first appearance
    CHECK(set.inputs(0, 0) == 0.5);
    CHECK(set.inputs(1, 1) == 0.25);
    CHECK(set.inputs(2, 1) == 8.0);

    CHECK_THROWS_AS(load_labeled_csv((dir.path / "nope.csv").string(), {1, 1, 2}), IoError);
    const fs::path bad = dir.path / "bad.csv";
    std::ofstream(bad) << "1,0.5\n";  // one value, shape wants two
    CHECK_THROWS_AS(load_labeled_csv(bad.string(), {1, 1, 2}), ShapeMismatch);
    const fs::path empty = dir.path / "empty.csv";
    std::ofstream(empty) << "";
    CHECK_THROWS_AS(load_labeled_csv(empty.string(), {1, 1, 2}), EmptyInput);
}

TEST_CASE("stream building covers synthetic and csv datasets") {
    TempDir dir;
    ExperimentConfig cfg = micro_config((dir.path / "run").string());
    SessionStream synth = build_stream(cfg);
    CHECK(synth.num_sessions() == 2);
    CHECK(synth.base_class_count == 4);

    // csv route: split the same source half and half per class into files
    LabeledSet source =
        synth_blob_source(cfg.dataset.classes, cfg.dataset.per_class, cfg.dataset.dim,
                          cfg.dataset.separation, mix_seed(cfg.seed, "dataset"));
    const fs::path train_csv = dir.path / "train.csv";
    const fs::path test_csv = dir.path / "test.csv";
    std::ofstream tr(train_csv), te(test_csv);
    tr.precision(17);
    te.precision(17);
    for (int i = 0; i < source.size(); ++i) {
        std::ofstream& out = i % 2 == 0 ? tr : te;
        out << source.labels[static_cast<size_t>(i)];
        for (int k = 0; k < source.shape.size(); ++k) out << "," << source.inputs(i, k);
        out << "\n";
    }
    tr.close();
    te.close();

    ExperimentConfig csv_cfg = cfg;
    csv_cfg.dataset.kind = "csv";
    csv_cfg.dataset.train_csv = train_csv.string();
    csv_cfg.dataset.test_csv = test_csv.string();
    csv_cfg.dataset.csv_shape = {1, 2, 2};
    csv_cfg.split.seed = cfg.split.seed;
    SessionStream from_csv = build_stream(csv_cfg);
    CHECK(from_csv.num_sessions() == 2);
    CHECK(from_csv.base_class_count == 4);
    CHECK_NOTHROW(validate(from_csv));
}

TEST_CASE("experiment pipeline writes every artifact and refuses silent reruns") {
    TempDir dir;
    ExperimentConfig cfg = micro_config((dir.path / "run").string());
    RunManifest manifest = run_experiment(cfg);

    CHECK(manifest.fingerprint == config_fingerprint(cfg));
    REQUIRE(manifest.stages.size() == 3);
    for (const StageRecord& s : manifest.stages) CHECK(s.status == "done");

    const fs::path out(cfg.out_dir);
    for (const char* rel :
         {"config.json", "manifest.json", "checkpoints/base.ckpt", "checkpoints/comp.ckpt",
          "logs/pretrain.csv", "logs/transfer.csv", "results/results.csv",
          "results/summary.json", "results/table.txt"})
        CHECK(fs::exists(out / rel));

    // the summary is readable and coheres with its own reports
    EvalSummary summary = read_summary_file((out / "results/summary.json").string());
    REQUIRE(summary.reports.size() == 2);
    double mean = 0.0;
    for (const auto& r : summary.reports) mean += r.top1;
    mean /= 2.0;
    CHECK(summary.avg == doctest::Approx(mean).epsilon(1e-12));
    CHECK(summary.diff ==
          doctest::Approx(summary.reports.back().top1 - summary.upper_bound_last)
              .epsilon(1e-12));

    // saved checkpoints carry the config fingerprint
    CHECK(load_model((out / "checkpoints/base.ckpt").string()).meta.fingerprint ==
          manifest.fingerprint);

    // a completed run refuses to run again silently...
    CHECK_THROWS_AS(run_experiment(cfg), IoError);
    // ...but overwrite reruns from scratch
    RunOptions ow;
    ow.overwrite = true;
    RunManifest again = run_experiment(cfg, ow);
    CHECK(again.stages.size() == 3);

    // a different config refuses to reuse the directory
    ExperimentConfig other = cfg;
    other.transfer.lambda2 = 9.0;
    try {
        run_experiment(other);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("overwrite") != std::string::npos);
    }
}

TEST_CASE("a stopped run resumes to the same summary as an uninterrupted one") {
    TempDir dir;
    ExperimentConfig clean_cfg = micro_config((dir.path / "clean").string());
    RunManifest clean = run_experiment(clean_cfg);

    ExperimentConfig resumed_cfg = micro_config((dir.path / "resumed").string());
    RunOptions stop;
    stop.stop_after = "pretrain";
    RunManifest halted = run_experiment(resumed_cfg, stop);
    CHECK(halted.stages.size() == 2);
    CHECK(halted.stages[1].status == "stopped");
    CHECK(!fs::exists(fs::path(resumed_cfg.out_dir) / "checkpoints/comp.ckpt"));

    RunManifest finished = run_experiment(resumed_cfg);
    REQUIRE(finished.stages.size() == 3);

    EvalSummary a = read_summary_file(clean.summary_path);
    EvalSummary b = read_summary_file(finished.summary_path);
    REQUIRE(a.reports.size() == b.reports.size());
    CHECK(a.avg == b.avg);
    CHECK(a.diff == b.diff);
    for (size_t i = 0; i < a.reports.size(); ++i) {
        CHECK(a.reports[i].top1 == b.reports[i].top1);
        CHECK(a.reports[i].correct == b.reports[i].correct);
    }

    // the resumed run never repeated pretraining: checkpoints are bitwise equal
    std::ifstream ca(fs::path(clean_cfg.out_dir) / "checkpoints/base.ckpt",
                     std::ios::binary);
    std::ifstream cb(fs::path(resumed_cfg.out_dir) / "checkpoints/base.ckpt",
                     std::ios::binary);
    std::string bytes_a((std::istreambuf_iterator<char>(ca)), {});
    std::string bytes_b((std::istreambuf_iterator<char>(cb)), {});
    CHECK(bytes_a == bytes_b);
}

TEST_CASE("a failing stage is recorded in the manifest and rethrown") {
    TempDir dir;
    ExperimentConfig cfg = micro_config((dir.path / "run").string());
    cfg.transfer.task.way = 5;  // more ways than base classes: transfer must fail
    CHECK_THROWS_AS(run_experiment(cfg), StageFailed);

    const json manifest =
        json::parse(std::ifstream(fs::path(cfg.out_dir) / "manifest.json"));
    const std::string error = manifest.at("error").get<std::string>();
    CHECK(error.rfind("transfer:", 0) == 0);
}

TEST_CASE("results tables carry identical numbers in both formats") {
    EvalSummary s1;
    for (int i = 0; i < 3; ++i) {
        SessionReport r;
        r.session_id = i;
        r.top1 = 0.9 - 0.1 * i;
        s1.reports.push_back(r);
    }
    s1.avg = 0.8;
    s1.diff = 0.123456;
    s1.upper_bound_last = 0.576544;
    EvalSummary s2 = s1;
    s2.avg = 0.75;

    std::ostringstream csv, aligned;
    emit_results_table({s1, s2}, {"ours", "ablation"}, "csv", csv);
    emit_results_table({s1, s2}, {"ours", "ablation"}, "aligned", aligned);

    std::istringstream lines(csv.str());
    std::string header, row1, row2;
    std::getline(lines, header);
    std::getline(lines, row1);
    std::getline(lines, row2);
    CHECK(header == "method,s0,s1,s2,avg,diff");
    CHECK(row1 == "ours,90.00,80.00,70.00,80.00,12.35");
    CHECK(row2.rfind("ablation,", 0) == 0);

    // every csv number reappears verbatim in the aligned rendering
    for (const std::string& token :
         {"90.00", "80.00", "70.00", "12.35", "ours", "ablation"})
        CHECK(aligned.str().find(token) != std::string::npos);

    CHECK_THROWS_AS(emit_results_table({s1}, {"a", "b"}, "csv", csv), ShapeMismatch);
    CHECK_THROWS_AS(emit_results_table({s1}, {"a"}, "yaml", csv), InvalidConfig);
}

TEST_CASE("prototype and joint baselines run the same protocol") {
    TempDir dir;
    ExperimentConfig cfg = micro_config((dir.path / "run").string());
    EvalSummary ncm = run_ncm_baseline(cfg, (dir.path / "ncm").string());
    REQUIRE(ncm.reports.size() == 2);
    CHECK(ncm.reports[0].top1 >= 0.5);  // blobs are separable even for plain means
    CHECK(fs::exists(dir.path / "ncm" / "summary.json"));
    CHECK(fs::exists(dir.path / "ncm" / "results.csv"));
    CHECK(fs::exists(dir.path / "ncm" / "table.txt"));

    EvalSummary joint = run_joint_baseline(cfg, (dir.path / "joint").string());
    REQUIRE(joint.reports.size() == 2);
    CHECK(fs::exists(dir.path / "joint" / "summary.json"));
}

TEST_CASE("experiment validation rejects broken configurations") {
    ExperimentConfig cfg = micro_config("runs/x");
    CHECK_NOTHROW(validate(cfg));
    ExperimentConfig bad = cfg;
    bad.arch = "transformer";
    CHECK_THROWS_AS(validate(bad), InvalidConfig);
    bad = cfg;
    bad.eval.ensemble_rule = "max";
    CHECK_THROWS_AS(validate(bad), InvalidConfig);
    bad = cfg;
    bad.out_dir = "";
    CHECK_THROWS_AS(validate(bad), InvalidConfig);
    bad = cfg;
    bad.split.base_classes = 0;
    CHECK_THROWS_AS(validate(bad), InvalidConfig);
    bad = cfg;
    bad.dataset.kind = "parquet";
    CHECK_THROWS_AS(validate(bad), InvalidConfig);
}

TEST_CASE("sweeps fan out child runs and collate a comparison table") {
    TempDir dir;
    ExperimentConfig cfg = micro_config((dir.path / "sweep").string());
    cfg.eval.run_upper_bound = false;  // keep the fan-out cheap
    std::vector<RunManifest> runs = run_sweep(cfg, "lambda2", {json(1.0), json(2.0)});
    REQUIRE(runs.size() == 2);
    for (const RunManifest& m : runs) {
        CHECK(m.stages.back().status == "done");
        CHECK(fs::exists(fs::path(m.out_dir) / "results" / "summary.json"));
    }
    CHECK(runs[0].out_dir != runs[1].out_dir);
    CHECK(fs::exists(dir.path / "sweep" / "sweep-table.csv"));
    CHECK(fs::exists(dir.path / "sweep" / "sweep-table.txt"));

    const std::string table = [&] {
        std::ifstream in(dir.path / "sweep" / "sweep-table.csv");
        return std::string((std::istreambuf_iterator<char>(in)), {});
    }();
    CHECK(table.find("lambda2=") != std::string::npos);

    // a bare ambiguous axis is rejected before any run starts
    CHECK_THROWS_AS(run_sweep(cfg, "shot", {json(1)}), InvalidAxis);
}
