#include "fscil/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "fscil/checkpoint.hpp"
#include "fscil/errors.hpp"
#include "fscil/rng.hpp"

namespace fscil {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
    return buf;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidConfig("config field \"" + key + "\": " + e.what());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("bad JSON in " + path.string() + ": " + e.what());
    }
}

// ---- config <-> json ------------------------------------------------------

json dataset_to_json(const DatasetSpec& d) {
    return json{{"kind", d.kind},
                {"classes", d.classes},
                {"per_class", d.per_class},
                {"dim", d.dim},
                {"separation", d.separation},
                {"test_fraction", d.test_fraction},
                {"train_csv", d.train_csv},
                {"test_csv", d.test_csv},
                {"csv_shape", {d.csv_shape.channels, d.csv_shape.height, d.csv_shape.width}},
                {"split_file", d.split_file}};
}

DatasetSpec dataset_from_json(const json& j) {
    DatasetSpec d;
    d.kind = get_or<std::string>(j, "kind", d.kind);
    d.classes = get_or(j, "classes", d.classes);
    d.per_class = get_or(j, "per_class", d.per_class);
    d.dim = get_or(j, "dim", d.dim);
    d.separation = get_or(j, "separation", d.separation);
    d.test_fraction = get_or(j, "test_fraction", d.test_fraction);
    d.train_csv = get_or<std::string>(j, "train_csv", d.train_csv);
    d.test_csv = get_or<std::string>(j, "test_csv", d.test_csv);
    if (j.contains("csv_shape")) {
        const auto& s = j.at("csv_shape");
        d.csv_shape = ImageShape{s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>()};
    }
    d.split_file = get_or<std::string>(j, "split_file", d.split_file);
    return d;
}

json pretrain_to_json(const PretrainConfig& p) {
    return json{{"epochs", p.epochs},
                {"batch_size", p.batch_size},
                {"learning_rate", p.learning_rate},
                {"weight_decay", p.weight_decay},
                {"momentum", p.momentum},
                {"lr_decay_factor", p.lr_decay_factor},
                {"lr_decay_every", p.lr_decay_every},
                {"scale_s", p.scale_s},
                {"augmentation", policy_names(p.augmentation)},
                {"seed", p.seed}};
}

PretrainConfig pretrain_from_json(const json& j, std::uint64_t run_seed) {
    PretrainConfig p;
    p.epochs = get_or(j, "epochs", p.epochs);
    p.batch_size = get_or(j, "batch_size", p.batch_size);
    p.learning_rate = get_or(j, "learning_rate", p.learning_rate);
    p.weight_decay = get_or(j, "weight_decay", p.weight_decay);
    p.momentum = get_or(j, "momentum", p.momentum);
    p.lr_decay_factor = get_or(j, "lr_decay_factor", p.lr_decay_factor);
    p.lr_decay_every = get_or(j, "lr_decay_every", p.lr_decay_every);
    p.scale_s = get_or(j, "scale_s", p.scale_s);
    if (j.contains("augmentation"))
        p.augmentation = policy_from_names(j.at("augmentation").get<std::vector<std::string>>());
    p.seed = get_or(j, "seed", mix_seed(run_seed, "pretrain"));
    return p;
}

json transfer_to_json(const ComplementaryConfig& c) {
    return json{{"epochs", c.epochs},
                {"tasks_per_epoch", c.tasks_per_epoch},
                {"learning_rate", c.learning_rate},
                {"weight_decay", c.weight_decay},
                {"momentum", c.momentum},
                {"lr_decay_factor", c.lr_decay_factor},
                {"lr_decay_every", c.lr_decay_every},
                {"scale_s", c.scale_s},
                {"lambda1", c.lambda1},
                {"lambda2", c.lambda2},
                {"task",
                 {{"way", c.task.way},
                  {"shot", c.task.shot},
                  {"query_per_class", c.task.query_per_class},
                  {"rotations_per_task", c.task.rotations_per_task},
                  {"augment", c.task.augment}}},
                {"global_r1_scale", c.global_r1_scale},
                {"init", c.init},
                {"seed", c.seed}};
}

ComplementaryConfig transfer_from_json(const json& j, std::uint64_t run_seed) {
    ComplementaryConfig c;
    c.epochs = get_or(j, "epochs", c.epochs);
    c.tasks_per_epoch = get_or(j, "tasks_per_epoch", c.tasks_per_epoch);
    c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
    c.weight_decay = get_or(j, "weight_decay", c.weight_decay);
    c.momentum = get_or(j, "momentum", c.momentum);
    c.lr_decay_factor = get_or(j, "lr_decay_factor", c.lr_decay_factor);
    c.lr_decay_every = get_or(j, "lr_decay_every", c.lr_decay_every);
    c.scale_s = get_or(j, "scale_s", c.scale_s);
    c.lambda1 = get_or(j, "lambda1", c.lambda1);
    c.lambda2 = get_or(j, "lambda2", c.lambda2);
    if (j.contains("task")) {
        const auto& t = j.at("task");
        c.task.way = get_or(t, "way", c.task.way);
        c.task.shot = get_or(t, "shot", c.task.shot);
        c.task.query_per_class = get_or(t, "query_per_class", c.task.query_per_class);
        c.task.rotations_per_task = get_or(t, "rotations_per_task", c.task.rotations_per_task);
        c.task.augment = get_or<std::string>(t, "augment", c.task.augment);
    }
    c.global_r1_scale = get_or<std::string>(j, "global_r1_scale", c.global_r1_scale);
    c.init = get_or<std::string>(j, "init", c.init);
    c.seed = get_or(j, "seed", mix_seed(run_seed, "transfer"));
    return c;
}

json split_to_json(const SplitConfig& s) {
    return json{{"base_classes", s.base_classes},
                {"incremental_sessions", s.incremental_sessions},
                {"way", s.way},
                {"shot", s.shot},
                {"seed", s.seed}};
}

SplitConfig split_from_json(const json& j, std::uint64_t run_seed) {
    SplitConfig s;
    s.base_classes = get_or(j, "base_classes", s.base_classes);
    s.incremental_sessions = get_or(j, "incremental_sessions", s.incremental_sessions);
    s.way = get_or(j, "way", s.way);
    s.shot = get_or(j, "shot", s.shot);
    s.seed = get_or(j, "seed", mix_seed(run_seed, "split"));
    return s;
}

json eval_to_json(const EvalOptions& e) {
    return json{{"ensemble_rule", e.ensemble_rule},
                {"run_upper_bound", e.run_upper_bound},
                {"upper_bound_last", e.upper_bound_last}};
}

EvalOptions eval_from_json(const json& j) {
    EvalOptions e;
    e.ensemble_rule = get_or<std::string>(j, "ensemble_rule", e.ensemble_rule);
    e.run_upper_bound = get_or(j, "run_upper_bound", e.run_upper_bound);
    e.upper_bound_last = get_or(j, "upper_bound_last", e.upper_bound_last);
    return e;
}

// ---- manifest io ----------------------------------------------------------

json manifest_to_json(const RunManifest& m) {
    json stages = json::array();
    for (const auto& s : m.stages)
        stages.push_back({{"name", s.name}, {"status", s.status}, {"artifact", s.artifact}});
    return json{{"fingerprint", m.fingerprint}, {"out_dir", m.out_dir},
                {"stages", stages},             {"results_csv", m.results_csv},
                {"summary", m.summary_path},    {"table", m.table_path},
                {"error", m.error}};
}

void write_manifest(const fs::path& path, const RunManifest& m) {
    write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

struct ExistingRun {
    bool valid = false;
    std::string fingerprint;
    std::set<std::string> done;
};

ExistingRun read_existing_run(const fs::path& manifest_path) {
    ExistingRun run;
    if (!fs::exists(manifest_path)) return run;
    const json j = read_json_file(manifest_path);
    run.valid = true;
    run.fingerprint = get_or<std::string>(j, "fingerprint", "");
    for (const auto& s : j.value("stages", json::array()))
        if (s.value("status", "") == "done") run.done.insert(s.value("name", ""));
    return run;
}

// ---- stage helpers --------------------------------------------------------

void write_pretrain_log(const fs::path& path, const std::vector<EpochLogRow>& log) {
    std::ostringstream out;
    out << "epoch,loss,lr,accuracy\n";
    for (const auto& r : log)
        out << r.epoch << ',' << fmt17(r.loss) << ',' << fmt17(r.lr) << ','
            << fmt17(r.accuracy) << '\n';
    write_text_file(path, out.str());
}

void write_transfer_log(const fs::path& path, const std::vector<TaskLogRow>& log) {
    std::ostringstream out;
    out << "epoch,task,l_global,l_local,l_total,rotation_angle\n";
    for (const auto& r : log)
        out << r.epoch << ',' << r.task << ',' << fmt17(r.l_global) << ','
            << fmt17(r.l_local) << ',' << fmt17(r.l_total) << ',' << r.rotation_angle
            << '\n';
    write_text_file(path, out.str());
}

void write_results_csv(const fs::path& path, const EvalSummary& summary) {
    std::ostringstream out;
    out << "session_id,top1,top1_base,top1_new\n";
    for (const auto& r : summary.reports)
        out << r.session_id << ',' << fmt17(r.top1) << ',' << fmt17(r.top1_base) << ','
            << fmt17(r.top1_new) << '\n';
    out << "summary," << fmt17(summary.avg) << ',' << fmt17(summary.diff) << ','
        << fmt17(summary.upper_bound_last) << '\n';
    write_text_file(path, out.str());
}

json report_to_json(const SessionReport& r) {
    json pc_total = json::object(), pc_correct = json::object();
    for (const auto& [c, n] : r.per_class_total) pc_total[std::to_string(c)] = n;
    for (const auto& [c, n] : r.per_class_correct) pc_correct[std::to_string(c)] = n;
    return json{{"session_id", r.session_id},
                {"top1", r.top1},
                {"top1_base", r.top1_base},
                {"top1_new", r.top1_new},
                {"total", r.total},
                {"correct", r.correct},
                {"base_total", r.base_total},
                {"base_correct", r.base_correct},
                {"new_total", r.new_total},
                {"new_correct", r.new_correct},
                {"per_class_total", pc_total},
                {"per_class_correct", pc_correct}};
}

SessionReport report_from_json(const json& j) {
    SessionReport r;
    r.session_id = j.at("session_id").get<int>();
    r.top1 = j.at("top1").get<double>();
    r.top1_base = j.at("top1_base").get<double>();
    r.top1_new = j.at("top1_new").get<double>();
    r.total = get_or(j, "total", 0);
    r.correct = get_or(j, "correct", 0);
    r.base_total = get_or(j, "base_total", 0);
    r.base_correct = get_or(j, "base_correct", 0);
    r.new_total = get_or(j, "new_total", 0);
    r.new_correct = get_or(j, "new_correct", 0);
    // items() must run on a named object: the proxy would outlive a temporary
    const json pct = j.value("per_class_total", json::object());
    for (const auto& [k, v] : pct.items()) r.per_class_total[std::stoi(k)] = v.get<int>();
    const json pcc = j.value("per_class_correct", json::object());
    for (const auto& [k, v] : pcc.items()) r.per_class_correct[std::stoi(k)] = v.get<int>();
    return r;
}

// Shared tail of every evaluation path: summarize, write artifacts.
EvalSummary finish_eval(const std::vector<SessionReport>& reports, double ub_last,
                        const fs::path& results_dir, const std::string& name) {
    const EvalSummary summary = summarize(reports, ub_last);
    fs::create_directories(results_dir);
    write_results_csv(results_dir / "results.csv", summary);
    write_summary_file((results_dir / "summary.json").string(), summary);
    std::ostringstream table;
    emit_results_table({summary}, {name}, "aligned", table);
    write_text_file(results_dir / "table.txt", table.str());
    return summary;
}

}  // namespace

// ---- public config api ----------------------------------------------------

void validate(const ExperimentConfig& cfg) {
    if (cfg.dataset.kind != "synthetic" && cfg.dataset.kind != "csv")
        throw InvalidConfig("dataset.kind must be \"synthetic\" or \"csv\"");
    if (cfg.dataset.kind == "synthetic") {
        if (cfg.dataset.classes <= 0 || cfg.dataset.per_class <= 0 || cfg.dataset.dim <= 0)
            throw InvalidConfig("synthetic dataset: classes/per_class/dim must be > 0");
        const int root = static_cast<int>(std::lround(std::sqrt(cfg.dataset.dim)));
        if (root * root != cfg.dataset.dim)
            throw InvalidConfig("synthetic dataset: dim must be a perfect square");
        if (cfg.dataset.test_fraction <= 0.0 || cfg.dataset.test_fraction >= 1.0)
            throw InvalidConfig("synthetic dataset: test_fraction must be in (0, 1)");
        if (!cfg.dataset.split_file.empty())
            throw InvalidConfig("split_file applies to csv datasets only");
    } else {
        if (cfg.dataset.train_csv.empty() || cfg.dataset.test_csv.empty())
            throw InvalidConfig("csv dataset: train_csv and test_csv are required");
        if (cfg.dataset.csv_shape.size() <= 0)
            throw InvalidConfig("csv dataset: csv_shape must be set");
    }
    if (cfg.split.base_classes <= 0)
        throw InvalidConfig("split.base_classes must be > 0");
    if (cfg.split.incremental_sessions < 0)
        throw InvalidConfig("split.incremental_sessions must be >= 0");
    if (cfg.split.incremental_sessions > 0 && (cfg.split.way <= 0 || cfg.split.shot <= 0))
        throw InvalidConfig("split.way and split.shot must be > 0");
    if (cfg.embed_dim <= 0) throw InvalidConfig("embed_dim must be > 0");
    arch_from_string(cfg.arch);
    ensemble_rule_from_string(cfg.eval.ensemble_rule);
    if (cfg.out_dir.empty()) throw InvalidConfig("out_dir must be set");
    validate(cfg.pretrain);
    validate(cfg.transfer);
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.seed = get_or(j, "seed", cfg.seed);
    cfg.out_dir = get_or<std::string>(j, "out_dir", cfg.out_dir);
    cfg.arch = get_or<std::string>(j, "arch", cfg.arch);
    cfg.embed_dim = get_or(j, "embed_dim", cfg.embed_dim);
    cfg.dataset = dataset_from_json(j.value("dataset", json::object()));
    cfg.split = split_from_json(j.value("split", json::object()), cfg.seed);
    cfg.pretrain = pretrain_from_json(j.value("pretrain", json::object()), cfg.seed);
    cfg.transfer = transfer_from_json(j.value("transfer", json::object()), cfg.seed);
    cfg.eval = eval_from_json(j.value("eval", json::object()));
    if (cfg.arch == "resnet18-like") cfg.embed_dim = 512;
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    return json{{"seed", cfg.seed},
                {"out_dir", cfg.out_dir},
                {"arch", cfg.arch},
                {"embed_dim", cfg.embed_dim},
                {"dataset", dataset_to_json(cfg.dataset)},
                {"split", split_to_json(cfg.split)},
                {"pretrain", pretrain_to_json(cfg.pretrain)},
                {"transfer", transfer_to_json(cfg.transfer)},
                {"eval", eval_to_json(cfg.eval)}};
}

ExperimentConfig load_config_file(const std::string& path) {
    return config_from_json(read_json_file(path));
}

void set_config_path(json& j, const std::string& dotted_path, const std::string& value) {
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // bare strings stay strings
    }

    json* node = &j;
    std::istringstream keys(dotted_path);
    std::string key;
    std::vector<std::string> parts;
    while (std::getline(keys, key, '.')) parts.push_back(key);
    if (parts.empty()) throw InvalidAxis("empty config path");
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i]))
            throw InvalidAxis("no such config field: " + dotted_path);
        node = &(*node)[parts[i]];
    }
    if (!node->contains(parts.back()))
        throw InvalidAxis("no such config field: " + dotted_path);
    (*node)[parts.back()] = parsed;
}

std::string resolve_axis(const json& j, const std::string& axis) {
    if (axis.find('.') != std::string::npos) {
        // Dotted paths are taken literally, but must exist.
        const json* node = &j;
        std::istringstream keys(axis);
        std::string key;
        while (std::getline(keys, key, '.')) {
            if (!node->is_object() || !node->contains(key))
                throw InvalidAxis("no such config field: " + axis);
            node = &node->at(key);
        }
        return axis;
    }
    std::vector<std::string> matches;
    std::function<void(const json&, const std::string&)> walk =
        [&](const json& node, const std::string& prefix) {
            if (!node.is_object()) return;
            for (const auto& [k, v] : node.items()) {
                const std::string path = prefix.empty() ? k : prefix + "." + k;
                if (k == axis) matches.push_back(path);
                walk(v, path);
            }
        };
    walk(j, "");
    if (matches.empty()) throw InvalidAxis("no such config field: " + axis);
    if (matches.size() > 1) {
        std::string all;
        for (const auto& m : matches) all += " " + m;
        throw InvalidAxis("ambiguous config field \"" + axis + "\":" + all);
    }
    return matches.front();
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
    // Identify the experiment, not its storage location: two runs of the same
    // config in different directories must produce identical artifacts.
    json j = config_to_json(cfg);
    j.erase("out_dir");
    const std::string canon = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

LabeledSet load_labeled_csv(const std::string& path, const ImageShape& shape) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read csv: " + path);
    std::vector<int> labels;
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) throw IoError("bad csv row in " + path);
        labels.push_back(std::stoi(cell));
        int count = 0;
        while (std::getline(row, cell, ',')) {
            values.push_back(std::stod(cell));
            ++count;
        }
        if (count != shape.size())
            throw ShapeMismatch("csv row has " + std::to_string(count) + " values, want " +
                                std::to_string(shape.size()));
    }
    if (labels.empty()) throw EmptyInput("csv has no rows: " + path);

    Matrix inputs(static_cast<Eigen::Index>(labels.size()), shape.size());
    for (size_t i = 0; i < labels.size(); ++i)
        for (int k = 0; k < shape.size(); ++k)
            inputs(static_cast<Eigen::Index>(i), k) =
                values[i * static_cast<size_t>(shape.size()) + static_cast<size_t>(k)];
    return make_labeled_set(std::move(inputs), std::move(labels), shape);
}

SessionStream build_stream(const ExperimentConfig& cfg) {
    if (cfg.dataset.kind == "synthetic") {
        const LabeledSet source =
            synth_blob_source(cfg.dataset.classes, cfg.dataset.per_class, cfg.dataset.dim,
                              cfg.dataset.separation, mix_seed(cfg.seed, "dataset"));
        return build_session_stream(source, cfg.split, cfg.dataset.test_fraction);
    }
    const LabeledSet train = load_labeled_csv(cfg.dataset.train_csv, cfg.dataset.csv_shape);
    const LabeledSet test = load_labeled_csv(cfg.dataset.test_csv, cfg.dataset.csv_shape);
    if (!cfg.dataset.split_file.empty())
        return load_session_stream_from_split_file(cfg.dataset.split_file, train, test,
                                                   cfg.split);
    return build_session_stream_presplit(train, test, cfg.split);
}

// ---- pipeline --------------------------------------------------------------

RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    validate(cfg);
    if (!opts.stop_after.empty() && opts.stop_after != "pretrain" &&
        opts.stop_after != "transfer")
        throw InvalidConfig("stop_after must be \"pretrain\" or \"transfer\"");

    const fs::path out(cfg.out_dir);
    const fs::path manifest_path = out / "manifest.json";
    const std::string fp = config_fingerprint(cfg);

    if (opts.overwrite && fs::exists(out)) fs::remove_all(out);

    ExistingRun existing = read_existing_run(manifest_path);
    if (existing.valid) {
        if (existing.fingerprint != fp)
            throw IoError("run directory holds a different config (fingerprint " +
                          existing.fingerprint + " != " + fp + "); pass overwrite");
        if (existing.done.count("eval") && opts.stop_after.empty())
            throw IoError("run already complete in " + cfg.out_dir + "; pass overwrite");
    }

    fs::create_directories(out / "checkpoints");
    fs::create_directories(out / "logs");
    fs::create_directories(out / "results");
    write_text_file(out / "config.json", config_to_json(cfg).dump(2) + "\n");

    RunManifest manifest;
    manifest.fingerprint = fp;
    manifest.out_dir = cfg.out_dir;

    auto fail = [&](const std::string& stage, const std::exception& e) {
        manifest.error = stage + ": " + e.what();
        manifest.stages.push_back(StageRecord{stage, "failed", ""});
        write_manifest(manifest_path, manifest);
    };

    const SessionStream stream = build_stream(cfg);
    const LabeledSet& base_train = stream.sessions.front().train;
    const Arch arch = arch_from_string(cfg.arch);

    // -- pretrain
    const fs::path base_ck = out / "checkpoints" / "base.ckpt";
    ModelState base;
    try {
        if (existing.done.count("pretrain") && fs::exists(base_ck)) {
            base = load_model(base_ck.string()).model;
        } else {
            EncoderState enc = init_encoder(arch, base_train.shape, cfg.embed_dim,
                                            mix_seed(cfg.pretrain.seed, "encoder-init"));
            PretrainResult trained = pretrain_base(base_train, std::move(enc), cfg.pretrain);
            write_pretrain_log(out / "logs" / "pretrain.csv", trained.log);
            base.encoder = std::move(trained.encoder);
            base.classifier = reinit_classifier_with_prototypes(base.encoder, base_train);
            base.metric = MetricTag::Cosine;
            save_model_atomic(base_ck.string(), base, CheckpointMeta{fp});
        }
    } catch (const std::exception& e) {
        fail("pretrain", e);
        throw StageFailed(manifest.error);
    }
    manifest.stages.push_back(StageRecord{"pretrain", "done", base_ck.string()});
    write_manifest(manifest_path, manifest);
    if (opts.stop_after == "pretrain") {
        manifest.stages.push_back(StageRecord{"transfer", "stopped", ""});
        write_manifest(manifest_path, manifest);
        return manifest;
    }

    // -- transfer
    const fs::path comp_ck = out / "checkpoints" / "comp.ckpt";
    ModelState comp;
    try {
        if (existing.done.count("transfer") && fs::exists(comp_ck)) {
            comp = load_model(comp_ck.string()).model;
        } else {
            comp.metric = MetricTag::SqEuclid;
            comp.encoder = cfg.transfer.init == "warm"
                               ? base.encoder
                               : init_encoder(arch, base_train.shape, cfg.embed_dim,
                                              mix_seed(cfg.transfer.seed, "comp-init"));
            ComplementaryResult trained =
                train_complementary(base, std::move(comp), base_train, cfg.transfer);
            write_transfer_log(out / "logs" / "transfer.csv", trained.log);
            comp = std::move(trained.comp);
            if (comp.classifier.num_classes() == 0)
                comp.classifier = compute_model_weights(comp.encoder, base_train);
            save_model_atomic(comp_ck.string(), comp, CheckpointMeta{fp});
        }
    } catch (const std::exception& e) {
        fail("transfer", e);
        throw StageFailed(manifest.error);
    }
    manifest.stages.push_back(StageRecord{"transfer", "done", comp_ck.string()});
    write_manifest(manifest_path, manifest);
    if (opts.stop_after == "transfer") {
        manifest.stages.push_back(StageRecord{"eval", "stopped", ""});
        write_manifest(manifest_path, manifest);
        return manifest;
    }

    // -- eval
    try {
        const EnsembleRule rule = ensemble_rule_from_string(cfg.eval.ensemble_rule);
        ModelState base_eval = base;
        ModelState comp_eval = comp;
        std::vector<SessionReport> reports;
        for (int sid = 0; sid < stream.num_sessions(); ++sid) {
            if (sid > 0) {
                const LabeledSet& novel = stream.sessions[static_cast<size_t>(sid)].train;
                base_eval = expand_classifier(base_eval, novel);
                comp_eval = expand_classifier(comp_eval, novel);
            }
            reports.push_back(evaluate_session(stream, sid, base_eval, comp_eval, rule));
        }
        const double ub_last =
            cfg.eval.run_upper_bound
                ? run_joint_cnn_upper_bound(stream, arch, cfg.embed_dim, cfg.pretrain).back()
                : cfg.eval.upper_bound_last;
        finish_eval(reports, ub_last, out / "results", "run");
    } catch (const std::exception& e) {
        fail("eval", e);
        throw StageFailed(manifest.error);
    }
    manifest.results_csv = (out / "results" / "results.csv").string();
    manifest.summary_path = (out / "results" / "summary.json").string();
    manifest.table_path = (out / "results" / "table.txt").string();
    manifest.stages.push_back(
        StageRecord{"eval", "done", manifest.summary_path});
    write_manifest(manifest_path, manifest);
    return manifest;
}

std::vector<RunManifest> run_sweep(const ExperimentConfig& base, const std::string& axis,
                                   const std::vector<nlohmann::json>& values,
                                   const RunOptions& opts) {
    if (values.empty()) throw InvalidConfig("sweep: no values");
    json resolved = config_to_json(base);
    const std::string path = resolve_axis(resolved, axis);

    std::vector<RunManifest> manifests;
    std::vector<EvalSummary> summaries;
    std::vector<std::string> names;
    for (const auto& v : values) {
        json child_json = resolved;
        set_config_path(child_json, path, v.dump());
        ExperimentConfig child;
        try {
            child = config_from_json(child_json);
        } catch (const std::exception& e) {
            throw InvalidAxis("value " + v.dump() + " for axis " + path + ": " + e.what());
        }
        const std::string label = axis + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
        child.out_dir = base.out_dir + "/" + label;
        manifests.push_back(run_experiment(child, opts));
        summaries.push_back(read_summary_file(manifests.back().summary_path));
        names.push_back(label);
    }

    std::ostringstream csv, aligned;
    emit_results_table(summaries, names, "csv", csv);
    emit_results_table(summaries, names, "aligned", aligned);
    write_text_file(fs::path(base.out_dir) / "sweep-table.csv", csv.str());
    write_text_file(fs::path(base.out_dir) / "sweep-table.txt", aligned.str());
    return manifests;
}

void emit_results_table(const std::vector<EvalSummary>& summaries,
                        const std::vector<std::string>& names,
                        const std::string& format, std::ostream& out) {
    if (summaries.empty()) throw EmptyReports("emit_results_table: no summaries");
    if (summaries.size() != names.size())
        throw ShapeMismatch("emit_results_table: names/summaries size mismatch");
    const size_t sessions = summaries.front().reports.size();
    for (const auto& s : summaries)
        if (s.reports.size() != sessions)
            throw InconsistentSessionCounts("emit_results_table: differing session counts");

    std::vector<std::string> header{"method"};
    for (size_t i = 0; i < sessions; ++i)
        header.push_back("s" + std::to_string(summaries.front().reports[i].session_id));
    header.push_back("avg");
    header.push_back("diff");

    std::vector<std::vector<std::string>> rows;
    for (size_t r = 0; r < summaries.size(); ++r) {
        std::vector<std::string> row{names[r]};
        for (const auto& rep : summaries[r].reports) row.push_back(fmt_pct(rep.top1));
        row.push_back(fmt_pct(summaries[r].avg));
        row.push_back(fmt_pct(summaries[r].diff));
        rows.push_back(std::move(row));
    }

    if (format == "csv") {
        for (size_t i = 0; i < header.size(); ++i)
            out << header[i] << (i + 1 < header.size() ? "," : "\n");
        for (const auto& row : rows)
            for (size_t i = 0; i < row.size(); ++i)
                out << row[i] << (i + 1 < row.size() ? "," : "\n");
        return;
    }
    if (format != "aligned")
        throw InvalidConfig("emit_results_table: format must be csv or aligned");

    std::vector<size_t> widths(header.size());
    for (size_t i = 0; i < header.size(); ++i) widths[i] = header[i].size();
    for (const auto& row : rows)
        for (size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    auto emit_row = [&](const std::vector<std::string>& row) {
        for (size_t i = 0; i < row.size(); ++i) {
            out << row[i] << std::string(widths[i] - row[i].size(), ' ');
            out << (i + 1 < row.size() ? "  " : "");
        }
        out << '\n';
    };
    emit_row(header);
    for (const auto& row : rows) emit_row(row);
}

EvalSummary read_summary_file(const std::string& path) {
    const json j = read_json_file(path);
    EvalSummary summary;
    for (const auto& r : j.at("reports")) summary.reports.push_back(report_from_json(r));
    summary.avg = j.at("avg").get<double>();
    summary.diff = j.at("diff").get<double>();
    summary.upper_bound_last = j.at("upper_bound_last").get<double>();
    return summary;
}

void write_summary_file(const std::string& path, const EvalSummary& summary) {
    json reports = json::array();
    for (const auto& r : summary.reports) reports.push_back(report_to_json(r));
    const json j{{"reports", reports},
                 {"avg", summary.avg},
                 {"diff", summary.diff},
                 {"upper_bound_last", summary.upper_bound_last}};
    write_text_file(path, j.dump(2) + "\n");
}

EvalSummary run_ncm_baseline(const ExperimentConfig& cfg, const std::string& out_dir) {
    validate(cfg);
    const SessionStream stream = build_stream(cfg);
    const LabeledSet& base_train = stream.sessions.front().train;
    const Arch arch = arch_from_string(cfg.arch);

    EncoderState enc = init_encoder(arch, base_train.shape, cfg.embed_dim,
                                    mix_seed(cfg.pretrain.seed, "encoder-init"));
    PretrainResult trained = pretrain_base(base_train, std::move(enc), cfg.pretrain);
    ModelState model;
    model.encoder = std::move(trained.encoder);
    model.classifier = reinit_classifier_with_prototypes(model.encoder, base_train);
    model.metric = MetricTag::Cosine;

    std::vector<SessionReport> reports;
    for (int sid = 0; sid < stream.num_sessions(); ++sid) {
        if (sid > 0)
            model = expand_classifier(model, stream.sessions[static_cast<size_t>(sid)].train);
        reports.push_back(evaluate_session(stream, sid, model));
    }
    const double ub_last =
        cfg.eval.run_upper_bound
            ? run_joint_cnn_upper_bound(stream, arch, cfg.embed_dim, cfg.pretrain).back()
            : cfg.eval.upper_bound_last;
    return finish_eval(reports, ub_last, fs::path(out_dir), "ncm");
}

EvalSummary run_joint_baseline(const ExperimentConfig& cfg, const std::string& out_dir) {
    validate(cfg);
    const SessionStream stream = build_stream(cfg);
    const std::vector<double> accs = run_joint_cnn_upper_bound(
        stream, arch_from_string(cfg.arch), cfg.embed_dim, cfg.pretrain);

    std::vector<SessionReport> reports;
    for (size_t i = 0; i < accs.size(); ++i) {
        SessionReport r;
        r.session_id = static_cast<int>(i);
        r.top1 = accs[i];
        reports.push_back(r);
    }
    return finish_eval(reports, accs.back(), fs::path(out_dir), "joint-cnn");
}

}  // namespace fscil
