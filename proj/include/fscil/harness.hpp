#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fscil/complementary.hpp"
#include "fscil/inference.hpp"
#include "fscil/pretrain.hpp"
#include "fscil/stream.hpp"

namespace fscil {

// Where samples come from. "synthetic" draws Gaussian blob classes from the
// run seed; "csv" reads label-plus-pixels rows from train/test files.
struct DatasetSpec {
    std::string kind = "synthetic";
    int classes = 20;
    int per_class = 60;
    int dim = 64;  // perfect square; samples reshape to (1, sqrt, sqrt)
    double separation = 4.0;
    double test_fraction = 0.5;  // synthetic holdout per class
    std::string train_csv;
    std::string test_csv;
    ImageShape csv_shape;
    std::string split_file;  // optional fixed class-to-session assignment
};

struct EvalOptions {
    std::string ensemble_rule = "phi1-plus-phi2";
    // Retrains the joint upper bound per session (slow on real configs).
    bool run_upper_bound = true;
    // Used as the Diff reference when run_upper_bound is off.
    double upper_bound_last = 0.0;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    SplitConfig split;
    std::string arch = "tiny-mlp";
    int embed_dim = 64;
    PretrainConfig pretrain;
    ComplementaryConfig transfer;
    EvalOptions eval;
    std::string out_dir = "runs/default";
    std::uint64_t seed = 7;
};

void validate(const ExperimentConfig& cfg);

// JSON mapping. Parsing resolves omitted sub-seeds from the run seed, so a
// resolved config round-trips losslessly.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

// Sets an existing dotted path (e.g. "transfer.lambda2") in a config tree;
// `value` is parsed as JSON when possible, else taken as a string. A missing
// path is InvalidAxis.
void set_config_path(nlohmann::json& j, const std::string& dotted_path,
                     const std::string& value);

// Resolves a bare field name ("shot") to its unique dotted path; ambiguous or
// absent names are InvalidAxis.
std::string resolve_axis(const nlohmann::json& j, const std::string& axis);

// FNV-1a over the canonical serialization; changes iff a semantic field does.
std::string config_fingerprint(const ExperimentConfig& cfg);

// Rows "label,v0,v1,..." with shape.size() values per row.
LabeledSet load_labeled_csv(const std::string& path, const ImageShape& shape);

// Builds the session stream described by the dataset and split sections.
SessionStream build_stream(const ExperimentConfig& cfg);

struct StageRecord {
    std::string name;
    std::string status;  // done | stopped | failed
    std::string artifact;
};

struct RunManifest {
    std::string fingerprint;
    std::string out_dir;
    std::vector<StageRecord> stages;
    std::string results_csv;
    std::string summary_path;
    std::string table_path;
    std::string error;  // "<stage>: <what>" on failure
};

struct RunOptions {
    bool overwrite = false;
    // Stop after this stage ("pretrain" or "transfer") to exercise resume.
    std::string stop_after;
};

// Full pipeline: pretrain -> prototype reinit -> complementary transfer ->
// per-session expansion and evaluation -> summary. Stages are checkpointed
// under cfg.out_dir and skipped on re-run when their artifacts exist; a
// complete run refuses to re-run without overwrite.
RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

// One child run per value, written under <out_dir>/<axis>=<value>, plus a
// collated comparison table in the parent directory.
std::vector<RunManifest> run_sweep(const ExperimentConfig& base, const std::string& axis,
                                   const std::vector<nlohmann::json>& values,
                                   const RunOptions& opts = {});

// One row per run: per-session accuracy columns plus Avg and Diff, all in
// percent. format is "csv" or "aligned"; both encode the same numbers.
void emit_results_table(const std::vector<EvalSummary>& summaries,
                        const std::vector<std::string>& names,
                        const std::string& format, std::ostream& out);

EvalSummary read_summary_file(const std::string& path);
void write_summary_file(const std::string& path, const EvalSummary& summary);

// Prototype-only baseline: pretrained encoder, prototype classifier, cosine
// metric, no complementary model. Artifacts under <out_dir>.
EvalSummary run_ncm_baseline(const ExperimentConfig& cfg, const std::string& out_dir);

// Joint upper-bound baseline; returns per-session accuracies and writes the
// same artifact set.
EvalSummary run_joint_baseline(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace fscil
