#pragma once

#include <map>
#include <string>
#include <vector>

#include "fscil/model.hpp"
#include "fscil/pretrain.hpp"
#include "fscil/stream.hpp"

namespace fscil {

// How the two metrics combine at prediction time. Phi1PlusPhi2 sums the raw
// relations; TrainingWeighted divides the cosine relation by the embedding
// dimension first, matching the training-time global rule.
enum class EnsembleRule { Phi1PlusPhi2, TrainingWeighted };

EnsembleRule ensemble_rule_from_string(const std::string& name);
std::string ensemble_rule_to_string(EnsembleRule rule);

struct SessionReport {
    int session_id = 0;
    double top1 = 0.0;       // correct / total
    double top1_base = 0.0;  // over samples of session-0 classes
    double top1_new = 0.0;   // over samples of later classes; 0 when none seen
    int total = 0;
    int correct = 0;
    int base_total = 0;
    int base_correct = 0;
    int new_total = 0;
    int new_correct = 0;
    std::map<int, int> per_class_total;
    std::map<int, int> per_class_correct;
};

struct EvalSummary {
    std::vector<SessionReport> reports;
    double avg = 0.0;               // mean top1 across sessions
    double diff = 0.0;              // last top1 - upper_bound_last
    double upper_bound_last = 0.0;
};

// Appends prototype rows for the new classes; existing rows are untouched.
ModelState expand_classifier(const ModelState& model, const LabeledSet& new_train);

// Scores a batch under one model's own metric.
ScoreMatrix model_scores(const ModelState& model, const Matrix& inputs);

// Summed dual-metric scores; registries must match exactly.
ScoreMatrix ensemble_scores(const Matrix& inputs, const ModelState& base,
                            const ModelState& comp,
                            EnsembleRule rule = EnsembleRule::Phi1PlusPhi2);

// Single-sample prediction: class id plus the score row.
std::pair<int, ScoreMatrix> ensemble_predict(const Eigen::RowVectorXd& x,
                                             const ModelState& base,
                                             const ModelState& comp,
                                             EnsembleRule rule = EnsembleRule::Phi1PlusPhi2);

// Top-1 accuracy over the cumulative test set through session_id, with
// base/new breakdown and per-class counts.
SessionReport evaluate_session(const SessionStream& stream, int session_id,
                               const ModelState& base, const ModelState& comp,
                               EnsembleRule rule = EnsembleRule::Phi1PlusPhi2);

// Same protocol for a single model under its own metric.
SessionReport evaluate_session(const SessionStream& stream, int session_id,
                               const ModelState& model);

// avg = mean of top1; diff = last top1 - upper_bound_last. Reports must be
// consecutive sessions starting anywhere.
EvalSummary summarize(const std::vector<SessionReport>& reports,
                      double upper_bound_last);

// Upper-bound baseline: for each session, retrain from scratch on the union
// of train sets 0..i with the pretraining recipe and evaluate on the
// cumulative test set. Returns per-session top-1 accuracies.
std::vector<double> run_joint_cnn_upper_bound(const SessionStream& stream, Arch arch,
                                              int embed_dim, const PretrainConfig& cfg);

}  // namespace fscil
