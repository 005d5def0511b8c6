#include "fscil/inference.hpp"

#include <unordered_set>

#include "fscil/errors.hpp"
#include "fscil/rng.hpp"

namespace fscil {
namespace {

// Tallies predictions into a report. `base_classes` identifies session-0
// class ids for the base/new breakdown.
SessionReport tally(int session_id, const LabeledSet& test, const Matrix& scores,
                    const std::vector<int>& registry,
                    const std::unordered_set<int>& base_classes) {
    SessionReport rep;
    rep.session_id = session_id;
    rep.total = test.size();
    for (int i = 0; i < test.size(); ++i) {
        const int truth = test.labels[static_cast<size_t>(i)];
        const int pred = registry[static_cast<size_t>(argmax_row(scores.row(i)))];
        const bool hit = pred == truth;
        rep.correct += hit;
        ++rep.per_class_total[truth];
        rep.per_class_correct[truth] += hit;
        if (base_classes.count(truth)) {
            ++rep.base_total;
            rep.base_correct += hit;
        } else {
            ++rep.new_total;
            rep.new_correct += hit;
        }
    }
    rep.top1 = rep.total > 0 ? static_cast<double>(rep.correct) / rep.total : 0.0;
    rep.top1_base =
        rep.base_total > 0 ? static_cast<double>(rep.base_correct) / rep.base_total : 0.0;
    rep.top1_new =
        rep.new_total > 0 ? static_cast<double>(rep.new_correct) / rep.new_total : 0.0;
    return rep;
}

void check_expanded(const SessionStream& stream, int session_id,
                    const std::vector<int>& registry) {
    if (session_id < 0 || session_id >= stream.num_sessions())
        throw IndexOutOfRange("evaluate_session: session " + std::to_string(session_id));
    if (registry != stream.classes_through(session_id))
        throw ClassifierNotExpanded(
            "evaluate_session: classifier registry does not cover session " +
            std::to_string(session_id));
}

std::unordered_set<int> base_class_set(const SessionStream& stream) {
    const auto& ids = stream.sessions.front().train.class_ids;
    return {ids.begin(), ids.end()};
}

}  // namespace

EnsembleRule ensemble_rule_from_string(const std::string& name) {
    if (name == "phi1-plus-phi2") return EnsembleRule::Phi1PlusPhi2;
    if (name == "training-weighted") return EnsembleRule::TrainingWeighted;
    throw InvalidConfig("unknown ensemble rule: " + name);
}

std::string ensemble_rule_to_string(EnsembleRule rule) {
    return rule == EnsembleRule::Phi1PlusPhi2 ? "phi1-plus-phi2" : "training-weighted";
}

ModelState expand_classifier(const ModelState& model, const LabeledSet& new_train) {
    if (new_train.empty()) throw EmptyTrainSet("expand_classifier: empty train set");
    std::unordered_set<int> seen(model.classifier.class_registry.begin(),
                                 model.classifier.class_registry.end());
    for (int c : new_train.class_ids)
        if (seen.count(c))
            throw DuplicateClass("expand_classifier: class " + std::to_string(c) +
                                 " already registered");

    const WeightMatrix rows =
        prototype(encode(model.encoder, new_train), new_train.labels, new_train.class_ids);

    ModelState out = model;
    out.classifier = model.classifier.num_classes() == 0
                         ? rows
                         : concat(model.classifier, rows);
    return out;
}

ScoreMatrix model_scores(const ModelState& model, const Matrix& inputs) {
    const Matrix emb = encode(model.encoder, inputs);
    switch (model.metric) {
        case MetricTag::Cosine: return cosine_scores(emb, model.classifier);
        case MetricTag::SqEuclid: return sqeuclid_scores(emb, model.classifier);
        default: throw InvalidConfig("model_scores: model metric must be a single metric");
    }
}

ScoreMatrix ensemble_scores(const Matrix& inputs, const ModelState& base,
                            const ModelState& comp, EnsembleRule rule) {
    if (base.classifier.class_registry != comp.classifier.class_registry)
        throw RegistryMismatch("ensemble_scores: classifier registries differ");
    ScoreMatrix s1 = model_scores(base, inputs);
    ScoreMatrix s2 = model_scores(comp, inputs);
    const double k = rule == EnsembleRule::TrainingWeighted
                         ? 1.0 / static_cast<double>(base.encoder.embed_dim)
                         : 1.0;
    ScoreMatrix out;
    out.metric = MetricTag::Ensemble;
    out.values = k * s1.values + s2.values;
    return out;
}

std::pair<int, ScoreMatrix> ensemble_predict(const Eigen::RowVectorXd& x,
                                             const ModelState& base,
                                             const ModelState& comp, EnsembleRule rule) {
    ScoreMatrix scores = ensemble_scores(x, base, comp, rule);
    const int idx = argmax_row(scores.values.row(0));
    return {base.classifier.class_registry[static_cast<size_t>(idx)], std::move(scores)};
}

SessionReport evaluate_session(const SessionStream& stream, int session_id,
                               const ModelState& base, const ModelState& comp,
                               EnsembleRule rule) {
    check_expanded(stream, session_id, base.classifier.class_registry);
    check_expanded(stream, session_id, comp.classifier.class_registry);
    const LabeledSet test = cumulative_test_set(stream, session_id);
    const ScoreMatrix scores = ensemble_scores(test.inputs, base, comp, rule);
    return tally(session_id, test, scores.values, base.classifier.class_registry,
                 base_class_set(stream));
}

SessionReport evaluate_session(const SessionStream& stream, int session_id,
                               const ModelState& model) {
    check_expanded(stream, session_id, model.classifier.class_registry);
    const LabeledSet test = cumulative_test_set(stream, session_id);
    const ScoreMatrix scores = model_scores(model, test.inputs);
    return tally(session_id, test, scores.values, model.classifier.class_registry,
                 base_class_set(stream));
}

EvalSummary summarize(const std::vector<SessionReport>& reports,
                      double upper_bound_last) {
    if (reports.empty()) throw EmptyReports("summarize: no reports");
    for (size_t i = 1; i < reports.size(); ++i)
        if (reports[i].session_id != reports[i - 1].session_id + 1)
            throw InvalidConfig("summarize: reports must cover consecutive sessions");

    EvalSummary summary;
    summary.reports = reports;
    double sum = 0.0;
    for (const auto& r : reports) sum += r.top1;
    summary.avg = sum / static_cast<double>(reports.size());
    summary.upper_bound_last = upper_bound_last;
    summary.diff = reports.back().top1 - upper_bound_last;
    return summary;
}

std::vector<double> run_joint_cnn_upper_bound(const SessionStream& stream, Arch arch,
                                              int embed_dim, const PretrainConfig& cfg) {
    std::vector<double> accuracies;
    LabeledSet joint_train;
    for (int sid = 0; sid < stream.num_sessions(); ++sid) {
        joint_train = sid == 0 ? stream.sessions[0].train
                               : concat(joint_train, stream.sessions[static_cast<size_t>(sid)].train);

        PretrainConfig session_cfg = cfg;
        session_cfg.seed = mix_seed(cfg.seed, "joint-cnn-" + std::to_string(sid));
        EncoderState enc = init_encoder(arch, joint_train.shape, embed_dim,
                                        mix_seed(session_cfg.seed, "encoder"));
        PretrainResult trained = pretrain_base(joint_train, std::move(enc), session_cfg);

        ModelState model{std::move(trained.encoder), std::move(trained.classifier),
                         MetricTag::Cosine};
        accuracies.push_back(evaluate_session(stream, sid, model).top1);
    }
    return accuracies;
}

}  // namespace fscil
