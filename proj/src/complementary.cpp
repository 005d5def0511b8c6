#include "fscil/complementary.hpp"

#include <cmath>
#include <string>

#include "fscil/errors.hpp"
#include "fscil/sgd.hpp"

namespace fscil {
namespace {

double r1_scale_factor(const std::string& rule, int embed_dim) {
    if (rule == "1/d") return 1.0 / static_cast<double>(embed_dim);
    if (rule == "1") return 1.0;
    throw InvalidConfig("global_r1_scale must be \"1/d\" or \"1\", got " + rule);
}

Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeMismatch("vstack: cols differ");
    Matrix out(a.rows() + b.rows(), a.cols());
    out.topRows(a.rows()) = a;
    out.bottomRows(b.rows()) = b;
    return out;
}

}  // namespace

void validate(const ComplementaryConfig& cfg) {
    if (cfg.epochs < 0) throw InvalidConfig("complementary: epochs must be >= 0");
    if (cfg.tasks_per_epoch <= 0)
        throw InvalidConfig("complementary: tasks_per_epoch must be > 0");
    if (cfg.learning_rate <= 0.0)
        throw InvalidConfig("complementary: learning_rate must be > 0");
    if (cfg.weight_decay < 0.0)
        throw InvalidConfig("complementary: weight_decay must be >= 0");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
        throw InvalidConfig("complementary: momentum must be in [0, 1)");
    if (cfg.lr_decay_factor <= 0.0 || cfg.lr_decay_factor > 1.0)
        throw InvalidConfig("complementary: lr_decay_factor must be in (0, 1]");
    if (cfg.scale_s <= 0.0) throw InvalidConfig("complementary: scale_s must be > 0");
    if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0)
        throw InvalidConfig("complementary: lambda1/lambda2 must be >= 0");
    if (cfg.lambda1 == 0.0 && cfg.lambda2 == 0.0)
        throw InvalidConfig("complementary: lambda1 and lambda2 cannot both be 0");
    r1_scale_factor(cfg.global_r1_scale, 1);  // syntax check only
    if (cfg.init != "warm" && cfg.init != "random")
        throw InvalidConfig("complementary: init must be \"warm\" or \"random\"");
    validate(cfg.task);
}

void global_forward(const PseudoIncrementalTask& task, const ModelState& base,
                    const ModelState& comp, double s, const std::string& r1_scale,
                    TaskForwardTrace& trace) {
    const LabeledSet& S = task.episode.support;
    const LabeledSet& Q = task.episode.query;

    trace.w1_pn = prototype(encode(base.encoder, S), S.labels, S.class_ids);
    trace.w2_pn = prototype(encode(comp.encoder, S), S.labels, S.class_ids);
    trace.w1_pg = concat(task.w1_po, trace.w1_pn);
    trace.w2_pg = concat(task.w2_po, trace.w2_pn);
    if (trace.w1_pg.class_registry != trace.w2_pg.class_registry)
        throw RegistryMismatch("global_forward: W1_pg and W2_pg class orders differ");

    trace.r1 = cosine_scores(encode(base.encoder, Q), trace.w1_pg);
    trace.r2 = sqeuclid_scores(encode(comp.encoder, Q), trace.w2_pg);

    const double k = r1_scale_factor(r1_scale, base.encoder.embed_dim);
    ScoreMatrix combined;
    combined.metric = MetricTag::Ensemble;
    combined.values = k * trace.r1.values + trace.r2.values;
    trace.p_global = scaled_softmax(combined, s);
    trace.y_global = labels_as_indices(Q.labels, trace.w1_pg.class_registry);
}

double global_loss(const ProbMatrix& p_global, const std::vector<int>& y_global) {
    return cross_entropy(p_global, y_global);
}

void local_forward(const PseudoIncrementalTask& task, const ModelState& comp,
                   double s, TaskForwardTrace& trace) {
    const LabeledSet& S = task.episode.support;
    const LabeledSet& Q = task.episode.query;
    const LabeledSet& Sa = task.support_aug;
    const LabeledSet& Qa = task.query_aug;

    trace.w2_pn = prototype(encode(comp.encoder, S), S.labels, S.class_ids);
    trace.w2_sa = prototype(encode(comp.encoder, Sa), Sa.labels, Sa.class_ids);
    trace.w2_l = concat(trace.w2_pn, trace.w2_sa);

    const Matrix queries = vstack(Q.inputs, Qa.inputs);
    trace.r_local = sqeuclid_scores(encode(comp.encoder, queries), trace.w2_l);
    trace.p_local = scaled_softmax(trace.r_local, s);

    std::vector<int> all_labels = Q.labels;
    all_labels.insert(all_labels.end(), Qa.labels.begin(), Qa.labels.end());
    trace.y_local = labels_as_indices(all_labels, trace.w2_l.class_registry);
}

double local_loss(const ProbMatrix& p_local, const std::vector<int>& y_local) {
    return cross_entropy(p_local, y_local);
}

double total_loss(double l_global, double l_local, double lambda1, double lambda2) {
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw InvalidConfig("total_loss: lambdas must be >= 0");
    return lambda1 * l_global + lambda2 * l_local;
}

TaskForwardTrace forward_task(const PseudoIncrementalTask& task, const ModelState& base,
                              const ModelState& comp, const ComplementaryConfig& cfg) {
    TaskForwardTrace trace;
    global_forward(task, base, comp, cfg.scale_s, cfg.global_r1_scale, trace);
    trace.l_global = global_loss(trace.p_global, trace.y_global);
    local_forward(task, comp, cfg.scale_s, trace);
    trace.l_local = local_loss(trace.p_local, trace.y_local);
    trace.l_total = total_loss(trace.l_global, trace.l_local, cfg.lambda1, cfg.lambda2);
    return trace;
}

TaskStepResult task_loss_and_grads(const PseudoIncrementalTask& task,
                                   const ModelState& base, EncoderState& comp_enc,
                                   const ComplementaryConfig& cfg) {
    const LabeledSet& S = task.episode.support;
    const LabeledSet& Q = task.episode.query;
    const LabeledSet& Sa = task.support_aug;
    const LabeledSet& Qa = task.query_aug;

    // Base-side quantities carry no gradient; compute them plain and inject
    // as tape constants.
    const WeightMatrix w1_pn = prototype(encode(base.encoder, S), S.labels, S.class_ids);
    const WeightMatrix w1_pg = concat(task.w1_po, w1_pn);
    const ScoreMatrix r1 = cosine_scores(encode(base.encoder, Q), w1_pg);
    const double k = r1_scale_factor(cfg.global_r1_scale, base.encoder.embed_dim);
    const std::vector<int> y_global = labels_as_indices(Q.labels, w1_pg.class_registry);

    ad::Tape tape(true);
    ParamVars vars = bind_params(tape, comp_enc, true);

    ad::Var f2s = encoder_forward(tape, comp_enc, vars, tape.constant(S.inputs), true);
    ad::Var w2_pn = tape.group_mean_rows(
        f2s, labels_as_indices(S.labels, S.class_ids), S.num_classes());
    ad::Var w2_pg = tape.concat_rows(tape.constant(task.w2_po.rows), w2_pn);
    ad::Var f2q = encoder_forward(tape, comp_enc, vars, tape.constant(Q.inputs), true);
    ad::Var r2 = tape.sqeuclid_scores(f2q, w2_pg);
    ad::Var logits_g =
        tape.scale(tape.add(tape.constant(k * r1.values), r2), cfg.scale_s);
    ad::Var lg = tape.softmax_cross_entropy(logits_g, y_global);

    ad::Var f2sa = encoder_forward(tape, comp_enc, vars, tape.constant(Sa.inputs), true);
    ad::Var w2_sa = tape.group_mean_rows(
        f2sa, labels_as_indices(Sa.labels, Sa.class_ids), Sa.num_classes());
    ad::Var w2_l = tape.concat_rows(w2_pn, w2_sa);
    ad::Var f2qa = encoder_forward(tape, comp_enc, vars, tape.constant(Qa.inputs), true);
    ad::Var f2_all = tape.concat_rows(f2q, f2qa);
    ad::Var r_local = tape.sqeuclid_scores(f2_all, w2_l);
    std::vector<int> local_registry = S.class_ids;
    local_registry.insert(local_registry.end(), Sa.class_ids.begin(), Sa.class_ids.end());
    std::vector<int> all_labels = Q.labels;
    all_labels.insert(all_labels.end(), Qa.labels.begin(), Qa.labels.end());
    const std::vector<int> y_local = labels_as_indices(all_labels, local_registry);
    ad::Var ll = tape.softmax_cross_entropy(tape.scale(r_local, cfg.scale_s), y_local);

    ad::Var total = tape.add(tape.scale(lg, cfg.lambda1), tape.scale(ll, cfg.lambda2));

    TaskStepResult res;
    res.l_global = tape.value(lg)(0, 0);
    res.l_local = tape.value(ll)(0, 0);
    res.l_total = tape.value(total)(0, 0);
    tape.backward(total);
    for (auto& [name, theta] : comp_enc.params) {
        (void)theta;
        res.grads[name] = tape.grad(vars.at(name));
    }
    return res;
}

ComplementaryResult train_complementary(const ModelState& base, ModelState comp,
                                        const LabeledSet& base_train,
                                        const ComplementaryConfig& cfg) {
    validate(cfg);
    if (base_train.empty()) throw EmptyTrainSet("complementary: empty base train set");
    if (base.classifier.class_registry != base_train.class_ids)
        throw RegistryMismatch("complementary: base classifier registry != base classes");

    ComplementaryResult result;
    if (cfg.epochs == 0) {
        result.comp = std::move(comp);
        return result;
    }

    Sgd opt(SgdConfig{cfg.learning_rate, cfg.momentum, cfg.weight_decay});
    Rng task_rng = make_rng(cfg.seed, "complementary-tasks");

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = stepped_lr(cfg.learning_rate, cfg.lr_decay_factor,
                                     cfg.lr_decay_every, epoch);
        // Epoch-start refresh of the full prototype matrices used for
        // pseudo-old rows. W1 is frozen; W2 tracks the current theta2.
        const WeightMatrix w2_full = compute_model_weights(comp.encoder, base_train);

        for (int t = 0; t < cfg.tasks_per_epoch; ++t) {
            PseudoIncrementalTask task =
                build_pseudo_task(base_train, base.classifier, w2_full, cfg.task, task_rng);
            TaskStepResult step = task_loss_and_grads(task, base, comp.encoder, cfg);
            if (!std::isfinite(step.l_total))
                throw NonFiniteLoss("complementary: non-finite loss at epoch " +
                                    std::to_string(epoch) + " task " + std::to_string(t));

            for (auto& [name, theta] : comp.encoder.params)
                opt.step(name, theta, step.grads.at(name), lr);

            result.log.push_back(TaskLogRow{epoch, t, step.l_global, step.l_local,
                                            step.l_total, task.rotation_angle});
        }
    }

    comp.classifier = compute_model_weights(comp.encoder, base_train);
    comp.metric = MetricTag::SqEuclid;
    result.comp = std::move(comp);
    return result;
}

}  // namespace fscil
