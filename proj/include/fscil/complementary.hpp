#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fscil/model.hpp"
#include "fscil/resa.hpp"

namespace fscil {

// Episodic training of the complementary encoder on pseudo incremental
// tasks, with the base model frozen throughout.
struct ComplementaryConfig {
    int epochs = 80;
    int tasks_per_epoch = 200;
    double learning_rate = 0.03;
    double weight_decay = 1e-4;
    double momentum = 0.9;
    double lr_decay_factor = 0.1;
    int lr_decay_every = 20;  // epochs; <= 0 disables decay
    double scale_s = 16.0;
    double lambda1 = 1.5;  // global loss weight
    double lambda2 = 2.0;  // local loss weight
    PseudoTaskOptions task;
    // Weight on the cosine relation inside the global logits: "1/d" shrinks
    // it by the embedding dimension (the training-time rule), "1" sums raw.
    std::string global_r1_scale = "1/d";
    // theta2 initialization: "warm" copies the pretrained base encoder,
    // "random" starts from a fresh seeded init.
    std::string init = "warm";
    std::uint64_t seed = 0;
};

void validate(const ComplementaryConfig& cfg);

// Every intermediate of one task's forward pass, for diagnostics and tests.
struct TaskForwardTrace {
    WeightMatrix w1_pn, w2_pn;  // prototypes of S under each encoder
    WeightMatrix w1_pg, w2_pg;  // pseudo-old ++ pseudo-new
    WeightMatrix w2_sa;         // prototypes of S^a
    WeightMatrix w2_l;          // pseudo-new ++ synthesized
    ScoreMatrix r1, r2, r_local;
    ProbMatrix p_global, p_local;
    std::vector<int> y_global;  // Q labels against w1_pg registry
    std::vector<int> y_local;   // Q ++ Q^a labels against w2_l registry
    double l_global = 0.0;
    double l_local = 0.0;
    double l_total = 0.0;
};

// Global pseudo task: Q scored against pseudo-old + pseudo-new classes by
// both metrics. Fills the global half of the trace.
void global_forward(const PseudoIncrementalTask& task, const ModelState& base,
                    const ModelState& comp, double s, const std::string& r1_scale,
                    TaskForwardTrace& trace);

double global_loss(const ProbMatrix& p_global, const std::vector<int>& y_global);

// Local pseudo task: Q ++ Q^a scored against pseudo-new + synthesized
// classes by the complementary metric only. Fills the local half.
void local_forward(const PseudoIncrementalTask& task, const ModelState& comp,
                   double s, TaskForwardTrace& trace);

double local_loss(const ProbMatrix& p_local, const std::vector<int>& y_local);

double total_loss(double l_global, double l_local, double lambda1, double lambda2);

// Both halves plus the weighted total.
TaskForwardTrace forward_task(const PseudoIncrementalTask& task, const ModelState& base,
                              const ModelState& comp, const ComplementaryConfig& cfg);

struct TaskLogRow {
    int epoch = 0;
    int task = 0;
    double l_global = 0.0;
    double l_local = 0.0;
    double l_total = 0.0;
    int rotation_angle = 0;
};

// One optimizer step's losses and analytic gradients with respect to theta2.
// The base model contributes constants only. comp_enc batch-norm buffers
// update as a side effect (training-mode forward).
struct TaskStepResult {
    double l_global = 0.0;
    double l_local = 0.0;
    double l_total = 0.0;
    std::map<std::string, Matrix> grads;
};

TaskStepResult task_loss_and_grads(const PseudoIncrementalTask& task,
                                   const ModelState& base, EncoderState& comp_enc,
                                   const ComplementaryConfig& cfg);

struct ComplementaryResult {
    ModelState comp;  // trained encoder, classifier = full base prototypes
    std::vector<TaskLogRow> log;
};

// Runs cfg.epochs x cfg.tasks_per_epoch optimizer steps on theta2. `base` is
// read-only; its parameters and classifier are untouched by construction.
// Pseudo-old prototypes are refreshed from the current theta2 at the start of
// every epoch.
ComplementaryResult train_complementary(const ModelState& base, ModelState comp,
                                        const LabeledSet& base_train,
                                        const ComplementaryConfig& cfg);

}  // namespace fscil
