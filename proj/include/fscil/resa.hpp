#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fscil/encoder.hpp"
#include "fscil/metrics.hpp"
#include "fscil/rng.hpp"

namespace fscil {

// One sampled few-shot task over base-session classes. Support and query
// share exactly pseudo_new_class_ids and are sample-disjoint.
struct Episode {
    LabeledSet support;                   // shot per class
    LabeledSet query;                     // query_per_class per class
    std::vector<int> pseudo_new_class_ids;
};

void validate(const Episode& ep, int shot, int query_per_class);

// Episode plus synthesized classes and the pseudo-old prototype rows. The
// synthesized class ids never collide with base class ids.
struct PseudoIncrementalTask {
    Episode episode;
    LabeledSet support_aug;  // S^a
    LabeledSet query_aug;    // Q^a
    WeightMatrix w1_po;
    WeightMatrix w2_po;
    // Rotation angle for single-rotation tasks; 0 when the task synthesized
    // classes some other way (all three rotations, mixup, cutmix).
    int rotation_angle = 0;
};

// Checks the task invariants against the full base registry.
void validate(const PseudoIncrementalTask& task, const std::vector<int>& base_registry);

struct PseudoTaskOptions {
    int way = 5;
    int shot = 20;
    int query_per_class = 15;
    int rotations_per_task = 1;      // 1: one drawn angle; 3: all of 90/180/270
    std::string augment = "rotate";  // rotate | mixup | cutmix
};

void validate(const PseudoTaskOptions& opt);

// Per-class mean embeddings over the base train set; the weight-computing
// rule shared by both models.
WeightMatrix compute_model_weights(const EncoderState& enc, const LabeledSet& base_train);

// Uniformly samples `way` classes, then shot + query_per_class samples per
// class without replacement.
Episode sample_episode(const LabeledSet& base_train, int way, int shot,
                       int query_per_class, Rng& rng);

// Drops the pseudo-new rows from both weight matrices, preserving the order
// of the remaining rows.
std::pair<WeightMatrix, WeightMatrix> select_pseudo_old_weights(
    const WeightMatrix& w1, const WeightMatrix& w2, const std::vector<int>& pseudo_new);

// Rotates S and Q by `angle`, relabeling class i of the episode to
// label_offset + i (one shared injective map).
std::pair<LabeledSet, LabeledSet> augment_rotate(const Episode& ep, int angle,
                                                 int label_offset);

// Samples one episode, synthesizes S^a/Q^a per opt.augment, and selects the
// pseudo-old weights. w1 and w2 must carry the identical full base registry.
PseudoIncrementalTask build_pseudo_task(const LabeledSet& base_train,
                                        const WeightMatrix& w1, const WeightMatrix& w2,
                                        const PseudoTaskOptions& opt, Rng& rng);

}  // namespace fscil
