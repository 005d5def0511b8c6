#pragma once

#include <cstdint>
#include <vector>

#include "fscil/augment.hpp"
#include "fscil/encoder.hpp"
#include "fscil/metrics.hpp"

namespace fscil {

// Base-session training: encoder plus a free classifier matrix, scored by
// scaled cosine similarity and optimized with cross-entropy under SGD.
struct PretrainConfig {
    int epochs = 20;
    int batch_size = 64;
    double learning_rate = 0.1;
    double weight_decay = 5e-4;
    double momentum = 0.9;
    double lr_decay_factor = 0.1;
    int lr_decay_every = 40;  // epochs; <= 0 disables decay
    double scale_s = 16.0;
    AugmentationPolicy augmentation;
    std::uint64_t seed = 0;
};

void validate(const PretrainConfig& cfg);

struct EpochLogRow {
    int epoch = 0;
    double loss = 0.0;      // epoch mean per-sample cross-entropy
    double lr = 0.0;
    double accuracy = 0.0;  // train top-1 over the epoch
};

struct PretrainResult {
    EncoderState encoder;
    WeightMatrix classifier;  // learned rows, one per base class
    std::vector<EpochLogRow> log;
};

// Trains encoder and classifier jointly on the base session. Deterministic
// given cfg.seed. Throws NonFiniteLoss with an epoch/batch tag if the loss
// leaves the reals.
PretrainResult pretrain_base(const LabeledSet& train, EncoderState enc,
                             const PretrainConfig& cfg);

// Replaces the learned classifier by per-class mean embeddings, computed on
// clean (never augmented) inputs. Registry order follows train.class_ids.
WeightMatrix reinit_classifier_with_prototypes(const EncoderState& enc,
                                               const LabeledSet& train);

}  // namespace fscil
