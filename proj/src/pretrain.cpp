#include "fscil/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fscil/errors.hpp"
#include "fscil/rng.hpp"
#include "fscil/sgd.hpp"

namespace fscil {

void validate(const PretrainConfig& cfg) {
    if (cfg.epochs < 0) throw InvalidConfig("pretrain: epochs must be >= 0");
    if (cfg.batch_size <= 0) throw InvalidConfig("pretrain: batch_size must be > 0");
    if (cfg.learning_rate <= 0.0) throw InvalidConfig("pretrain: learning_rate must be > 0");
    if (cfg.weight_decay < 0.0) throw InvalidConfig("pretrain: weight_decay must be >= 0");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
        throw InvalidConfig("pretrain: momentum must be in [0, 1)");
    if (cfg.lr_decay_factor <= 0.0 || cfg.lr_decay_factor > 1.0)
        throw InvalidConfig("pretrain: lr_decay_factor must be in (0, 1]");
    if (cfg.scale_s <= 0.0) throw InvalidConfig("pretrain: scale_s must be > 0");
}

PretrainResult pretrain_base(const LabeledSet& train, EncoderState enc,
                             const PretrainConfig& cfg) {
    validate(cfg);
    if (train.empty()) throw EmptyTrainSet("pretrain: empty train set");
    validate(train);
    if (train.shape.size() != enc.input_shape.size())
        throw ShapeMismatch("pretrain: train shape != encoder input shape");

    const int n = train.size();
    const int num_classes = train.num_classes();
    const std::vector<int> label_idx = labels_as_indices(train.labels, train.class_ids);

    // Free classifier matrix, one row per base class.
    Rng init_rng = make_rng(cfg.seed, "pretrain-classifier-init");
    std::normal_distribution<double> gauss(0.0, std::sqrt(1.0 / enc.embed_dim));
    Matrix w1(num_classes, enc.embed_dim);
    for (Eigen::Index i = 0; i < w1.rows(); ++i)
        for (Eigen::Index j = 0; j < w1.cols(); ++j) w1(i, j) = gauss(init_rng);

    Sgd opt(SgdConfig{cfg.learning_rate, cfg.momentum, cfg.weight_decay});
    Rng shuffle_rng = make_rng(cfg.seed, "pretrain-shuffle");
    Rng augment_rng = make_rng(cfg.seed, "pretrain-augment");
    const bool augment_on = cfg.augmentation.resized_crop ||
                            cfg.augmentation.horizontal_flip ||
                            cfg.augmentation.color_jitter;

    PretrainResult result;
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = stepped_lr(cfg.learning_rate, cfg.lr_decay_factor,
                                     cfg.lr_decay_every, epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        int correct = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bs = std::min(cfg.batch_size, n - start);
            Matrix batch(bs, train.inputs.cols());
            std::vector<int> batch_labels(static_cast<size_t>(bs));
            for (int i = 0; i < bs; ++i) {
                const int r = order[static_cast<size_t>(start + i)];
                batch.row(i) = train.inputs.row(r);
                batch_labels[static_cast<size_t>(i)] = label_idx[static_cast<size_t>(r)];
            }
            if (augment_on)
                batch = augment_batch(batch, train.shape, cfg.augmentation, augment_rng);

            ad::Tape tape(true);
            ParamVars vars = bind_params(tape, enc, true);
            ad::Var w1_var = tape.leaf(w1);
            ad::Var emb = encoder_forward(tape, enc, vars, tape.constant(std::move(batch)),
                                          /*training=*/true);
            ad::Var cosine = tape.matmul_nt(tape.row_l2_normalize(emb),
                                            tape.row_l2_normalize(w1_var));
            ad::Var logits = tape.scale(cosine, cfg.scale_s);
            ad::Var loss = tape.softmax_cross_entropy(logits, batch_labels);

            const double loss_value = tape.value(loss)(0, 0);
            if (!std::isfinite(loss_value))
                throw NonFiniteLoss("pretrain: non-finite loss at epoch " +
                                    std::to_string(epoch) + " batch " +
                                    std::to_string(start / cfg.batch_size));
            tape.backward(loss);

            for (auto& [name, theta] : enc.params)
                opt.step(name, theta, tape.grad(vars.at(name)), lr);
            opt.step("classifier", w1, tape.grad(w1_var), lr);

            loss_sum += loss_value * bs;
            const Matrix& lg = tape.value(logits);
            for (int i = 0; i < bs; ++i)
                if (argmax_row(lg.row(i)) == batch_labels[static_cast<size_t>(i)]) ++correct;
        }

        result.log.push_back(EpochLogRow{epoch, loss_sum / n, lr,
                                         static_cast<double>(correct) / n});
    }

    result.encoder = std::move(enc);
    result.classifier = WeightMatrix{std::move(w1), train.class_ids};
    return result;
}

WeightMatrix reinit_classifier_with_prototypes(const EncoderState& enc,
                                               const LabeledSet& train) {
    if (train.empty()) throw EmptyTrainSet("prototype reinit: empty train set");
    return prototype(encode(enc, train), train.labels, train.class_ids);
}

}  // namespace fscil
