#include "fscil/resa.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "fscil/augment.hpp"
#include "fscil/errors.hpp"

namespace fscil {
namespace {

// Relabels a set's classes through map[old registry index] = new id.
LabeledSet relabel(const LabeledSet& set, const std::vector<int>& new_ids) {
    if (new_ids.size() != set.class_ids.size())
        throw ShapeMismatch("relabel: id list size != registry size");
    auto idx = index_by_class(set.class_ids);
    LabeledSet out = set;
    out.class_ids = new_ids;
    for (auto& y : out.labels) y = new_ids[static_cast<size_t>(idx.at(y))];
    return out;
}

std::vector<int> fresh_ids(int count, int label_offset) {
    std::vector<int> ids(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) ids[static_cast<size_t>(i)] = label_offset + i;
    return ids;
}

// Pairs class i with class (i+1) mod way; each sample mixes with a uniformly
// drawn sample of the partner class.
LabeledSet mix_against_next_class(const LabeledSet& set, int label_offset,
                                  const std::string& mode, Rng& rng) {
    const int way = set.num_classes();
    if (way < 2) throw InsufficientClasses("mixup/cutmix: need at least 2 classes");
    std::uniform_real_distribution<double> lam(0.3, 0.7);

    Matrix partners(set.inputs.rows(), set.inputs.cols());
    const auto idx = index_by_class(set.class_ids);
    for (Eigen::Index i = 0; i < set.inputs.rows(); ++i) {
        const int ci = idx.at(set.labels[static_cast<size_t>(i)]);
        const int partner_class = set.class_ids[static_cast<size_t>((ci + 1) % way)];
        const auto rows = rows_of_class(set, partner_class);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(rows.size()) - 1);
        partners.row(i) = set.inputs.row(rows[static_cast<size_t>(pick(rng))]);
    }

    LabeledSet out = relabel(set, fresh_ids(way, label_offset));
    if (mode == "mixup")
        out.inputs = mixup_rows(set.inputs, partners, lam(rng));
    else
        out.inputs = cutmix_rows(set.inputs, partners, set.shape, rng);
    return out;
}

}  // namespace

void validate(const Episode& ep, int shot, int query_per_class) {
    validate(ep.support);
    validate(ep.query);
    if (ep.support.class_ids != ep.pseudo_new_class_ids ||
        ep.query.class_ids != ep.pseudo_new_class_ids)
        throw RegistryMismatch("episode: S/Q registries != pseudo_new_class_ids");
    for (int c : ep.pseudo_new_class_ids) {
        if (static_cast<int>(rows_of_class(ep.support, c).size()) != shot)
            throw InsufficientSamples("episode: class " + std::to_string(c) +
                                      " support count != shot");
        if (static_cast<int>(rows_of_class(ep.query, c).size()) != query_per_class)
            throw InsufficientSamples("episode: class " + std::to_string(c) +
                                      " query count != query_per_class");
    }
}

void validate(const PseudoIncrementalTask& task, const std::vector<int>& base_registry) {
    const auto& ep = task.episode;
    std::unordered_set<int> base(base_registry.begin(), base_registry.end());
    std::unordered_set<int> pseudo_new(ep.pseudo_new_class_ids.begin(),
                                       ep.pseudo_new_class_ids.end());

    for (int c : task.support_aug.class_ids) {
        if (base.count(c))
            throw DuplicateClass("pseudo task: synthesized id collides with base id " +
                                 std::to_string(c));
    }
    if (task.support_aug.class_ids != task.query_aug.class_ids)
        throw RegistryMismatch("pseudo task: S^a and Q^a registries differ");
    if (task.support_aug.size() % ep.support.size() != 0 ||
        task.query_aug.size() % ep.query.size() != 0)
        throw ShapeMismatch("pseudo task: augmented sizes not a multiple of S/Q");

    if (task.w1_po.class_registry != task.w2_po.class_registry)
        throw RegistryMismatch("pseudo task: W1_po and W2_po registries differ");
    // pseudo-old registry must be exactly base minus pseudo-new, in base order
    std::vector<int> expected;
    for (int c : base_registry)
        if (!pseudo_new.count(c)) expected.push_back(c);
    if (task.w1_po.class_registry != expected)
        throw RegistryMismatch("pseudo task: pseudo-old registry != base minus pseudo-new");
}

void validate(const PseudoTaskOptions& opt) {
    if (opt.way <= 0) throw InvalidConfig("task options: way must be > 0");
    if (opt.shot <= 0) throw InvalidConfig("task options: shot must be > 0");
    if (opt.query_per_class <= 0)
        throw InvalidConfig("task options: query_per_class must be > 0");
    if (opt.rotations_per_task != 1 && opt.rotations_per_task != 3)
        throw InvalidConfig("task options: rotations_per_task must be 1 or 3");
    if (opt.augment != "rotate" && opt.augment != "mixup" && opt.augment != "cutmix")
        throw InvalidConfig("task options: unknown augment policy " + opt.augment);
}

WeightMatrix compute_model_weights(const EncoderState& enc, const LabeledSet& base_train) {
    if (base_train.empty()) throw EmptyTrainSet("compute_model_weights: empty train set");
    return prototype(encode(enc, base_train), base_train.labels, base_train.class_ids);
}

Episode sample_episode(const LabeledSet& base_train, int way, int shot,
                       int query_per_class, Rng& rng) {
    if (way <= 0 || shot <= 0 || query_per_class <= 0)
        throw InvalidConfig("sample_episode: way/shot/query must be > 0");
    if (base_train.num_classes() < way)
        throw InsufficientClasses("sample_episode: fewer than `way` classes");

    std::vector<int> classes = base_train.class_ids;
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(static_cast<size_t>(way));

    std::vector<int> support_rows, query_rows;
    for (int c : classes) {
        auto rows = rows_of_class(base_train, c);
        if (static_cast<int>(rows.size()) < shot + query_per_class)
            throw InsufficientSamples("sample_episode: class " + std::to_string(c) +
                                      " has fewer than shot + query samples");
        std::shuffle(rows.begin(), rows.end(), rng);
        support_rows.insert(support_rows.end(), rows.begin(), rows.begin() + shot);
        query_rows.insert(query_rows.end(), rows.begin() + shot,
                          rows.begin() + shot + query_per_class);
    }

    Episode ep;
    ep.pseudo_new_class_ids = classes;
    ep.support = subset(base_train, support_rows, classes);
    ep.query = subset(base_train, query_rows, classes);
    return ep;
}

std::pair<WeightMatrix, WeightMatrix> select_pseudo_old_weights(
    const WeightMatrix& w1, const WeightMatrix& w2, const std::vector<int>& pseudo_new) {
    if (w1.class_registry != w2.class_registry)
        throw RegistryMismatch("select_pseudo_old_weights: W1/W2 registries differ");
    std::unordered_set<int> registry(w1.class_registry.begin(), w1.class_registry.end());
    for (int c : pseudo_new)
        if (!registry.count(c))
            throw UnknownClass("select_pseudo_old_weights: class " + std::to_string(c) +
                               " not in registry");

    std::unordered_set<int> drop(pseudo_new.begin(), pseudo_new.end());
    std::vector<int> keep;
    for (size_t i = 0; i < w1.class_registry.size(); ++i)
        if (!drop.count(w1.class_registry[i])) keep.push_back(static_cast<int>(i));

    auto take = [&keep](const WeightMatrix& w) {
        WeightMatrix out;
        out.rows.resize(static_cast<Eigen::Index>(keep.size()), w.rows.cols());
        out.class_registry.reserve(keep.size());
        for (size_t i = 0; i < keep.size(); ++i) {
            out.rows.row(static_cast<Eigen::Index>(i)) = w.rows.row(keep[i]);
            out.class_registry.push_back(w.class_registry[static_cast<size_t>(keep[i])]);
        }
        return out;
    };
    return {take(w1), take(w2)};
}

std::pair<LabeledSet, LabeledSet> augment_rotate(const Episode& ep, int angle,
                                                 int label_offset) {
    const int way = static_cast<int>(ep.pseudo_new_class_ids.size());
    const std::vector<int> new_ids = fresh_ids(way, label_offset);

    LabeledSet sa = relabel(ep.support, new_ids);
    sa.inputs = rotate_image_rows(ep.support.inputs, ep.support.shape, angle);
    LabeledSet qa = relabel(ep.query, new_ids);
    qa.inputs = rotate_image_rows(ep.query.inputs, ep.query.shape, angle);
    return {std::move(sa), std::move(qa)};
}

PseudoIncrementalTask build_pseudo_task(const LabeledSet& base_train,
                                        const WeightMatrix& w1, const WeightMatrix& w2,
                                        const PseudoTaskOptions& opt, Rng& rng) {
    validate(opt);
    if (w1.class_registry != base_train.class_ids)
        throw RegistryMismatch("build_pseudo_task: W1 registry != base train registry");

    PseudoIncrementalTask task;
    task.episode = sample_episode(base_train, opt.way, opt.shot, opt.query_per_class, rng);

    // Synthesized ids start past every base id.
    int label_offset = 0;
    for (int c : base_train.class_ids) label_offset = std::max(label_offset, c + 1);

    if (opt.augment == "rotate") {
        if (opt.rotations_per_task == 1) {
            static constexpr int kAngles[3] = {90, 180, 270};
            std::uniform_int_distribution<int> pick(0, 2);
            task.rotation_angle = kAngles[pick(rng)];
            std::tie(task.support_aug, task.query_aug) =
                augment_rotate(task.episode, task.rotation_angle, label_offset);
        } else {
            // All three angles; each gets its own fresh id block.
            for (int k = 0; k < 3; ++k) {
                auto [sa, qa] = augment_rotate(task.episode, 90 * (k + 1),
                                               label_offset + k * opt.way);
                if (k == 0) {
                    task.support_aug = std::move(sa);
                    task.query_aug = std::move(qa);
                } else {
                    task.support_aug = concat(task.support_aug, sa);
                    task.query_aug = concat(task.query_aug, qa);
                }
            }
            task.rotation_angle = 0;
        }
    } else {
        // Draw order: support first, then query, so both sets share the rng
        // stream deterministically.
        task.support_aug =
            mix_against_next_class(task.episode.support, label_offset, opt.augment, rng);
        task.query_aug =
            mix_against_next_class(task.episode.query, label_offset, opt.augment, rng);
        task.rotation_angle = 0;
    }

    std::tie(task.w1_po, task.w2_po) =
        select_pseudo_old_weights(w1, w2, task.episode.pseudo_new_class_ids);
    validate(task, base_train.class_ids);
    return task;
}

}  // namespace fscil
