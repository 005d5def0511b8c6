#include <doctest.h>

#include <algorithm>
#include <set>

#include "fscil/errors.hpp"
#include "fscil/resa.hpp"
#include "fscil/stream.hpp"
#include "helpers.hpp"

using namespace fscil;

namespace {

LabeledSet base_train() {
    // 8 base classes, 9 samples each, 3x3 images
    return synth_blob_source(8, 9, 9, 4.0, 5);
}

std::multiset<double> row_multiset(const Matrix& m) {
    std::multiset<double> out;
    for (Eigen::Index i = 0; i < m.size(); ++i) out.insert(m(i));
    return out;
}

}  // namespace

TEST_CASE("episode sampling honors way, shot, and query counts") {
    LabeledSet data = base_train();
    Rng rng = make_rng(1);
    Episode ep = sample_episode(data, 4, 3, 2, rng);
    CHECK_NOTHROW(validate(ep, 3, 2));
    CHECK(ep.pseudo_new_class_ids.size() == 4);
    CHECK(ep.support.size() == 12);
    CHECK(ep.query.size() == 8);

    // class ids are distinct and drawn from the base registry
    std::set<int> ids(ep.pseudo_new_class_ids.begin(), ep.pseudo_new_class_ids.end());
    CHECK(ids.size() == 4);
    for (int id : ids)
        CHECK(std::count(data.class_ids.begin(), data.class_ids.end(), id) == 1);

    // per-class counts are exact
    for (int id : ids) {
        CHECK(rows_of_class(ep.support, id).size() == 3);
        CHECK(rows_of_class(ep.query, id).size() == 2);
    }
}

TEST_CASE("support and query rows never overlap") {
    LabeledSet data = base_train();
    Rng rng = make_rng(2);
    for (int t = 0; t < 50; ++t) {
        Episode ep = sample_episode(data, 5, 4, 5, rng);
        std::set<std::vector<double>> support_rows;
        for (int i = 0; i < ep.support.size(); ++i) {
            const auto& row = ep.support.inputs.row(i);
            support_rows.insert(std::vector<double>(row.begin(), row.end()));
        }
        for (int i = 0; i < ep.query.size(); ++i) {
            const auto& row = ep.query.inputs.row(i);
            CHECK(support_rows.count(std::vector<double>(row.begin(), row.end())) == 0);
        }
    }
}

TEST_CASE("sampling is deterministic given the generator state") {
    LabeledSet data = base_train();
    Rng a = make_rng(3), b = make_rng(3);
    Episode ea = sample_episode(data, 3, 2, 2, a);
    Episode eb = sample_episode(data, 3, 2, 2, b);
    CHECK(ea.pseudo_new_class_ids == eb.pseudo_new_class_ids);
    CHECK(ea.support.inputs == eb.support.inputs);
    CHECK(ea.query.inputs == eb.query.inputs);
}

TEST_CASE("sampling rejects infeasible requests") {
    LabeledSet data = base_train();
    Rng rng = make_rng(4);
    CHECK_THROWS_AS(sample_episode(data, 9, 2, 2, rng), InsufficientClasses);
    CHECK_THROWS_AS(sample_episode(data, 3, 6, 4, rng), InsufficientSamples);
    CHECK_THROWS_AS(sample_episode(data, 0, 2, 2, rng), InvalidConfig);
}

TEST_CASE("pseudo-old selection drops exactly the episode classes in order") {
    Rng rng = make_rng(5);
    Matrix m1 = testutil::random_matrix(rng, 5, 4);
    Matrix m2 = testutil::random_matrix(rng, 5, 4);
    WeightMatrix w1{m1, {10, 11, 12, 13, 14}};
    WeightMatrix w2{m2, {10, 11, 12, 13, 14}};
    auto [po1, po2] = select_pseudo_old_weights(w1, w2, {11, 13});
    CHECK(po1.class_registry == std::vector<int>{10, 12, 14});
    CHECK(po2.class_registry == std::vector<int>{10, 12, 14});
    CHECK(po1.rows.row(0) == m1.row(0));
    CHECK(po1.rows.row(1) == m1.row(2));
    CHECK(po1.rows.row(2) == m1.row(4));
    CHECK(po2.rows.row(1) == m2.row(2));

    CHECK_THROWS_AS(select_pseudo_old_weights(w1, w2, {99}), UnknownClass);
    WeightMatrix mismatched{m2, {10, 11, 12, 13, 15}};
    CHECK_THROWS_AS(select_pseudo_old_weights(w1, mismatched, {11}), RegistryMismatch);
}

TEST_CASE("rotation relabeling is a shared bijection and preserves norms") {
    LabeledSet data = base_train();
    Rng rng = make_rng(6);
    Episode ep = sample_episode(data, 3, 2, 2, rng);
    auto [sa, qa] = augment_rotate(ep, 90, 100);

    CHECK(sa.size() == ep.support.size());
    CHECK(qa.size() == ep.query.size());
    CHECK(sa.class_ids == std::vector<int>{100, 101, 102});
    CHECK(qa.class_ids == sa.class_ids);

    // label map: episode class i -> 100 + i, applied consistently to S and Q
    for (int i = 0; i < ep.support.size(); ++i) {
        auto it = std::find(ep.pseudo_new_class_ids.begin(), ep.pseudo_new_class_ids.end(),
                            ep.support.labels[static_cast<size_t>(i)]);
        REQUIRE(it != ep.pseudo_new_class_ids.end());
        int expected = 100 + static_cast<int>(it - ep.pseudo_new_class_ids.begin());
        CHECK(sa.labels[static_cast<size_t>(i)] == expected);
    }

    // rotation permutes pixels, so each row keeps its multiset of values
    for (int i = 0; i < ep.support.size(); ++i)
        CHECK(row_multiset(sa.inputs.row(i)) == row_multiset(ep.support.inputs.row(i)));

    // 90 degrees is not the identity on generic data
    CHECK(sa.inputs != ep.support.inputs);
}

TEST_CASE("task construction satisfies the structural invariants en masse") {
    LabeledSet data = base_train();
    WeightMatrix w1 = compute_model_weights(init_encoder(Arch::TinyMlp, data.shape, 9, 1), data);
    WeightMatrix w2 = compute_model_weights(init_encoder(Arch::TinyMlp, data.shape, 9, 2), data);
    PseudoTaskOptions opt;
    opt.way = 3;
    opt.shot = 4;
    opt.query_per_class = 3;

    Rng rng = make_rng(7);
    for (int t = 0; t < 300; ++t) {
        PseudoIncrementalTask task = build_pseudo_task(data, w1, w2, opt, rng);
        CHECK_NOTHROW(validate(task, data.class_ids));
        CHECK(task.w1_po.num_classes() == 5);  // 8 base - 3 pseudo-new
        CHECK(task.support_aug.size() == task.episode.support.size());
        CHECK(task.query_aug.size() == task.episode.query.size());
        CHECK((task.rotation_angle == 90 || task.rotation_angle == 180 ||
               task.rotation_angle == 270));
        // synthesized ids sit above every base id
        int max_base = *std::max_element(data.class_ids.begin(), data.class_ids.end());
        for (int id : task.support_aug.class_ids) CHECK(id > max_base);
    }
}

TEST_CASE("three-rotation tasks synthesize one class block per angle") {
    LabeledSet data = base_train();
    WeightMatrix w1 = compute_model_weights(init_encoder(Arch::TinyMlp, data.shape, 9, 1), data);
    WeightMatrix w2 = compute_model_weights(init_encoder(Arch::TinyMlp, data.shape, 9, 2), data);
    PseudoTaskOptions opt;
    opt.way = 2;
    opt.shot = 3;
    opt.query_per_class = 2;
    opt.rotations_per_task = 3;

    Rng rng = make_rng(8);
    PseudoIncrementalTask task = build_pseudo_task(data, w1, w2, opt, rng);
    CHECK_NOTHROW(validate(task, data.class_ids));
    CHECK(task.rotation_angle == 0);
    CHECK(task.support_aug.size() == 3 * task.episode.support.size());
    CHECK(task.query_aug.size() == 3 * task.episode.query.size());
    CHECK(task.support_aug.num_classes() == 6);  // way classes per rotation
}

TEST_CASE("mixup and cutmix synthesize classes without rotation") {
    LabeledSet data = base_train();
    WeightMatrix w1 = compute_model_weights(init_encoder(Arch::TinyMlp, data.shape, 9, 1), data);
    WeightMatrix w2 = compute_model_weights(init_encoder(Arch::TinyMlp, data.shape, 9, 2), data);
    for (const std::string& mode : {"mixup", "cutmix"}) {
        PseudoTaskOptions opt;
        opt.way = 3;
        opt.shot = 3;
        opt.query_per_class = 2;
        opt.augment = mode;
        Rng rng = make_rng(9);
        PseudoIncrementalTask task = build_pseudo_task(data, w1, w2, opt, rng);
        CHECK_NOTHROW(validate(task, data.class_ids));
        CHECK(task.rotation_angle == 0);
        CHECK(task.support_aug.size() == task.episode.support.size());
    }
    PseudoTaskOptions bad;
    bad.augment = "gan";
    CHECK_THROWS_AS(validate(bad), InvalidConfig);
}

TEST_CASE("model weights are per-class embedding means with the full registry") {
    LabeledSet data = base_train();
    EncoderState enc = init_encoder(Arch::TinyMlp, data.shape, 9, 0);
    init_identity(enc);
    WeightMatrix w = compute_model_weights(enc, data);
    CHECK(w.class_registry == data.class_ids);
    Matrix expected = prototype(data.inputs, data.labels, data.class_ids).rows;
    CHECK((w.rows - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("registry mismatches between weights and data are rejected") {
    LabeledSet data = base_train();
    WeightMatrix w1 = compute_model_weights(init_encoder(Arch::TinyMlp, data.shape, 9, 1), data);
    WeightMatrix wrong{w1.rows, w1.class_registry};
    std::swap(wrong.class_registry[0], wrong.class_registry[1]);
    Rng rng = make_rng(10);
    PseudoTaskOptions opt;
    opt.way = 2;
    opt.shot = 2;
    opt.query_per_class = 2;
    CHECK_THROWS_AS(build_pseudo_task(data, wrong, w1, opt, rng), RegistryMismatch);
}

TEST_CASE("episode class selection is uniform across many draws") {
    // 5k episodes over 8 classes, way 2: each class should appear with
    // frequency 1/4; flag deviations beyond five binomial standard errors
    LabeledSet data = base_train();
    Rng rng = make_rng(11);
    const int episodes = 5000;
    std::map<int, int> hits;
    for (int t = 0; t < episodes; ++t) {
        Episode ep = sample_episode(data, 2, 1, 1, rng);
        for (int id : ep.pseudo_new_class_ids) ++hits[id];
    }
    const double p = 2.0 / 8.0;
    const double sigma = std::sqrt(episodes * p * (1 - p));
    for (int id : data.class_ids) {
        CHECK(hits[id] > episodes * p - 5 * sigma);
        CHECK(hits[id] < episodes * p + 5 * sigma);
    }
}
