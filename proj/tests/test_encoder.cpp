#include <doctest.h>

#include "fscil/encoder.hpp"
#include "fscil/errors.hpp"
#include "helpers.hpp"

using namespace fscil;
using testutil::random_matrix;

namespace {

bool same_params(const EncoderState& a, const EncoderState& b) {
    if (a.params.size() != b.params.size()) return false;
    for (const auto& [name, value] : a.params) {
        auto it = b.params.find(name);
        if (it == b.params.end() || !(it->second == value)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("architecture tags round-trip through strings") {
    for (Arch a : {Arch::TinyMlp, Arch::SmallCnn, Arch::ResNet18Like})
        CHECK(arch_from_string(arch_to_string(a)) == a);
    CHECK_THROWS_AS(arch_from_string("vgg"), InvalidConfig);
}

TEST_CASE("initialization is seed-deterministic") {
    const ImageShape shape{1, 4, 4};
    EncoderState a = init_encoder(Arch::SmallCnn, shape, 8, 42);
    EncoderState b = init_encoder(Arch::SmallCnn, shape, 8, 42);
    EncoderState c = init_encoder(Arch::SmallCnn, shape, 8, 43);
    CHECK(same_params(a, b));
    CHECK(!same_params(a, c));
}

TEST_CASE("tiny mlp layout and identity initialization") {
    const ImageShape shape{1, 3, 3};
    EncoderState enc = init_encoder(Arch::TinyMlp, shape, 9, 0);
    REQUIRE(enc.params.count("fc.weight") == 1);
    REQUIRE(enc.params.count("fc.bias") == 1);
    CHECK(enc.params.at("fc.weight").rows() == 9);
    CHECK(enc.params.at("fc.weight").cols() == 9);
    CHECK(enc.buffers.empty());
    CHECK(param_count(enc) == 9 * 9 + 9);

    init_identity(enc);
    Rng rng = make_rng(11);
    Matrix x = random_matrix(rng, 5, 9);
    CHECK(encode(enc, x) == x);

    EncoderState wide = init_encoder(Arch::TinyMlp, shape, 16, 0);
    CHECK_THROWS_AS(init_identity(wide), InvalidConfig);
    EncoderState cnn = init_encoder(Arch::SmallCnn, {1, 4, 4}, 16, 0);
    CHECK_THROWS_AS(init_identity(cnn), InvalidConfig);
}

TEST_CASE("encoders map batches to embedding rows") {
    Rng rng = make_rng(12);
    ImageShape shape{1, 4, 4};
    Matrix x = random_matrix(rng, 6, shape.size());

    for (Arch arch : {Arch::TinyMlp, Arch::SmallCnn}) {
        EncoderState enc = init_encoder(arch, shape, 10, 3);
        Matrix emb = encode(enc, x);
        CHECK(emb.rows() == 6);
        CHECK(emb.cols() == 10);
        CHECK(emb.allFinite());
        CHECK(encode(enc, x) == emb);  // inference is deterministic
    }

    EncoderState empty_ok = init_encoder(Arch::TinyMlp, shape, 10, 3);
    CHECK(encode(empty_ok, Matrix(0, shape.size())).rows() == 0);
}

TEST_CASE("residual encoder forces a 512-wide embedding") {
    EncoderState enc = init_encoder(Arch::ResNet18Like, {1, 8, 8}, 64, 5);
    CHECK(enc.embed_dim == 512);
    CHECK(enc.buffers.size() > 0);
    Rng rng = make_rng(13);
    Matrix x = random_matrix(rng, 2, 64);
    Matrix emb = encode(enc, x);
    CHECK(emb.cols() == 512);
    CHECK(emb.allFinite());
}

TEST_CASE("inference never mutates batch-norm buffers; training does") {
    EncoderState enc = init_encoder(Arch::ResNet18Like, {1, 8, 8}, 512, 5);
    const std::map<std::string, Matrix> before = enc.buffers;
    Rng rng = make_rng(14);
    Matrix x = random_matrix(rng, 3, 64);

    encode(enc, x);
    for (const auto& [name, buf] : before) CHECK(enc.buffers.at(name) == buf);

    ad::Tape tape(true);
    ParamVars vars = bind_params(tape, enc, true);
    encoder_forward(tape, enc, vars, tape.constant(x), true);
    bool any_changed = false;
    for (const auto& [name, buf] : before)
        if (!(enc.buffers.at(name) == buf)) any_changed = true;
    CHECK(any_changed);
}

TEST_CASE("parameter binding controls gradient flow") {
    EncoderState enc = init_encoder(Arch::SmallCnn, {1, 4, 4}, 8, 1);
    ad::Tape tape(true);
    ParamVars frozen = bind_params(tape, enc, false);
    ParamVars live = bind_params(tape, enc, true);
    for (const auto& [name, v] : frozen.vars) CHECK(!tape.requires_grad(v));
    for (const auto& [name, v] : live.vars) CHECK(tape.requires_grad(v));
    CHECK_THROWS_AS(live.at("no.such.param"), InvalidConfig);
}

TEST_CASE("trained-mode forward equals inference encode when no batch norm") {
    // architectures without batch norm share one code path for train and eval
    for (Arch arch : {Arch::TinyMlp, Arch::SmallCnn}) {
        EncoderState enc = init_encoder(arch, {1, 4, 4}, 8, 9);
        Rng rng = make_rng(15);
        Matrix x = random_matrix(rng, 4, 16);
        ad::Tape tape(true);
        ParamVars vars = bind_params(tape, enc, true);
        Matrix train_out =
            tape.value(encoder_forward(tape, enc, vars, tape.constant(x), true));
        CHECK((train_out - encode(enc, x)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("shape validation") {
    CHECK_THROWS_AS(init_encoder(Arch::SmallCnn, {1, 3, 4}, 8, 0), InvalidConfig);
    CHECK_THROWS_AS(init_encoder(Arch::TinyMlp, {1, 4, 4}, 0, 0), InvalidConfig);
    EncoderState enc = init_encoder(Arch::TinyMlp, {1, 4, 4}, 8, 0);
    Rng rng = make_rng(16);
    CHECK_THROWS_AS(encode(enc, random_matrix(rng, 2, 15)), ShapeMismatch);
}
