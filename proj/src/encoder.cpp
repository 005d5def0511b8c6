#include "fscil/encoder.hpp"

#include <cmath>

#include "fscil/rng.hpp"

namespace fscil {
namespace {

Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double sigma) {
    std::normal_distribution<double> gauss(0.0, sigma);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    return m;
}

void add_linear(EncoderState& enc, Rng& rng, const std::string& name, int in, int out) {
    enc.params[name + ".weight"] = gaussian(rng, in, out, std::sqrt(1.0 / in));
    enc.params[name + ".bias"] = Matrix::Zero(1, out);
}

void add_conv(EncoderState& enc, Rng& rng, const std::string& name, int in_c, int out_c,
              int k) {
    double fan_in = static_cast<double>(in_c * k * k);
    enc.params[name + ".weight"] = gaussian(rng, out_c, in_c * k * k, std::sqrt(2.0 / fan_in));
    enc.params[name + ".bias"] = Matrix::Zero(1, out_c);
}

void add_bn(EncoderState& enc, const std::string& name, int c) {
    enc.params[name + ".gamma"] = Matrix::Ones(1, c);
    enc.params[name + ".beta"] = Matrix::Zero(1, c);
    enc.buffers[name + ".mean"] = Matrix::Zero(1, c);
    enc.buffers[name + ".var"] = Matrix::Ones(1, c);
}

struct ResNetPlan {
    struct Block {
        std::string name;
        int in_c, out_c, stride;
    };
    std::vector<Block> blocks;
};

ResNetPlan resnet_plan() {
    ResNetPlan plan;
    const int widths[4] = {64, 128, 256, 512};
    int in_c = 64;
    for (int stage = 0; stage < 4; ++stage) {
        for (int block = 0; block < 2; ++block) {
            int stride = (stage > 0 && block == 0) ? 2 : 1;
            plan.blocks.push_back({"layer" + std::to_string(stage + 1) + "." +
                                       std::to_string(block),
                                   in_c, widths[stage], stride});
            in_c = widths[stage];
        }
    }
    return plan;
}

}  // namespace

Arch arch_from_string(const std::string& s) {
    if (s == "tiny-mlp") return Arch::TinyMlp;
    if (s == "small-cnn") return Arch::SmallCnn;
    if (s == "resnet18-like") return Arch::ResNet18Like;
    throw InvalidConfig("unknown architecture tag: " + s);
}

std::string arch_to_string(Arch arch) {
    switch (arch) {
        case Arch::TinyMlp: return "tiny-mlp";
        case Arch::SmallCnn: return "small-cnn";
        case Arch::ResNet18Like: return "resnet18-like";
    }
    throw InvalidConfig("bad arch enum");
}

EncoderState init_encoder(Arch arch, ImageShape input_shape, int embed_dim,
                          std::uint64_t seed) {
    if (input_shape.size() <= 0) throw InvalidConfig("init_encoder: empty input shape");
    EncoderState enc;
    enc.arch = arch;
    enc.input_shape = input_shape;
    enc.embed_dim = arch == Arch::ResNet18Like ? 512 : embed_dim;
    if (enc.embed_dim <= 0) throw InvalidConfig("init_encoder: embed_dim must be > 0");
    Rng rng = make_rng(seed, "encoder-init-" + arch_to_string(arch));
    switch (arch) {
        case Arch::TinyMlp:
            add_linear(enc, rng, "fc", input_shape.size(), enc.embed_dim);
            break;
        case Arch::SmallCnn: {
            if (input_shape.height % 2 != 0 || input_shape.width % 2 != 0)
                throw InvalidConfig("small-cnn needs even input height and width");
            add_conv(enc, rng, "conv1", input_shape.channels, 8, 3);
            add_conv(enc, rng, "conv2", 8, 16, 3);
            add_linear(enc, rng, "fc", 16, enc.embed_dim);
            break;
        }
        case Arch::ResNet18Like: {
            add_conv(enc, rng, "stem.conv", input_shape.channels, 64, 3);
            add_bn(enc, "stem.bn", 64);
            for (const auto& b : resnet_plan().blocks) {
                add_conv(enc, rng, b.name + ".conv1", b.in_c, b.out_c, 3);
                add_bn(enc, b.name + ".bn1", b.out_c);
                add_conv(enc, rng, b.name + ".conv2", b.out_c, b.out_c, 3);
                add_bn(enc, b.name + ".bn2", b.out_c);
                if (b.stride != 1 || b.in_c != b.out_c) {
                    add_conv(enc, rng, b.name + ".down.conv", b.in_c, b.out_c, 1);
                    add_bn(enc, b.name + ".down.bn", b.out_c);
                }
            }
            break;
        }
    }
    return enc;
}

void init_identity(EncoderState& enc) {
    if (enc.arch != Arch::TinyMlp)
        throw InvalidConfig("init_identity: only tiny-mlp supports identity init");
    if (enc.input_shape.size() != enc.embed_dim)
        throw InvalidConfig("init_identity: requires in_dim == embed_dim");
    enc.params["fc.weight"] = Matrix::Identity(enc.embed_dim, enc.embed_dim);
    enc.params["fc.bias"] = Matrix::Zero(1, enc.embed_dim);
}

long param_count(const EncoderState& enc) {
    long n = 0;
    for (const auto& [name, m] : enc.params) n += static_cast<long>(m.size());
    return n;
}

ad::Var ParamVars::at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw InvalidConfig("ParamVars: missing parameter " + name);
    return it->second;
}

ParamVars bind_params(ad::Tape& tape, const EncoderState& enc, bool trainable) {
    ParamVars out;
    for (const auto& [name, m] : enc.params)
        out.vars[name] = trainable ? tape.leaf(m) : tape.constant(m);
    return out;
}

namespace {

ad::Var tiny_mlp_forward(ad::Tape& t, const ParamVars& v, ad::Var x) {
    return t.add_row_broadcast(t.matmul(x, v.at("fc.weight")), v.at("fc.bias"));
}

ad::Var small_cnn_forward(ad::Tape& t, const EncoderState& enc, const ParamVars& v,
                          ad::Var x) {
    const int c = enc.input_shape.channels;
    const int h = enc.input_shape.height, w = enc.input_shape.width;
    ad::Tape::Conv2dSpec c1{c, h, w, 8, 3, 1, 1};
    ad::Var a = t.relu(t.conv2d(x, v.at("conv1.weight"), v.at("conv1.bias"), c1));
    ad::Var p = t.avgpool2x2(a, 8, h, w);
    ad::Tape::Conv2dSpec c2{8, h / 2, w / 2, 16, 3, 1, 1};
    ad::Var b = t.relu(t.conv2d(p, v.at("conv2.weight"), v.at("conv2.bias"), c2));
    ad::Var g = t.global_avg_pool(b, 16, h / 2, w / 2);
    return t.add_row_broadcast(t.matmul(g, v.at("fc.weight")), v.at("fc.bias"));
}

struct Bn {
    ad::Tape& t;
    EncoderState& enc;
    const ParamVars& v;
    bool training;

    ad::Var operator()(const std::string& name, ad::Var x, int c, int h, int w) {
        return t.batchnorm2d(x, v.at(name + ".gamma"), v.at(name + ".beta"),
                             enc.buffers.at(name + ".mean"), enc.buffers.at(name + ".var"),
                             c, h, w, training);
    }
};

ad::Var resnet_forward(ad::Tape& t, EncoderState& enc, const ParamVars& v, ad::Var x,
                       bool training) {
    Bn bn{t, enc, v, training};
    int h = enc.input_shape.height, w = enc.input_shape.width;
    ad::Tape::Conv2dSpec stem{enc.input_shape.channels, h, w, 64, 3, 1, 1};
    ad::Var y = t.relu(bn("stem.bn", t.conv2d(x, v.at("stem.conv.weight"),
                                              v.at("stem.conv.bias"), stem),
                          64, h, w));
    for (const auto& b : resnet_plan().blocks) {
        ad::Tape::Conv2dSpec s1{b.in_c, h, w, b.out_c, 3, b.stride, 1};
        int oh = s1.out_h(), ow = s1.out_w();
        ad::Var main = t.relu(bn(b.name + ".bn1",
                                 t.conv2d(y, v.at(b.name + ".conv1.weight"),
                                          v.at(b.name + ".conv1.bias"), s1),
                                 b.out_c, oh, ow));
        ad::Tape::Conv2dSpec s2{b.out_c, oh, ow, b.out_c, 3, 1, 1};
        main = bn(b.name + ".bn2",
                  t.conv2d(main, v.at(b.name + ".conv2.weight"),
                           v.at(b.name + ".conv2.bias"), s2),
                  b.out_c, oh, ow);
        ad::Var shortcut = y;
        if (b.stride != 1 || b.in_c != b.out_c) {
            ad::Tape::Conv2dSpec sd{b.in_c, h, w, b.out_c, 1, b.stride, 0};
            shortcut = bn(b.name + ".down.bn",
                          t.conv2d(y, v.at(b.name + ".down.conv.weight"),
                                   v.at(b.name + ".down.conv.bias"), sd),
                          b.out_c, oh, ow);
        }
        y = t.relu(t.add(main, shortcut));
        h = oh;
        w = ow;
    }
    return t.global_avg_pool(y, 512, h, w);
}

}  // namespace

ad::Var encoder_forward(ad::Tape& tape, EncoderState& enc, const ParamVars& vars,
                        ad::Var input, bool training) {
    if (tape.value(input).cols() != enc.input_shape.size())
        throw ShapeMismatch("encoder_forward: input cols != " +
                            std::to_string(enc.input_shape.size()));
    switch (enc.arch) {
        case Arch::TinyMlp: return tiny_mlp_forward(tape, vars, input);
        case Arch::SmallCnn: return small_cnn_forward(tape, enc, vars, input);
        case Arch::ResNet18Like: return resnet_forward(tape, enc, vars, input, training);
    }
    throw InvalidConfig("bad arch enum");
}

Matrix encode(const EncoderState& enc, const Matrix& batch) {
    if (batch.rows() == 0) return Matrix(0, enc.embed_dim);
    ad::Tape tape(false);
    ParamVars vars = bind_params(tape, enc, false);
    ad::Var x = tape.constant(batch);
    // eval forward never writes buffers; the cast only satisfies the signature
    ad::Var out = encoder_forward(tape, const_cast<EncoderState&>(enc), vars, x, false);
    Matrix result = tape.value(out);
    if (!result.allFinite()) throw NonFiniteLoss("encode: non-finite embeddings");
    return result;
}

Matrix encode(const EncoderState& enc, const LabeledSet& set) {
    return encode(enc, set.inputs);
}

}  // namespace fscil
