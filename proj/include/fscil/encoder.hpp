#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "fscil/ad.hpp"
#include "fscil/data.hpp"

namespace fscil {

// Architecture tags. Layer specs (see README for the checkpoint key schema):
//   tiny-mlp      : flatten -> linear(in, embed_dim)
//   small-cnn     : conv3x3(c->8) relu avgpool2 conv3x3(8->16) relu gap
//                   -> linear(16, embed_dim); input h, w must be even
//   resnet18-like : conv3x3(c->64) bn relu, 4 stages of 2 residual blocks
//                   (64/128/256/512, stages 2-4 downsample by stride 2),
//                   gap -> 512-d embedding (embed_dim fixed at 512)
enum class Arch { TinyMlp, SmallCnn, ResNet18Like };

Arch arch_from_string(const std::string& s);
std::string arch_to_string(Arch arch);

struct EncoderState {
    Arch arch = Arch::TinyMlp;
    int embed_dim = 64;
    ImageShape input_shape;
    std::map<std::string, Matrix> params;   // trainable, ordered by name
    std::map<std::string, Matrix> buffers;  // batch-norm running stats
};

// Seeded parameter initialization (He for convs, Xavier for linear, BN at
// identity). resnet18-like forces embed_dim = 512.
EncoderState init_encoder(Arch arch, ImageShape input_shape, int embed_dim,
                          std::uint64_t seed);

// tiny-mlp only: fc := I, bias := 0 (requires in_dim == embed_dim).
void init_identity(EncoderState& enc);

long param_count(const EncoderState& enc);

struct ParamVars {
    std::map<std::string, ad::Var> vars;
    ad::Var at(const std::string& name) const;
};

// Registers every parameter on the tape. trainable=false yields constants
// (a frozen model contributes no gradients).
ParamVars bind_params(ad::Tape& tape, const EncoderState& enc, bool trainable);

// Forward pass to (n, embed_dim) embeddings. training=true switches batch
// norm to batch statistics and updates running stats in `enc`; training=false
// never mutates `enc`.
ad::Var encoder_forward(ad::Tape& tape, EncoderState& enc, const ParamVars& vars,
                        ad::Var input, bool training);

// Inference-mode embeddings; deterministic, no state mutation.
Matrix encode(const EncoderState& enc, const Matrix& batch);
Matrix encode(const EncoderState& enc, const LabeledSet& set);

}  // namespace fscil
