#pragma once

#include "fscil/encoder.hpp"
#include "fscil/metrics.hpp"

namespace fscil {

// Encoder plus its class-expandable classifier. `metric` fixes how the
// classifier rows are scored against embeddings.
struct ModelState {
    EncoderState encoder;
    WeightMatrix classifier;
    MetricTag metric = MetricTag::Cosine;
};

void validate(const ModelState& model);

}  // namespace fscil
