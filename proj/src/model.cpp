#include "fscil/model.hpp"

#include "fscil/errors.hpp"

namespace fscil {

void validate(const ModelState& model) {
    validate(model.classifier);
    if (model.classifier.num_classes() > 0 &&
        model.classifier.dim() != model.encoder.embed_dim)
        throw ShapeMismatch("ModelState: classifier dim != encoder embed_dim");
    for (const auto& [name, m] : model.encoder.params)
        if (!m.allFinite())
            throw NonFiniteLoss("ModelState: non-finite parameter " + name);
    for (const auto& [name, m] : model.encoder.buffers)
        if (!m.allFinite())
            throw NonFiniteLoss("ModelState: non-finite buffer " + name);
}

}  // namespace fscil
