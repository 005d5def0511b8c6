#pragma once

#include <string>
#include <vector>

#include "fscil/data.hpp"
#include "fscil/rng.hpp"

namespace fscil {

// Exact rotation of every sample by a multiple of 90 degrees. 90 and 270
// require square planes; 180 works for any shape. Pure coordinate
// permutation: entries and norms are preserved.
Matrix rotate_image_rows(const Matrix& inputs, const ImageShape& shape, int angle);

// Training-batch augmentation toggles for the base-session loop.
struct AugmentationPolicy {
    bool resized_crop = false;
    bool horizontal_flip = false;
    bool color_jitter = false;
};

AugmentationPolicy policy_from_names(const std::vector<std::string>& names);
std::vector<std::string> policy_names(const AugmentationPolicy& policy);

// Applies the enabled transforms per sample, in a fixed draw order so the
// result is deterministic given the rng state. Never applied to prototype
// computation.
Matrix augment_batch(const Matrix& batch, const ImageShape& shape,
                     const AugmentationPolicy& policy, Rng& rng);

// Convex combination of paired samples: lambda * a + (1 - lambda) * b.
// Rows pair by index; shapes must match.
Matrix mixup_rows(const Matrix& a, const Matrix& b, double lambda);

// Pastes one random rectangular patch of b into a, per row pair.
Matrix cutmix_rows(const Matrix& a, const Matrix& b, const ImageShape& shape,
                   Rng& rng);

}  // namespace fscil
