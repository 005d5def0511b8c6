#pragma once

#include <Eigen/Dense>
#include <optional>
#include <unordered_map>
#include <vector>

#include "fscil/errors.hpp"

namespace fscil {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ImageShape {
    int channels = 1;
    int height = 1;
    int width = 1;

    int size() const { return channels * height * width; }
    bool square() const { return height == width; }
    bool operator==(const ImageShape&) const = default;
};

// A dataset slice. Inputs are flattened channel-major: row r holds sample r
// as [c0 row-major pixels, c1 ..., ...]. class_ids is the ordered registry of
// classes present; every label must appear in it.
struct LabeledSet {
    Matrix inputs;               // (n, shape.size())
    std::vector<int> labels;     // length n
    std::vector<int> class_ids;  // ordered, no duplicates
    ImageShape shape;

    int size() const { return static_cast<int>(labels.size()); }
    int num_classes() const { return static_cast<int>(class_ids.size()); }
    bool empty() const { return labels.empty(); }
};

// Checks the LabeledSet invariants; throws on violation.
void validate(const LabeledSet& set);

// Builds a set and derives class_ids by first appearance unless given.
LabeledSet make_labeled_set(Matrix inputs, std::vector<int> labels, ImageShape shape,
                            std::optional<std::vector<int>> class_order = std::nullopt);

// Row subset; class registry defaults to first-appearance order of the kept rows.
LabeledSet subset(const LabeledSet& set, const std::vector<int>& rows,
                  std::optional<std::vector<int>> class_order = std::nullopt);

// Concatenation; registries are concatenated and must stay disjoint.
LabeledSet concat(const LabeledSet& a, const LabeledSet& b);

// class id -> registry index
std::unordered_map<int, int> index_by_class(const std::vector<int>& class_ids);

// Row indices of all samples with the given class id, in storage order.
std::vector<int> rows_of_class(const LabeledSet& set, int class_id);

// Labels translated to registry indices; throws LabelOutOfRegistry.
std::vector<int> labels_as_indices(const std::vector<int>& labels,
                                   const std::vector<int>& registry);

}  // namespace fscil
