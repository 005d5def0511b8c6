#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fscil/data.hpp"

namespace fscil {

enum class MetricTag { Cosine, SqEuclid, Ensemble };

std::string metric_to_string(MetricTag metric);
MetricTag metric_from_string(const std::string& name);

// Class-indexed weight rows. rows(i) belongs to class_registry[i].
struct WeightMatrix {
    Matrix rows;                     // (num_classes, d)
    std::vector<int> class_registry; // ordered, no duplicates

    int num_classes() const { return static_cast<int>(class_registry.size()); }
    int dim() const { return static_cast<int>(rows.cols()); }
};

void validate(const WeightMatrix& w);

// Row-wise concatenation; registries must stay disjoint.
WeightMatrix concat(const WeightMatrix& a, const WeightMatrix& b);

struct ScoreMatrix {
    Matrix values;  // (num_samples, num_classes)
    MetricTag metric = MetricTag::Cosine;
};

struct ProbMatrix {
    Matrix values;  // rows sum to 1
};

// Per-class mean of embeddings. Registry order is first appearance in
// `labels` unless an explicit order is supplied.
WeightMatrix prototype(const Matrix& embeddings, const std::vector<int>& labels,
                       std::optional<std::vector<int>> class_order = std::nullopt);

// phi1(a, b) = a.b / (|a||b|), in [-1, 1]. Zero-norm rows are an error;
// clamping would mask a collapsed encoder.
ScoreMatrix cosine_scores(const Matrix& emb, const WeightMatrix& w);

// phi2(a, b) = -|a - b|^2 / d, in (-inf, 0].
ScoreMatrix sqeuclid_scores(const Matrix& emb, const WeightMatrix& w);

// Row-wise softmax of s * scores, stabilized by max subtraction.
ProbMatrix scaled_softmax(const ScoreMatrix& scores, double s);

// Mean of -log p[i, label_index[i]].
double cross_entropy(const ProbMatrix& probs, const std::vector<int>& label_indices);

// argmax with ties broken toward the lowest column index.
int argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row);

}  // namespace fscil
